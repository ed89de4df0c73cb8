#include <catch2/catch_amalgamated.hpp>

#include "offsim/box.hpp"

#include "testutil.hpp"

using offsim::BoundingBox;
using offsim::iou;

namespace {

BoundingBox box(double x0, double y0, double x1, double y1, int cls = 0) {
    BoundingBox b;
    b.class_id = cls;
    b.x_min = x0;
    b.y_min = y0;
    b.x_max = x1;
    b.y_max = y1;
    return b;
}

}  // namespace

TEST_CASE("iou of identical boxes is 1") {
    const auto b = box(0, 0, 10, 10);
    REQUIRE(iou(b, b) == 1.0);
}

TEST_CASE("iou of disjoint boxes is 0") {
    REQUIRE(iou(box(0, 0, 1, 1), box(5, 5, 6, 6)) == 0.0);
}

TEST_CASE("iou of partially overlapping boxes") {
    // Intersection is 1x2 = 2, union is 4 + 4 - 2 = 6.
    REQUIRE_THAT(iou(box(0, 0, 2, 2), box(1, 0, 3, 2)),
                 Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
}

TEST_CASE("iou of touching boxes is 0") {
    REQUIRE(iou(box(0, 0, 1, 1), box(1, 0, 2, 1)) == 0.0);
}

TEST_CASE("degenerate boxes give 0, not a division failure") {
    const auto degenerate = box(3, 3, 3, 3);
    REQUIRE(iou(degenerate, degenerate) == 0.0);
    REQUIRE(iou(degenerate, box(0, 0, 1, 1)) == 0.0);
}

TEST_CASE("iou is symmetric") {
    auto rng = testutil::make_rng(11);
    for (int i = 0; i < 500; ++i) {
        const auto a = testutil::random_box(rng);
        const auto b = testutil::random_box(rng);
        REQUIRE(iou(a, b) == iou(b, a));
    }
}

TEST_CASE("iou is translation invariant and scale invariant") {
    auto rng = testutil::make_rng(12);
    std::uniform_real_distribution<double> shift(0.0, 50.0);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (int i = 0; i < 500; ++i) {
        const auto a = testutil::random_box(rng);
        const auto b = testutil::random_box(rng);
        const double base = iou(a, b);

        const double dx = shift(rng), dy = shift(rng);
        auto translate = [&](BoundingBox v) {
            v.x_min += dx; v.x_max += dx; v.y_min += dy; v.y_max += dy;
            return v;
        };
        REQUIRE_THAT(iou(translate(a), translate(b)), Catch::Matchers::WithinAbs(base, 1e-12));

        const double s = scale(rng);
        auto rescale = [&](BoundingBox v) {
            v.x_min *= s; v.x_max *= s; v.y_min *= s; v.y_max *= s;
            return v;
        };
        REQUIRE_THAT(iou(rescale(a), rescale(b)), Catch::Matchers::WithinAbs(base, 1e-9));
    }
}

TEST_CASE("bounding box validity") {
    REQUIRE(box(0, 0, 1, 1).valid());
    REQUIRE_FALSE(box(1, 0, 0, 1).valid());   // inverted x
    REQUIRE_FALSE(box(0, 0, 1, 0).valid());   // zero height
    REQUIRE_FALSE(box(-1, 0, 1, 1).valid());  // negative coordinate
    auto nan_box = box(0, 0, 1, 1);
    nan_box.y_max = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_FALSE(nan_box.valid());
    auto wrong_class = box(0, 0, 1, 1, -2);
    REQUIRE_FALSE(wrong_class.valid());
}
