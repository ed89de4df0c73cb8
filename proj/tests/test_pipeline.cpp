#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "offsim/config.hpp"
#include "offsim/pipeline.hpp"

#include "testutil.hpp"

using namespace offsim;

namespace {

Strategy make_strategy(Platform platform, Scenario scenario) {
    return RunConfig{}.strategy(platform, scenario);
}

}  // namespace

// ---------------------------------------------------------------------------
// end_to_end_delay
// ---------------------------------------------------------------------------

TEST_CASE("local strategy is inference only") {
    const auto b = end_to_end_delay(make_strategy(Platform::local, Scenario::raw), default_curves());
    REQUIRE(b.total_ms == 19.5);
    REQUIRE(b.compress_ms == 0.0);
    REQUIRE(b.uplink_ms == 0.0);
    REQUIRE(b.decompress_ms == 0.0);
    REQUIRE(b.downlink_ms == 0.0);
    REQUIRE(b.delivery_probability == 1.0);
}

TEST_CASE("edge raw transfer reconstructs the measured total within 5%") {
    const auto b = end_to_end_delay(make_strategy(Platform::edge, Scenario::raw), default_curves());
    REQUIRE_THAT(b.total_ms, Catch::Matchers::WithinAbs(123.20, 123.20 * 0.05));
    REQUIRE_THAT(b.total_ms, Catch::Matchers::WithinAbs(123.7287, 5e-4));
    REQUIRE(b.packet_count == 300);
    REQUIRE_THAT(b.uplink_ms, Catch::Matchers::WithinAbs(86.71, 0.005));
}

TEST_CASE("cloud H265-M with the calibrated channel lands near the measured total") {
    RunConfig cfg;
    // Calibrate the cloud overhead against its two extreme reference rows.
    const double known = derived_inference_ms(Platform::cloud) + 0.45 + 0.45;
    const auto fit = calibrate({{4915200.0, 521.70, known}, {690.0, 27.78, known}},
                               cfg.cloud_channel, CalibrationMode::fit_overhead_only);
    cfg.cloud_channel = apply_calibration(cfg.cloud_channel, fit);

    const auto b =
        end_to_end_delay(cfg.strategy(Platform::cloud, Scenario::h265_m), default_curves());
    REQUIRE_THAT(b.total_ms, Catch::Matchers::WithinAbs(30.21, 30.21 * 0.10));
    REQUIRE_THAT(b.total_ms, Catch::Matchers::WithinAbs(28.8901, 5e-4));
}

TEST_CASE("breakdown parts are nonnegative and sum to the total") {
    const RunConfig cfg;
    for (const auto& [platform, scenario] : cfg.simulate_matrix) {
        const auto b = end_to_end_delay(cfg.strategy(platform, scenario), default_curves(),
                                        CodecTimeModel::library_default());
        REQUIRE(b.compress_ms >= 0.0);
        REQUIRE(b.uplink_ms >= 0.0);
        REQUIRE(b.decompress_ms >= 0.0);
        REQUIRE(b.inference_ms > 0.0);
        REQUIRE(b.downlink_ms >= 0.0);
        REQUIRE_THAT(b.compress_ms + b.uplink_ms + b.decompress_ms + b.inference_ms + b.downlink_ms,
                     Catch::Matchers::WithinAbs(b.total_ms, 1e-12));
    }
}

TEST_CASE("remote total is monotone in payload size for a fixed platform") {
    RunConfig cfg;
    const Scenario qualities[] = {Scenario::h265_vl, Scenario::h265_l, Scenario::h265_m,
                                  Scenario::h265_h};
    double prev = 0.0;
    for (Scenario s : qualities) {
        const auto b = end_to_end_delay(cfg.strategy(Platform::cloud, s), default_curves());
        REQUIRE(b.total_ms >= prev);
        prev = b.total_ms;
    }
}

TEST_CASE("local total ignores every channel and codec parameter") {
    RunConfig cfg;
    const auto baseline = end_to_end_delay(cfg.strategy(Platform::local, Scenario::raw),
                                           default_curves());
    cfg.edge_channel.throughput_mbps = 1.0;
    cfg.cloud_channel.per_packet_overhead_ms = 99.0;
    CodecTimeModel expensive = CodecTimeModel::library_default();
    expensive.jpeg_compress_ms = 1000.0;
    const auto after = end_to_end_delay(cfg.strategy(Platform::local, Scenario::raw),
                                        default_curves(), expensive);
    REQUIRE(after.total_ms == baseline.total_ms);
}

TEST_CASE("strategy invariants are enforced") {
    RunConfig cfg;
    Strategy s = cfg.strategy(Platform::edge, Scenario::jpeg_m);
    s.compression.width = 1280.0;  // platform runs at 640
    REQUIRE_THROWS_AS(end_to_end_delay(s, default_curves()), config_error);

    Strategy local = cfg.strategy(Platform::local, Scenario::raw);
    local.compression.codec = Codec::jpeg;
    local.compression.quality = 80;
    REQUIRE_THROWS_AS(end_to_end_delay(local, default_curves()), config_error);

    Strategy no_channel = cfg.strategy(Platform::edge, Scenario::raw);
    no_channel.platform.channel.reset();
    REQUIRE_THROWS_AS(end_to_end_delay(no_channel, default_curves()), config_error);
}

TEST_CASE("missing curve surfaces as a config error") {
    CurveSet empty;
    REQUIRE_THROWS_AS(end_to_end_delay(make_strategy(Platform::edge, Scenario::jpeg_m), empty),
                      config_error);
}

// ---------------------------------------------------------------------------
// meets_budget
// ---------------------------------------------------------------------------

TEST_CASE("budget checks at 20 and 10 Hz") {
    DelayBreakdown b;
    b.total_ms = 46.93;
    REQUIRE(meets_budget(b, 20.0));
    b.total_ms = 74.50;
    REQUIRE_FALSE(meets_budget(b, 20.0));
    REQUIRE(meets_budget(b, 10.0));
}

TEST_CASE("the budget boundary is inclusive") {
    DelayBreakdown b;
    b.total_ms = 50.0;
    REQUIRE(meets_budget(b, 20.0));
    b.total_ms = 50.0000001;
    REQUIRE_FALSE(meets_budget(b, 20.0));
    REQUIRE_THROWS_AS(meets_budget(b, 0.0), input_error);
}

// ---------------------------------------------------------------------------
// derive_inference_residual
// ---------------------------------------------------------------------------

TEST_CASE("edge raw residual isolates the inference time") {
    const Strategy s = make_strategy(Platform::edge, Scenario::raw);
    const double residual = derive_inference_residual(123.20, s, default_curves());
    // 123.20 minus serialization (86.28) and both base latencies (0.86).
    REQUIRE_THAT(residual, Catch::Matchers::WithinAbs(36.063, 5e-4));
}

TEST_CASE("cloud small-payload residual isolates the cloud inference time") {
    const Strategy s = make_strategy(Platform::cloud, Scenario::h265_vl);
    const double residual = derive_inference_residual(27.78, s, default_curves());
    REQUIRE_THAT(residual, Catch::Matchers::WithinAbs(26.8316, 5e-4));
    REQUIRE_THAT(residual, Catch::Matchers::WithinAbs(derived_inference_ms(Platform::cloud), 1e-12));
}

TEST_CASE("derive after compose recovers the configured inference exactly") {
    auto rng = testutil::make_rng(61);
    std::uniform_real_distribution<double> inf(5.0, 60.0);
    std::uniform_real_distribution<double> ovh(0.0, 0.3);
    RunConfig cfg;
    const Scenario scenarios[] = {Scenario::raw,    Scenario::jpeg_h, Scenario::jpeg_m,
                                  Scenario::jpeg_l, Scenario::h265_h, Scenario::h265_vl};
    for (int round = 0; round < 100; ++round) {
        cfg.edge_platform.inference_ms = inf(rng);
        cfg.cloud_platform.inference_ms = inf(rng);
        cfg.edge_channel.per_packet_overhead_ms = ovh(rng);
        const Platform platform = round % 2 == 0 ? Platform::edge : Platform::cloud;
        const Strategy s = cfg.strategy(platform, scenarios[round % 6]);
        const auto b = end_to_end_delay(s, default_curves(), CodecTimeModel::library_default());
        const double derived = derive_inference_residual(b.total_ms, s, default_curves(),
                                                         CodecTimeModel::library_default());
        REQUIRE_THAT(derived, Catch::Matchers::WithinAbs(s.platform.inference_ms, 1e-9));
    }
}

TEST_CASE("a total smaller than the network terms is inconsistent") {
    const Strategy s = make_strategy(Platform::edge, Scenario::raw);
    REQUIRE_THROWS_AS(derive_inference_residual(10.0, s, default_curves()), consistency_error);
}

TEST_CASE("local strategies have no residual to derive") {
    const Strategy s = make_strategy(Platform::local, Scenario::raw);
    REQUIRE_THROWS_AS(derive_inference_residual(19.5, s, default_curves()), input_error);
}

// ---------------------------------------------------------------------------
// platform defaults
// ---------------------------------------------------------------------------

TEST_CASE("derived platform inference defaults match the reference table") {
    REQUIRE_THAT(derived_inference_ms(Platform::edge), Catch::Matchers::WithinAbs(36.5917, 5e-4));
    REQUIRE_THAT(derived_inference_ms(Platform::cloud), Catch::Matchers::WithinAbs(26.8316, 5e-4));
    REQUIRE(default_local_platform().inference_ms == 19.5);
}

TEST_CASE("platform profile validation") {
    PlatformProfile p = default_edge_platform();
    p.channel.reset();
    REQUIRE_THROWS_AS(require_valid(p), config_error);

    PlatformProfile local = default_local_platform();
    local.channel = default_edge_channel();
    REQUIRE_THROWS_AS(require_valid(local), config_error);

    PlatformProfile zero = default_local_platform();
    zero.inference_ms = 0.0;
    REQUIRE_THROWS_AS(require_valid(zero), config_error);
}
