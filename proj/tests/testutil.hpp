#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "offsim/box.hpp"

namespace testutil {

/// Deterministic RNG for property-style tests.
inline std::mt19937_64 make_rng(std::uint64_t seed = 7) { return std::mt19937_64(seed); }

inline offsim::BoundingBox random_box(std::mt19937_64& rng, int class_id = 0,
                                      double span = 100.0) {
    std::uniform_real_distribution<double> pos(0.0, span);
    std::uniform_real_distribution<double> len(0.5, span / 2.0);
    offsim::BoundingBox b;
    b.class_id = class_id;
    b.x_min = pos(rng);
    b.y_min = pos(rng);
    b.x_max = b.x_min + len(rng);
    b.y_max = b.y_min + len(rng);
    return b;
}

/// Unique scratch directory under the system temp dir, cleaned up on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("offsim_test_" + tag + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
