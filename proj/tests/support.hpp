#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "pdlight/netmodel.hpp"
#include "pdlight/signalmath.hpp"

namespace pdlight::testing_support {

inline std::shared_ptr<const RoadNetwork> shared_grid(std::size_t rows = 3, std::size_t cols = 3, double we = 300.0,
                                                      double ns = 300.0) {
    GridParams p;
    p.rows = rows;
    p.cols = cols;
    p.we_length = we;
    p.ns_length = ns;
    return std::make_shared<const RoadNetwork>(build_grid(p));
}

// Valid counts: 0 <= n_out <= n_max, n_in in [0, 2 n_max].
inline MovementCounts random_counts(std::mt19937_64& rng, std::int32_t n_max_hi = 120) {
    std::uniform_int_distribution<std::int32_t> cap(1, n_max_hi);
    MovementCounts c;
    c.n_max = cap(rng);
    c.n_out = std::uniform_int_distribution<std::int32_t>(0, c.n_max)(rng);
    c.n_in = std::uniform_int_distribution<std::int32_t>(0, 2 * c.n_max)(rng);
    return c;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("pdlight_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace pdlight::testing_support
