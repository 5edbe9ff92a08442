#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "querysum/tensor.hpp"

namespace testsupport {

/// Unique scratch directory, removed when the object goes out of scope.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& hint) {
        static std::atomic<uint64_t> counter{0};
        const auto stamp = counter.fetch_add(1);
        path = std::filesystem::temp_directory_path() /
               ("querysum-" + hint + "-" + std::to_string(::getpid()) + "-" + std::to_string(stamp));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline querysum::Tensor2 random_tensor(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    querysum::Tensor2 t(rows, cols);
    for (double& v : t.data) v = dist(rng);
    return t;
}

inline querysum::Vec random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    querysum::Vec v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

} // namespace testsupport
