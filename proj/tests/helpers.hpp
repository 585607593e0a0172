// Shared test utilities.
#pragma once

#include "sslkit/common.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace sslkit::test {

inline double urand(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline Vec3 random_unit_vec(std::mt19937_64& rng) {
    while (true) {
        Vec3 v(urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1));
        const double n = v.norm();
        if (n > 1e-3 && n <= 1.0) return v / n;
    }
}

inline CVec random_cvec(std::mt19937_64& rng, Eigen::Index n) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(urand(rng, -1, 1), urand(rng, -1, 1));
    return v;
}

inline CVec random_unit_modulus(std::mt19937_64& rng, Eigen::Index n) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = urand(rng, 0.0, kTwoPi);
        v(i) = Complex(std::cos(p), std::sin(p));
    }
    return v;
}

inline CMat random_hermitian(std::mt19937_64& rng, int n) {
    CMat a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = Complex(urand(rng, -1, 1), urand(rng, -1, 1));
    return 0.5 * (a + a.adjoint().eval());
}

inline CMat random_hermitian_psd(std::mt19937_64& rng, int n) {
    CMat a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = Complex(urand(rng, -1, 1), urand(rng, -1, 1));
    return a * a.adjoint();
}

// Unique per-process temp directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("sslkit_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace sslkit::test
