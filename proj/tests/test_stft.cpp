#include "sslkit/stft.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace sslkit;
using Catch::Approx;

namespace {

// Independent oracle: direct DFT summation of one windowed frame.
CVec direct_dft(const RealVec& x) {
    const Eigen::Index n = x.size();
    CVec out(n / 2 + 1);
    for (Eigen::Index k = 0; k <= n / 2; ++k) {
        Complex acc(0, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double phase = -kTwoPi * static_cast<double>(k) * static_cast<double>(i) / static_cast<double>(n);
            acc += x(i) * Complex(std::cos(phase), std::sin(phase));
        }
        out(k) = acc;
    }
    return out;
}

MultichannelSignal mono(const RealVec& x, double fs = 16000.0) {
    RealMat m(1, x.size());
    m.row(0) = x.transpose();
    return MultichannelSignal(m, fs);
}

}  // namespace

TEST_CASE("zero input yields one all-zero frame", "[stft]") {
    const auto frames = stft_analyze(mono(RealVec::Zero(256)), 256, 128);
    REQUIRE(frames.size() == 1);
    REQUIRE(frames[0].bins.cols() == 129);
    REQUIRE(frames[0].bins.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cosine at bin 8 peaks at bin 8 and matches the direct DFT", "[stft]") {
    RealVec x(256);
    for (int n = 0; n < 256; ++n) x(n) = std::cos(kTwoPi * 8.0 * n / 256.0);
    const auto frames = stft_analyze(mono(x), 256, 128, Window::rectangular);
    REQUIRE(frames.size() == 1);

    const CVec oracle = direct_dft(x);
    Eigen::Index peak;
    frames[0].bins.row(0).cwiseAbs().maxCoeff(&peak);
    CHECK(peak == 8);
    for (int k = 0; k <= 128; ++k)
        CHECK(std::abs(frames[0].bins(0, k) - oracle(k)) < 1e-8 * oracle.cwiseAbs().maxCoeff());
}

TEST_CASE("frame count formula", "[stft]") {
    std::mt19937_64 rng(7);
    RealMat samples = RealMat::Zero(1, 16000);
    const auto frames = stft_analyze(MultichannelSignal(samples, 16000.0), 256, 128);
    CHECK(frames.size() == 123);  // floor((16000-256)/128)+1

    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 << (3 + static_cast<int>(test::urand(rng, 0, 5)));
        const int hop = 1 + static_cast<int>(test::urand(rng, 0, n - 1));
        const Eigen::Index t = n + static_cast<Eigen::Index>(test::urand(rng, 0, 4000));
        const auto fr = stft_analyze(mono(RealVec::Zero(t)), n, hop);
        CHECK(static_cast<Eigen::Index>(fr.size()) == (t - n) / hop + 1);
    }
}

TEST_CASE("error paths", "[stft]") {
    CHECK_THROWS_AS(stft_analyze(mono(RealVec::Zero(100)), 256, 128), ConfigError);
    CHECK_THROWS_AS(stft_analyze(mono(RealVec::Zero(1000)), 250, 128), ConfigError);
    CHECK_THROWS_AS(stft_analyze(mono(RealVec::Zero(1000)), 256, 0), ConfigError);
    CHECK_THROWS_AS(stft_analyze(mono(RealVec::Zero(1000)), 256, 257), ConfigError);
}

TEST_CASE("Parseval at frame level with rectangular window", "[stft]") {
    std::mt19937_64 rng(21);
    RealVec x(512);
    for (auto& v : x.reshaped()) v = test::urand(rng, -1, 1);
    const auto frames = stft_analyze(mono(x), 512, 512, Window::rectangular);
    REQUIRE(frames.size() == 1);
    const auto& bins = frames[0].bins;
    double rhs = std::norm(bins(0, 0)) + std::norm(bins(0, 256));
    for (int k = 1; k < 256; ++k) rhs += 2.0 * std::norm(bins(0, k));
    rhs /= 512.0;
    const double lhs = x.squaredNorm();
    CHECK(std::abs(lhs - rhs) < 1e-9 * lhs);
}

TEST_CASE("linearity", "[stft]") {
    std::mt19937_64 rng(22);
    RealVec x(600), y(600);
    for (Eigen::Index i = 0; i < 600; ++i) {
        x(i) = test::urand(rng, -1, 1);
        y(i) = test::urand(rng, -1, 1);
    }
    const double a = 0.37, b = -1.21;
    const auto fx = stft_analyze(mono(x), 256, 128);
    const auto fy = stft_analyze(mono(y), 256, 128);
    const auto fxy = stft_analyze(mono(a * x + b * y), 256, 128);
    REQUIRE(fx.size() == fxy.size());
    for (std::size_t l = 0; l < fxy.size(); ++l) {
        const CMat expect = a * fx[l].bins + b * fy[l].bins;
        CHECK((fxy[l].bins - expect).cwiseAbs().maxCoeff() < 1e-12 * 600);
    }
}

TEST_CASE("frames cover [l*hop, l*hop + N) and channels stay independent", "[stft]") {
    std::mt19937_64 rng(23);
    RealMat samples(2, 700);
    for (int m = 0; m < 2; ++m)
        for (Eigen::Index i = 0; i < 700; ++i) samples(m, i) = test::urand(rng, -1, 1);
    const MultichannelSignal sig(samples, 16000.0);
    const auto frames = stft_analyze(sig, 256, 100, Window::sine);
    const RealVec win = window_samples(Window::sine, 256);
    for (std::size_t l = 0; l < frames.size(); ++l)
        for (int m = 0; m < 2; ++m) {
            const RealVec seg =
                samples.row(m).segment(static_cast<Eigen::Index>(l) * 100, 256).transpose().cwiseProduct(win);
            const CVec oracle = direct_dft(seg);
            CHECK((frames[l].bins.row(m).transpose() - oracle).cwiseAbs().maxCoeff() < 1e-8);
        }
}

TEST_CASE("sine window is power complementary at 50% overlap", "[stft]") {
    const RealVec w = window_samples(Window::sine, 256);
    for (int n = 0; n < 128; ++n)
        CHECK(w(n) * w(n) + w(n + 128) * w(n + 128) == Approx(1.0).margin(1e-12));
}
