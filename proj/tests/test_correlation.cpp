#include "sslkit/correlation.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "sslkit/stft.hpp"
#include "sslkit/synth.hpp"

#include <Eigen/Eigenvalues>
#include <random>

using namespace sslkit;
using Catch::Approx;

namespace {

SpectraFrame frame_from(const CMat& bins, int index = 0) {
    SpectraFrame f;
    f.frame_index = index;
    f.bins = bins;
    return f;
}

}  // namespace

TEST_CASE("alpha = 1 replaces the estimate", "[correlation]") {
    std::mt19937_64 rng(11);
    const CMat x = test::random_cvec(rng, 3 * 5).reshaped(3, 5);
    CorrelationSet corr(3, 5, 1.0);
    update(corr, frame_from(x));
    for (int k = 0; k < 5; ++k) {
        const CMat expect = x.col(k) * x.col(k).adjoint();
        CHECK((corr.matrices[static_cast<std::size_t>(k)] - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK(corr.frames_absorbed == 1);
}

TEST_CASE("zero frame scales the state by 1 - alpha", "[correlation]") {
    std::mt19937_64 rng(12);
    CorrelationSet corr(2, 4, 0.1);
    update(corr, frame_from(test::random_cvec(rng, 8).reshaped(2, 4)));
    const auto before = corr.matrices;
    update(corr, frame_from(CMat::Zero(2, 4)));
    for (int k = 0; k < 4; ++k)
        CHECK((corr.matrices[static_cast<std::size_t>(k)] - 0.9 * before[static_cast<std::size_t>(k)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);
}

TEST_CASE("two identical frames from zero state accumulate 0.0975 x x^H", "[correlation]") {
    std::mt19937_64 rng(13);
    const CMat x = test::random_cvec(rng, 4 * 3).reshaped(4, 3);
    CorrelationSet corr(4, 3, 0.05);
    update(corr, frame_from(x));
    update(corr, frame_from(x));
    for (int k = 0; k < 3; ++k) {
        const CMat expect = 0.0975 * (x.col(k) * x.col(k).adjoint());
        CHECK((corr.matrices[static_cast<std::size_t>(k)] - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("noise estimation", "[correlation]") {
    std::mt19937_64 rng(14);
    const CMat x = test::random_cvec(rng, 4 * 2).reshaped(4, 2);

    SECTION("single frame at alpha 0.05") {
        const CorrelationSet corr = estimate_noise({frame_from(x)}, 0.05);
        for (int k = 0; k < 2; ++k) {
            const CMat expect = 0.05 * (x.col(k) * x.col(k).adjoint());
            CHECK((corr.matrices[static_cast<std::size_t>(k)] - expect).cwiseAbs().maxCoeff() < 1e-14);
        }
    }

    SECTION("geometric convergence to x x^H after 200 identical frames") {
        std::vector<SpectraFrame> frames(200, frame_from(x));
        const CorrelationSet corr = estimate_noise(frames, 0.05);
        for (int k = 0; k < 2; ++k) {
            const CMat expect = x.col(k) * x.col(k).adjoint();
            CHECK((corr.matrices[static_cast<std::size_t>(k)] - expect).cwiseAbs().maxCoeff() <
                  1e-4 * expect.cwiseAbs().maxCoeff());
        }
        CHECK(corr.frames_absorbed == 200);
    }

    SECTION("white independent channels: off-diagonals much smaller than diagonals") {
        const MultichannelSignal noise = white_noise(4, 256 + 128 * 9999, 16000.0, 99);
        const auto frames = stft_analyze(noise, 256, 128, Window::sine);
        REQUIRE(frames.size() == 10000);
        const CorrelationSet corr = estimate_noise(frames, 0.05);
        double max_ratio = 0.0;
        for (int k = 5; k < corr.bin_count(); ++k) {
            const CMat& r = corr.matrices[static_cast<std::size_t>(k)];
            double offdiag = 0.0, diag = 1e300;
            for (int i = 0; i < 4; ++i) {
                diag = std::min(diag, r(i, i).real());
                for (int j = 0; j < 4; ++j)
                    if (i != j) offdiag = std::max(offdiag, std::abs(r(i, j)));
            }
            max_ratio = std::max(max_ratio, offdiag / diag);
        }
        CHECK(max_ratio < 0.1);
    }

    SECTION("empty sequence is an error") {
        CHECK_THROWS_AS(estimate_noise({}, 0.05), ConfigError);
    }
}

TEST_CASE("update keeps the state Hermitian PSD", "[correlation]") {
    std::mt19937_64 rng(15);
    CorrelationSet corr(4, 6, 0.2);
    for (int l = 0; l < 30; ++l) update(corr, frame_from(test::random_cvec(rng, 24).reshaped(4, 6)));
    for (const CMat& r : corr.matrices) {
        CHECK((r - r.adjoint().eval()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<CMat> eig(r);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
        for (int i = 0; i < 4; ++i) CHECK(r(i, i).real() >= -1e-12);
    }
    CHECK_THROWS_AS(update(corr, frame_from(CMat::Zero(3, 6))), ConfigError);
}

TEST_CASE("difference", "[correlation]") {
    std::mt19937_64 rng(16);
    CorrelationSet rxx(3, 4, 0.05), rnn(3, 4, 0.05), zero(3, 4, 0.05);
    for (int k = 0; k < 4; ++k) {
        const CMat a = test::random_hermitian(rng, 3);
        const CMat b = test::random_hermitian(rng, 3);
        rxx.matrices[static_cast<std::size_t>(k)] = a + b;
        rnn.matrices[static_cast<std::size_t>(k)] = b;
    }

    SECTION("zero noise degenerates to the noisy matrix") {
        const CorrelationSet d = difference(rxx, zero);
        for (int k = 0; k < 4; ++k)
            CHECK((d.matrices[static_cast<std::size_t>(k)] - rxx.matrices[static_cast<std::size_t>(k)])
                      .cwiseAbs()
                      .maxCoeff() == 0.0);
    }
    SECTION("identical inputs cancel") {
        const CorrelationSet d = difference(rxx, rxx);
        for (const CMat& m : d.matrices) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("(A + B) - B = A, Hermitian preserved") {
        const CorrelationSet d = difference(rxx, rnn);
        for (int k = 0; k < 4; ++k) {
            const CMat expect = rxx.matrices[static_cast<std::size_t>(k)] - rnn.matrices[static_cast<std::size_t>(k)];
            CHECK((d.matrices[static_cast<std::size_t>(k)] - expect).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((d.matrices[static_cast<std::size_t>(k)] -
                   d.matrices[static_cast<std::size_t>(k)].adjoint().eval())
                      .cwiseAbs()
                      .maxCoeff() < 1e-12);
        }
    }
    SECTION("shape mismatch") {
        CorrelationSet other(3, 5, 0.05);
        CHECK_THROWS_AS(difference(rxx, other), ConfigError);
    }
}

TEST_CASE("phat vector", "[correlation]") {
    const std::vector<std::pair<int, int>> pairs = {{0, 1}};
    CorrelationSet rss(2, 3, 0.05);
    rss.matrices[0](0, 1) = Complex(3.0, 4.0);
    rss.matrices[1](0, 1) = Complex(0.0, 0.0);
    rss.matrices[2](0, 1) = Complex(2.5, 0.0);
    const CrossSpectraVector x = phat_vector(rss, pairs);
    CHECK(std::abs(x.values(0) - Complex(0.6, 0.8)) < 1e-15);
    CHECK(x.values(1) == Complex(0.0, 0.0));  // floored, not NaN
    CHECK(x.values(2) == Complex(1.0, 0.0));  // real positive keeps phase 0

    for (Eigen::Index i = 0; i < x.values.size(); ++i) {
        const double mag = std::abs(x.values(i));
        CHECK((mag == 0.0 || (mag > 1.0 - 1e-9 && mag < 1.0 + 1e-9)));
    }
}

TEST_CASE("phat scale invariance and GCC-PHAT equivalence", "[correlation]") {
    std::mt19937_64 rng(17);
    const auto pairs = std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}};

    SECTION("positive per-entry scaling leaves the output unchanged") {
        CorrelationSet rss(3, 4, 0.05), scaled(3, 4, 0.05);
        for (int k = 0; k < 4; ++k) {
            rss.matrices[static_cast<std::size_t>(k)] = test::random_hermitian(rng, 3);
            scaled.matrices[static_cast<std::size_t>(k)] = rss.matrices[static_cast<std::size_t>(k)];
            for (const auto& [i, j] : pairs) {
                const double c = test::urand(rng, 0.1, 10.0);
                scaled.matrices[static_cast<std::size_t>(k)](i, j) *= c;
            }
        }
        const CrossSpectraVector a = phat_vector(rss, pairs);
        const CrossSpectraVector b = phat_vector(scaled, pairs);
        CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-14);
    }

    SECTION("single frame with zero noise matches pairwise GCC-PHAT numerators") {
        const CMat x = test::random_cvec(rng, 12).reshaped(3, 4);
        CorrelationSet corr(3, 4, 1.0);
        update(corr, frame_from(x));
        const CrossSpectraVector v = phat_vector(corr, pairs);
        for (std::size_t p = 0; p < pairs.size(); ++p)
            for (int k = 0; k < 4; ++k) {
                const Complex num = x(pairs[p].first, k) * std::conj(x(pairs[p].second, k));
                CHECK(std::abs(v.values(static_cast<Eigen::Index>(p) * 4 + k) - num / std::abs(num)) < 1e-12);
            }
    }
}

TEST_CASE("noise sidecar round trip", "[correlation]") {
    test::TempDir dir("sidecar");
    std::mt19937_64 rng(18);
    CorrelationSet corr(4, 5, 0.05);
    for (int l = 0; l < 7; ++l) update(corr, frame_from(test::random_cvec(rng, 20).reshaped(4, 5)));
    write_noise_sidecar(dir.file("n.json"), corr);
    const CorrelationSet back = read_noise_sidecar(dir.file("n.json"));
    CHECK(back.alpha == corr.alpha);
    CHECK(back.frames_absorbed == corr.frames_absorbed);
    REQUIRE(back.bin_count() == corr.bin_count());
    for (int k = 0; k < 5; ++k)
        CHECK((back.matrices[static_cast<std::size_t>(k)] - corr.matrices[static_cast<std::size_t>(k)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-15);
    CHECK_THROWS_AS(read_noise_sidecar(dir.file("absent.json")), RuntimeError);
}

TEST_CASE("correlation construction validates alpha", "[correlation]") {
    CHECK_THROWS_AS(CorrelationSet(2, 2, 0.0), ConfigError);
    CHECK_THROWS_AS(CorrelationSet(2, 2, 1.5), ConfigError);
    CHECK_NOTHROW(CorrelationSet(2, 2, 1.0));  // boundary value used by tests
}
