// Per-bin correlation-matrix tracking, offline noise estimation, correlation
// difference and PHAT-normalized cross-spectra assembly.
#pragma once

#include "sslkit/common.hpp"
#include "sslkit/stft.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace sslkit {

// Magnitude floor for the PHAT division: entries at or below it map to 0, so
// silent bins contribute nothing to the steered power sum.
inline constexpr double kPhatEpsilon = 1e-12;

// One Hermitian M x M matrix per frequency bin, tracked by the recursion
// R <- (1-alpha) R + alpha x x^H. alpha = 1 (full replacement) is accepted
// here for boundary tests; run configs restrict it to (0, 1).
struct CorrelationSet {
    std::vector<CMat> matrices;  // N/2+1 entries, each M x M
    double alpha = 0.05;
    long frames_absorbed = 0;

    CorrelationSet(int channels, int bins, double a) : alpha(a) {
        if (channels < 1 || bins < 1) throw ConfigError("invalid correlation shape");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
        matrices.assign(static_cast<std::size_t>(bins), CMat::Zero(channels, channels));
    }

    int channels() const { return static_cast<int>(matrices.front().rows()); }
    int bin_count() const { return static_cast<int>(matrices.size()); }
};

inline void update(CorrelationSet& corr, const SpectraFrame& frame) {
    if (frame.channels() != corr.channels() || frame.bin_count() != corr.bin_count())
        throw ConfigError("frame shape does not match correlation state");
    const double a = corr.alpha;
    for (int k = 0; k < corr.bin_count(); ++k) {
        const CVec x = frame.bins.col(k);
        CMat& r = corr.matrices[static_cast<std::size_t>(k)];
        r = (1.0 - a) * r + a * (x * x.adjoint());
        // rounding can leave a tiny skew-Hermitian residue; fold it back
        r = 0.5 * (r + r.adjoint().eval());
    }
    ++corr.frames_absorbed;
}

inline CorrelationSet estimate_noise(const std::vector<SpectraFrame>& frames, double alpha) {
    if (frames.empty()) throw ConfigError("noise estimation needs at least one frame");
    CorrelationSet corr(frames.front().channels(), frames.front().bin_count(), alpha);
    for (const SpectraFrame& f : frames) update(corr, f);
    return corr;
}

// R_ss = R_xx - R_nn per bin. Hermitian but possibly indefinite; PHAT keeps
// only phases, so no PSD projection is applied.
inline CorrelationSet difference(const CorrelationSet& rxx, const CorrelationSet& rnn) {
    if (rxx.channels() != rnn.channels() || rxx.bin_count() != rnn.bin_count())
        throw ConfigError("correlation sets have different shapes");
    CorrelationSet out = rxx;
    for (int k = 0; k < out.bin_count(); ++k)
        out.matrices[static_cast<std::size_t>(k)] -= rnn.matrices[static_cast<std::size_t>(k)];
    return out;
}

// Normalized cross-spectra, concatenated pair-major then bin to match the
// steering-matrix row layout.
struct CrossSpectraVector {
    CVec values;  // P*(N/2+1)
};

inline CrossSpectraVector phat_vector(const CorrelationSet& rss,
                                      const std::vector<std::pair<int, int>>& pairs) {
    const int bins = rss.bin_count();
    CrossSpectraVector out;
    out.values.resize(static_cast<Eigen::Index>(pairs.size()) * bins);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        if (i < 0 || j < 0 || i >= rss.channels() || j >= rss.channels() || i == j)
            throw ConfigError("pair list inconsistent with correlation channels");
        for (int k = 0; k < bins; ++k) {
            const Complex v = rss.matrices[static_cast<std::size_t>(k)](i, j);
            const double mag = std::abs(v);
            out.values(static_cast<Eigen::Index>(p) * bins + k) = mag > kPhatEpsilon ? v / mag : Complex(0.0, 0.0);
        }
    }
    return out;
}

// -- noise sidecar ------------------------------------------------------------
// JSON sidecar with the per-bin complex matrices, for the precomputed-offline
// noise workflow.

inline void write_noise_sidecar(const std::string& path, const CorrelationSet& corr) {
    nlohmann::json j;
    j["format"] = "sslkit-noise-correlation";
    j["version"] = 1;
    j["channels"] = corr.channels();
    j["bins"] = corr.bin_count();
    j["alpha"] = corr.alpha;
    j["frames_absorbed"] = corr.frames_absorbed;
    auto& mats = j["matrices"] = nlohmann::json::array();
    for (const CMat& m : corr.matrices) {
        nlohmann::json jm = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                jm.push_back({m(r, c).real(), m(r, c).imag()});
        mats.push_back(std::move(jm));
    }
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot create noise sidecar: " + path);
    out << j.dump();
}

inline CorrelationSet read_noise_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open noise sidecar: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "sslkit-noise-correlation")
        throw RuntimeError("not a noise sidecar: " + path);
    const int channels = j.at("channels").get<int>();
    const int bins = j.at("bins").get<int>();
    CorrelationSet corr(channels, bins, j.at("alpha").get<double>());
    corr.frames_absorbed = j.at("frames_absorbed").get<long>();
    const auto& mats = j.at("matrices");
    if (static_cast<int>(mats.size()) != bins) throw RuntimeError("sidecar bin count mismatch: " + path);
    for (int k = 0; k < bins; ++k) {
        const auto& jm = mats[static_cast<std::size_t>(k)];
        CMat m(channels, channels);
        for (Eigen::Index r = 0; r < channels; ++r)
            for (Eigen::Index c = 0; c < channels; ++c) {
                const auto& e = jm[static_cast<std::size_t>(r * channels + c)];
                m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
            }
        corr.matrices[static_cast<std::size_t>(k)] = std::move(m);
    }
    return corr;
}

}  // namespace sslkit
