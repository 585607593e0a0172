// The baseline localizer: per-bin singular value decomposition of
// (R_nn)^-1 R_xx, projection of steering vectors onto the noise subspace and
// a spatial-spectrum argmax over the DOA grid.
#pragma once

#include "sslkit/common.hpp"
#include "sslkit/correlation.hpp"
#include "sslkit/dsvd_phat.hpp"
#include "sslkit/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <vector>

namespace sslkit {

// Floor inside the spatial-spectrum inverse: a steering vector exactly inside
// the signal subspace would otherwise blow up the sum.
inline constexpr double kMusicEpsilon = 1e-9;

// Relative Tikhonov coefficient for the noise-matrix inverse:
// (R_nn + reg * Tr(R_nn)/M * I)^-1.
inline constexpr double kDefaultMusicRegularization = 1e-6;

// Per-DOA steering vectors A_q[k], component m = exp(+2*pi*i k tau_{q,m}/N).
// The sign pairs with the steering matrix via
// A_{q,i}[k] * conj(A_{q,j}[k]) = conj(W_{q,i,j}[k]).
struct SteeringVectorBank {
    std::vector<CMat> by_bin;  // per bin k: M x Q
    int frame_size = 0;

    int grid_size() const { return by_bin.empty() ? 0 : static_cast<int>(by_bin.front().cols()); }
    int mic_count() const { return by_bin.empty() ? 0 : static_cast<int>(by_bin.front().rows()); }
    int bin_count() const { return frame_size / 2 + 1; }

    // A_q[k] as an M-vector.
    CVec vector(int q, int k) const { return by_bin[static_cast<std::size_t>(k)].col(q); }
};

inline SteeringVectorBank build_steering_bank(const MicArrayGeometry& geom, const DoaGrid& grid,
                                              int frame_size) {
    if (!is_power_of_two(frame_size)) throw ConfigError("frame_size must be a power of two");
    SteeringVectorBank bank;
    bank.frame_size = frame_size;
    const int bins = frame_size / 2 + 1;
    const int mics = geom.mic_count();
    bank.by_bin.assign(static_cast<std::size_t>(bins), CMat(mics, grid.size()));
    for (int q = 0; q < grid.size(); ++q) {
        const Vec3& s = grid.directions[static_cast<std::size_t>(q)];
        for (int m = 0; m < mics; ++m) {
            const double tau = tdoa_origin(geom, s, m);
            for (int k = 0; k < bins; ++k) {
                const double phase = kTwoPi * k * tau / frame_size;
                bank.by_bin[static_cast<std::size_t>(k)](m, q) = Complex(std::cos(phase), std::sin(phase));
            }
        }
    }
    return bank;
}

// Decomposition of (R_nn + eps I)^-1 R_xx for a single bin: singular values
// descending, left/right singular vectors as columns.
struct BinDecomposition {
    RealVec singular_values;
    CMat left_vectors;
    CMat right_vectors;
    bool valid = false;
};

struct SubspaceDecomposition {
    std::vector<BinDecomposition> bins;
    int skipped_bins = 0;
};

inline BinDecomposition gsvd_per_bin(const CMat& rxx, const CMat& rnn, double regularization) {
    BinDecomposition out;
    const Eigen::Index m = rxx.rows();
    const double eps = regularization * rnn.real().trace() / static_cast<double>(m);
    const CMat reg = rnn + eps * CMat::Identity(m, m);
    Eigen::LLT<CMat> llt(reg);
    if (llt.info() != Eigen::Success) return out;  // singular beyond rescue: bin skipped
    const CMat product = llt.solve(rxx);
    if (!product.allFinite()) return out;
    Eigen::JacobiSVD<CMat> svd(product, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.singular_values = svd.singularValues();
    out.left_vectors = svd.matrixU();
    out.right_vectors = svd.matrixV();
    out.valid = true;
    return out;
}

inline SubspaceDecomposition gsvd_all_bins(const CorrelationSet& rxx, const CorrelationSet& rnn,
                                           double regularization = kDefaultMusicRegularization) {
    SubspaceDecomposition out;
    out.bins.reserve(static_cast<std::size_t>(rxx.bin_count()));
    for (int k = 0; k < rxx.bin_count(); ++k) {
        out.bins.push_back(gsvd_per_bin(rxx.matrices[static_cast<std::size_t>(k)],
                                        rnn.matrices[static_cast<std::size_t>(k)], regularization));
        if (!out.bins.back().valid) ++out.skipped_bins;
    }
    return out;
}

// P_q = sum_k ( sum_{m > n_sources} |A_q[k]^H e_m[k]| )^-1, summed over the
// bins in [band_lo, band_hi]; skipped bins are excluded from the sum.
inline RealVec music_spectrum(const SubspaceDecomposition& decomp, const SteeringVectorBank& bank,
                              int n_sources = 1, int band_lo = 0, int band_hi = -1) {
    if (band_hi < 0) band_hi = bank.bin_count() - 1;
    if (band_lo < 0 || band_hi >= bank.bin_count() || band_lo > band_hi)
        throw ConfigError("invalid frequency band restriction");
    RealVec p = RealVec::Zero(bank.grid_size());
    for (int k = band_lo; k <= band_hi; ++k) {
        const BinDecomposition& bd = decomp.bins[static_cast<std::size_t>(k)];
        if (!bd.valid) continue;
        if (n_sources < 1 || n_sources >= bd.left_vectors.cols())
            throw ConfigError("n_sources must be in [1, M)");
        const CMat noise_basis = bd.left_vectors.rightCols(bd.left_vectors.cols() - n_sources);
        // (M - n_sources) x Q projections in one product
        const RealVec proj =
            (noise_basis.adjoint() * bank.by_bin[static_cast<std::size_t>(k)]).cwiseAbs().colwise().sum().transpose();
        p += proj.cwiseMax(kMusicEpsilon).cwiseInverse();
    }
    return p;
}

// One frame through the baseline pipeline: correlation update, per-bin
// decomposition against the noise matrix, spectrum and argmax (ties to the
// lowest grid index). All bins failing yields no estimate.
inline std::optional<DoaEstimate> localize_frame_music(const SteeringVectorBank& bank,
                                                       const DoaGrid& grid, CorrelationSet& state,
                                                       const CorrelationSet& noise,
                                                       const SpectraFrame& frame,
                                                       double regularization = kDefaultMusicRegularization,
                                                       int n_sources = 1, int band_lo = 0,
                                                       int band_hi = -1) {
    update(state, frame);
    const SubspaceDecomposition decomp = gsvd_all_bins(state, noise, regularization);
    if (decomp.skipped_bins == state.bin_count()) return std::nullopt;
    const RealVec p = music_spectrum(decomp, bank, n_sources, band_lo, band_hi);
    int best_q = 0;
    for (int q = 1; q < p.size(); ++q)
        if (p(q) > p(best_q)) best_q = q;
    DoaEstimate est;
    est.frame_index = frame.frame_index;
    est.grid_index = best_q;
    est.direction = grid.directions[static_cast<std::size_t>(best_q)];
    est.amplitude = p(best_q);
    return est;
}

}  // namespace sslkit
