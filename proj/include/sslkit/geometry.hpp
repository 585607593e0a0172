// Array geometry, DOA grid construction, TDOA computation and steering-matrix
// assembly. Everything here is computed offline from positions.
//
// Conventions, pinned jointly (see the tests asserting their relative signs):
//   tdoa_origin:  tau_{q,m}   = (f_S/c) r_m . s_q                  [samples]
//   tdoa_pair:    tau_{q,i,j} = (f_S/c) (r_j - r_i) . s_q = tau_j - tau_i
//   steering row: W_{q,i,j}[k] = exp(+2*pi*i k tau_{q,i,j} / N)
// A DOA s points from the array center toward the source. The cross-spectrum
// observed for a source at s is the elementwise conjugate of W's row for s.
#pragma once

#include "sslkit/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace sslkit {

struct MicArrayGeometry {
    std::vector<Vec3> positions;  // meters
    double speed_of_sound = 343.0;
    double sample_rate = 16000.0;

    MicArrayGeometry(std::vector<Vec3> pos, double c, double fs)
        : positions(std::move(pos)), speed_of_sound(c), sample_rate(fs) {
        if (positions.size() < 2) throw ConfigError("need at least 2 microphones");
        if (speed_of_sound <= 0.0) throw ConfigError("speed_of_sound must be positive");
        if (sample_rate <= 0.0) throw ConfigError("sample_rate must be positive");
        for (std::size_t i = 0; i < positions.size(); ++i)
            for (std::size_t j = i + 1; j < positions.size(); ++j)
                if ((positions[i] - positions[j]).norm() == 0.0)
                    throw ConfigError("microphone positions must be pairwise distinct");
    }

    int mic_count() const { return static_cast<int>(positions.size()); }

    int pair_count() const { return mic_count() * (mic_count() - 1) / 2; }

    // Ordered (i, j) with i < j, lexicographic.
    std::vector<std::pair<int, int>> pair_list() const {
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < mic_count(); ++i)
            for (int j = i + 1; j < mic_count(); ++j) pairs.emplace_back(i, j);
        return pairs;
    }

    double max_pair_distance() const {
        double d = 0.0;
        for (std::size_t i = 0; i < positions.size(); ++i)
            for (std::size_t j = i + 1; j < positions.size(); ++j)
                d = std::max(d, (positions[i] - positions[j]).norm());
        return d;
    }
};

// The default array: the 5.8 cm square of the four-mic setup, laid in the x-y
// plane so its normal coincides with the DOA halfsphere zenith (+z).
inline MicArrayGeometry default_geometry(double c = 343.0, double fs = 16000.0) {
    return MicArrayGeometry({Vec3(0.029, 0.029, 0.0), Vec3(0.029, -0.029, 0.0),
                             Vec3(-0.029, 0.029, 0.0), Vec3(-0.029, -0.029, 0.0)},
                            c, fs);
}

inline void check_unit(const Vec3& s, double tol = 1e-6) {
    if (std::abs(s.norm() - 1.0) > tol) throw std::domain_error("direction must be a unit vector");
}

// TDOA in samples of mic m relative to the array origin for a source at DOA s.
inline double tdoa_origin(const MicArrayGeometry& geom, const Vec3& s, int m) {
    check_unit(s);
    if (m < 0 || m >= geom.mic_count()) throw std::domain_error("mic index out of range");
    return geom.sample_rate / geom.speed_of_sound * geom.positions[static_cast<std::size_t>(m)].dot(s);
}

// TDOA in samples between mics i and j: tau_j - tau_i. Antisymmetric in (i, j).
inline double tdoa_pair(const MicArrayGeometry& geom, const Vec3& s, int i, int j) {
    check_unit(s);
    if (i == j) throw std::domain_error("tdoa_pair needs two distinct microphones");
    if (i < 0 || j < 0 || i >= geom.mic_count() || j >= geom.mic_count())
        throw std::domain_error("mic index out of range");
    const Vec3 baseline = geom.positions[static_cast<std::size_t>(j)] - geom.positions[static_cast<std::size_t>(i)];
    return geom.sample_rate / geom.speed_of_sound * baseline.dot(s);
}

enum class GridBase { icosahedron, tetrahedron };

inline GridBase grid_base_from_name(const std::string& name) {
    if (name == "icosahedron") return GridBase::icosahedron;
    if (name == "tetrahedron") return GridBase::tetrahedron;
    throw ConfigError("unknown grid base: " + name);
}

inline std::string grid_base_name(GridBase b) {
    return b == GridBase::icosahedron ? "icosahedron" : "tetrahedron";
}

struct DoaGrid {
    std::vector<Vec3> directions;  // unit vectors, z >= -1e-12
    int refinement_level = 0;
    GridBase base = GridBase::icosahedron;

    int size() const { return static_cast<int>(directions.size()); }
};

namespace detail {

struct TriMesh {
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;
};

// Split every face in four; edge midpoints are created once (keyed by edge)
// and projected to the unit sphere, so shared vertices dedup exactly.
inline void subdivide(TriMesh& mesh) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Vec3 m = (mesh.verts[static_cast<std::size_t>(a)] + mesh.verts[static_cast<std::size_t>(b)]).normalized();
        const int idx = static_cast<int>(mesh.verts.size());
        mesh.verts.push_back(m);
        midpoint.emplace(key, idx);
        return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& [a, b, c] : mesh.faces) {
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        next.push_back({a, ab, ca});
        next.push_back({ab, b, bc});
        next.push_back({ca, bc, c});
        next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
}

inline TriMesh icosahedron_mesh() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh mesh;
    for (double s1 : {1.0, -1.0})
        for (double s2 : {1.0, -1.0}) {
            mesh.verts.push_back(Vec3(0, s1, s2 * phi).normalized());
            mesh.verts.push_back(Vec3(s1, s2 * phi, 0).normalized());
            mesh.verts.push_back(Vec3(s1 * phi, 0, s2).normalized());
        }
    const double edge = 2.0 / std::sqrt(1.0 + phi * phi);
    auto adjacent = [&](int i, int j) {
        return std::abs((mesh.verts[static_cast<std::size_t>(i)] - mesh.verts[static_cast<std::size_t>(j)]).norm() - edge) < 1e-9;
    };
    for (int i = 0; i < 12; ++i)
        for (int j = i + 1; j < 12; ++j)
            for (int k = j + 1; k < 12; ++k)
                if (adjacent(i, j) && adjacent(j, k) && adjacent(i, k))
                    mesh.faces.push_back({i, j, k});
    return mesh;
}

// Regular tetrahedron with one vertex fixed at (0, 0, 1).
inline TriMesh tetrahedron_mesh() {
    TriMesh mesh;
    mesh.verts = {Vec3(0, 0, 1), Vec3(2.0 * std::sqrt(2.0) / 3.0, 0, -1.0 / 3.0),
                  Vec3(-std::sqrt(2.0) / 3.0, std::sqrt(6.0) / 3.0, -1.0 / 3.0),
                  Vec3(-std::sqrt(2.0) / 3.0, -std::sqrt(6.0) / 3.0, -1.0 / 3.0)};
    mesh.faces = {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}};
    return mesh;
}

}  // namespace detail

// Closed-halfsphere keep tolerance: points with z >= -kGridEquatorTol stay.
inline constexpr double kGridEquatorTol = 1e-12;

// Zenith tilt (radians) for the icosahedron base. The zenith is chosen in the
// plane orthogonal to the first icosahedron vertex, so exactly one antipodal
// vertex pair lies on the equator and the closed halfsphere has 5*4^L + 2
// points (1282 at level 4). The tilt keeps every other mesh vertex clear of
// the equatorial plane by > 2e-3.
inline constexpr double kIcosahedronZenithTilt = 1.0;

// Recursive edge-midpoint subdivision of the base polyhedron, midpoints
// projected to the unit sphere, shared vertices deduplicated, then cut to the
// closed z >= 0 halfsphere. Points exactly on the equator are kept.
inline DoaGrid build_doa_grid(int refinement_level, GridBase base = GridBase::icosahedron) {
    if (refinement_level < 0) throw ConfigError("refinement_level must be >= 0");

    detail::TriMesh mesh =
        base == GridBase::icosahedron ? detail::icosahedron_mesh() : detail::tetrahedron_mesh();

    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    if (base == GridBase::icosahedron) {
        const Vec3 v0 = mesh.verts[0];
        Vec3 p = v0.cross(Vec3(0, 0, 1)).normalized();
        Vec3 q = v0.cross(p).normalized();
        const Vec3 zenith = std::cos(kIcosahedronZenithTilt) * p + std::sin(kIcosahedronZenithTilt) * q;
        rot.row(0) = v0;                  // the equatorial vertex pair maps to (+-1, 0, 0)
        rot.row(1) = zenith.cross(v0);
        rot.row(2) = zenith;
    }

    for (int l = 0; l < refinement_level; ++l) detail::subdivide(mesh);

    DoaGrid grid;
    grid.refinement_level = refinement_level;
    grid.base = base;
    for (const Vec3& v : mesh.verts) {
        const Vec3 s = rot * v;
        if (s.z() >= -kGridEquatorTol) grid.directions.push_back(s);
    }
    return grid;
}

inline void write_grid_csv(const std::string& path, const DoaGrid& grid) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot create grid CSV: " + path);
    out << "q,x,y,z\n";
    out.precision(17);
    for (int q = 0; q < grid.size(); ++q) {
        const Vec3& s = grid.directions[static_cast<std::size_t>(q)];
        out << q << ',' << s.x() << ',' << s.y() << ',' << s.z() << '\n';
    }
}

// All SRP-PHAT coefficients, one row per grid direction. Row layout is
// pair-major then bin: entry (q; p, k) sits at column p*(N/2+1) + k.
struct SteeringMatrix {
    CMat entries;  // Q x P*(N/2+1)
    std::vector<std::pair<int, int>> pairs;
    int frame_size = 0;

    int bin_count() const { return frame_size / 2 + 1; }
    int pair_count() const { return static_cast<int>(pairs.size()); }
    Eigen::Index row_dim() const { return entries.cols(); }
};

inline SteeringMatrix build_steering_matrix(const MicArrayGeometry& geom, const DoaGrid& grid,
                                            int frame_size) {
    if (!is_power_of_two(frame_size)) throw ConfigError("frame_size must be a power of two");
    SteeringMatrix sm;
    sm.pairs = geom.pair_list();
    sm.frame_size = frame_size;
    const int bins = sm.bin_count();
    const int pair_count = sm.pair_count();
    sm.entries.resize(grid.size(), static_cast<Eigen::Index>(pair_count) * bins);
    for (int q = 0; q < grid.size(); ++q) {
        const Vec3& s = grid.directions[static_cast<std::size_t>(q)];
        for (int p = 0; p < pair_count; ++p) {
            const auto [i, j] = sm.pairs[static_cast<std::size_t>(p)];
            const double tau = tdoa_pair(geom, s, i, j);
            for (int k = 0; k < bins; ++k) {
                const double phase = kTwoPi * k * tau / frame_size;
                sm.entries(q, static_cast<Eigen::Index>(p) * bins + k) = Complex(std::cos(phase), std::sin(phase));
            }
        }
    }
    return sm;
}

}  // namespace sslkit
