#include "sslkit/geometry.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace sslkit;
using Catch::Approx;

namespace {

// The published square-array coordinates, verbatim (cm converted to m,
// mic plane spanned by x and z). tdoa_* are frame-agnostic, so the hand
// values below hold regardless of how the default config orients the array.
MicArrayGeometry table_geometry(double c = 343.0, double fs = 16000.0) {
    return MicArrayGeometry({Vec3(0.029, 0.0, 0.029), Vec3(0.029, 0.0, -0.029),
                             Vec3(-0.029, 0.0, 0.029), Vec3(-0.029, 0.0, -0.029)},
                            c, fs);
}

}  // namespace

TEST_CASE("tdoa_origin hand values", "[geometry]") {
    const MicArrayGeometry geom = table_geometry();
    CHECK(tdoa_origin(geom, Vec3(0, 1, 0), 0) == 0.0);
    CHECK(tdoa_origin(geom, Vec3(1, 0, 0), 0) == Approx(1.35277).margin(5e-6));
    CHECK(tdoa_origin(geom, Vec3(1, 0, 0), 0) == Approx(16000.0 / 343.0 * 0.029).epsilon(1e-14));

    // linear in f_S / c
    const MicArrayGeometry doubled = table_geometry(343.0, 32000.0);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const Vec3 s = test::random_unit_vec(rng);
        CHECK(tdoa_origin(doubled, s, 2) == Approx(2.0 * tdoa_origin(geom, s, 2)).margin(1e-12));
    }
}

TEST_CASE("tdoa_pair hand values and antisymmetry", "[geometry]") {
    const MicArrayGeometry geom = table_geometry();
    // mics 1 and 3 (0-based 0 and 2): baseline (-0.058, 0, 0)
    CHECK(tdoa_pair(geom, Vec3(1, 0, 0), 0, 2) == Approx(-2.70554).margin(5e-6));
    // pair coplanar in z: zero TDOA along +z
    CHECK(tdoa_pair(geom, Vec3(0, 0, 1), 0, 2) == 0.0);

    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
        const Vec3 s = test::random_unit_vec(rng);
        const int a = static_cast<int>(test::urand(rng, 0, 4));
        int b = static_cast<int>(test::urand(rng, 0, 4));
        if (a == b) b = (b + 1) % 4;
        CHECK(tdoa_pair(geom, s, a, b) == Approx(-tdoa_pair(geom, s, b, a)).margin(1e-12));
        CHECK(tdoa_pair(geom, s, a, b) ==
              Approx(tdoa_origin(geom, s, b) - tdoa_origin(geom, s, a)).margin(1e-12));
    }

    CHECK_THROWS_AS(tdoa_pair(geom, Vec3(1, 0, 0), 1, 1), std::domain_error);
    CHECK_THROWS_AS(tdoa_pair(geom, Vec3(0.5, 0, 0), 0, 1), std::domain_error);
    CHECK_THROWS_AS(tdoa_origin(geom, Vec3(0.5, 0.5, 0.5), 0), std::domain_error);
}

TEST_CASE("max TDOA bound for the square array", "[geometry]") {
    const MicArrayGeometry geom = default_geometry();
    CHECK(geom.max_pair_distance() == Approx(0.082).margin(5e-4));
    const double bound = 16000.0 / 343.0 * geom.max_pair_distance();
    CHECK(bound == Approx(3.83).margin(5e-3));
    const DoaGrid grid = build_doa_grid(3);
    for (const Vec3& s : grid.directions)
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) CHECK(std::abs(tdoa_pair(geom, s, i, j)) <= bound + 1e-9);
}

TEST_CASE("halfsphere grid counts per level", "[geometry]") {
    // icosahedron base: 5 * 4^L + 2 points on the closed halfsphere
    for (int level = 0; level <= 4; ++level) {
        const DoaGrid grid = build_doa_grid(level);
        CHECK(grid.size() == 5 * (1 << (2 * level)) + 2);
    }
    CHECK(build_doa_grid(4).size() == 1282);
}

TEST_CASE("grid points are unit, on the halfsphere, distinct", "[geometry]") {
    const DoaGrid grid = build_doa_grid(4);
    std::set<std::array<long long, 3>> quantized;
    for (const Vec3& s : grid.directions) {
        CHECK(std::abs(s.norm() - 1.0) < 1e-12);
        CHECK(s.z() >= -1e-12);
        quantized.insert({static_cast<long long>(s.x() * 1e12), static_cast<long long>(s.y() * 1e12),
                          static_cast<long long>(s.z() * 1e12)});
    }
    CHECK(quantized.size() == static_cast<std::size_t>(grid.size()));
}

TEST_CASE("grid near-equidistance: spacing ratio below two", "[geometry]") {
    for (int level = 1; level <= 4; ++level) {
        const DoaGrid grid = build_doa_grid(level);
        double min_nn = 10.0, max_nn = 0.0;
        for (int a = 0; a < grid.size(); ++a) {
            double best = 10.0;
            for (int b = 0; b < grid.size(); ++b) {
                if (a == b) continue;
                const double ang = std::acos(std::clamp(
                    grid.directions[static_cast<std::size_t>(a)].dot(grid.directions[static_cast<std::size_t>(b)]), -1.0, 1.0));
                best = std::min(best, ang);
            }
            min_nn = std::min(min_nn, best);
            max_nn = std::max(max_nn, best);
        }
        CHECK(max_nn / min_nn <= 2.0);
    }
}

TEST_CASE("tetrahedron base: level 0 keeps the apex only", "[geometry]") {
    const DoaGrid grid = build_doa_grid(0, GridBase::tetrahedron);
    REQUIRE(grid.size() == 1);
    CHECK((grid.directions[0] - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK(build_doa_grid(1, GridBase::tetrahedron).size() == 4);
}

TEST_CASE("steering matrix basics", "[geometry]") {
    const MicArrayGeometry geom = default_geometry();
    const DoaGrid grid = build_doa_grid(1);
    const SteeringMatrix w = build_steering_matrix(geom, grid, 64);
    const int bins = w.bin_count();
    REQUIRE(w.pair_count() == 6);
    REQUIRE(w.entries.rows() == grid.size());
    REQUIRE(w.entries.cols() == 6 * bins);

    for (int q = 0; q < grid.size(); ++q)
        for (int p = 0; p < 6; ++p)
            CHECK(w.entries(q, p * bins) == Complex(1.0, 0.0));  // k = 0 column block
    for (Eigen::Index i = 0; i < w.entries.size(); ++i)
        CHECK(std::abs(std::abs(w.entries(i / w.entries.cols(), i % w.entries.cols())) - 1.0) < 1e-12);
}

TEST_CASE("zenith row of the steering matrix is all ones for an in-plane array", "[geometry]") {
    // every baseline of the planar array is orthogonal to +z
    const MicArrayGeometry geom = default_geometry();
    DoaGrid grid;
    grid.directions = {Vec3(0, 0, 1)};
    const SteeringMatrix w = build_steering_matrix(geom, grid, 256);
    CHECK((w.entries.row(0).array() - Complex(1.0, 0.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("steering conjugacy under x-flip on the centro-symmetric array", "[geometry]") {
    // Flipping the x-component of a DOA maps each baseline onto plus or minus
    // another baseline of the square array; the steering row follows with a
    // pair permutation and, where the sign flips, a conjugation.
    const MicArrayGeometry geom = table_geometry();
    const auto pairs = geom.pair_list();
    std::mt19937_64 rng(9);
    const int frame_size = 64;
    const int bins = frame_size / 2 + 1;

    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 s = test::random_unit_vec(rng);
        const Vec3 s_flipped(-s.x(), s.y(), s.z());
        DoaGrid g1, g2;
        g1.directions = {s};
        g2.directions = {s_flipped};
        const SteeringMatrix w1 = build_steering_matrix(geom, g1, frame_size);
        const SteeringMatrix w2 = build_steering_matrix(geom, g2, frame_size);

        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const Vec3 b = geom.positions[static_cast<std::size_t>(pairs[p].second)] -
                           geom.positions[static_cast<std::size_t>(pairs[p].first)];
            const Vec3 b_flipped(-b.x(), b.y(), b.z());
            // locate the baseline equal to +-flip(b)
            int match = -1;
            double sign = 0.0;
            for (std::size_t p2 = 0; p2 < pairs.size(); ++p2) {
                const Vec3 b2 = geom.positions[static_cast<std::size_t>(pairs[p2].second)] -
                                geom.positions[static_cast<std::size_t>(pairs[p2].first)];
                if ((b2 - b_flipped).norm() < 1e-12) {
                    match = static_cast<int>(p2);
                    sign = 1.0;
                    break;
                }
                if ((b2 + b_flipped).norm() < 1e-12) {
                    match = static_cast<int>(p2);
                    sign = -1.0;
                    break;
                }
            }
            REQUIRE(match >= 0);
            for (int k = 0; k < bins; ++k) {
                const Complex lhs = w2.entries(0, static_cast<Eigen::Index>(p) * bins + k);
                const Complex rhs = w1.entries(0, static_cast<Eigen::Index>(match) * bins + k);
                CHECK(std::abs(lhs - (sign > 0 ? rhs : std::conj(rhs))) < 1e-9);
            }
        }
    }
}

TEST_CASE("grid CSV export", "[geometry]") {
    test::TempDir dir("grid");
    const DoaGrid grid = build_doa_grid(1);
    write_grid_csv(dir.file("grid.csv"), grid);
    std::ifstream in(dir.file("grid.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "q,x,y,z");
    int lines = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    CHECK(lines == grid.size());
}

TEST_CASE("geometry validation", "[geometry]") {
    CHECK_THROWS_AS(MicArrayGeometry({Vec3(0, 0, 0)}, 343.0, 16000.0), ConfigError);
    CHECK_THROWS_AS(MicArrayGeometry({Vec3(0, 0, 0), Vec3(0, 0, 0)}, 343.0, 16000.0), ConfigError);
    CHECK_THROWS_AS(MicArrayGeometry({Vec3(0, 0, 0), Vec3(1, 0, 0)}, -1.0, 16000.0), ConfigError);
    CHECK_THROWS_AS(build_doa_grid(-1), ConfigError);
}
