#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "samplecraft/torus.hpp"
#include "samplecraft/samplers.hpp"
#include "support.hpp"

using namespace samplecraft;
using test_support::brute_force_neighbors;
using test_support::points_from;

namespace {
Eigen::RowVectorXd rv(std::initializer_list<double> v) {
    Eigen::RowVectorXd r(long(v.size()));
    int i = 0;
    for (double x : v) r(i++) = x;
    return r;
}
} // namespace

TEST_CASE("wrap1 maps into the half-open unit interval") {
    CHECK(wrap1(1.2) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(wrap1(-0.3) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(wrap1(0.0) == 0.0);
    CHECK(wrap1(0.999) == 0.999);
    double edge = wrap1(-1e-16); // rounds up to 1.0 without the fixup
    CHECK(edge >= 0.0);
    CHECK(edge < 1.0);
    CHECK(wrap1(3.0) == 0.0);
    CHECK(wrap1(-2.0) == 0.0);
}

TEST_CASE("wrap rejects non-finite coordinates") {
    CHECK_THROWS_AS(wrap(rv({0.5, std::numeric_limits<double>::quiet_NaN()})), NumericError);
    CHECK_THROWS_AS(wrap(rv({std::numeric_limits<double>::infinity()})), NumericError);
    Eigen::RowVectorXd w = wrap(rv({1.2, -0.3}));
    CHECK(w(0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(w(1) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("toroidal difference wraps and uses the half-open convention") {
    CHECK(toroidal_diff1(0.1, 0.9) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(toroidal_diff1(0.4, 0.4) == 0.0);

    Eigen::RowVectorXd d = toroidal_diff(rv({0.75, 0.25}), rv({0.25, 0.75}));
    CHECK(d(0) == -0.5); // antipodal offset is canonically -0.5
    CHECK(d(1) == -0.5);
    Eigen::RowVectorXd e = toroidal_diff(rv({0.25, 0.75}), rv({0.75, 0.25}));
    CHECK(e(0) == -0.5);
    CHECK(e(1) == -0.5);

    CHECK_THROWS_AS(toroidal_diff(rv({0.1}), rv({0.1, 0.2})), UsageError);
}

TEST_CASE("toroidal distance") {
    CHECK(toroidal_dist(rv({0.1, 0.1}), rv({0.9, 0.9})) ==
          doctest::Approx(std::sqrt(0.08)).epsilon(1e-12));
    CHECK(toroidal_dist(rv({0.3, 0.7}), rv({0.3, 0.7})) == 0.0);
    CHECK(toroidal_dist(rv({0.0, 0.0}), rv({0.5, 0.5})) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(toroidal_dist(rv({0.1, 0.2}), rv({0.3})), UsageError);
}

TEST_CASE("offset antisymmetry away from the antipode") {
    Xoshiro256pp rng(11);
    for (int t = 0; t < 200; ++t) {
        double a = uniform01(rng), b = uniform01(rng);
        double d = toroidal_diff1(a, b);
        if (d == -0.5) continue; // ambiguous antipode, covered above
        CHECK(toroidal_diff1(b, a) == doctest::Approx(-d).epsilon(1e-12));
    }
}

TEST_CASE("offset shift invariance") {
    Xoshiro256pp rng(12);
    for (int t = 0; t < 200; ++t) {
        double a = uniform01(rng), b = uniform01(rng), shift = uniform01(rng);
        double base = toroidal_diff1(a, b);
        double shifted = toroidal_diff1(wrap1(a + shift), wrap1(b + shift));
        // the antipodal sign flip is allowed; compare distances there
        if (std::abs(std::abs(base) - 0.5) < 1e-9)
            CHECK(std::abs(shifted) == doctest::Approx(std::abs(base)).epsilon(1e-9));
        else
            CHECK(shifted == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("toroidal distance satisfies the triangle inequality") {
    auto pts = random_points(300, 3, 13);
    for (int t = 0; t + 2 < 300; t += 3) {
        auto a = pts.coords.row(t), b = pts.coords.row(t + 1), c = pts.coords.row(t + 2);
        CHECK(toroidal_dist(a, c) <= toroidal_dist(a, b) + toroidal_dist(b, c) + 1e-12);
    }
}

TEST_CASE("neighbor grid construction bounds") {
    auto ps = random_points(4, 2, 1);
    CHECK_THROWS_AS(NeighborGrid(ps, 0.6), UsageError);
    CHECK_THROWS_AS(NeighborGrid(ps, 0.0), UsageError);
    CHECK_THROWS_AS(NeighborGrid(ps, -0.1), UsageError);

    NeighborGrid g(ps, 0.4);
    CHECK(g.cells_per_axis() == 2);
    CHECK(g.point_count() == 4);

    NeighborGrid tiny(random_points(3, 2, 2), 1e-12); // cell count must not overflow
    CHECK(tiny.cells_per_axis() > 1000);
}

TEST_CASE("neighbor query basics") {
    PointSet one = points_from({{0.3, 0.3}});
    NeighborGrid g1(one, 0.3);
    CHECK(g1.query(one, 0, 0.3).empty());

    // inclusive radius: exact boundary distance is a hit
    PointSet pair = points_from({{0.1, 0.5}, {0.3, 0.5}});
    NeighborGrid g2(pair, 0.2);
    CHECK(g2.query(pair, 0, 0.2) == std::vector<int>{1});

    // radius beyond the domain diameter returns everyone
    auto ps = random_points(20, 2, 3);
    NeighborGrid g3(ps, 0.5);
    CHECK(g3.query(ps, 4, 0.5 * std::sqrt(2.0) + 1e-9).size() == 19);

    // ascending order
    auto nb = g3.query(ps, 0, 0.45);
    CHECK(std::is_sorted(nb.begin(), nb.end()));
}

TEST_CASE("stale grid is rejected") {
    auto a = random_points(5, 2, 4);
    auto b = random_points(6, 2, 4);
    NeighborGrid g(a, 0.3);
    CHECK_THROWS_AS(g.query(b, 0, 0.3), UsageError);
    CHECK_THROWS_AS(g.query(a, 7, 0.3), UsageError);
}

TEST_CASE("neighbor query matches brute force over random configurations") {
    Xoshiro256pp rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        long N = 1 + long(uniform01(rng) * 40);
        int n = 1 + int(uniform01(rng) * 3.999);
        double radius = 0.05 + 0.45 * uniform01(rng);
        auto ps = random_points(N, n, rng());
        NeighborGrid g(ps, radius);
        long i = long(uniform01(rng) * N);
        CHECK(g.query(ps, int(i), radius) == brute_force_neighbors(ps, int(i), radius));
    }
}

TEST_CASE("query radius may differ from the build radius") {
    auto ps = random_points(60, 2, 9);
    NeighborGrid g(ps, 0.1);
    for (int i = 0; i < 10; ++i) {
        CHECK(g.query(ps, i, 0.05) == brute_force_neighbors(ps, i, 0.05));
        CHECK(g.query(ps, i, 0.37) == brute_force_neighbors(ps, i, 0.37));
    }
}

TEST_CASE("projection selects and restricts") {
    auto ps = random_points(10, 3, 21);
    ps.free_dims = {1, 0, 1};

    PointSet all = project(ps, {0, 1, 2});
    CHECK(all.coords == ps.coords);
    CHECK(all.free_dims == ps.free_dims);

    PointSet xy = project(ps, {0, 1});
    CHECK(xy.dim() == 2);
    CHECK(xy.count() == 10);
    CHECK(xy.coords.col(0) == ps.coords.col(0));
    CHECK(xy.coords.col(1) == ps.coords.col(1));
    CHECK(xy.free_dims == std::vector<char>{1, 0});

    PointSet swapped = project(project(ps, {2, 1}), {1});
    CHECK(swapped.coords.col(0) == ps.coords.col(1)); // composition = single projection

    CHECK_THROWS_AS(project(ps, {3}), UsageError);
    CHECK_THROWS_AS(project(ps, {0, 0}), UsageError);
    CHECK_THROWS_AS(project(ps, {}), UsageError);
}

TEST_CASE("row subsets") {
    auto ps = random_points(8, 2, 22);
    PointSet mid = subset_rows(ps, 2, 3);
    CHECK(mid.count() == 3);
    CHECK(mid.coords == ps.coords.middleRows(2, 3));
    CHECK(mid.free_dims == ps.free_dims);
    CHECK_THROWS_AS(subset_rows(ps, -1, 2), UsageError);
    CHECK_THROWS_AS(subset_rows(ps, 6, 3), UsageError);
    CHECK_THROWS_AS(subset_rows(ps, 0, 0), UsageError);
}

TEST_CASE("point set validation") {
    auto ps = random_points(4, 2, 30);
    CHECK_NOTHROW(ps.validate());
    PointSet bad = ps;
    bad.coords(1, 1) = 1.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    PointSet nan = ps;
    nan.coords(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(nan.validate(), NumericError);
    PointSet mask = ps;
    mask.free_dims = {1};
    CHECK_THROWS_AS(mask.validate(), UsageError);
}
