#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "samplecraft/samplers.hpp"
#include "samplecraft/torus.hpp"

using namespace samplecraft;

TEST_CASE("random points are seeded and uniform") {
    auto a = random_points(3, 2, 7);
    auto b = random_points(3, 2, 7);
    CHECK(a.coords == b.coords); // determinism, bitwise

    auto c = random_points(3, 2, 8);
    CHECK(a.coords != c.coords);

    auto big = random_points(10000, 1, 1);
    double mean = big.coords.mean();
    CHECK(mean > 0.48);
    CHECK(mean < 0.52);

    CHECK_THROWS_AS(random_points(0, 2, 1), UsageError);
    CHECK_THROWS_AS(random_points(3, 0, 1), UsageError);
}

TEST_CASE("every sampler stays in the domain") {
    for (const char* name : {"random", "jittered", "halton", "hammersley", "latin", "poisson"}) {
        auto ps = sampler_by_name(name)(16, 2, 5);
        CHECK(ps.count() == 16);
        CHECK(ps.dim() == 2);
        CHECK_NOTHROW(ps.validate());
        CHECK((ps.coords.array() >= 0.0).all());
        CHECK((ps.coords.array() < 1.0).all());
    }
    CHECK_THROWS_AS(sampler_by_name("sobol"), UsageError);
}

TEST_CASE("jittered points occupy each stratum exactly once") {
    auto ps = jittered_points(4, 2, 3);
    std::set<std::pair<int, int>> cells;
    for (int i = 0; i < 4; ++i)
        cells.insert({int(ps.coords(i, 0) * 2), int(ps.coords(i, 1) * 2)});
    CHECK(cells.size() == 4);

    auto nine = jittered_points(9, 2, 4);
    std::set<std::pair<int, int>> nine_cells;
    for (int i = 0; i < 9; ++i)
        nine_cells.insert({int(nine.coords(i, 0) * 3), int(nine.coords(i, 1) * 3)});
    CHECK(nine_cells.size() == 9);

    CHECK(jittered_points(9, 2, 4).coords == nine.coords); // determinism
}

TEST_CASE("jittered rejects counts that are not perfect powers") {
    CHECK_THROWS_WITH_AS(jittered_points(8, 2, 1),
                         doctest::Contains("9"), UsageError); // nearest valid N named
    CHECK_THROWS_AS(jittered_points(5, 2, 1), UsageError);
    CHECK_NOTHROW(jittered_points(8, 3, 1));
}

TEST_CASE("radical inverse digit reversal") {
    CHECK(radical_inverse(0, 2) == 0.0);
    CHECK(radical_inverse(0, 7) == 0.0);
    CHECK(radical_inverse(1, 2) == 0.5);
    CHECK(radical_inverse(2, 2) == 0.25);
    CHECK(radical_inverse(3, 2) == 0.75);
    CHECK(radical_inverse(5, 3) == doctest::Approx(2.0 / 3.0 + 1.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("halton oracle values") {
    auto ps = halton_points(3, 2);
    CHECK(ps.coords(0, 0) == 0.5);
    CHECK(ps.coords(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(ps.coords(1, 0) == 0.25);
    CHECK(ps.coords(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(ps.coords(2, 0) == 0.75);
    CHECK(ps.coords(2, 1) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));

    CHECK(halton_points(3, 2).coords == ps.coords); // deterministic
    CHECK_THROWS_AS(halton_points(3, 17), UsageError);
}

TEST_CASE("hammersley first coordinate is i/N") {
    auto ps = hammersley_points(4, 2);
    CHECK(ps.coords(0, 0) == 0.0);
    CHECK(ps.coords(1, 0) == 0.25);
    CHECK(ps.coords(2, 0) == 0.5);
    CHECK(ps.coords(3, 0) == 0.75);
    CHECK(ps.coords(1, 1) == 0.5); // radical inverse base 2 of i=1
    CHECK_THROWS_AS(hammersley_points(4, 18), UsageError);
}

TEST_CASE("latin hypercube occupies each 1D stratum exactly once") {
    for (uint64_t seed : {0ull, 9ull, 77ull}) {
        auto ps = latin_hypercube_points(4, 2, seed);
        for (int d = 0; d < 2; ++d) {
            std::set<int> strata;
            for (int i = 0; i < 4; ++i) strata.insert(int(ps.coords(i, d) * 4));
            CHECK(strata.size() == 4);
        }
    }
    auto one = latin_hypercube_points(1, 3, 5);
    CHECK(one.count() == 1);
    CHECK(latin_hypercube_points(7, 2, 11).coords == latin_hypercube_points(7, 2, 11).coords);
}

TEST_CASE("poisson disk spacing") {
    auto ps = poisson_disk_points(64, 2, 19);
    double r = poisson_disk_radius(64, 2);
    double min_d2 = 1.0;
    for (int i = 0; i < 64; ++i)
        for (int j = i + 1; j < 64; ++j)
            min_d2 = std::min(min_d2, toroidal_dist_sq(ps.coords.row(i), ps.coords.row(j)));
    CHECK(std::sqrt(min_d2) >= r - 1e-12);
    CHECK(poisson_disk_points(64, 2, 19).coords == ps.coords);

    auto custom = poisson_disk_points(10, 2, 3, 0.1);
    for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j)
            CHECK(toroidal_dist_sq(custom.coords.row(i), custom.coords.row(j)) >= 0.01 - 1e-12);
}
