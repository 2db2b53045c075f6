#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "samplecraft/targets.hpp"
#include "support.hpp"

using namespace samplecraft;

TEST_CASE("blue-noise step radius follows the packing-aware rule") {
    double lam2 = 2.0 / std::sqrt(3.0);
    CHECK(bn_step_radius(256, 2) ==
          doctest::Approx(0.85 * 16.0 * std::pow(lam2, -0.5)).epsilon(1e-14));
    CHECK(bn_step_radius(100, 1) == doctest::Approx(85.0).epsilon(1e-14));
    CHECK(bn_step_radius(64, 3) ==
          doctest::Approx(0.85 * 4.0 * std::pow(std::sqrt(2.0), -1.0 / 3.0)).epsilon(1e-14));
    CHECK(bn_step_radius(512, 2) > bn_step_radius(256, 2));
}

TEST_CASE("builtin blue-noise target is a unit smoothstep around the step radius") {
    TargetSpectrum bn = builtin_target("bn");
    long N = 256;
    double r0 = bn_step_radius(N, 2);
    CHECK(bn.value(0.0, N, 2) == 0.0);
    CHECK(bn.value(r0 - 1.0, N, 2) == 0.0);
    CHECK(bn.value(r0 + 1.0, N, 2) == 1.0);
    CHECK(bn.value(40.0, N, 2) == 1.0);
    CHECK(bn.value(r0, N, 2) == doctest::Approx(0.5).epsilon(1e-14));
    // smoothstep at a quarter of the ramp
    CHECK(bn.value(r0 - 0.5, N, 2) == doctest::Approx(0.15625).epsilon(1e-14));
    double prev = -1.0;
    for (double r = r0 - 1.0; r <= r0 + 1.0; r += 0.05) {
        double v = bn.value(r, N, 2);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("builtin jitter target rises quadratically to the grid frequency") {
    TargetSpectrum jt = builtin_target("jitter");
    CHECK(jt.value(0.0, 256, 2) == 0.0);
    CHECK(jt.value(8.0, 256, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(jt.value(16.0, 256, 2) == 1.0);
    CHECK(jt.value(200.0, 256, 2) == 1.0);
    CHECK(jt.value(4.0, 64, 3) == doctest::Approx(1.0).epsilon(1e-12)); // 64^(1/3) = 4
}

TEST_CASE("builtin green target peaks past the step radius") {
    TargetSpectrum g = builtin_target("green");
    long N = 128;
    double b = bn_step_radius(N, 2);
    CHECK(g.value(1.5 * b, N, 2) == 2.0);
    double side = 2.0 * std::exp(-0.5);
    CHECK(g.value(1.5 * b + 0.35 * b, N, 2) == doctest::Approx(side).epsilon(1e-12));
    CHECK(g.value(1.5 * b - 0.35 * b, N, 2) == doctest::Approx(side).epsilon(1e-12));
    CHECK(g.value(0.0, N, 2) < 0.01);
}

TEST_CASE("builtin pink target decays hyperbolically") {
    TargetSpectrum p = builtin_target("pink");
    long N = 128;
    double b = bn_step_radius(N, 2);
    CHECK(p.value(0.0, N, 2) == 2.0);
    CHECK(p.value(b, N, 2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.value(3.0 * b, N, 2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p.value(2.0, N, 2) > p.value(20.0, N, 2));
}

TEST_CASE("unknown builtin names are rejected") {
    CHECK_THROWS_AS(builtin_target("white"), UsageError);
    TargetSpectrum t;
    t.kind = TargetSpectrum::Kind::Builtin;
    t.builtin = "bogus";
    CHECK_THROWS_AS(t.value(1.0, 16, 2), UsageError);
}

TEST_CASE("radial tables interpolate, clamp below and extend one spacing") {
    TargetSpectrum t;
    t.kind = TargetSpectrum::Kind::RadialTable;
    t.radii = Eigen::ArrayXd(3);
    t.radii << 1.0, 2.0, 4.0;
    t.power = Eigen::ArrayXd(3);
    t.power << 0.5, 1.0, 0.25;

    CHECK(t.value(0.2, 16, 2) == 0.5); // clamped to the first knot
    CHECK(t.value(1.0, 16, 2) == 0.5);
    CHECK(t.value(1.5, 16, 2) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(t.value(2.0, 16, 2) == 1.0);
    CHECK(t.value(3.0, 16, 2) == doctest::Approx(0.625).epsilon(1e-14));
    CHECK(t.value(4.0, 16, 2) == 0.25);
    // flat extension for one trailing knot spacing, then out of range
    CHECK(t.value(5.9, 16, 2) == 0.25);
    CHECK(t.value(6.0, 16, 2) == 0.25);
    CHECK_THROWS_AS(t.value(6.01, 16, 2), UsageError);

    TargetSpectrum single;
    single.kind = TargetSpectrum::Kind::RadialTable;
    single.radii = Eigen::ArrayXd::Constant(1, 2.0);
    single.power = Eigen::ArrayXd::Constant(1, 0.7);
    CHECK(single.value(0.1, 16, 2) == 0.7);
    CHECK(single.value(4.0, 16, 2) == 0.7);
    CHECK_THROWS_AS(single.value(4.1, 16, 2), UsageError);

    TargetSpectrum empty;
    empty.kind = TargetSpectrum::Kind::RadialTable;
    CHECK_THROWS_AS(empty.value(1.0, 16, 2), UsageError);

    TargetSpectrum full;
    full.kind = TargetSpectrum::Kind::FullTable;
    CHECK_THROWS_AS(full.value(1.0, 16, 2), UsageError);
}

TEST_CASE("a measured random target is flat near one") {
    TargetSpectrum t = measure_target_spectrum(sampler_by_name("random"), 256, 2, 64, 16, 8, 50);
    REQUIRE(t.kind == TargetSpectrum::Kind::RadialTable);
    REQUIRE(t.radii.size() == 8);
    double binwidth = 16.0 * std::sqrt(2.0) / 8.0;
    CHECK(t.radii(0) == doctest::Approx(0.5 * binwidth).epsilon(1e-14));
    CHECK(t.radii(7) == doctest::Approx(7.5 * binwidth).epsilon(1e-14));
    for (long i = 0; i < t.radii.size(); ++i)
        CHECK(t.power(i) == doctest::Approx(1.0).epsilon(0.15));
    // knots drive the lookup directly
    CHECK(t.value(t.radii(3), 256, 2) == t.power(3));

    TargetSpectrum again =
        measure_target_spectrum(sampler_by_name("random"), 256, 2, 64, 16, 8, 50);
    CHECK((t.radii == again.radii).all());
    CHECK((t.power == again.power).all());
}

TEST_CASE("a measured jittered target keeps its low-frequency dip") {
    TargetSpectrum t = measure_target_spectrum(sampler_by_name("jittered"), 256, 2, 32, 16, 8, 9);
    REQUIRE(t.radii.size() >= 2);
    CHECK(t.power(0) < 0.2);
    CHECK(t.power(t.power.size() - 1) > 0.7);
}

TEST_CASE("target spectrum measurement validates its arguments") {
    CHECK_THROWS_AS(measure_target_spectrum(sampler_by_name("random"), 16, 2, 0, 4, 4, 1),
                    UsageError);
    CHECK_THROWS_AS(measure_target_spectrum(sampler_by_name("random"), 16, 3, 2, 4, 4, 1),
                    UsageError);
}

TEST_CASE("a measured pcf target matches the uniform pair density") {
    long N = 128;
    int bins = 32;
    double r_max = 0.3, h = 0.01;
    PcfHistogram t =
        measure_target_pcf(sampler_by_name("random"), N, 2, 64, bins, r_max, h, 77);
    CHECK(t.bins == bins);
    CHECK(t.r_max == r_max);
    CHECK(t.h == h);
    REQUIRE(t.density.size() == bins);

    // For i.i.d. points the expected smoothed histogram deposits
    // pairs * pi * (r0 + r1) per unit radius inside each interior bin.
    double pairs = double(N) * double(N - 1) / 2.0;
    double bw = t.binwidth();
    for (int b = 8; b < 24; ++b) {
        double expected = pairs * M_PI * (b * bw + (b + 1) * bw);
        CHECK(t.density(b) == doctest::Approx(expected).epsilon(0.10));
    }

    PcfHistogram again =
        measure_target_pcf(sampler_by_name("random"), N, 2, 64, bins, r_max, h, 77);
    CHECK((t.density == again.density).all());
    CHECK_THROWS_AS(measure_target_pcf(sampler_by_name("random"), N, 2, 0, bins, r_max, h, 77),
                    UsageError);
}

TEST_CASE("a measured poisson-disk target is empty inside the exclusion radius") {
    long N = 64;
    double h = 0.005;
    PcfHistogram t =
        measure_target_pcf(sampler_by_name("poisson"), N, 2, 8, 64, 0.25, h, 5);
    double radius = poisson_disk_radius(N, 2);
    REQUIRE(radius > 0.05);
    double peak = t.density.maxCoeff();
    REQUIRE(peak > 0.0);
    double bw = t.binwidth();
    for (int b = 0; b < t.bins; ++b) {
        double center = (b + 0.5) * bw;
        if (center < radius - 4.0 * h) CHECK(t.density(b) <= 0.01 * peak);
    }
}

TEST_CASE("matching the measured target beats a mismatched source") {
    // Poisson-disk spectra are isotropic, so the radial reduction is
    // faithful; batch-averaged periodograms keep the per-realization
    // variance from swamping the bias.
    TargetSpectrum t = measure_target_spectrum(sampler_by_name("poisson"), 64, 2, 32, 8, 8, 3);
    SamplerFn pd = sampler_by_name("poisson");
    double self = 0.0, other = 0.0;
    for (uint64_t s = 0; s < 4; ++s) {
        std::vector<PointSet> match, rnd;
        for (uint64_t b = 0; b < 16; ++b) {
            match.push_back(pd(64, 2, 500 + 16 * s + b));
            rnd.push_back(random_points(64, 2, 500 + 16 * s + b));
        }
        self += spectral_loss(match, t, 8);
        other += spectral_loss(rnd, t, 8);
    }
    CHECK(self < 0.25 * other);
}
