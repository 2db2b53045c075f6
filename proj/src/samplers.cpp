#include "samplecraft/samplers.hpp"

#include <algorithm>
#include <cmath>

#include "samplecraft/torus.hpp"

namespace samplecraft {

namespace {

constexpr int kPrimes[16] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

void check_counts(long N, int n) {
    if (N < 1) throw UsageError("point count must be at least 1");
    if (n < 1) throw UsageError("dimension must be at least 1");
}

} // namespace

PointSet random_points(long N, int n, uint64_t seed) {
    check_counts(N, n);
    Xoshiro256pp rng(seed);
    Eigen::MatrixXd c(N, n);
    for (long i = 0; i < N; ++i)
        for (int d = 0; d < n; ++d) c(i, d) = uniform01(rng);
    return PointSet(std::move(c));
}

PointSet jittered_points(long N, int n, uint64_t seed) {
    check_counts(N, n);
    long k = std::lround(std::pow(double(N), 1.0 / n));
    auto ipow = [](long b, int e) {
        long r = 1;
        while (e--) r *= b;
        return r;
    };
    if (ipow(k, n) != N) {
        long lo = k > 1 ? ipow(k - 1, n) : 1, hi = ipow(k + 1, n);
        long nearest = (N - lo <= hi - N) ? lo : hi;
        if (ipow(k, n) > 0 && std::llabs(ipow(k, n) - N) < std::llabs(nearest - N)) nearest = ipow(k, n);
        throw UsageError("jittered sampling needs N = k^n; nearest valid N is " + std::to_string(nearest));
    }
    Xoshiro256pp rng(seed);
    Eigen::MatrixXd c(N, n);
    std::vector<long> cell(n, 0);
    for (long i = 0; i < N; ++i) {
        for (int d = 0; d < n; ++d) c(i, d) = (double(cell[d]) + uniform01(rng)) / double(k);
        for (int d = n - 1; d >= 0; --d) {
            if (++cell[d] < k) break;
            cell[d] = 0;
        }
    }
    return PointSet(std::move(c));
}

double radical_inverse(uint64_t i, int base) {
    if (base < 2) throw UsageError("radical inverse base must be >= 2");
    double r = 0.0, f = 1.0;
    while (i) {
        f /= base;
        r += f * double(i % uint64_t(base));
        i /= uint64_t(base);
    }
    return r;
}

PointSet halton_points(long N, int n) {
    check_counts(N, n);
    if (n > 16) throw UsageError("halton supports at most 16 dimensions");
    Eigen::MatrixXd c(N, n);
    for (long i = 0; i < N; ++i)
        for (int d = 0; d < n; ++d) c(i, d) = radical_inverse(uint64_t(i + 1), kPrimes[d]);
    return PointSet(std::move(c));
}

PointSet hammersley_points(long N, int n) {
    check_counts(N, n);
    if (n > 16) throw UsageError("hammersley supports at most 16 dimensions");
    Eigen::MatrixXd c(N, n);
    for (long i = 0; i < N; ++i) {
        c(i, 0) = double(i) / double(N);
        for (int d = 1; d < n; ++d) c(i, d) = radical_inverse(uint64_t(i), kPrimes[d - 1]);
    }
    return PointSet(std::move(c));
}

PointSet latin_hypercube_points(long N, int n, uint64_t seed) {
    check_counts(N, n);
    Xoshiro256pp rng(seed);
    Eigen::MatrixXd c(N, n);
    std::vector<long> perm(N);
    for (int d = 0; d < n; ++d) {
        for (long i = 0; i < N; ++i) perm[i] = i;
        for (long i = N - 1; i > 0; --i) {
            long j = long(rng() % uint64_t(i + 1));
            std::swap(perm[i], perm[j]);
        }
        for (long i = 0; i < N; ++i) c(i, d) = (double(perm[i]) + uniform01(rng)) / double(N);
    }
    return PointSet(std::move(c));
}

double poisson_disk_radius(long N, int n) {
    // Densest-lattice center densities for n = 1..5; beyond that fall back
    // to 1 (cubic), which only loosens the radius.
    static const double lambda[5] = {1.0, 2.0 / std::sqrt(3.0), std::sqrt(2.0), 2.0, 2.0 * std::sqrt(2.0)};
    double lam = (n >= 1 && n <= 5) ? lambda[n - 1] : 1.0;
    double spacing = std::pow(lam / double(N), 1.0 / n);
    return 0.7 * spacing;
}

PointSet poisson_disk_points(long N, int n, uint64_t seed, double radius) {
    check_counts(N, n);
    if (radius <= 0.0) radius = poisson_disk_radius(N, n);
    if (radius > 0.5) throw UsageError("poisson disk radius must be at most 0.5");
    const long max_attempts = 2000 * N + 10000;
    for (int restart = 0;; ++restart) {
        if (restart > 64) throw NumericError("poisson disk sampling failed to converge; radius too large");
        Xoshiro256pp rng(mix_seed(seed, uint64_t(restart)));
        Eigen::MatrixXd c(N, n);
        long placed = 0, attempts = 0;
        Eigen::RowVectorXd cand(n);
        while (placed < N && attempts < max_attempts) {
            ++attempts;
            for (int d = 0; d < n; ++d) cand(d) = uniform01(rng);
            bool ok = true;
            for (long j = 0; j < placed && ok; ++j)
                ok = toroidal_dist_sq(cand, c.row(j)) >= radius * radius;
            if (ok) c.row(placed++) = cand;
        }
        if (placed == N) return PointSet(std::move(c));
    }
}

SamplerFn sampler_by_name(const std::string& name) {
    if (name == "random") return [](long N, int n, uint64_t s) { return random_points(N, n, s); };
    if (name == "jittered") return [](long N, int n, uint64_t s) { return jittered_points(N, n, s); };
    if (name == "halton") return [](long N, int n, uint64_t) { return halton_points(N, n); };
    if (name == "hammersley") return [](long N, int n, uint64_t) { return hammersley_points(N, n); };
    if (name == "latin") return [](long N, int n, uint64_t s) { return latin_hypercube_points(N, n, s); };
    if (name == "poisson") return [](long N, int n, uint64_t s) { return poisson_disk_points(N, n, s); };
    throw UsageError("unknown sampler '" + name + "'");
}

} // namespace samplecraft
