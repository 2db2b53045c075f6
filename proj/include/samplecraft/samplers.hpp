#pragma once

#include <functional>
#include <string>

#include "samplecraft/pointset.hpp"

namespace samplecraft {

// I.i.d. uniform points from a seeded xoshiro256++ stream.
PointSet random_points(long N, int n, uint64_t seed);

// One uniform sample per cell of the k^n stratification; N must equal k^n.
PointSet jittered_points(long N, int n, uint64_t seed);

// Digit reversal of i in the given base; in [0,1).
double radical_inverse(uint64_t i, int base);

// Halton: first n primes as bases over indices 1..N (origin skipped).
PointSet halton_points(long N, int n);

// Hammersley: i/N in dimension 0, radical inverses in the rest, i from 0.
PointSet hammersley_points(long N, int n);

// Every 1D projection has exactly one point per stratum [k/N,(k+1)/N).
PointSet latin_hypercube_points(long N, int n, uint64_t seed);

// Dart throwing with minimum pairwise toroidal distance `radius`
// (0 = automatic: 0.7x the densest-packing spacing for N points).
PointSet poisson_disk_points(long N, int n, uint64_t seed, double radius = 0.0);
double poisson_disk_radius(long N, int n);

// Named sampler registry used by the CLI and target recipes:
// random | jittered | halton | hammersley | latin | poisson.
using SamplerFn = std::function<PointSet(long N, int n, uint64_t seed)>;
SamplerFn sampler_by_name(const std::string& name);

} // namespace samplecraft
