#pragma once

#include "samplecraft/losses.hpp"
#include "samplecraft/samplers.hpp"

namespace samplecraft {

// Radial spectral target measured from a sampler: the periodogram averaged
// over `trials` realizations (seeds seed+0 .. seed+trials-1), radially
// reduced to a table of bin-center knots. Empty bins contribute no knot.
TargetSpectrum measure_target_spectrum(const SamplerFn& sampler, long N, int n, int trials, int K,
                                       int bins, uint64_t seed);

// PCF target measured from a sampler with the exact estimator the
// differential loss uses; densities averaged over `trials` realizations.
PcfHistogram measure_target_pcf(const SamplerFn& sampler, long N, int n, int trials, int bins,
                                double r_max, double h, uint64_t seed);

} // namespace samplecraft
