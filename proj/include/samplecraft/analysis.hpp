#pragma once

#include <string>

#include "samplecraft/losses.hpp"
#include "samplecraft/samplers.hpp"

namespace samplecraft {

// Mean periodogram over trials realizations generated with seeds
// seed+0 .. seed+trials-1. Full lattices exist for n <= 2 only.
Spectrum averaged_periodogram(const SamplerFn& source, int trials, long N, int n, int K,
                              uint64_t seed);

// Lower-bound estimate of the classic star discrepancy: max deviation
// |fraction of points inside - volume| over anchored boxes whose corners
// come from the point coordinates plus `probes` random corners (fixed
// internal seed, so the estimate is deterministic). Metric only.
double star_discrepancy_estimate(const PointSet& points, int probes);

// 8-bit PGM visualization of a 2D spectrum: pixel = round(min(P,2)*127.5),
// DC forced to 0 so the N-sized spike never washes out the scale.
Eigen::ArrayXXi spectrum_image_pixels(const Spectrum& spec);
void export_spectrum_image(const Spectrum& spec, const std::string& path);

// Fixed seeds behind the deterministic metrics: the Gaussian task set the
// report's discrepancy score uses, and the star-discrepancy probe corners.
inline constexpr uint64_t kAnalysisTaskSeed = 0xD15C5C02Eull;
inline constexpr uint64_t kStarProbeSeed = 0x57A2D15Cull;

struct AnalysisReport {
    Spectrum spectrum;
    RadialProfile radial;
    PcfHistogram pcf;
    double discrepancy_score = 0.0; // generalized discrepancy on Gaussian tasks
    double star_estimate = 0.0;
    int trials = 0;
};

// Runs the full measurement suite on a point source.
AnalysisReport analyze_source(const SamplerFn& source, int trials, long N, int n, int K,
                              int radial_bins, uint64_t seed);

} // namespace samplecraft
