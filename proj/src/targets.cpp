#include <cmath>

#include "samplecraft/targets.hpp"

namespace samplecraft {

TargetSpectrum measure_target_spectrum(const SamplerFn& sampler, long N, int n, int trials, int K,
                                       int bins, uint64_t seed) {
    if (trials < 1) throw UsageError("target measurement needs at least one trial");
    if (n > 2) throw UsageError("spectral targets are measured in 1D or 2D");
    std::vector<Eigen::ArrayXXd> tables(trials);
    parallel_for(0, trials, [&](long t) {
        PointSet ps = sampler(N, n, seed + uint64_t(t));
        tables[t] = periodogram(ps, K).P;
    });
    Spectrum avg;
    avg.n = n;
    avg.K = K;
    avg.N = N;
    avg.P = tables[0];
    for (int t = 1; t < trials; ++t) avg.P += tables[t];
    avg.P /= double(trials);

    RadialProfile profile = radial_stats(avg, bins);
    std::vector<double> radii, power;
    for (int b = 0; b < bins; ++b) {
        if (profile.count(b) == 0) continue;
        radii.push_back(profile.centers(b));
        power.push_back(std::max(0.0, profile.mean(b)));
    }
    TargetSpectrum target;
    target.kind = TargetSpectrum::Kind::RadialTable;
    target.radii = Eigen::Map<Eigen::ArrayXd>(radii.data(), long(radii.size()));
    target.power = Eigen::Map<Eigen::ArrayXd>(power.data(), long(power.size()));
    return target;
}

PcfHistogram measure_target_pcf(const SamplerFn& sampler, long N, int n, int trials, int bins,
                                double r_max, double h, uint64_t seed) {
    if (trials < 1) throw UsageError("target measurement needs at least one trial");
    std::vector<Eigen::ArrayXd> tables(trials);
    parallel_for(0, trials, [&](long t) {
        PointSet ps = sampler(N, n, seed + uint64_t(t));
        tables[t] = pcf_histogram(ps, bins, r_max, h).density;
    });
    PcfHistogram target;
    target.bins = bins;
    target.r_max = r_max;
    target.h = h;
    target.density = tables[0];
    for (int t = 1; t < trials; ++t) target.density += tables[t];
    target.density /= double(trials);
    return target;
}

} // namespace samplecraft
