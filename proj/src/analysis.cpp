#include <cmath>

#include "samplecraft/analysis.hpp"
#include "samplecraft/io.hpp"
#include "samplecraft/targets.hpp"

namespace samplecraft {

Spectrum averaged_periodogram(const SamplerFn& source, int trials, long N, int n, int K,
                              uint64_t seed) {
    if (trials < 1) throw UsageError("averaged periodogram needs at least one trial");
    std::vector<Eigen::ArrayXXd> tables(trials);
    parallel_for(0, trials, [&](long t) {
        PointSet ps = source(N, n, seed + uint64_t(t));
        tables[t] = periodogram(ps, K).P;
    });
    Spectrum avg;
    avg.n = n;
    avg.K = K;
    avg.N = N;
    avg.P = tables[0];
    for (int t = 1; t < trials; ++t) avg.P += tables[t];
    avg.P /= double(trials);
    return avg;
}

double star_discrepancy_estimate(const PointSet& points, int probes) {
    if (probes < 1) throw UsageError("star discrepancy estimate needs at least one probe");
    points.validate();
    const long N = points.count();
    const int n = points.dim();

    Eigen::MatrixXd corners(N + probes, n);
    corners.topRows(N) = points.coords;
    Xoshiro256pp rng(kStarProbeSeed); // fixed: the estimate is a deterministic metric
    for (int p = 0; p < probes; ++p)
        for (int d = 0; d < n; ++d) corners(N + p, d) = uniform01(rng);

    double best = 0.0;
    for (long c = 0; c < corners.rows(); ++c) {
        double vol = 1.0;
        for (int d = 0; d < n; ++d) vol *= corners(c, d);
        long open = 0, closed = 0;
        for (long i = 0; i < N; ++i) {
            bool lt = true, le = true;
            for (int d = 0; d < n; ++d) {
                double x = points.coords(i, d), b = corners(c, d);
                lt = lt && x < b;
                le = le && x <= b;
            }
            open += lt;
            closed += le;
        }
        best = std::max(best, std::abs(double(open) / double(N) - vol));
        best = std::max(best, std::abs(double(closed) / double(N) - vol));
    }
    return best;
}

Eigen::ArrayXXi spectrum_image_pixels(const Spectrum& spec) {
    if (spec.n != 2) throw UsageError("spectrum images are 2D only");
    const int M = 2 * spec.K + 1;
    Eigen::ArrayXXi pixels(M, M);
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            pixels(a, b) = int(std::lround(std::min(spec.P(a, b), 2.0) * 127.5));
    pixels(spec.K, spec.K) = 0;
    return pixels;
}

void export_spectrum_image(const Spectrum& spec, const std::string& path) {
    write_pgm8(path, spectrum_image_pixels(spec));
}

AnalysisReport analyze_source(const SamplerFn& source, int trials, long N, int n, int K,
                              int radial_bins, uint64_t seed) {
    AnalysisReport report;
    report.trials = trials;
    report.spectrum = averaged_periodogram(source, trials, N, n, K, seed);
    report.radial = radial_stats(report.spectrum, radial_bins);
    double r_max = default_pcf_rmax(n);
    report.pcf = measure_target_pcf(source, N, n, trials, 128, r_max, r_max / 64.0, seed);

    auto tasks = sample_gaussian_tasks(64, n, kAnalysisTaskSeed);
    std::vector<PointSet> batch;
    batch.reserve(size_t(trials));
    for (int t = 0; t < trials; ++t) batch.push_back(source(N, n, seed + uint64_t(t)));
    report.discrepancy_score = discrepancy_loss(batch, tasks);
    report.star_estimate = star_discrepancy_estimate(batch[0], 512);
    return report;
}

} // namespace samplecraft
