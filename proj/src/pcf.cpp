#include <cmath>

#include "samplecraft/losses.hpp"
#include "samplecraft/torus.hpp"

namespace samplecraft {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }
double normal_pdf(double z) { return 0.39894228040143267794 * std::exp(-0.5 * z * z); }

// Visits every unordered pair with toroidal distance <= cutoff. Uses the
// neighbor grid when the cutoff fits in it, otherwise scans all pairs.
template <typename F>
void for_each_pair(const PointSet& points, double cutoff, F&& fn) {
    const long N = points.count();
    const int n = points.dim();
    Eigen::RowVectorXd o(n);
    if (cutoff <= 0.5) {
        NeighborGrid grid(points, cutoff);
        std::vector<int> idx;
        for (long i = 0; i < N; ++i) {
            grid.query(points, int(i), cutoff, idx);
            for (int j : idx) {
                if (j <= i) continue;
                double d2 = 0.0;
                for (int d = 0; d < n; ++d) {
                    o(d) = toroidal_diff1(points.coords(i, d), points.coords(j, d));
                    d2 += o(d) * o(d);
                }
                fn(i, long(j), o, std::sqrt(d2));
            }
        }
    } else {
        double c2 = cutoff * cutoff;
        for (long i = 0; i < N; ++i)
            for (long j = i + 1; j < N; ++j) {
                double d2 = 0.0;
                for (int d = 0; d < n; ++d) {
                    o(d) = toroidal_diff1(points.coords(i, d), points.coords(j, d));
                    d2 += o(d) * o(d);
                }
                if (d2 <= c2) fn(i, j, o, std::sqrt(d2));
            }
    }
}

struct PcfSettings {
    int bins;
    double r_max, h, bw;
};

void check_settings(const PcfSettings& s, int n) {
    if (s.bins < 1) throw UsageError("pcf histogram needs at least one bin");
    if (!(s.h > 0.0)) throw UsageError("pcf bandwidth h must be positive");
    if (!(s.r_max > 0.0)) throw UsageError("pcf range r_max must be positive");
    if (s.r_max > 0.5 * std::sqrt(double(n)) + 1e-12)
        throw UsageError("pcf range r_max exceeds the maximal toroidal distance 0.5*sqrt(n)");
}

// One pair's bin masses (and optionally d-derivatives) over the +-8h window.
// The bump is renormalized so the pair contributes total mass exactly 1.
template <typename F>
void pair_masses(const PcfSettings& s, double d, bool want_grad, F&& emit) {
    double Z = normal_cdf((s.r_max - d) / s.h) - normal_cdf(-d / s.h);
    if (!(Z > 0.0)) return;
    double dZ = want_grad
                    ? -(normal_pdf((s.r_max - d) / s.h) - normal_pdf(-d / s.h)) / s.h
                    : 0.0;
    int blo = std::max(0, int(std::floor((d - 8.0 * s.h) / s.bw)));
    int bhi = std::min(s.bins - 1, int(std::floor((d + 8.0 * s.h) / s.bw)));
    double cdf_lo = normal_cdf((blo * s.bw - d) / s.h);
    double pdf_lo = want_grad ? normal_pdf((blo * s.bw - d) / s.h) : 0.0;
    for (int b = blo; b <= bhi; ++b) {
        double cdf_hi = normal_cdf(((b + 1) * s.bw - d) / s.h);
        double num = cdf_hi - cdf_lo;
        double mass = num / Z;
        double dmass = 0.0;
        if (want_grad) {
            double pdf_hi = normal_pdf(((b + 1) * s.bw - d) / s.h);
            double dnum = -(pdf_hi - pdf_lo) / s.h;
            dmass = (dnum - mass * dZ) / Z;
            pdf_lo = pdf_hi;
        }
        emit(b, mass, dmass);
        cdf_lo = cdf_hi;
    }
}

void accumulate_histogram(const PointSet& points, const PcfSettings& s, Eigen::ArrayXd& density) {
    density = Eigen::ArrayXd::Zero(s.bins);
    double cutoff = s.r_max + 3.0 * s.h;
    for_each_pair(points, cutoff, [&](long, long, const Eigen::RowVectorXd&, double d) {
        pair_masses(s, d, false,
                    [&](int b, double mass, double) { density(b) += mass / s.bw; });
    });
}

} // namespace

double default_pcf_rmax(int n) { return 0.25 * std::sqrt(double(n)); }

PcfHistogram pcf_histogram(const PointSet& points, int bins, double r_max, double h) {
    PcfSettings s{bins, r_max, h, r_max / bins};
    check_settings(s, points.dim());
    PcfHistogram out;
    out.bins = bins;
    out.r_max = r_max;
    out.h = h;
    accumulate_histogram(points, s, out.density);
    return out;
}

double differential_loss(const std::vector<PointSet>& batch, const PcfHistogram& target,
                         std::vector<Eigen::MatrixXd>* xbar) {
    if (batch.empty()) throw UsageError("loss needs a nonempty batch");
    for (const auto& ps : batch)
        if (ps.count() != batch[0].count() || ps.dim() != batch[0].dim())
            throw UsageError("batch items must share count and dimension");
    PcfSettings s{target.bins, target.r_max, target.h, target.r_max / target.bins};
    check_settings(s, batch[0].dim());
    if (target.density.size() != target.bins)
        throw UsageError("pcf target density table does not match its bin count");

    const size_t B = batch.size();
    std::vector<Eigen::ArrayXd> densities(B);
    Eigen::ArrayXd avg = Eigen::ArrayXd::Zero(s.bins);
    for (size_t b = 0; b < B; ++b) {
        accumulate_histogram(batch[b], s, densities[b]);
        avg += densities[b];
    }
    avg /= double(B);
    Eigen::ArrayXd diff = avg - target.density;
    double loss = (diff * diff).sum() / double(s.bins);

    if (xbar) {
        xbar->resize(B);
        // d(loss)/d(density_item(b)), shared across items.
        Eigen::ArrayXd w = 2.0 * diff / (double(s.bins) * double(B) * s.bw);
        double cutoff = s.r_max + 3.0 * s.h;
        for (size_t item = 0; item < B; ++item) {
            const PointSet& ps = batch[item];
            Eigen::MatrixXd& g = (*xbar)[item];
            g = Eigen::MatrixXd::Zero(ps.count(), ps.dim());
            for_each_pair(ps, cutoff, [&](long i, long j, const Eigen::RowVectorXd& o, double d) {
                if (d < 1e-12) return; // coincident points: distance direction undefined
                double gd = 0.0;
                pair_masses(s, d, true,
                            [&](int b, double, double dmass) { gd += w(b) * dmass; });
                for (int c = 0; c < ps.dim(); ++c) {
                    double v = gd * o(c) / d;
                    g(i, c) += v;
                    g(j, c) -= v;
                }
            });
        }
    }
    return loss;
}

} // namespace samplecraft
