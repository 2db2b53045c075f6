#include <cmath>

#include "samplecraft/losses.hpp"
#include "samplecraft/torus.hpp"

namespace samplecraft {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_batch(const std::vector<PointSet>& batch) {
    if (batch.empty()) throw UsageError("loss needs a nonempty batch");
    for (const auto& ps : batch)
        if (ps.count() != batch[0].count() || ps.dim() != batch[0].dim())
            throw UsageError("batch items must share count and dimension");
}

// Per-dimension factor of the wrapped Gaussian and its derivative in x_d.
// Three images around the wrapped difference keep the omitted tails below
// exp(-1.125/s^2), which is ~1e-8 of the peak at s = 0.25.
void wrapped_factor(double x, double c, double s, double& G, double& dG) {
    double delta = toroidal_diff1(x, c);
    double inv_s2 = 1.0 / (s * s);
    G = 0.0;
    dG = 0.0;
    for (int v = -1; v <= 1; ++v) {
        double u = delta + v;
        double e = std::exp(-0.5 * u * u * inv_s2);
        G += e;
        dG -= u * inv_s2 * e;
    }
}

} // namespace

double GaussianTask::integral() const {
    int n = int(center.size());
    return a * std::pow(kTwoPi * s * s, 0.5 * n);
}

double GaussianTask::eval(const Eigen::RowVectorXd& x) const {
    if (x.size() != center.size()) throw UsageError("gaussian task dimension mismatch");
    double g = a, dG;
    for (int d = 0; d < center.size(); ++d) {
        double G;
        wrapped_factor(x(d), center(d), s, G, dG);
        g *= G;
    }
    return g;
}

std::vector<GaussianTask> sample_gaussian_tasks(int count, int n, uint64_t seed, double s_lo,
                                                double s_hi) {
    if (count < 1) throw UsageError("need at least one gaussian task");
    if (n < 1) throw UsageError("gaussian tasks need dimension >= 1");
    if (!(s_lo > 0.0) || !(s_hi >= s_lo)) throw UsageError("invalid gaussian width range");
    Xoshiro256pp rng(seed);
    std::vector<GaussianTask> tasks(count);
    double llo = std::log(s_lo), lhi = std::log(s_hi);
    for (auto& t : tasks) {
        t.center.resize(n);
        for (int d = 0; d < n; ++d) t.center(d) = uniform01(rng);
        t.s = std::exp(llo + uniform01(rng) * (lhi - llo));
        t.a = 1.0;
    }
    return tasks;
}

double discrepancy_loss(const std::vector<PointSet>& batch, const std::vector<GaussianTask>& tasks,
                        std::vector<Eigen::MatrixXd>* xbar) {
    check_batch(batch);
    if (tasks.empty()) throw UsageError("discrepancy loss needs at least one task");
    const long N = batch[0].count();
    const int n = batch[0].dim();
    for (const auto& t : tasks) {
        if (t.center.size() != n) throw UsageError("gaussian task dimension mismatch");
        if (!(t.s > 0.0)) throw UsageError("gaussian task width must be positive");
    }
    const size_t B = batch.size();
    const size_t T = tasks.size();
    if (xbar) {
        xbar->resize(B);
        for (size_t b = 0; b < B; ++b) (*xbar)[b] = Eigen::MatrixXd::Zero(N, n);
    }

    Eigen::ArrayXXd G(N, n), dG(N, n);
    Eigen::ArrayXd prefix(n + 1), suffix(n + 1);
    double loss = 0.0;
    for (size_t b = 0; b < B; ++b) {
        const PointSet& ps = batch[b];
        for (size_t t = 0; t < T; ++t) {
            const GaussianTask& task = tasks[t];
            double F = task.integral();
            double fbar = 0.0;
            for (long j = 0; j < N; ++j) {
                double g = task.a;
                for (int d = 0; d < n; ++d) {
                    wrapped_factor(ps.coords(j, d), task.center(d), task.s, G(j, d), dG(j, d));
                    g *= G(j, d);
                }
                fbar += g;
            }
            fbar /= double(N);
            double diff = F - fbar;
            loss += diff * diff;
            if (xbar) {
                double coef = 2.0 * (fbar - F) / (double(B) * double(T) * double(N));
                for (long j = 0; j < N; ++j) {
                    prefix(0) = task.a;
                    for (int d = 0; d < n; ++d) prefix(d + 1) = prefix(d) * G(j, d);
                    suffix(n) = 1.0;
                    for (int d = n - 1; d >= 0; --d) suffix(d) = suffix(d + 1) * G(j, d);
                    for (int d = 0; d < n; ++d)
                        (*xbar)[b](j, d) += coef * prefix(d) * dG(j, d) * suffix(d + 1);
                }
            }
        }
    }
    return loss / (double(B) * double(T));
}

ImageTask make_image_task(Eigen::ArrayXXd img) {
    if (img.rows() < 1 || img.cols() < 1) throw UsageError("image task needs a nonempty raster");
    if ((img < 0.0).any() || (img > 1.0).any())
        throw UsageError("image task values must lie in [0, 1]");
    ImageTask t;
    t.H = int(img.rows());
    t.W = int(img.cols());
    t.exact_mean = img.sum() / double(img.size());
    t.img = std::move(img);
    return t;
}

namespace {

// Toroidal bilinear fetch; texel centers sit at ((c+0.5)/W, (r+0.5)/H).
double bilinear_fetch(const ImageTask& task, double x0, double x1, double* d0, double* d1) {
    double u = x0 * task.W - 0.5;
    double v = x1 * task.H - 0.5;
    double fu = u - std::floor(u);
    double fv = v - std::floor(v);
    long iu = long(std::floor(u)), iv = long(std::floor(v));
    int c0 = int(((iu % task.W) + task.W) % task.W);
    int c1 = (c0 + 1) % task.W;
    int r0 = int(((iv % task.H) + task.H) % task.H);
    int r1 = (r0 + 1) % task.H;
    double i00 = task.img(r0, c0), i01 = task.img(r0, c1);
    double i10 = task.img(r1, c0), i11 = task.img(r1, c1);
    if (d0) *d0 = task.W * ((1.0 - fv) * (i01 - i00) + fv * (i11 - i10));
    if (d1) *d1 = task.H * ((1.0 - fu) * (i10 - i00) + fu * (i11 - i01));
    return (1.0 - fu) * (1.0 - fv) * i00 + fu * (1.0 - fv) * i01 + (1.0 - fu) * fv * i10 +
           fu * fv * i11;
}

} // namespace

double task_integral_loss(const std::vector<PointSet>& batch, const ImageTask& task,
                          std::vector<Eigen::MatrixXd>* xbar) {
    check_batch(batch);
    if (batch[0].dim() != 2)
        throw UsageError("task integral loss needs 2D point sets; project higher dimensions");
    if (task.W < 1 || task.H < 1) throw UsageError("image task has an empty raster");
    const long N = batch[0].count();
    const size_t B = batch.size();
    if (xbar) {
        xbar->resize(B);
        for (size_t b = 0; b < B; ++b) (*xbar)[b] = Eigen::MatrixXd::Zero(N, 2);
    }
    double loss = 0.0;
    Eigen::ArrayXXd grads(N, 2);
    for (size_t b = 0; b < B; ++b) {
        const PointSet& ps = batch[b];
        double avg = 0.0;
        for (long j = 0; j < N; ++j) {
            double d0, d1;
            avg += bilinear_fetch(task, ps.coords(j, 0), ps.coords(j, 1), xbar ? &d0 : nullptr,
                                  xbar ? &d1 : nullptr);
            if (xbar) {
                grads(j, 0) = d0;
                grads(j, 1) = d1;
            }
        }
        avg /= double(N);
        double diff = task.exact_mean - avg;
        loss += diff * diff;
        if (xbar) {
            double coef = 2.0 * (avg - task.exact_mean) / (double(B) * double(N));
            (*xbar)[b] += coef * grads.matrix();
        }
    }
    return loss / double(B);
}

} // namespace samplecraft
