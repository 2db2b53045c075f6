#include <algorithm>
#include <cmath>
#include <complex>

#include "samplecraft/losses.hpp"
#include "samplecraft/torus.hpp"

namespace samplecraft {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Per-item phase matrices A(j, K+t) = exp(-2 pi i t x_j) built by repeated
// rotation; negative frequencies are exact conjugates, which makes the
// periodogram Hermitian-symmetric bit for bit.
void phase_matrix(const Eigen::Ref<const Eigen::VectorXd>& x, int K, Eigen::MatrixXcd& A) {
    const long N = x.size();
    const int M = 2 * K + 1;
    A.resize(N, M);
    Eigen::VectorXcd f(N);
    for (long j = 0; j < N; ++j) {
        double ang = kTwoPi * x(j);
        f(j) = std::complex<double>(std::cos(ang), -std::sin(ang));
    }
    A.col(K).setOnes();
    for (int t = 1; t <= K; ++t) {
        A.col(K + t) = A.col(K + t - 1).cwiseProduct(f);
        A.col(K - t) = A.col(K + t).conjugate();
    }
}

// Everything needed to push a lattice cotangent back to coordinates.
struct SpectrumWork {
    Eigen::MatrixXcd A, B; // N x M phase matrices per dimension
    Eigen::MatrixXcd F;    // M x M (n == 2) or M x 1 (n == 1)
};

void periodogram_work(const PointSet& points, int K, SpectrumWork& w, Eigen::ArrayXXd& P) {
    const long N = points.count();
    const int n = points.dim();
    const int M = 2 * K + 1;
    if (n == 1) {
        phase_matrix(points.coords.col(0), K, w.A);
        w.F = w.A.transpose() * Eigen::VectorXcd::Ones(N);
        P = w.F.cwiseAbs2().array() / double(N);
    } else {
        phase_matrix(points.coords.col(0), K, w.A);
        phase_matrix(points.coords.col(1), K, w.B);
        w.F.resize(M, M);
        w.F.noalias() = w.A.transpose() * w.B;
        P = w.F.cwiseAbs2().array() / double(N);
        // The GEMM's edge kernels can reassociate the j-sum differently for
        // mirrored entries; copy the canonical half so P(-k) == P(k) holds
        // bit for bit.
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < M; ++b)
                if (a > K || (a == K && b > K)) P(a, b) = P(M - 1 - a, M - 1 - b);
    }
}

// Adds the coordinate gradient of sum_k W(k) * P_item(k) for one item.
void scatter_spectrum_grad(const SpectrumWork& w, const Eigen::ArrayXXd& W, long N, int K,
                           Eigen::MatrixXd& xbar) {
    const int M = 2 * K + 1;
    Eigen::VectorXd tvec(M);
    for (int a = 0; a < M; ++a) tvec(a) = double(a - K);
    if (w.B.size() == 0) {
        Eigen::VectorXcd Mc = (2.0 / double(N)) * (W.col(0) * w.F.col(0).conjugate().array()).matrix();
        Eigen::MatrixXd H = (w.A.array().rowwise() * Mc.transpose().array()).imag();
        xbar.col(0).noalias() += kTwoPi * (H * tvec);
    } else {
        Eigen::MatrixXcd Mc = (2.0 / double(N)) * (W * w.F.conjugate().array()).matrix();
        Eigen::MatrixXcd C1 = w.B * Mc.transpose(); // C1(j,a) = sum_b Mc(a,b) B(j,b)
        Eigen::MatrixXcd C2 = w.A * Mc;             // C2(j,b) = sum_a Mc(a,b) A(j,a)
        Eigen::MatrixXd H1 = (w.A.array() * C1.array()).imag();
        Eigen::MatrixXd H2 = (w.B.array() * C2.array()).imag();
        xbar.col(0).noalias() += kTwoPi * (H1 * tvec);
        xbar.col(1).noalias() += kTwoPi * (H2 * tvec);
    }
}

void check_batch(const std::vector<PointSet>& batch) {
    if (batch.empty()) throw UsageError("loss needs a nonempty batch");
    for (const auto& ps : batch) {
        if (ps.count() < 1) throw UsageError("empty point set");
        if (ps.count() != batch[0].count() || ps.dim() != batch[0].dim())
            throw UsageError("batch items must share count and dimension");
    }
}

void init_xbar(std::vector<Eigen::MatrixXd>* xbar, const std::vector<PointSet>& batch) {
    if (!xbar) return;
    xbar->resize(batch.size());
    for (size_t b = 0; b < batch.size(); ++b)
        (*xbar)[b] = Eigen::MatrixXd::Zero(batch[b].count(), batch[b].dim());
}

std::vector<std::pair<int, int>> all_dim_pairs(int n) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
    return pairs;
}

// Target table over the lattice; DC left at zero, never read.
Eigen::ArrayXXd target_table(const TargetSpectrum& target, int K, long N, int n) {
    const int M = 2 * K + 1;
    if (target.is_full()) {
        if (n != 2) throw UsageError("full spectral target tables are 2D");
        if (target.full_K < K)
            throw UsageError("spectral target table extent " + std::to_string(target.full_K) +
                             " is smaller than required lattice extent " + std::to_string(K));
        int off = target.full_K - K;
        return target.full.block(off, off, M, M);
    }
    Eigen::ArrayXXd T(M, n == 1 ? 1 : M);
    if (n == 1) {
        for (int a = 0; a < M; ++a) T(a, 0) = target.value(std::abs(double(a - K)), N, n);
    } else {
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < M; ++b) T(a, b) = target.value(std::hypot(double(a - K), double(b - K)), N, n);
    }
    return T;
}

double spectral_loss_2d(const std::vector<PointSet>& batch, const TargetSpectrum& target, int K,
                        std::vector<Eigen::MatrixXd>* xbar);

} // namespace

long Spectrum::lattice_size() const {
    long M = 2L * K + 1;
    return n == 1 ? M : M * M;
}

int default_K(long N) {
    int K = int(2.0 * std::sqrt(double(N)));
    if (K > 64) K = 64;
    if (K < 1) K = 1;
    return K;
}

Spectrum periodogram(const PointSet& points, int K) {
    if (points.count() < 1) throw UsageError("periodogram needs a nonempty point set");
    if (K < 1) throw UsageError("lattice extent K must be at least 1");
    if (points.dim() > 2)
        throw UsageError("full-lattice periodogram supports n <= 2; use 2D projections");
    Spectrum s;
    s.n = points.dim();
    s.K = K;
    s.N = points.count();
    SpectrumWork w;
    periodogram_work(points, K, w, s.P);
    return s;
}

RadialProfile radial_stats(const Spectrum& spec, int bins) {
    if (bins < 1) throw UsageError("radial profile needs at least one bin");
    RadialProfile r;
    r.bins = bins;
    double rmax = spec.K * std::sqrt(double(spec.n));
    r.binwidth = rmax / bins;
    r.centers.resize(bins);
    for (int b = 0; b < bins; ++b) r.centers(b) = (b + 0.5) * r.binwidth;
    Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(bins), sumsq = Eigen::ArrayXd::Zero(bins);
    Eigen::ArrayXi cnt = Eigen::ArrayXi::Zero(bins);
    const int K = spec.K;
    auto deposit = [&](double rad, double p) {
        int b = std::min(bins - 1, int(std::ceil(rad / r.binwidth)) - 1);
        if (b < 0) b = 0;
        sum(b) += p;
        sumsq(b) += p * p;
        cnt(b) += 1;
    };
    if (spec.n == 1) {
        for (int a = 0; a < 2 * K + 1; ++a)
            if (a != K) deposit(std::abs(double(a - K)), spec.P(a, 0));
    } else {
        for (int a = 0; a < 2 * K + 1; ++a)
            for (int b = 0; b < 2 * K + 1; ++b)
                if (a != K || b != K)
                    deposit(std::hypot(double(a - K), double(b - K)), spec.P(a, b));
    }
    r.count = cnt;
    r.mean.resize(bins);
    r.variance.resize(bins);
    r.anisotropy.resize(bins);
    for (int b = 0; b < bins; ++b) {
        if (cnt(b) == 0) {
            r.mean(b) = r.variance(b) = r.anisotropy(b) = std::nan("");
            continue;
        }
        double mu = sum(b) / cnt(b);
        double var = std::max(0.0, sumsq(b) / cnt(b) - mu * mu);
        r.mean(b) = mu;
        r.variance(b) = var;
        double c = std::max(mu, 1e-8);
        r.anisotropy(b) = var / (c * c);
    }
    return r;
}

double bn_step_radius(long N, int n) {
    static const double lambda[5] = {1.0, 2.0 / std::sqrt(3.0), std::sqrt(2.0), 2.0,
                                     2.0 * std::sqrt(2.0)};
    double lam = (n >= 1 && n <= 5) ? lambda[n - 1] : 1.0;
    double rho = std::pow(lam, -1.0 / n);
    return 0.85 * std::pow(double(N), 1.0 / n) * rho;
}

double TargetSpectrum::value(double r, long N, int n) const {
    if (kind == Kind::FullTable)
        throw UsageError("full spectral target tables have no radial lookup");
    if (kind == Kind::Builtin) {
        if (builtin == "bn") {
            double r0 = bn_step_radius(N, n);
            double t = std::clamp((r - (r0 - 1.0)) / 2.0, 0.0, 1.0);
            return t * t * (3.0 - 2.0 * t);
        }
        if (builtin == "jitter") {
            double k = std::pow(double(N), 1.0 / n);
            double u = r / k;
            return u >= 1.0 ? 1.0 : u * u;
        }
        if (builtin == "green") {
            double b = bn_step_radius(N, n);
            double d = (r - 1.5 * b) / (0.35 * b);
            return 2.0 * std::exp(-0.5 * d * d);
        }
        if (builtin == "pink") {
            double b = bn_step_radius(N, n);
            return 2.0 / (1.0 + r / b);
        }
        throw UsageError("unknown builtin spectral target '" + builtin + "'");
    }
    // radial table
    const long k = radii.size();
    if (k < 1) throw UsageError("empty radial target table");
    if (r <= radii(0)) return power(0);
    if (r >= radii(k - 1)) {
        double spacing = k >= 2 ? radii(k - 1) - radii(k - 2) : radii(0);
        if (r <= radii(k - 1) + spacing) return power(k - 1);
        throw UsageError("spectral target undefined at frequency radius " + std::to_string(r));
    }
    const double* begin = radii.data();
    long hi = std::upper_bound(begin, begin + k, r) - begin;
    long lo = hi - 1;
    double t = (r - radii(lo)) / (radii(hi) - radii(lo));
    return power(lo) + t * (power(hi) - power(lo));
}

TargetSpectrum builtin_target(const std::string& name) {
    if (name != "bn" && name != "jitter" && name != "green" && name != "pink")
        throw UsageError("unknown builtin spectral target '" + name + "'");
    TargetSpectrum t;
    t.kind = TargetSpectrum::Kind::Builtin;
    t.builtin = name;
    return t;
}

namespace {

double spectral_loss_2d(const std::vector<PointSet>& batch, const TargetSpectrum& target, int K,
                        std::vector<Eigen::MatrixXd>* xbar) {
    const long N = batch[0].count();
    const int n = batch[0].dim();
    const int M = 2 * K + 1;
    const size_t B = batch.size();

    std::vector<SpectrumWork> works(xbar ? B : 1);
    Eigen::ArrayXXd Pbar;
    for (size_t b = 0; b < B; ++b) {
        SpectrumWork& w = works[xbar ? b : 0];
        Eigen::ArrayXXd P;
        periodogram_work(batch[b], K, w, P);
        if (b == 0)
            Pbar = P;
        else
            Pbar += P;
    }
    Pbar /= double(B);

    Eigen::ArrayXXd T = target_table(target, K, N, n);
    const long lat = (n == 1) ? M : long(M) * M;
    const long denom = lat - 1; // DC excluded
    Eigen::ArrayXXd diff = Pbar - T;
    if (n == 1)
        diff(K, 0) = 0.0;
    else
        diff(K, K) = 0.0;
    double loss = (diff * diff).sum() / double(denom);

    if (xbar) {
        init_xbar(xbar, batch);
        Eigen::ArrayXXd W = (2.0 / double(denom) / double(B)) * diff;
        for (size_t b = 0; b < B; ++b) scatter_spectrum_grad(works[b], W, N, K, (*xbar)[b]);
    }
    return loss;
}

} // namespace

double spectral_loss(const std::vector<PointSet>& batch, const TargetSpectrum& target, int K,
                     std::vector<Eigen::MatrixXd>* xbar) {
    check_batch(batch);
    const int n = batch[0].dim();
    if (n <= 2) return spectral_loss_2d(batch, target, K, xbar);
    return projected_spectral_loss(batch, target, K, all_dim_pairs(n), xbar);
}

double projected_spectral_loss(const std::vector<PointSet>& batch, const TargetSpectrum& target,
                               int K, const std::vector<std::pair<int, int>>& dim_pairs,
                               std::vector<Eigen::MatrixXd>* xbar) {
    check_batch(batch);
    const int n = batch[0].dim();
    if (dim_pairs.empty()) throw UsageError("projected spectral loss needs dimension pairs");
    for (auto [a, b] : dim_pairs) {
        if (a == b) throw UsageError("projected spectral loss: duplicate dimension in pair");
        if (a < 0 || b < 0 || a >= n || b >= n)
            throw UsageError("projected spectral loss: dimension out of range");
    }
    init_xbar(xbar, batch);
    double loss = 0.0;
    for (auto [a, b] : dim_pairs) {
        std::vector<PointSet> proj(batch.size());
        for (size_t i = 0; i < batch.size(); ++i) proj[i] = project(batch[i], {a, b});
        std::vector<Eigen::MatrixXd> pxbar;
        loss += spectral_loss_2d(proj, target, K, xbar ? &pxbar : nullptr);
        if (xbar)
            for (size_t i = 0; i < batch.size(); ++i) {
                (*xbar)[i].col(a) += pxbar[i].col(0);
                (*xbar)[i].col(b) += pxbar[i].col(1);
            }
    }
    return loss;
}

double anisotropy_loss(const std::vector<PointSet>& batch, int K, int bins,
                       std::vector<Eigen::MatrixXd>* xbar) {
    check_batch(batch);
    const int n = batch[0].dim();
    if (n < 2) throw UsageError("anisotropy loss needs dimension >= 2");
    if (bins < 1) throw UsageError("anisotropy loss needs at least one bin");

    if (n > 2) {
        init_xbar(xbar, batch);
        double loss = 0.0;
        for (auto [a, b] : all_dim_pairs(n)) {
            std::vector<PointSet> proj(batch.size());
            for (size_t i = 0; i < batch.size(); ++i) proj[i] = project(batch[i], {a, b});
            std::vector<Eigen::MatrixXd> pxbar;
            loss += anisotropy_loss(proj, K, bins, xbar ? &pxbar : nullptr);
            if (xbar)
                for (size_t i = 0; i < batch.size(); ++i) {
                    (*xbar)[i].col(a) += pxbar[i].col(0);
                    (*xbar)[i].col(b) += pxbar[i].col(1);
                }
        }
        return loss;
    }

    const long N = batch[0].count();
    const int M = 2 * K + 1;
    const size_t B = batch.size();
    std::vector<SpectrumWork> works(xbar ? B : 1);
    Eigen::ArrayXXd Pbar;
    for (size_t b = 0; b < B; ++b) {
        SpectrumWork& w = works[xbar ? b : 0];
        Eigen::ArrayXXd P;
        periodogram_work(batch[b], K, w, P);
        if (b == 0)
            Pbar = P;
        else
            Pbar += P;
    }
    Pbar /= double(B);

    // Radial bin membership over the lattice, DC excluded.
    double rmax = K * std::sqrt(2.0);
    double bw = rmax / bins;
    Eigen::ArrayXXi bin(M, M);
    std::vector<long> cnt(bins, 0);
    std::vector<double> sum(bins, 0.0), sumsq(bins, 0.0);
    for (int a = 0; a < M; ++a)
        for (int c = 0; c < M; ++c) {
            if (a == K && c == K) {
                bin(a, c) = -1;
                continue;
            }
            double rad = std::hypot(double(a - K), double(c - K));
            int b = std::min(bins - 1, int(std::ceil(rad / bw)) - 1);
            if (b < 0) b = 0;
            bin(a, c) = b;
            cnt[b] += 1;
            sum[b] += Pbar(a, c);
            sumsq[b] += Pbar(a, c) * Pbar(a, c);
        }
    long nonempty = 0;
    double loss = 0.0;
    std::vector<double> mean(bins, 0.0), var(bins, 0.0), cl(bins, 0.0);
    for (int b = 0; b < bins; ++b) {
        if (cnt[b] == 0) continue;
        ++nonempty;
        mean[b] = sum[b] / cnt[b];
        var[b] = std::max(0.0, sumsq[b] / cnt[b] - mean[b] * mean[b]);
        cl[b] = std::max(mean[b], 1e-8);
        loss += var[b] / (cl[b] * cl[b]);
    }
    loss /= double(nonempty);

    if (xbar) {
        init_xbar(xbar, batch);
        Eigen::ArrayXXd W(M, M);
        for (int a = 0; a < M; ++a)
            for (int c = 0; c < M; ++c) {
                int b = bin(a, c);
                if (b < 0 || cnt[b] == 0) {
                    W(a, c) = 0.0;
                    continue;
                }
                double dvar = 2.0 * (Pbar(a, c) - mean[b]) / double(cnt[b]);
                double dc = (mean[b] > 1e-8) ? 1.0 / double(cnt[b]) : 0.0;
                W(a, c) = (dvar / (cl[b] * cl[b]) - 2.0 * var[b] / (cl[b] * cl[b] * cl[b]) * dc) /
                          double(nonempty);
            }
        W /= double(B);
        for (size_t b = 0; b < B; ++b) scatter_spectrum_grad(works[b], W, N, K, (*xbar)[b]);
    }
    return loss;
}

} // namespace samplecraft
