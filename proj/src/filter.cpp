#include "samplecraft/filter.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "samplecraft/samplers.hpp"

namespace samplecraft {

KernelBasis init_kernel_basis(int m, int n, double sigma, double sigma_n) {
    if (m < 1) throw UsageError("kernel basis needs at least one RBF");
    if (n < 1) throw UsageError("kernel basis dimension must be at least 1");
    if (!(sigma > 0.0) || sigma > 0.5) throw UsageError("receptive field sigma must be in (0, 0.5]");
    if (!(sigma_n > 0.0)) throw UsageError("kernel width sigma_n must be positive");
    KernelBasis b;
    b.m = m;
    b.dim = n;
    b.sigma = sigma;
    b.sigma_n = sigma_n;
    b.means = (2.0 * hammersley_points(m, n).coords.array() - 1.0) * sigma;
    return b;
}

FilterStack make_filter_stack(int m, int n, int n_s, double sigma, double sigma_n, double gamma) {
    if (n_s < 1) throw UsageError("filter stack needs at least one iteration");
    if (!(gamma > 0.0) || gamma > 1.0) throw UsageError("radius shrink gamma must be in (0, 1]");
    FilterStack s;
    s.basis = init_kernel_basis(m, n, sigma, sigma_n);
    s.n_s = n_s;
    s.theta = Eigen::MatrixXd::Zero(n_s, m);
    s.gamma = gamma;
    s.free_dims.assign(n, 1);
    return s;
}

double kernel_value(const Eigen::RowVectorXd& d, const Eigen::VectorXd& w, const KernelBasis& basis,
                    double scale) {
    if (d.size() != basis.dim) throw UsageError("kernel offset dimension mismatch");
    if (w.size() != basis.m) throw UsageError("kernel weight count mismatch");
    double sig = basis.sigma * scale;
    if (d.squaredNorm() > sig * sig) return 0.0;
    double sn = basis.sigma_n * scale;
    double inv2 = 1.0 / (2.0 * sn * sn);
    double g = 0.0;
    for (int k = 0; k < basis.m; ++k)
        g += w(k) * std::exp(-(d - basis.means.row(k) * scale).squaredNorm() * inv2);
    return g;
}

Eigen::RowVectorXd convolve_point(int i, const PointSet& points, const Eigen::VectorXd& w,
                                  const KernelBasis& basis, const NeighborGrid& grid, double scale) {
    const int n = points.dim();
    double sig = basis.sigma * scale;
    std::vector<int> nbr = grid.query(points, i, sig);
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(n);
    double s = 0.0;
    for (int j : nbr) {
        Eigen::RowVectorXd o = toroidal_diff(points.coords.row(i), points.coords.row(j));
        double g = kernel_value(o, w, basis, scale);
        s += g;
        v -= g * o; // delta_ij = -o_ij
    }
    double denom = std::max(std::abs(1.0 + s), kDenomEps);
    Eigen::RowVectorXd y = points.coords.row(i);
    for (int d = 0; d < n; ++d)
        if (points.free_dims[d]) y(d) = wrap1(y(d) + v(d) / denom);
    return y;
}

namespace {

// Pairwise scratch shared by the forward pass and the pullback. Pair p is
// (rows[p], cols[p]) with offset row O(p) = x_rows[p] (-) x_cols[p]; both
// (i,j) and (j,i) are stored.
struct IterScratch {
    std::vector<int> rows, cols;
    Eigen::MatrixXd O;       // pairs x n
    Eigen::VectorXd g;       // pairs
    Eigen::VectorXd S, T, D; // per point
    Eigen::MatrixXd V;       // points x n
};

constexpr long kChunk = 1 << 16;
// Above this many pair-by-RBF entries the pullback recomputes kernel values
// in chunks instead of caching the full response matrix.
constexpr long kCacheLimit = 16L << 20;

void build_pairs(const Eigen::MatrixXd& x, double sig, IterScratch& sc) {
    const long N = x.rows();
    const int n = int(x.cols());
    // Cell counts in double: 1/sig and 2^(62/n) can both overflow int.
    double cap = std::min(std::pow(2.0, 62.0 / n), double(1 << 30));
    int G = int(std::max(2.0, std::min(std::floor(1.0 / sig), cap)));

    auto cell_key = [&](long i) {
        uint64_t key = 0;
        for (int d = 0; d < n; ++d) {
            int v = int(x(i, d) * G);
            if (v >= G) v = G - 1;
            key = key * uint64_t(G) + uint64_t(v);
        }
        return key;
    };
    std::unordered_map<uint64_t, std::vector<int32_t>> buckets;
    for (long i = 0; i < N; ++i) buckets[cell_key(i)].push_back(int32_t(i));
    // Order buckets by coordinates, not labels, so per-point accumulation
    // order (and thus the output) is exactly permutation-equivariant.
    // Coordinate ties contribute identical terms, so their order is moot.
    for (auto& [key, list] : buckets)
        std::sort(list.begin(), list.end(), [&](int32_t a, int32_t b) {
            for (int d = 0; d < n; ++d)
                if (x(a, d) != x(b, d)) return x(a, d) < x(b, d);
            return false;
        });

    // Per-axis cell shifts, deduplicated modulo G up front (G == 2 aliases
    // the -1 and +1 layers).
    std::vector<int> shifts = (G == 2) ? std::vector<int>{0, 1} : std::vector<int>{-1, 0, 1};
    const int per = int(shifts.size());
    long combos = 1;
    for (int d = 0; d < n; ++d) combos *= per;

    sc.rows.clear();
    sc.cols.clear();
    std::vector<int> ci(n);
    const double r2 = sig * sig;
    Eigen::RowVectorXd xi(n);
    for (long i = 0; i < N; ++i) {
        xi = x.row(i);
        for (int d = 0; d < n; ++d) {
            int v = int(xi(d) * G);
            if (v >= G) v = G - 1;
            ci[d] = v;
        }
        for (long cmb = 0; cmb < combos; ++cmb) {
            long rem = cmb;
            uint64_t key = 0;
            for (int d = 0; d < n; ++d) {
                int s = shifts[rem % per];
                rem /= per;
                int v = (G == 2) ? s : (ci[d] + s + G) % G;
                key = key * uint64_t(G) + uint64_t(v);
            }
            auto it = buckets.find(key);
            if (it == buckets.end()) continue;
            for (int32_t j : it->second) {
                if (j == i) continue;
                double s2 = 0;
                for (int d = 0; d < n; ++d) {
                    double df = toroidal_diff1(xi(d), x(j, d));
                    s2 += df * df;
                }
                if (s2 <= r2) {
                    sc.rows.push_back(int(i));
                    sc.cols.push_back(int(j));
                }
            }
        }
    }

    const long P = long(sc.rows.size());
    sc.O.resize(P, n);
    for (long p = 0; p < P; ++p) {
        int i = sc.rows[p], j = sc.cols[p];
        for (int d = 0; d < n; ++d) sc.O(p, d) = toroidal_diff1(x(i, d), x(j, d));
    }
}

// Kernel responses for pair rows [p0, p1):
// E(p, k) = exp(-||o_p - mu_k * scale||^2 / (2 * (sigma_n * scale)^2)).
void kernel_chunk(const IterScratch& sc, long p0, long p1, const Eigen::MatrixXd& mu_s,
                  const Eigen::VectorXd& mu_sq, double inv2, Eigen::MatrixXd& E) {
    long c = p1 - p0;
    auto Oc = sc.O.middleRows(p0, c);
    E.resize(c, mu_s.rows());
    E.noalias() = 2.0 * (Oc * mu_s.transpose());
    E.colwise() -= Oc.rowwise().squaredNorm();
    E.rowwise() -= mu_sq.transpose();
    // E now holds -||o - mu||^2
    E = (E.array() * inv2).exp().matrix();
}

void iter_forward(const Eigen::MatrixXd& x, const std::vector<char>& free_dims,
                  const Eigen::VectorXd& w, const KernelBasis& basis, double scale, IterScratch& sc,
                  Eigen::MatrixXd& y) {
    const long N = x.rows();
    const int n = int(x.cols());
    double sig = basis.sigma * scale;
    double sn = basis.sigma_n * scale;
    double inv2 = 1.0 / (2.0 * sn * sn);

    build_pairs(x, sig, sc);
    const long P = long(sc.rows.size());
    Eigen::MatrixXd mu_s = basis.means * scale;
    Eigen::VectorXd mu_sq = mu_s.rowwise().squaredNorm();

    sc.g.resize(P);
    Eigen::MatrixXd E;
    for (long p0 = 0; p0 < P; p0 += kChunk) {
        long p1 = std::min(P, p0 + kChunk);
        kernel_chunk(sc, p0, p1, mu_s, mu_sq, inv2, E);
        sc.g.segment(p0, p1 - p0).noalias() = E * w;
    }

    sc.S = Eigen::VectorXd::Zero(N);
    sc.V = Eigen::MatrixXd::Zero(N, n);
    for (long p = 0; p < P; ++p) {
        int i = sc.rows[p];
        sc.S(i) += sc.g(p);
        for (int d = 0; d < n; ++d) sc.V(i, d) -= sc.g(p) * sc.O(p, d);
    }
    sc.T = sc.S.array() + 1.0;
    sc.D = sc.T.array().abs().max(kDenomEps);

    y = x;
    for (int d = 0; d < n; ++d) {
        if (!free_dims[d]) continue;
        for (long i = 0; i < N; ++i) y(i, d) = wrap1(x(i, d) + sc.V(i, d) / sc.D(i));
    }
}

std::vector<char> effective_free(const PointSet& points, const FilterStack& stack) {
    if (points.dim() != stack.dim()) throw UsageError("filter stack dimension mismatch");
    if (int(stack.free_dims.size()) != stack.dim())
        throw UsageError("filter stack free_dims size mismatch");
    std::vector<char> free(points.free_dims);
    for (int d = 0; d < points.dim(); ++d) free[d] = free[d] && stack.free_dims[d];
    return free;
}

} // namespace

PointSet apply_iteration(const PointSet& points, const Eigen::VectorXd& w, const KernelBasis& basis,
                         double scale) {
    if (points.dim() != basis.dim) throw UsageError("filter dimension mismatch");
    if (w.size() != basis.m) throw UsageError("filter weight count mismatch");
    IterScratch sc;
    PointSet out;
    out.free_dims = points.free_dims;
    iter_forward(points.coords, points.free_dims, w, basis, scale, sc, out.coords);
    if (!out.coords.allFinite()) throw NumericError("filter iteration produced non-finite coordinates");
    return out;
}

PointSet apply_stack(const PointSet& points, const FilterStack& stack) {
    std::vector<char> free = effective_free(points, stack);
    IterScratch sc;
    Eigen::MatrixXd cur = points.coords, next;
    double scale = 1.0;
    for (int l = 0; l < stack.n_s; ++l) {
        iter_forward(cur, free, stack.theta.row(l).transpose(), stack.basis, scale, sc, next);
        if (!next.allFinite())
            throw NumericError("filter iteration " + std::to_string(l) + " produced non-finite coordinates");
        cur.swap(next);
        scale *= stack.gamma;
    }
    PointSet out;
    out.coords = std::move(cur);
    out.free_dims = points.free_dims;
    return out;
}

PointSet apply_stack_tape(const PointSet& points, const FilterStack& stack,
                          std::vector<Eigen::MatrixXd>& tape) {
    std::vector<char> free = effective_free(points, stack);
    tape.clear();
    tape.reserve(stack.n_s);
    IterScratch sc;
    Eigen::MatrixXd cur = points.coords, next;
    double scale = 1.0;
    for (int l = 0; l < stack.n_s; ++l) {
        tape.push_back(cur);
        iter_forward(cur, free, stack.theta.row(l).transpose(), stack.basis, scale, sc, next);
        if (!next.allFinite())
            throw NumericError("filter iteration " + std::to_string(l) + " produced non-finite coordinates");
        cur.swap(next);
        scale *= stack.gamma;
    }
    PointSet out;
    out.coords = std::move(cur);
    out.free_dims = points.free_dims;
    return out;
}

void iteration_pullback(const Eigen::MatrixXd& x, const std::vector<char>& free_dims,
                        const Eigen::VectorXd& w, const KernelBasis& basis, double scale,
                        Eigen::MatrixXd& xbar, Eigen::VectorXd& wbar) {
    const long N = x.rows();
    const int n = int(x.cols());
    IterScratch sc;
    Eigen::MatrixXd y;
    iter_forward(x, free_dims, w, basis, scale, sc, y);
    const long P = long(sc.rows.size());

    double sn = basis.sigma_n * scale;
    double inv2 = 1.0 / (2.0 * sn * sn);
    Eigen::MatrixXd mu_s = basis.means * scale;
    Eigen::VectorXd mu_sq = mu_s.rowwise().squaredNorm();

    // Cotangent of the residual path; the wrap has unit derivative and fixed
    // dimensions receive no residual. The identity path is already in xbar.
    Eigen::MatrixXd z = xbar;
    for (int d = 0; d < n; ++d)
        if (!free_dims[d]) z.col(d).setZero();

    // Vbar_i = z_i / D_i;  Sbar_i = -sign(T_i) * <z_i, V_i> / D_i^2, with
    // sign forced to 0 inside the denominator clamp.
    Eigen::MatrixXd Vbar(N, n);
    Eigen::VectorXd Sbar(N);
    for (long i = 0; i < N; ++i) {
        double Di = sc.D(i);
        Vbar.row(i) = z.row(i) / Di;
        double sgn = 0.0;
        if (std::abs(sc.T(i)) > kDenomEps) sgn = sc.T(i) > 0 ? 1.0 : -1.0;
        Sbar(i) = -sgn * z.row(i).dot(sc.V.row(i)) / (Di * Di);
    }

    // gbar_p = Sbar_i - <Vbar_i, o_p>   (V_i = -sum_p g_p o_p)
    Eigen::VectorXd gbar(P);
    for (long p = 0; p < P; ++p) {
        int i = sc.rows[p];
        double acc = Sbar(i);
        for (int d = 0; d < n; ++d) acc -= Vbar(i, d) * sc.O(p, d);
        gbar(p) = acc;
    }

    Eigen::MatrixXd wmu = w.asDiagonal() * mu_s; // m x n
    const long step = (P * basis.m <= kCacheLimit) ? std::max(P, 1L) : kChunk;
    Eigen::MatrixXd E, Q;
    for (long p0 = 0; p0 < P; p0 += step) {
        long p1 = std::min(P, p0 + step);
        long c = p1 - p0;
        kernel_chunk(sc, p0, p1, mu_s, mu_sq, inv2, E);
        wbar.noalias() += E.transpose() * gbar.segment(p0, c);
        // dg/do rows: (E * diag(w) * mu_s - g .* o) / sigma_n^2
        Q.resize(c, n);
        Q.noalias() = E * wmu;
        for (long p = p0; p < p1; ++p)
            for (int d = 0; d < n; ++d) Q(p - p0, d) -= sc.g(p) * sc.O(p, d);
        Q *= 2.0 * inv2;
        for (long p = p0; p < p1; ++p) {
            int i = sc.rows[p], j = sc.cols[p];
            for (int d = 0; d < n; ++d) {
                double ob = gbar(p) * Q(p - p0, d) - sc.g(p) * Vbar(i, d);
                xbar(i, d) += ob;
                xbar(j, d) -= ob;
            }
        }
    }
}

void stack_pullback(const FilterStack& stack, const std::vector<char>& free_dims,
                    const std::vector<Eigen::MatrixXd>& tape, Eigen::MatrixXd& xbar,
                    Eigen::MatrixXd& theta_bar) {
    if (int(tape.size()) != stack.n_s) throw UsageError("tape length does not match stack depth");
    std::vector<double> scales(stack.n_s);
    double s = 1.0;
    for (int l = 0; l < stack.n_s; ++l) {
        scales[l] = s;
        s *= stack.gamma;
    }
    Eigen::VectorXd wbar(stack.basis.m);
    for (int l = stack.n_s - 1; l >= 0; --l) {
        wbar.setZero();
        iteration_pullback(tape[l], free_dims, stack.theta.row(l).transpose(), stack.basis,
                           scales[l], xbar, wbar);
        if (!wbar.allFinite() || !xbar.allFinite())
            throw NumericError("non-finite gradient at iteration " + std::to_string(l));
        theta_bar.row(l) += wbar.transpose();
    }
}

} // namespace samplecraft
