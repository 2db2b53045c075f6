#pragma once

// Shared helpers for the test binaries: brute-force reference
// implementations and small construction utilities.

#include <cmath>
#include <vector>

#include "samplecraft/losses.hpp"
#include "samplecraft/pointset.hpp"
#include "samplecraft/samplers.hpp"
#include "samplecraft/torus.hpp"

namespace test_support {

using namespace samplecraft;

inline PointSet points_from(std::initializer_list<std::initializer_list<double>> rows) {
    PointSet ps;
    long N = long(rows.size());
    int n = int(rows.begin()->size());
    ps.coords.resize(N, n);
    long i = 0;
    for (const auto& row : rows) {
        int d = 0;
        for (double v : row) ps.coords(i, d++) = v;
        ++i;
    }
    ps.free_dims.assign(n, 1);
    return ps;
}

inline std::vector<int> brute_force_neighbors(const PointSet& ps, int i, double radius) {
    std::vector<int> out;
    for (int j = 0; j < ps.count(); ++j) {
        if (j == i) continue;
        if (toroidal_dist_sq(ps.coords.row(i), ps.coords.row(j)) <= radius * radius)
            out.push_back(j);
    }
    return out;
}

// Direct DFT power at one integer frequency, accumulated with long doubles.
inline double dft_power(const PointSet& ps, const Eigen::VectorXi& k) {
    long double re = 0, im = 0;
    for (long j = 0; j < ps.count(); ++j) {
        long double phase = 0;
        for (int d = 0; d < ps.dim(); ++d)
            phase += -2.0L * 3.14159265358979323846264338327950288L * k(d) * ps.coords(j, d);
        re += std::cos(double(phase));
        im += std::sin(double(phase));
    }
    return double((re * re + im * im) / ps.count());
}

// Central finite differences on point coordinates against an analytic xbar.
// Probes every coordinate of every batch item; returns the worst relative
// error with denominator max(|analytic|, floor).
template <typename LossFn>
double fd_coord_error(LossFn&& loss, std::vector<PointSet> batch,
                      const std::vector<Eigen::MatrixXd>& xbar, double h = 1e-6,
                      double floor = 1e-6) {
    double worst = 0.0;
    for (size_t b = 0; b < batch.size(); ++b)
        for (long i = 0; i < batch[b].count(); ++i)
            for (int d = 0; d < batch[b].dim(); ++d) {
                double saved = batch[b].coords(i, d);
                batch[b].coords(i, d) = saved + h;
                double up = loss(batch);
                batch[b].coords(i, d) = saved - h;
                double down = loss(batch);
                batch[b].coords(i, d) = saved;
                double fd = (up - down) / (2.0 * h);
                double a = xbar[b](i, d);
                worst = std::max(worst, std::abs(a - fd) / std::max(std::abs(a), floor));
            }
    return worst;
}

} // namespace test_support
