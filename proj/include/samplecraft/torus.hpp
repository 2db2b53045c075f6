#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "samplecraft/pointset.hpp"

namespace samplecraft {

// Maps a coordinate into [0,1). The explicit fixup handles the case where
// c - floor(c) rounds up to exactly 1.0 (e.g. c = -1e-17).
inline double wrap1(double c) {
    double r = c - std::floor(c);
    if (r >= 1.0) r -= 1.0;
    return r;
}

// Per-component toroidal difference a - b, canonicalized into [-0.5, 0.5).
// The antipodal offset +-0.5 maps to -0.5 (half-open convention).
inline double toroidal_diff1(double a, double b) {
    return wrap1(a - b + 0.5) - 0.5;
}

// Wraps a raw vector into the torus; throws NumericError on non-finite input.
template <class Derived>
Eigen::RowVectorXd wrap(const Eigen::MatrixBase<Derived>& p) {
    Eigen::RowVectorXd r(p.size());
    for (int d = 0; d < p.size(); ++d) {
        double c = p(d);
        if (!std::isfinite(c)) throw NumericError("cannot wrap non-finite coordinate");
        r(d) = wrap1(c);
    }
    return r;
}

// Toroidal vector difference a - b with every component in [-0.5, 0.5).
template <class DA, class DB>
Eigen::RowVectorXd toroidal_diff(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
    if (a.size() != b.size()) throw UsageError("toroidal_diff: dimension mismatch");
    Eigen::RowVectorXd d(a.size());
    for (int k = 0; k < a.size(); ++k) d(k) = toroidal_diff1(a(k), b(k));
    return d;
}

template <class DA, class DB>
double toroidal_dist_sq(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
    if (a.size() != b.size()) throw UsageError("toroidal_dist: dimension mismatch");
    double s = 0;
    for (int k = 0; k < a.size(); ++k) {
        double d = toroidal_diff1(a(k), b(k));
        s += d * d;
    }
    return s;
}

// Euclidean norm of the toroidal difference; at most 0.5*sqrt(n).
template <class DA, class DB>
double toroidal_dist(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
    return std::sqrt(toroidal_dist_sq(a, b));
}

// Uniform hash grid over the torus for fixed-radius neighbor queries. Cells
// wrap modulo the per-axis cell count, so queries are exact without ghost
// copies. Immutable after construction; safe for concurrent reads.
class NeighborGrid {
public:
    NeighborGrid(const PointSet& points, double radius);

    // Exactly the indices j != i with toroidal_dist(x_i, x_j) <= radius,
    // ascending. The grid must have been built from these points (same
    // count); otherwise the grid is stale and a UsageError is thrown.
    void query(const PointSet& points, int i, double radius, std::vector<int>& out) const;
    std::vector<int> query(const PointSet& points, int i, double radius) const;

    int cells_per_axis() const { return cells_; }
    double cell_size() const { return 1.0 / cells_; }
    double radius() const { return radius_; }
    long bucket_count() const { return long(buckets_.size()); }
    long point_count() const { return count_; }

private:
    uint64_t cell_key(const int* c) const;
    void cell_of(const Eigen::MatrixXd& coords, int i, int* c) const;

    int cells_ = 2;
    int dim_ = 0;
    long count_ = 0;
    double radius_ = 0;
    std::unordered_map<uint64_t, std::vector<int32_t>> buckets_;
};

NeighborGrid build_neighbor_grid(const PointSet& points, double radius);

} // namespace samplecraft
