#include "samplecraft/torus.hpp"

#include <algorithm>
#include <cmath>

namespace samplecraft {

PointSet project(const PointSet& ps, const std::vector<int>& dims) {
    if (dims.empty()) throw UsageError("projection needs at least one dimension");
    for (size_t a = 0; a < dims.size(); ++a) {
        if (dims[a] < 0 || dims[a] >= ps.dim())
            throw UsageError("projection dimension " + std::to_string(dims[a]) + " out of range");
        for (size_t b = a + 1; b < dims.size(); ++b)
            if (dims[a] == dims[b]) throw UsageError("duplicate projection dimension");
    }
    PointSet out;
    out.coords.resize(ps.count(), int(dims.size()));
    out.free_dims.resize(dims.size());
    for (size_t k = 0; k < dims.size(); ++k) {
        out.coords.col(int(k)) = ps.coords.col(dims[k]);
        out.free_dims[k] = ps.free_dims[dims[k]];
    }
    return out;
}

PointSet subset_rows(const PointSet& ps, int begin, int count) {
    if (begin < 0 || count < 1 || begin + count > ps.count())
        throw UsageError("invalid point range");
    PointSet out;
    out.coords = ps.coords.middleRows(begin, count);
    out.free_dims = ps.free_dims;
    return out;
}

NeighborGrid::NeighborGrid(const PointSet& points, double radius) {
    if (!(radius > 0.0) || radius > 0.5)
        throw UsageError("neighbor grid radius must be in (0, 0.5]");
    dim_ = points.dim();
    count_ = points.count();
    radius_ = radius;
    // floor(1/radius) cells per axis, capped so the packed key stays within
    // 64 bits (and per-axis counts within int). Computed in double: both the
    // reciprocal and the 2^(62/n) bound can overflow int.
    double want = std::floor(1.0 / radius);
    double cap = std::min(std::pow(2.0, 62.0 / dim_), double(1 << 30));
    cells_ = int(std::max(2.0, std::min(want, cap)));

    std::vector<int> c(dim_);
    for (int i = 0; i < count_; ++i) {
        cell_of(points.coords, i, c.data());
        buckets_[cell_key(c.data())].push_back(i);
    }
}

void NeighborGrid::cell_of(const Eigen::MatrixXd& coords, int i, int* c) const {
    for (int d = 0; d < dim_; ++d) {
        int v = int(coords(i, d) * cells_);
        if (v >= cells_) v = cells_ - 1;
        if (v < 0) v = 0;
        c[d] = v;
    }
}

uint64_t NeighborGrid::cell_key(const int* c) const {
    uint64_t key = 0;
    for (int d = 0; d < dim_; ++d) key = key * uint64_t(cells_) + uint64_t(c[d]);
    return key;
}

void NeighborGrid::query(const PointSet& points, int i, double radius, std::vector<int>& out) const {
    out.clear();
    if (points.count() != count_ || points.dim() != dim_)
        throw UsageError("stale neighbor grid: point set does not match");
    if (i < 0 || i >= count_) throw UsageError("query index out of range");
    if (!(radius >= 0.0)) throw UsageError("query radius must be nonnegative");

    // Scan enough cell layers to cover the radius; offsets are wrapped and
    // deduplicated so small grids are visited once per distinct cell.
    int layers = int(std::ceil(radius * cells_));
    if (2 * layers + 1 > cells_) layers = cells_ / 2;

    std::vector<int> center(dim_), cur(dim_), off(dim_, -layers);
    cell_of(points.coords, i, center.data());

    std::vector<uint64_t> keys;
    bool done = false;
    while (!done) {
        for (int d = 0; d < dim_; ++d) {
            int v = (center[d] + off[d]) % cells_;
            if (v < 0) v += cells_;
            cur[d] = v;
        }
        keys.push_back(cell_key(cur.data()));
        int d = 0;
        for (; d < dim_; ++d) {
            if (++off[d] <= layers) break;
            off[d] = -layers;
        }
        done = (d == dim_);
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    double r2 = radius * radius;
    const auto xi = points.coords.row(i);
    for (uint64_t key : keys) {
        auto it = buckets_.find(key);
        if (it == buckets_.end()) continue;
        for (int32_t j : it->second) {
            if (j == i) continue;
            if (toroidal_dist_sq(xi, points.coords.row(j)) <= r2) out.push_back(j);
        }
    }
    std::sort(out.begin(), out.end());
}

std::vector<int> NeighborGrid::query(const PointSet& points, int i, double radius) const {
    std::vector<int> out;
    query(points, i, radius, out);
    return out;
}

NeighborGrid build_neighbor_grid(const PointSet& points, double radius) {
    return NeighborGrid(points, radius);
}

} // namespace samplecraft
