#pragma once

#include <Eigen/Core>
#include <vector>

#include "samplecraft/common.hpp"

namespace samplecraft {

// A set of points on the unit torus [0,1)^n. coords is count x dim, one row
// per point. free_dims flags the dimensions a filter may move; the rest are
// held fixed (gridding).
struct PointSet {
    Eigen::MatrixXd coords;
    std::vector<char> free_dims;

    PointSet() = default;
    PointSet(Eigen::MatrixXd c) : coords(std::move(c)), free_dims(coords.cols(), 1) {}

    int count() const { return int(coords.rows()); }
    int dim() const { return int(coords.cols()); }

    // Checks the torus-domain invariants; throws on violation.
    void validate() const {
        if (coords.rows() < 1 || coords.cols() < 1)
            throw UsageError("point set must have at least one point and one dimension");
        if (int(free_dims.size()) != dim())
            throw UsageError("free_dims size does not match dimension");
        if (!coords.allFinite())
            throw NumericError("point set contains non-finite coordinates");
        if ((coords.array() < 0.0).any() || (coords.array() >= 1.0).any())
            throw UsageError("point coordinates must lie in [0,1)");
    }
};

// Coordinate selection: keeps the listed dimensions, in the given order.
PointSet project(const PointSet& ps, const std::vector<int>& dims);

// Contiguous row range [begin, begin+count).
PointSet subset_rows(const PointSet& ps, int begin, int count);

} // namespace samplecraft
