#pragma once

#include <Eigen/Core>
#include <vector>

#include "samplecraft/pointset.hpp"
#include "samplecraft/torus.hpp"

namespace samplecraft {

// Fixed RBF layout shared by every iteration: m Gaussian bumps of width
// sigma_n placed at Hammersley-derived means inside the receptive field
// [-sigma, sigma]^n. Only the per-iteration weights are learnable.
struct KernelBasis {
    int m = 0;
    int dim = 0;
    double sigma = 0.4;
    double sigma_n = 0.04;
    Eigen::MatrixXd means; // m x dim
};

KernelBasis init_kernel_basis(int m, int n, double sigma, double sigma_n);

// Learnable filter stack: theta(l, k) is the weight of RBF k at iteration l.
// gamma < 1 shrinks the receptive field, kernel width and means by gamma^l
// at iteration l. free_dims mirrors the gridding mask the stack was trained
// with; application uses the AND of this mask and the point set's own.
struct FilterStack {
    KernelBasis basis;
    int n_s = 1;
    Eigen::MatrixXd theta; // n_s x m
    double gamma = 1.0;
    std::vector<char> free_dims;

    int dim() const { return basis.dim; }
};

FilterStack make_filter_stack(int m, int n, int n_s, double sigma, double sigma_n, double gamma = 1.0);

// Sum of weighted Gaussians at offset d, hard-truncated to ||d|| <= sigma.
// scale applies the per-iteration shrink to sigma, sigma_n and the means.
double kernel_value(const Eigen::RowVectorXd& d, const Eigen::VectorXd& w, const KernelBasis& basis,
                    double scale = 1.0);

// One point's update: wrap(x_i + sum_j g_ij * delta_ij / max(|1 + sum_j g_ij|, eps))
// where delta_ij is the toroidal displacement toward neighbor j. Fixed
// dimensions are copied verbatim.
Eigen::RowVectorXd convolve_point(int i, const PointSet& points, const Eigen::VectorXd& w,
                                  const KernelBasis& basis, const NeighborGrid& grid,
                                  double scale = 1.0);

// Jacobi iteration: every output is computed from the pre-iteration
// positions. Uses the point set's free_dims mask.
PointSet apply_iteration(const PointSet& points, const Eigen::VectorXd& w, const KernelBasis& basis,
                         double scale = 1.0);

// All n_s iterations in order.
PointSet apply_stack(const PointSet& points, const FilterStack& stack);

// Forward pass that records each iteration's input positions; tape.back()
// is the input of the last iteration (the stack output is returned).
PointSet apply_stack_tape(const PointSet& points, const FilterStack& stack,
                          std::vector<Eigen::MatrixXd>& tape);

// Reverse-mode sweep through one recorded iteration. xbar holds d(loss)/d(output)
// on entry and d(loss)/d(input) on exit; the weight cotangent is added to wbar.
void iteration_pullback(const Eigen::MatrixXd& x, const std::vector<char>& free_dims,
                        const Eigen::VectorXd& w, const KernelBasis& basis, double scale,
                        Eigen::MatrixXd& xbar, Eigen::VectorXd& wbar);

// Full stack sweep over a tape from apply_stack_tape. xbar is the cotangent
// of the stack output on entry and of the stack input on exit; theta_bar
// (n_s x m) is accumulated into.
void stack_pullback(const FilterStack& stack, const std::vector<char>& free_dims,
                    const std::vector<Eigen::MatrixXd>& tape, Eigen::MatrixXd& xbar,
                    Eigen::MatrixXd& theta_bar);

// Clamp floor for the partition-of-unity denominator.
inline constexpr double kDenomEps = 1e-6;

} // namespace samplecraft
