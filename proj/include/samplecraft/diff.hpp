#pragma once

#include "samplecraft/filter.hpp"
#include "samplecraft/program.hpp"

namespace samplecraft {

// Loss and exact reverse-mode gradient of program(apply_stack(batch)) with
// respect to theta. The returned loss is the same computation (bit for bit)
// as a forward-only evaluation; theta_bar is resized to n_s x m.
double backprop_stack(const std::vector<PointSet>& batch, const FilterStack& stack,
                      const ProgramAst& ast, const LossContext& ctx, Eigen::MatrixXd& theta_bar);

struct GradReport {
    Eigen::MatrixXd analytic; // n_s x m
    Eigen::MatrixXd fd;
    double max_rel = 0.0; // |analytic - fd| / max(|analytic|, 1e-8), worst parameter
    double max_abs = 0.0;
};

// Central finite differences per parameter against the analytic gradient.
// All stochastic draws live in ctx, so every probe sees identical inputs.
GradReport finite_difference_check(const std::vector<PointSet>& batch, const FilterStack& stack,
                                   const ProgramAst& ast, const LossContext& ctx, double h);

} // namespace samplecraft
