#include <cmath>

#include "samplecraft/diff.hpp"

namespace samplecraft {

namespace {

void check_inputs(const std::vector<PointSet>& batch, const FilterStack& stack) {
    if (batch.empty()) throw UsageError("backprop needs a nonempty batch");
    for (const auto& ps : batch) {
        ps.validate();
        if (ps.dim() != stack.dim())
            throw UsageError("batch dimension does not match the filter stack");
    }
}

std::vector<char> effective_mask(const FilterStack& stack, const PointSet& ps) {
    std::vector<char> mask(size_t(stack.dim()), 0);
    for (int d = 0; d < stack.dim(); ++d)
        mask[d] = stack.free_dims[d] && ps.free_dims[d];
    return mask;
}

double forward_loss(const std::vector<PointSet>& batch, const FilterStack& stack,
                    const ProgramAst& ast, const LossContext& ctx) {
    std::vector<PointSet> filtered;
    filtered.reserve(batch.size());
    for (const auto& ps : batch) filtered.push_back(apply_stack(ps, stack));
    return evaluate_program(ast, filtered, ctx);
}

} // namespace

double backprop_stack(const std::vector<PointSet>& batch, const FilterStack& stack,
                      const ProgramAst& ast, const LossContext& ctx, Eigen::MatrixXd& theta_bar) {
    check_inputs(batch, stack);

    std::vector<PointSet> filtered;
    std::vector<std::vector<Eigen::MatrixXd>> tapes(batch.size());
    filtered.reserve(batch.size());
    for (size_t i = 0; i < batch.size(); ++i)
        filtered.push_back(apply_stack_tape(batch[i], stack, tapes[i]));

    std::vector<Eigen::MatrixXd> xbar;
    double loss = evaluate_program(ast, filtered, ctx, &xbar);

    theta_bar = Eigen::MatrixXd::Zero(stack.n_s, stack.basis.m);
    for (size_t i = 0; i < batch.size(); ++i)
        stack_pullback(stack, effective_mask(stack, batch[i]), tapes[i], xbar[i], theta_bar);

    if (!std::isfinite(loss)) throw NumericError("non-finite loss in backprop");
    if (!theta_bar.allFinite()) throw NumericError("non-finite gradient in backprop");
    return loss;
}

GradReport finite_difference_check(const std::vector<PointSet>& batch, const FilterStack& stack,
                                   const ProgramAst& ast, const LossContext& ctx, double h) {
    if (!(h > 0.0)) throw UsageError("finite-difference step must be positive");
    check_inputs(batch, stack);

    GradReport report;
    backprop_stack(batch, stack, ast, ctx, report.analytic);

    report.fd = Eigen::MatrixXd::Zero(stack.n_s, stack.basis.m);
    FilterStack probe = stack;
    for (int l = 0; l < stack.n_s; ++l)
        for (int k = 0; k < stack.basis.m; ++k) {
            double saved = stack.theta(l, k);
            probe.theta(l, k) = saved + h;
            double up = forward_loss(batch, probe, ast, ctx);
            probe.theta(l, k) = saved - h;
            double down = forward_loss(batch, probe, ast, ctx);
            probe.theta(l, k) = saved;
            report.fd(l, k) = (up - down) / (2.0 * h);
        }

    for (int l = 0; l < stack.n_s; ++l)
        for (int k = 0; k < stack.basis.m; ++k) {
            double a = report.analytic(l, k), f = report.fd(l, k);
            double abs_err = std::abs(a - f);
            double rel_err = abs_err / std::max(std::abs(a), 1e-8);
            report.max_abs = std::max(report.max_abs, abs_err);
            report.max_rel = std::max(report.max_rel, rel_err);
        }
    return report;
}

} // namespace samplecraft
