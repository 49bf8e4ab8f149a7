#include "anchormdp/model_based.hpp"

namespace anchormdp {

ModelBasedResult plan_on_kernel(const TabularMDP& mdp, const AnchorSet& anchors,
                                const EmpiricalKernel& kernel, double eps_opt,
                                std::int64_t sample_count) {
    if (!(eps_opt > 0.0)) throw PreconditionError("run_model_based: eps_opt must be positive");
    if (anchors.coefficients.rows() != mdp.num_pairs())
        throw DimensionError("run_model_based: coefficients do not cover |S||A| pairs");
    if (kernel.anchor_rows.rows() != anchors.size() ||
        kernel.anchor_rows.cols() != mdp.num_states())
        throw DimensionError("run_model_based: kernel must be K x |S|");

    Vector anchor_values;
    auto expect = [&](const Vector& v, Vector& out) {
        apply_rows(kernel.anchor_rows, v, anchor_values);
        apply_rows(anchors.coefficients, anchor_values, out);
    };
    PlanResult plan = value_iteration(mdp.reward(), mdp.discount(), mdp.num_states(),
                                      mdp.num_actions(), expect, eps_opt);

    ModelBasedResult result;
    result.policy = greedy_policy(plan.q);
    result.empirical_q_star = std::move(plan.q);
    result.planner_iterations = plan.iterations;
    result.planner_change = plan.last_change;
    result.sample_count = sample_count;
    return result;
}

ModelBasedResult run_model_based(const TabularMDP& mdp, const AnchorSet& anchors,
                                 std::int64_t per_anchor, double eps_opt, std::uint64_t seed,
                                 unsigned workers) {
    if (!(eps_opt > 0.0)) throw PreconditionError("run_model_based: eps_opt must be positive");
    const SampleBatch batch = sample_anchor_transitions(mdp, anchors, per_anchor, seed, workers);
    const EmpiricalKernel kernel = empirical_kernel(batch, anchors);
    return plan_on_kernel(mdp, anchors, kernel, eps_opt, per_anchor * anchors.size());
}

EmpiricalKernel exact_anchor_kernel(const TabularMDP& mdp, const AnchorSet& anchors) {
    return EmpiricalKernel{select_rows(mdp.transition(), anchors.pairs), std::nullopt};
}

double evaluate_policy_error(const TabularMDP& mdp, const Policy& pi, const QFunction& q_star) {
    const QFunction q_pi = exact_q_for_policy(mdp, pi);
    if (q_star.values().size() != q_pi.values().size())
        throw DimensionError("evaluate_policy_error: Q* has the wrong shape");
    const double gap = (q_star.values() - q_pi.values()).maxCoeff();
    return std::max(gap, 0.0);
}

double evaluate_policy_error(const TabularMDP& mdp, const Policy& pi) {
    return evaluate_policy_error(mdp, pi, optimal_q(mdp, 1e-10));
}

}  // namespace anchormdp
