#pragma once

#include "anchormdp/sampling.hpp"

namespace anchormdp {

struct ModelBasedResult {
    Policy policy;
    /// Value-iteration output on the empirical MDP, within eps_opt of its optimum.
    QFunction empirical_q_star;
    Index planner_iterations = 0;
    /// Final successive-difference of the planner; certifies the eps_opt bound.
    double planner_change = 0.0;
    std::int64_t sample_count = 0;
};

/**
 * Model-based planning on the empirical linear MDP: draw N next states at each
 * anchor, estimate P_hat = Lambda * P_hat_K, run value iteration to eps_opt and
 * return the greedy policy. Value iteration applies P_hat lazily as
 * lambda(s,a) . (P_hat_K V), never forming the |S||A| x |S| product.
 */
ModelBasedResult run_model_based(const TabularMDP& mdp, const AnchorSet& anchors,
                                 std::int64_t per_anchor, double eps_opt, std::uint64_t seed,
                                 unsigned workers = 1);

/// Planning step alone, on a given anchor kernel estimate.
ModelBasedResult plan_on_kernel(const TabularMDP& mdp, const AnchorSet& anchors,
                                const EmpiricalKernel& kernel, double eps_opt,
                                std::int64_t sample_count);

/// Test hook: the anchor rows of the true kernel, as if N were infinite.
EmpiricalKernel exact_anchor_kernel(const TabularMDP& mdp, const AnchorSet& anchors);

/// max_{s,a} Q*(s,a) - Q^pi(s,a), with Q* from value iteration at 1e-10 and
/// Q^pi solved exactly. Values below zero (round-off) are reported as 0.
double evaluate_policy_error(const TabularMDP& mdp, const Policy& pi);
double evaluate_policy_error(const TabularMDP& mdp, const Policy& pi, const QFunction& q_star);

}  // namespace anchormdp
