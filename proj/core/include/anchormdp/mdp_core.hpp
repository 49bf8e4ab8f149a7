#pragma once

#include "anchormdp/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace anchormdp {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/**
 * Finite discounted MDP with dense storage.
 *
 * State-action pairs are flattened as `s * num_actions + a`; row `(s,a)` of the
 * transition matrix is the next-state distribution P(.|s,a). The constructor
 * checks that every row is a probability vector (entries >= -1e-12, clipped to
 * zero, row sums within 1e-12 of one), that rewards lie in [0,1] and that the
 * discount lies in (0,1).
 */
class TabularMDP {
public:
    TabularMDP(Index num_states, Index num_actions, Matrix transition, Vector reward,
               double discount);

    Index num_states() const noexcept { return num_states_; }
    Index num_actions() const noexcept { return num_actions_; }
    Index num_pairs() const noexcept { return num_states_ * num_actions_; }
    Index pair(Index s, Index a) const noexcept { return s * num_actions_ + a; }

    const Matrix& transition() const noexcept { return transition_; }
    const Vector& reward() const noexcept { return reward_; }
    double discount() const noexcept { return discount_; }
    /// Largest achievable value, 1/(1-discount).
    double value_scale() const noexcept { return 1.0 / (1.0 - discount_); }

private:
    Index num_states_;
    Index num_actions_;
    Matrix transition_;
    Vector reward_;
    double discount_;
};

/// Dense Q table over state-action pairs, flattened like TabularMDP rows.
class QFunction {
public:
    QFunction() = default;
    QFunction(Index num_states, Index num_actions)
        : num_states_(num_states), num_actions_(num_actions),
          values_(Vector::Zero(num_states * num_actions)) {}
    QFunction(Index num_states, Index num_actions, Vector values);

    Index num_states() const noexcept { return num_states_; }
    Index num_actions() const noexcept { return num_actions_; }

    double operator()(Index s, Index a) const { return values_[s * num_actions_ + a]; }
    double& operator()(Index s, Index a) { return values_[s * num_actions_ + a]; }

    const Vector& values() const noexcept { return values_; }
    Vector& values() noexcept { return values_; }

private:
    Index num_states_ = 0;
    Index num_actions_ = 0;
    Vector values_;
};

struct ValueFunction {
    Vector values;
};

/// Deterministic policy: one action index per state.
struct Policy {
    std::vector<Index> action;
};

/// Result of value iteration.
struct PlanResult {
    QFunction q;
    Index iterations = 0;
    /// Sup-norm distance between the last two iterates.
    double last_change = 0.0;
};

// ---------------------------------------------------------------------------
// Operators

/// out = rows(P) . v, evaluated with a fixed left-to-right summation order so
/// results are bit-reproducible across call sites.
void apply_rows(const Matrix& rows, const Vector& v, Vector& out);

/// V(s) = max_a Q(s,a).
ValueFunction max_over_actions(const QFunction& q);

/// Bellman optimality operator T(Q) = r + gamma * P max_a Q.
QFunction bellman_operator(const QFunction& q, const TabularMDP& mdp);

/// Argmax over actions, ties broken toward the lowest action index.
Policy greedy_policy(const QFunction& q);

/// Exact Q^pi via the |S|-sized system (I - gamma P^pi) V = r^pi, lifted to
/// Q = r + gamma P V. Throws InternalError if the Bellman residual exceeds
/// 1e-10 / (1 - gamma).
QFunction exact_q_for_policy(const TabularMDP& mdp, const Policy& pi);
ValueFunction exact_v_for_policy(const TabularMDP& mdp, const Policy& pi);

/// Successive-difference threshold that certifies ||Q_k - Q*|| <= tol.
double value_iteration_threshold(double discount, double tol);
/// Upper bound on the iterations value_iteration performs from Q = 0.
Index value_iteration_iteration_bound(double discount, double tol);

/**
 * Value iteration from Q = 0 on an implicit model. `expect(V, out)` must write
 * the expected next-state value (P V)(s,a) into `out` (length |S||A|).
 *
 * Stops once the sup-norm change drops to tol*(1-gamma)/(2*gamma), at which
 * point the returned iterate is within tol of the fixed point.
 */
template <class Expectation>
PlanResult value_iteration(const Vector& reward, double discount, Index num_states,
                           Index num_actions, Expectation&& expect, double tol);

/// Value iteration on the exact model; result is within tol of Q*.
PlanResult solve_value_iteration(const TabularMDP& mdp, double tol);
QFunction optimal_q(const TabularMDP& mdp, double tol);

/// Var_P(V)(s,a) = P(V o V) - (PV) o (PV); float cancellation within 1e-12 is
/// clipped to zero, anything more negative is an InternalError.
Vector variance_of_value(const Matrix& transition, const Vector& v);
Vector variance_of_value(const TabularMDP& mdp, const ValueFunction& v);

/// The s-absorbing MDP: every action at s self-loops with reward (1-gamma) u.
TabularMDP build_absorbing_mdp(const TabularMDP& mdp, Index s, double u);

/// Random MDP with Dirichlet(1) rows and U[0,1] rewards.
TabularMDP random_tabular_mdp(Index num_states, Index num_actions, double discount,
                              std::uint64_t seed);

/// Sup norm of a - b; throws DimensionError on size mismatch.
double sup_distance(const Vector& a, const Vector& b);

// ---------------------------------------------------------------------------

template <class Expectation>
PlanResult value_iteration(const Vector& reward, double discount, Index num_states,
                           Index num_actions, Expectation&& expect, double tol) {
    if (!(tol > 0.0)) throw PreconditionError("value_iteration: tol must be positive");
    if (reward.size() != num_states * num_actions)
        throw DimensionError("value_iteration: reward size does not match |S||A|");

    const double threshold = value_iteration_threshold(discount, tol);
    PlanResult result{QFunction(num_states, num_actions), 0, 0.0};
    Vector& q = result.q.values();
    Vector v = Vector::Zero(num_states);
    Vector next_value(num_states * num_actions);

    while (true) {
        expect(static_cast<const Vector&>(v), next_value);
        double change = 0.0;
        for (Index i = 0; i < q.size(); ++i) {
            const double updated = reward[i] + discount * next_value[i];
            change = std::max(change, std::abs(updated - q[i]));
            q[i] = updated;
        }
        ++result.iterations;
        result.last_change = change;
        for (Index s = 0; s < num_states; ++s) {
            double best = q[s * num_actions];
            for (Index a = 1; a < num_actions; ++a) best = std::max(best, q[s * num_actions + a]);
            v[s] = best;
        }
        if (change <= threshold) break;
    }
    return result;
}

}  // namespace anchormdp
