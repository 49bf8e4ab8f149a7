#include "anchormdp/mdp_core.hpp"

#include "anchormdp/rng.hpp"

#include <Eigen/LU>

#include <sstream>

namespace anchormdp {

namespace {

constexpr double kRowTolerance = 1e-12;

void check_pair_count(const QFunction& q, const TabularMDP& mdp, const char* where) {
    if (q.num_states() != mdp.num_states() || q.num_actions() != mdp.num_actions() ||
        q.values().size() != mdp.num_pairs()) {
        std::ostringstream msg;
        msg << where << ": Q has shape " << q.num_states() << "x" << q.num_actions()
            << " but the MDP has " << mdp.num_states() << "x" << mdp.num_actions();
        throw DimensionError(msg.str());
    }
}

void check_policy(const TabularMDP& mdp, const Policy& pi) {
    if (static_cast<Index>(pi.action.size()) != mdp.num_states())
        throw DimensionError("policy length does not match |S|");
    for (Index a : pi.action) {
        if (a < 0 || a >= mdp.num_actions())
            throw PreconditionError("policy contains an out-of-range action");
    }
}

// (I - gamma P^pi) V = r^pi
Vector solve_policy_values(const TabularMDP& mdp, const Policy& pi) {
    const Index n = mdp.num_states();
    Matrix system = Matrix::Identity(n, n);
    Vector rhs(n);
    for (Index s = 0; s < n; ++s) {
        const Index sa = mdp.pair(s, pi.action[s]);
        system.row(s) -= mdp.discount() * mdp.transition().row(sa);
        rhs[s] = mdp.reward()[sa];
    }
    return Eigen::PartialPivLU<Matrix>(system).solve(rhs);
}

}  // namespace

TabularMDP::TabularMDP(Index num_states, Index num_actions, Matrix transition, Vector reward,
                       double discount)
    : num_states_(num_states), num_actions_(num_actions), transition_(std::move(transition)),
      reward_(std::move(reward)), discount_(discount) {
    if (num_states_ < 1 || num_actions_ < 1)
        throw PreconditionError("TabularMDP: |S| and |A| must be positive");
    if (transition_.rows() != num_pairs() || transition_.cols() != num_states_)
        throw DimensionError("TabularMDP: transition must be (|S||A|) x |S|");
    if (reward_.size() != num_pairs())
        throw DimensionError("TabularMDP: reward must have |S||A| entries");
    if (!(discount_ > 0.0 && discount_ < 1.0))
        throw PreconditionError("TabularMDP: discount must lie in (0,1)");

    for (Index i = 0; i < transition_.rows(); ++i) {
        double sum = 0.0;
        for (Index j = 0; j < transition_.cols(); ++j) {
            double& p = transition_(i, j);
            if (!(p >= -kRowTolerance)) {
                std::ostringstream msg;
                msg << "TabularMDP: negative transition probability " << p << " in row " << i;
                throw PreconditionError(msg.str());
            }
            if (p < 0.0) p = 0.0;
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTolerance) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "TabularMDP: row " << i << " sums to " << sum;
            throw PreconditionError(msg.str());
        }
    }
    for (Index i = 0; i < reward_.size(); ++i) {
        if (!(reward_[i] >= 0.0 && reward_[i] <= 1.0))
            throw PreconditionError("TabularMDP: rewards must lie in [0,1]");
    }
}

QFunction::QFunction(Index num_states, Index num_actions, Vector values)
    : num_states_(num_states), num_actions_(num_actions), values_(std::move(values)) {
    if (values_.size() != num_states_ * num_actions_)
        throw DimensionError("QFunction: value vector must have |S||A| entries");
}

void apply_rows(const Matrix& rows, const Vector& v, Vector& out) {
    if (rows.cols() != v.size()) throw DimensionError("apply_rows: column count mismatch");
    out.resize(rows.rows());
    const Index cols = rows.cols();
    for (Index i = 0; i < rows.rows(); ++i) {
        const double* row = rows.data() + i * cols;
        double acc = 0.0;
        for (Index j = 0; j < cols; ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
}

ValueFunction max_over_actions(const QFunction& q) {
    ValueFunction v{Vector(q.num_states())};
    for (Index s = 0; s < q.num_states(); ++s) {
        double best = q(s, 0);
        for (Index a = 1; a < q.num_actions(); ++a) best = std::max(best, q(s, a));
        v.values[s] = best;
    }
    return v;
}

QFunction bellman_operator(const QFunction& q, const TabularMDP& mdp) {
    check_pair_count(q, mdp, "bellman_operator");
    const ValueFunction v = max_over_actions(q);
    Vector expected;
    apply_rows(mdp.transition(), v.values, expected);
    return QFunction(mdp.num_states(), mdp.num_actions(),
                     mdp.reward() + mdp.discount() * expected);
}

Policy greedy_policy(const QFunction& q) {
    Policy pi{std::vector<Index>(static_cast<std::size_t>(q.num_states()), 0)};
    for (Index s = 0; s < q.num_states(); ++s) {
        Index best = 0;
        for (Index a = 1; a < q.num_actions(); ++a) {
            if (q(s, a) > q(s, best)) best = a;
        }
        pi.action[static_cast<std::size_t>(s)] = best;
    }
    return pi;
}

ValueFunction exact_v_for_policy(const TabularMDP& mdp, const Policy& pi) {
    check_policy(mdp, pi);
    return ValueFunction{solve_policy_values(mdp, pi)};
}

QFunction exact_q_for_policy(const TabularMDP& mdp, const Policy& pi) {
    check_policy(mdp, pi);
    const Vector v = solve_policy_values(mdp, pi);
    Vector expected;
    apply_rows(mdp.transition(), v, expected);
    QFunction q(mdp.num_states(), mdp.num_actions(), mdp.reward() + mdp.discount() * expected);

    // Residual of Q = r + gamma P^pi Q.
    Vector q_pi(mdp.num_states());
    for (Index s = 0; s < mdp.num_states(); ++s) q_pi[s] = q(s, pi.action[s]);
    apply_rows(mdp.transition(), q_pi, expected);
    const double residual =
        (q.values() - mdp.reward() - mdp.discount() * expected).lpNorm<Eigen::Infinity>();
    if (!(residual <= 1e-10 * mdp.value_scale())) {
        std::ostringstream msg;
        msg << "exact_q_for_policy: Bellman residual " << residual << " exceeds tolerance";
        throw InternalError(msg.str());
    }
    return q;
}

double value_iteration_threshold(double discount, double tol) {
    return tol * (1.0 - discount) / (2.0 * discount);
}

Index value_iteration_iteration_bound(double discount, double tol) {
    const double ratio = (1.0 / (1.0 - discount)) / value_iteration_threshold(discount, tol);
    return static_cast<Index>(std::ceil(std::log(ratio) / std::log(1.0 / discount))) + 1;
}

PlanResult solve_value_iteration(const TabularMDP& mdp, double tol) {
    return value_iteration(
        mdp.reward(), mdp.discount(), mdp.num_states(), mdp.num_actions(),
        [&mdp](const Vector& v, Vector& out) { apply_rows(mdp.transition(), v, out); }, tol);
}

QFunction optimal_q(const TabularMDP& mdp, double tol) {
    return solve_value_iteration(mdp, tol).q;
}

Vector variance_of_value(const Matrix& transition, const Vector& v) {
    if (transition.cols() != v.size())
        throw DimensionError("variance_of_value: V length does not match |S|");
    Vector first;
    Vector second;
    apply_rows(transition, v, first);
    apply_rows(transition, v.cwiseProduct(v), second);
    Vector var = second - first.cwiseProduct(first);
    for (Index i = 0; i < var.size(); ++i) {
        if (var[i] < 0.0) {
            if (var[i] < -kRowTolerance) {
                std::ostringstream msg;
                msg << "variance_of_value: negative variance " << var[i] << " in row " << i;
                throw InternalError(msg.str());
            }
            var[i] = 0.0;
        }
    }
    return var;
}

Vector variance_of_value(const TabularMDP& mdp, const ValueFunction& v) {
    return variance_of_value(mdp.transition(), v.values);
}

TabularMDP build_absorbing_mdp(const TabularMDP& mdp, Index s, double u) {
    if (s < 0 || s >= mdp.num_states())
        throw PreconditionError("build_absorbing_mdp: state out of range");
    const double absorbed_reward = (1.0 - mdp.discount()) * u;
    if (!(absorbed_reward >= 0.0 && absorbed_reward <= 1.0))
        throw PreconditionError("build_absorbing_mdp: (1-gamma) u must lie in [0,1]");

    Matrix transition = mdp.transition();
    Vector reward = mdp.reward();
    for (Index a = 0; a < mdp.num_actions(); ++a) {
        const Index sa = mdp.pair(s, a);
        transition.row(sa).setZero();
        transition(sa, s) = 1.0;
        reward[sa] = absorbed_reward;
    }
    return TabularMDP(mdp.num_states(), mdp.num_actions(), std::move(transition),
                      std::move(reward), mdp.discount());
}

TabularMDP random_tabular_mdp(Index num_states, Index num_actions, double discount,
                              std::uint64_t seed) {
    if (num_states < 1 || num_actions < 1)
        throw PreconditionError("random_tabular_mdp: |S| and |A| must be positive");
    rng::SplitMix64 gen(seed);
    const Index pairs = num_states * num_actions;
    Matrix transition(pairs, num_states);
    Vector reward(pairs);
    for (Index i = 0; i < pairs; ++i) {
        double sum = 0.0;
        for (Index j = 0; j < num_states; ++j) {
            transition(i, j) = gen.exponential();
            sum += transition(i, j);
        }
        transition.row(i) /= sum;
        reward[i] = gen.uniform();
    }
    return TabularMDP(num_states, num_actions, std::move(transition), std::move(reward),
                      discount);
}

double sup_distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("sup_distance: size mismatch");
    if (a.size() == 0) return 0.0;
    return (a - b).lpNorm<Eigen::Infinity>();
}

}  // namespace anchormdp
