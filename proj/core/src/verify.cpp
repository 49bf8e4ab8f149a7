#include "anchormdp/harness.hpp"

#include "anchormdp/rng.hpp"

#include <functional>
#include <optional>
#include <sstream>

namespace anchormdp {

namespace {

constexpr int kRandomTrials = 10;

Vector random_vector(rng::SplitMix64& gen, Index n, double hi) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = gen.uniform(0.0, hi);
    return v;
}

class CheckList {
public:
    /// Runs `body`; it returns an empty string on success or a failure detail.
    void run(const std::string& name, const std::function<std::string()>& body) {
        InvariantCheck check{name, false, {}};
        try {
            check.detail = body();
            check.passed = check.detail.empty();
        } catch (const std::exception& e) {
            check.detail = e.what();
        }
        checks_.push_back(std::move(check));
    }

    void skip(const std::string& name, const std::string& why) {
        checks_.push_back(InvariantCheck{name, false, "not evaluated: " + why});
    }

    std::vector<InvariantCheck> take() { return std::move(checks_); }

private:
    std::vector<InvariantCheck> checks_;
};

std::string exceeds(const char* what, double value, double bound) {
    if (value <= bound) return {};
    std::ostringstream msg;
    msg << what << " = " << value << " exceeds " << bound;
    return msg.str();
}

}  // namespace

std::vector<InvariantCheck> verify_model(const RawModel& raw, std::uint64_t seed) {
    CheckList checks;
    rng::SplitMix64 gen(seed);

    std::optional<LinearMDP> linear;
    checks.run("linear_factorization", [&] {
        linear.emplace(LinearMDP::from_factors(raw.num_states, raw.num_actions, raw.features,
                                               raw.factor, raw.reward, raw.discount));
        return std::string{};
    });

    std::optional<AnchorSet> anchors;
    if (linear) {
        checks.run("anchor_assumption", [&] {
            anchors.emplace(build_anchor_set(*linear, raw.anchors));
            return std::string{};
        });
    } else {
        checks.skip("anchor_assumption", "no valid linear model");
    }

    if (anchors) {
        checks.run("coefficient_simplex", [&] {
            const Matrix& c = anchors->coefficients;
            double worst_sum = 0.0;
            for (Index i = 0; i < c.rows(); ++i)
                worst_sum = std::max(worst_sum, std::abs(c.row(i).sum() - 1.0));
            if (c.minCoeff() < 0.0) return std::string("negative coefficient after clipping");
            return exceeds("max |sum(lambda) - 1|", worst_sum, 1e-12);
        });
        checks.run("anchor_reconstruction", [&] {
            return exceeds("||Lambda P_K - P||", anchor_reconstruction_error(*anchors, linear->base().transition()), 1e-8);
        });
        checks.run("row_stochastic_closure", [&] {
            const Matrix product = linear->features() * linear->factor();
            double worst = 0.0;
            for (Index i = 0; i < product.rows(); ++i)
                worst = std::max(worst, std::abs(product.row(i).sum() - 1.0));
            if (product.minCoeff() < -1e-12) return std::string("negative kernel entry");
            return exceeds("max |row sum - 1|", worst, 1e-12);
        });
    }

    std::optional<TabularMDP> mdp;
    if (raw.true_transition) {
        checks.run("true_kernel_valid", [&] {
            mdp.emplace(raw.num_states, raw.num_actions, *raw.true_transition, raw.reward,
                        raw.discount);
            return std::string{};
        });
        if (mdp && linear) {
            checks.run("misspecification_range", [&] {
                const double xi =
                    misspecification_distance(mdp->transition(), linear->base().transition());
                return exceeds("xi", xi, 2.0);
            });
        }
    } else if (linear) {
        mdp.emplace(linear->base());
    }

    if (!mdp) {
        for (const char* name : {"bellman_contraction", "bellman_monotonicity",
                                 "value_iteration_fixed_point", "policy_evaluation_residual",
                                 "greedy_policy_bound", "absorbing_value_contraction"})
            checks.skip(name, "no valid MDP");
        return checks.take();
    }

    const double scale = mdp->value_scale();
    const double gamma = mdp->discount();
    const Index n = mdp->num_pairs();
    const QFunction q_star = optimal_q(*mdp, 1e-11);

    checks.run("bellman_contraction", [&] {
        for (int trial = 0; trial < kRandomTrials; ++trial) {
            const QFunction q1(mdp->num_states(), mdp->num_actions(), random_vector(gen, n, scale));
            const QFunction q2(mdp->num_states(), mdp->num_actions(), random_vector(gen, n, scale));
            const double lhs = sup_distance(bellman_operator(q1, *mdp).values(),
                                            bellman_operator(q2, *mdp).values());
            const double rhs = gamma * sup_distance(q1.values(), q2.values());
            if (auto bad = exceeds("||T Q1 - T Q2||", lhs, rhs + 1e-12); !bad.empty()) return bad;
        }
        return std::string{};
    });

    checks.run("bellman_monotonicity", [&] {
        for (int trial = 0; trial < kRandomTrials; ++trial) {
            const Vector low = random_vector(gen, n, 0.5 * scale);
            const Vector high = low + random_vector(gen, n, 0.5 * scale);
            const Vector t_low = bellman_operator(QFunction(mdp->num_states(), mdp->num_actions(), low), *mdp).values();
            const Vector t_high = bellman_operator(QFunction(mdp->num_states(), mdp->num_actions(), high), *mdp).values();
            if ((t_low - t_high).maxCoeff() > 0.0) return std::string("T(Q1) > T(Q2) for Q1 <= Q2");
        }
        return std::string{};
    });

    checks.run("value_iteration_fixed_point", [&] {
        return exceeds("||T Q - Q||", sup_distance(bellman_operator(q_star, *mdp).values(), q_star.values()),
                       2e-11 * scale);
    });

    checks.run("policy_evaluation_residual", [&] {
        const Policy pi = greedy_policy(q_star);
        const QFunction q_pi = exact_q_for_policy(*mdp, pi);
        Vector on_policy(mdp->num_states());
        for (Index s = 0; s < mdp->num_states(); ++s) on_policy[s] = q_pi(s, pi.action[static_cast<std::size_t>(s)]);
        Vector expected;
        apply_rows(mdp->transition(), on_policy, expected);
        const double residual = sup_distance(q_pi.values(), mdp->reward() + gamma * expected);
        return exceeds("Bellman residual", residual, 1e-10 * scale);
    });

    checks.run("greedy_policy_bound", [&] {
        const ValueFunction v_star = max_over_actions(q_star);
        for (int trial = 0; trial < kRandomTrials; ++trial) {
            const QFunction q(mdp->num_states(), mdp->num_actions(), random_vector(gen, n, scale));
            const ValueFunction v_pi = exact_v_for_policy(*mdp, greedy_policy(q));
            const double lhs = sup_distance(v_pi.values, v_star.values);
            const double rhs = 2.0 * gamma * sup_distance(q.values(), q_star.values()) / (1.0 - gamma);
            if (auto bad = exceeds("||V^pi - V*||", lhs, rhs + 1e-8); !bad.empty()) return bad;
        }
        return std::string{};
    });

    checks.run("absorbing_value_contraction", [&] {
        const int trials = mdp->num_states() > 200 ? 2 : 5;
        for (int trial = 0; trial < trials; ++trial) {
            const auto s = static_cast<Index>(gen.below(static_cast<std::uint64_t>(mdp->num_states())));
            const double u1 = gen.uniform(0.0, scale);
            const double u2 = gen.uniform(0.0, scale);
            const Vector v1 = max_over_actions(optimal_q(build_absorbing_mdp(*mdp, s, u1), 1e-10)).values;
            const Vector v2 = max_over_actions(optimal_q(build_absorbing_mdp(*mdp, s, u2), 1e-10)).values;
            if (auto bad = exceeds("||V*_{s,u1} - V*_{s,u2}||", sup_distance(v1, v2), std::abs(u1 - u2) + 1e-8);
                !bad.empty())
                return bad;
        }
        return std::string{};
    });

    if (anchors && linear) {
        checks.run("anchor_variance_inequality", [&] {
            const Matrix anchor_rows = select_rows(linear->base().transition(), anchors->pairs);
            for (int trial = 0; trial < kRandomTrials; ++trial) {
                const Vector v = random_vector(gen, mdp->num_states(), scale);
                const Vector per_anchor = variance_of_value(anchor_rows, v);
                const Vector mixed = variance_of_value(anchors->coefficients * anchor_rows, v);
                const Vector lhs = anchors->coefficients.cwiseProduct(anchors->coefficients) * per_anchor;
                if ((lhs - mixed).maxCoeff() > 1e-10)
                    return std::string("lambda^2 Var_{P_K}(V) exceeds Var_{lambda P_K}(V)");
            }
            return std::string{};
        });
    }
    return checks.take();
}

}  // namespace anchormdp
