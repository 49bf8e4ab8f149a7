#include "anchormdp/errors.hpp"
#include "anchormdp/mdp_core.hpp"
#include "anchormdp/rng.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace anchormdp;

namespace {

TabularMDP single_state(double reward, double gamma) {
    return TabularMDP(1, 1, Matrix::Ones(1, 1), Vector::Constant(1, reward), gamma);
}

// s0 -> s1 -> s1, one action, r = (0, 1).
TabularMDP two_state_chain(double gamma) {
    Matrix p(2, 2);
    p << 0, 1,
         0, 1;
    Vector r(2);
    r << 0, 1;
    return TabularMDP(2, 1, p, r, gamma);
}

Vector random_q(rng::SplitMix64& gen, Index n, double hi) {
    Vector q(n);
    for (Index i = 0; i < n; ++i) q[i] = gen.uniform(0.0, hi);
    return q;
}

}  // namespace

TEST(TabularMDP, RejectsInvalidInput) {
    EXPECT_THROW(TabularMDP(2, 1, Matrix::Constant(2, 2, 0.5), Vector::Zero(2), 1.0),
                 PreconditionError);
    EXPECT_THROW(TabularMDP(2, 1, Matrix::Constant(2, 2, 0.5), Vector::Zero(2), 0.0),
                 PreconditionError);
    EXPECT_THROW(TabularMDP(1, 1, Matrix::Ones(1, 1), Vector::Constant(1, 1.5), 0.5),
                 PreconditionError);
    EXPECT_THROW(TabularMDP(2, 1, Matrix::Constant(2, 3, 0.5), Vector::Zero(2), 0.5),
                 DimensionError);
    EXPECT_THROW(TabularMDP(2, 1, Matrix::Constant(2, 2, 0.5), Vector::Zero(3), 0.5),
                 DimensionError);

    Matrix bad(2, 2);
    bad << 0.6, 0.5,
           0.5, 0.5;
    EXPECT_THROW(TabularMDP(2, 1, bad, Vector::Zero(2), 0.5), PreconditionError);
    bad << 1.1, -0.1,
           0.5, 0.5;
    EXPECT_THROW(TabularMDP(2, 1, bad, Vector::Zero(2), 0.5), PreconditionError);
}

TEST(TabularMDP, ClipsTinyNegativeEntries) {
    Matrix q(2, 2);
    q << 1.0, -5e-13,
         0.5, 0.5;
    const TabularMDP m(2, 1, q, Vector::Zero(2), 0.5);
    EXPECT_EQ(m.transition()(0, 1), 0.0);
}

TEST(BellmanOperator, SingleStateExamples) {
    const TabularMDP mdp = single_state(1.0, 0.9);
    EXPECT_DOUBLE_EQ(bellman_operator(QFunction(1, 1), mdp).values()[0], 1.0);
    EXPECT_NEAR(bellman_operator(QFunction(1, 1, Vector::Constant(1, 10.0)), mdp).values()[0],
                10.0, 1e-12);
}

TEST(BellmanOperator, MatchesDoubleLoop) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TabularMDP mdp = random_tabular_mdp(5, 3, 0.9, seed);
        rng::SplitMix64 gen(seed + 100);
        const Vector q = random_q(gen, mdp.num_pairs(), mdp.value_scale());
        const Vector expected = oracle::bellman(mdp.transition(), mdp.reward(), mdp.discount(),
                                                5, 3, q);
        EXPECT_LE(sup_distance(bellman_operator(QFunction(5, 3, q), mdp).values(), expected),
                  1e-12);
    }
}

TEST(BellmanOperator, ShapeMismatch) {
    const TabularMDP mdp = random_tabular_mdp(4, 2, 0.9, 1);
    EXPECT_THROW(bellman_operator(QFunction(4, 3), mdp), DimensionError);
    EXPECT_THROW(QFunction(4, 2, Vector::Zero(7)), DimensionError);
}

TEST(BellmanOperator, ContractionAndMonotonicity) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const double gamma = seed % 2 ? 0.99 : 0.7;
        const TabularMDP mdp = random_tabular_mdp(6, 3, gamma, seed);
        rng::SplitMix64 gen(seed * 7 + 1);
        const Vector q1 = random_q(gen, 18, mdp.value_scale());
        const Vector q2 = random_q(gen, 18, mdp.value_scale());
        const Vector t1 = bellman_operator(QFunction(6, 3, q1), mdp).values();
        const Vector t2 = bellman_operator(QFunction(6, 3, q2), mdp).values();
        EXPECT_LE(sup_distance(t1, t2), gamma * sup_distance(q1, q2) + 1e-12);

        const Vector low = q1.cwiseMin(q2);
        const Vector high = q1.cwiseMax(q2);
        const Vector t_low = bellman_operator(QFunction(6, 3, low), mdp).values();
        const Vector t_high = bellman_operator(QFunction(6, 3, high), mdp).values();
        EXPECT_LE((t_low - t_high).maxCoeff(), 0.0);
    }
}

TEST(ExactPolicyEvaluation, TwoStateChain) {
    const TabularMDP mdp = two_state_chain(0.5);
    const QFunction q = exact_q_for_policy(mdp, Policy{{0, 0}});
    EXPECT_NEAR(q(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(q(1, 0), 2.0, 1e-12);
}

TEST(ExactPolicyEvaluation, MatchesFixedPointIteration) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TabularMDP mdp = random_tabular_mdp(8, 3, 0.9, seed);
        rng::SplitMix64 gen(seed ^ 0xabcdef);
        Policy pi{std::vector<Index>(8)};
        for (auto& a : pi.action) a = static_cast<Index>(gen.below(3));
        const Vector expected = oracle::policy_q_by_iteration(
            mdp.transition(), mdp.reward(), 0.9, 8, 3, pi.action, 10000);
        const QFunction q = exact_q_for_policy(mdp, pi);
        EXPECT_LE(sup_distance(q.values(), expected), 1e-8);
        EXPECT_GE(q.values().minCoeff(), 0.0);
        EXPECT_LE(q.values().maxCoeff(), mdp.value_scale() + 1e-12);

        const ValueFunction v = exact_v_for_policy(mdp, pi);
        for (Index s = 0; s < 8; ++s) EXPECT_NEAR(v.values[s], q(s, pi.action[s]), 1e-10);
    }
}

TEST(ExactPolicyEvaluation, RejectsBadPolicy) {
    const TabularMDP mdp = random_tabular_mdp(3, 2, 0.9, 3);
    EXPECT_THROW(exact_q_for_policy(mdp, Policy{{0, 1}}), DimensionError);
    EXPECT_THROW(exact_q_for_policy(mdp, Policy{{0, 2, 0}}), PreconditionError);
    EXPECT_THROW(exact_q_for_policy(mdp, Policy{{0, -1, 0}}), PreconditionError);
}

TEST(OptimalQ, ClosedForms) {
    EXPECT_NEAR(optimal_q(single_state(1.0, 0.9), 1e-10).values()[0], 10.0, 1e-10);
    const QFunction chain = optimal_q(two_state_chain(0.5), 1e-10);
    EXPECT_NEAR(chain(0, 0), 1.0, 1e-10);
    EXPECT_NEAR(chain(1, 0), 2.0, 1e-10);
    EXPECT_EQ(greedy_policy(chain).action, (std::vector<Index>{0, 0}));
}

TEST(OptimalQ, GreedyPolicyIsNearOptimal) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (double tol : {1e-2, 1e-6, 1e-10}) {
            const TabularMDP mdp = random_tabular_mdp(10, 3, 0.9, seed);
            const QFunction q = optimal_q(mdp, tol);
            const QFunction q_star = optimal_q(mdp, 1e-12);
            EXPECT_LE(sup_distance(q.values(), q_star.values()), tol + 1e-12);
            const QFunction q_pi = exact_q_for_policy(mdp, greedy_policy(q));
            EXPECT_LE(sup_distance(q_pi.values(), q_star.values()),
                      2 * 0.9 * tol / (1 - 0.9) + 1e-10);
        }
    }
}

TEST(OptimalQ, IterationBoundAndFixedPoint) {
    for (double gamma : {0.5, 0.9, 0.99}) {
        const TabularMDP mdp = random_tabular_mdp(7, 2, gamma, 11);
        const PlanResult plan = solve_value_iteration(mdp, 1e-10);
        EXPECT_LE(plan.iterations, value_iteration_iteration_bound(gamma, 1e-10));
        EXPECT_LE(plan.last_change, value_iteration_threshold(gamma, 1e-10));

        const QFunction q = optimal_q(mdp, 1e-11);
        EXPECT_LE(sup_distance(bellman_operator(q, mdp).values(), q.values()),
                  2e-11 / (1 - gamma));
    }
    EXPECT_THROW(optimal_q(single_state(0.5, 0.5), 0.0), PreconditionError);
}

TEST(GreedyPolicy, ArgmaxWithLowestIndexTies) {
    Vector v(6);
    v << 1, 2, 3,
         5, 5, 1;
    EXPECT_EQ(greedy_policy(QFunction(2, 3, v)).action, (std::vector<Index>{2, 0}));
}

TEST(GreedyPolicy, SuboptimalityBound) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const double gamma = 0.8;
        const TabularMDP mdp = random_tabular_mdp(6, 3, gamma, seed);
        const QFunction q_star = optimal_q(mdp, 1e-12);
        rng::SplitMix64 gen(seed + 999);
        const Vector q = random_q(gen, 18, mdp.value_scale());
        const ValueFunction v_pi = exact_v_for_policy(mdp, greedy_policy(QFunction(6, 3, q)));
        const ValueFunction v_star = max_over_actions(q_star);
        EXPECT_LE(sup_distance(v_pi.values, v_star.values),
                  2 * gamma * sup_distance(q, q_star.values()) / (1 - gamma) + 1e-8);
    }
}

TEST(VarianceOfValue, Examples) {
    Matrix p(3, 2);
    p << 1.0, 0.0,
         0.0, 1.0,
         0.5, 0.5;
    Vector v(2);
    v << 0.0, 1.0;
    const Vector var = variance_of_value(p, v);
    EXPECT_EQ(var[0], 0.0);
    EXPECT_EQ(var[1], 0.0);
    EXPECT_DOUBLE_EQ(var[2], 0.25);
    EXPECT_THROW(variance_of_value(p, Vector::Zero(3)), DimensionError);
}

TEST(VarianceOfValue, MatchesDirectMoments) {
    rng::SplitMix64 gen(42);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix p = oracle::random_stochastic(gen, 4, 9);
        const Vector v = random_q(gen, 9, 10.0);
        const Vector var = variance_of_value(p, v);
        for (Index i = 0; i < 4; ++i) {
            std::vector<double> row(p.row(i).data(), p.row(i).data() + 9);
            std::vector<double> vals(v.data(), v.data() + 9);
            EXPECT_NEAR(var[i], oracle::variance(row, vals), 1e-10);
            EXPECT_GE(var[i], 0.0);
        }
    }
}

TEST(AbsorbingMDP, Structure) {
    const TabularMDP mdp = random_tabular_mdp(5, 2, 0.9, 5);
    const TabularMDP absorbed = build_absorbing_mdp(mdp, 2, 0.0);
    for (Index s = 0; s < 5; ++s) {
        for (Index a = 0; a < 2; ++a) {
            const Index sa = mdp.pair(s, a);
            if (s == 2) {
                EXPECT_EQ(absorbed.transition()(sa, 2), 1.0);
                EXPECT_EQ(absorbed.transition().row(sa).sum(), 1.0);
                EXPECT_EQ(absorbed.reward()[sa], 0.0);
            } else {
                EXPECT_EQ(absorbed.transition().row(sa), mdp.transition().row(sa));
                EXPECT_EQ(absorbed.reward()[sa], mdp.reward()[sa]);
            }
        }
    }
    EXPECT_THROW(build_absorbing_mdp(mdp, 5, 0.0), PreconditionError);
    EXPECT_THROW(build_absorbing_mdp(mdp, 0, 10.5), PreconditionError);
    EXPECT_THROW(build_absorbing_mdp(mdp, 0, -0.1), PreconditionError);
}

TEST(AbsorbingMDP, ValueAtAbsorbedStateIsU) {
    const TabularMDP mdp = random_tabular_mdp(6, 3, 0.9, 8);
    for (double u : {0.0, 1.5, 7.25, 10.0}) {
        const QFunction q = optimal_q(build_absorbing_mdp(mdp, 4, u), 1e-11);
        EXPECT_NEAR(max_over_actions(q).values[4], u, 1e-10);
    }
}

TEST(AbsorbingMDP, UEqualToOptimalValueLeavesValuesUnchanged) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TabularMDP mdp = random_tabular_mdp(6, 3, 0.9, seed);
        const ValueFunction v_star = max_over_actions(optimal_q(mdp, 1e-11));
        const Index s = static_cast<Index>(seed % 6);
        const ValueFunction v_abs =
            max_over_actions(optimal_q(build_absorbing_mdp(mdp, s, v_star.values[s]), 1e-11));
        EXPECT_LE(sup_distance(v_abs.values, v_star.values), 1e-8);
    }
}

TEST(AbsorbingMDP, ValueContraction) {
    rng::SplitMix64 gen(77);
    for (int trial = 0; trial < 30; ++trial) {
        const TabularMDP mdp = random_tabular_mdp(5, 2, 0.9, 300 + trial);
        const auto s = static_cast<Index>(gen.below(5));
        const double u1 = gen.uniform(0.0, 10.0);
        const double u2 = gen.uniform(0.0, 10.0);
        const Vector v1 = max_over_actions(optimal_q(build_absorbing_mdp(mdp, s, u1), 1e-10)).values;
        const Vector v2 = max_over_actions(optimal_q(build_absorbing_mdp(mdp, s, u2), 1e-10)).values;
        EXPECT_LE(sup_distance(v1, v2), std::abs(u1 - u2) + 1e-8);
    }
}

TEST(RandomTabularMDP, DeterministicAndValid) {
    const TabularMDP a = random_tabular_mdp(9, 4, 0.95, 123);
    const TabularMDP b = random_tabular_mdp(9, 4, 0.95, 123);
    EXPECT_EQ(a.transition(), b.transition());
    EXPECT_EQ(a.reward(), b.reward());
    EXPECT_NE(a.transition(), random_tabular_mdp(9, 4, 0.95, 124).transition());
    for (Index i = 0; i < a.num_pairs(); ++i) EXPECT_NEAR(a.transition().row(i).sum(), 1.0, 1e-12);
}

TEST(SupDistance, Basics) {
    Vector a(3), b(3);
    a << 1, 2, 3;
    b << 1, 5, 2;
    EXPECT_EQ(sup_distance(a, b), 3.0);
    EXPECT_EQ(sup_distance(Vector(), Vector()), 0.0);
    EXPECT_THROW(sup_distance(a, Vector::Zero(2)), DimensionError);
}
