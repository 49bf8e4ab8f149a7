// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
// Usage: anchormdp_acceptance [criterion numbers...]   (default: all)

#include "anchormdp/harness.hpp"
#include "anchormdp/rng.hpp"
#include "oracles.hpp"
#include "planted.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace anchormdp;

namespace {

struct Outcome {
    bool passed;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;  // <= 0: no limit
    std::function<Outcome()> run;
};

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(4);
    s << x;
    return s.str();
}

ExperimentConfig rate_config() {
    ExperimentConfig c;
    c.states = 200;
    c.actions = 5;
    c.feature_dim = 10;
    c.gamma = 0.9;
    c.model_seed = 1;
    c.algorithm = Algorithm::model_based;
    c.trials = 20;
    c.seed = 7;
    c.eps_opt = 1e-6;
    return c;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
    const double gammas[] = {0.5, 0.9, 0.99};
    rng::SplitMix64 gen(101);
    double worst_ratio = 0.0;
    int failures = 0;
    for (int i = 0; i < 100; ++i) {
        const double gamma = gammas[i % 3];
        const auto states = static_cast<Index>(1 + gen.below(12));
        const auto actions = static_cast<Index>(1 + gen.below(4));
        const TabularMDP mdp = random_tabular_mdp(states, actions, gamma, gen());
        const QFunction q = optimal_q(mdp, 1e-10);
        const QFunction q_pi = exact_q_for_policy(mdp, greedy_policy(q));
        const double gap = sup_distance(q.values(), q_pi.values());
        const double bound = 2 * gamma * 1e-10 / (1 - gamma) + 1e-8;
        worst_ratio = std::max(worst_ratio, gap / bound);
        if (gap > bound) ++failures;
    }
    return {failures == 0, "100 MDPs, worst gap/bound = " + fmt(worst_ratio)};
}

Outcome model_based_rate() {
    ExperimentConfig c = rate_config();
    c.grid = {1 << 8, 1 << 9, 1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14};
    const auto records = sweep(c);
    std::string medians;
    for (const auto& [n, e] : aggregate_errors(records)) medians += " " + fmt(e);
    double slope = 0.0;
    try {
        slope = fit_loglog_slope(records);
    } catch (const Error& e) {
        return {false, std::string("slope undefined: ") + e.what() + "; medians" + medians};
    }
    return {slope >= -0.65 && slope <= -0.35,
            "slope " + fmt(slope) + " (want [-0.65, -0.35]); medians" + medians};
}

Outcome state_count_independence() {
    double medians[2];
    const Index sizes[2] = {100, 1000};
    for (int i = 0; i < 2; ++i) {
        ExperimentConfig c = rate_config();
        c.states = sizes[i];
        c.grid = {1 << 12};
        medians[i] = aggregate_errors(sweep(c)).front().second;
    }
    if (!(medians[1] > 0.0))
        return {false, "median error at |S|=1000 is " + fmt(medians[1]) + ", ratio undefined"};
    const double ratio = medians[0] / medians[1];
    return {ratio >= 0.4 && ratio <= 2.5, "median(|S|=100) " + fmt(medians[0]) + " / median(|S|=1000) " +
                                              fmt(medians[1]) + " = " + fmt(ratio) + " (want [0.4, 2.5])"};
}

Outcome q_learning_convergence() {
    const Index states = 100, actions = 4, k = 8;
    const double gamma = 0.9;
    const std::int64_t horizon = 200000;
    const SimplexModel m = random_simplex_model(states, actions, k, gamma, 1);
    const TabularMDP& mdp = m.model.base();
    QLearningOptions options;
    options.oracle_q_star = optimal_q(mdp, 1e-10);
    options.checkpoints = {horizon / 10, horizon};

    bool passed = true;
    std::string detail;
    for (ScheduleKind kind : {ScheduleKind::linearly_rescaled, ScheduleKind::constant}) {
        const LearningRateSchedule schedule{kind, 1.0, 1.0, horizon, gamma};
        std::vector<double> early, final_errors;
        for (int trial = 0; trial < 10; ++trial) {
            const QLearningResult r = run_q_learning(mdp, m.anchors, horizon, schedule,
                                                     QFunction(states, actions), trial_seed(5, trial), options);
            early.push_back(r.error_trace.at(0).sup_error);
            final_errors.push_back(r.error_trace.at(1).sup_error);
        }
        const double e_early = median(early);
        const double e_final = median(final_errors);
        const bool ok = e_final < 0.5 * e_early && e_final < 0.2 / (1 - gamma);
        passed = passed && ok;
        detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(kind)) + " " +
                  (ok ? "ok" : "FAIL") + ": T/10 " + fmt(e_early) + " -> T " + fmt(e_final) +
                  " (ratio " + fmt(e_final / e_early) + ", want < 0.5 and < 2)";
    }
    return {passed, detail};
}

Outcome misspecification_stability() {
    const ExperimentConfig c = rate_config();
    const SimplexModel m = random_simplex_model(c.states, c.actions, c.feature_dim, c.gamma, c.model_seed);
    const TabularMDP& linear = m.model.base();
    const QFunction q_linear = optimal_q(linear, 1e-10);
    const std::int64_t n = 1 << 14;

    std::vector<double> baseline;
    for (int trial = 0; trial < 20; ++trial) {
        const ModelBasedResult r = run_model_based(linear, m.anchors, n, c.eps_opt, trial_seed(c.seed, trial));
        baseline.push_back(evaluate_policy_error(linear, r.policy, q_linear));
    }

    bool passed = true;
    std::string detail;
    for (double xi : {0.0, 0.01, 0.05}) {
        const TabularMDP truth = perturb_model(m.model, xi, rng::derive(c.model_seed, 0x70657274ULL));
        const double measured = misspecification_distance(truth.transition(), linear.transition());
        const QFunction q_truth = optimal_q(truth, 1e-10);
        int holds = 0;
        for (int trial = 0; trial < 20; ++trial) {
            const ModelBasedResult r = run_model_based(truth, m.anchors, n, c.eps_opt, trial_seed(c.seed, trial));
            const double err = evaluate_policy_error(truth, r.policy, q_truth);
            const double bound = 3 * baseline[static_cast<std::size_t>(trial)] +
                                 22 * measured / ((1 - c.gamma) * (1 - c.gamma));
            if (err <= bound) ++holds;
        }
        passed = passed && holds >= 18;
        detail += std::string(detail.empty() ? "" : "; ") + "xi " + fmt(xi) + " (measured " + fmt(measured) +
                  "): " + std::to_string(holds) + "/20";
    }
    return {passed, detail + " (want >= 18/20 each)"};
}

Outcome anchor_variance_inequality() {
    rng::SplitMix64 gen(606);
    const double scale = 1.0 / (1.0 - 0.9);
    double worst_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
        const auto k = static_cast<Index>(1 + gen.below(8));
        const auto states = static_cast<Index>(1 + gen.below(20));
        const Matrix p_k = oracle::random_stochastic(gen, k, states);
        const Matrix lambda = oracle::random_stochastic(gen, 1, k);
        Vector v(states);
        for (Index s = 0; s < states; ++s) v[s] = gen.uniform(0.0, scale);

        const Vector per_anchor = variance_of_value(p_k, v);
        const double lhs = (lambda.cwiseProduct(lambda) * per_anchor)(0);
        const double rhs = variance_of_value(lambda * p_k, v)[0];
        worst_slack = std::min(worst_slack, rhs - lhs);
    }
    return {worst_slack >= -1e-10, "1000 instances, min slack " + fmt(worst_slack) + " (want >= -1e-10)"};
}

Outcome absorbing_contraction() {
    rng::SplitMix64 gen(707);
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
        const auto states = static_cast<Index>(2 + gen.below(9));
        const auto actions = static_cast<Index>(1 + gen.below(4));
        const double gamma = i % 2 ? 0.9 : 0.5;
        const TabularMDP mdp = random_tabular_mdp(states, actions, gamma, gen());
        const auto s = static_cast<Index>(gen.below(static_cast<std::uint64_t>(states)));
        const double u1 = gen.uniform(0.0, 1.0 / (1.0 - gamma));
        const double u2 = gen.uniform(0.0, 1.0 / (1.0 - gamma));
        const Vector v1 = max_over_actions(optimal_q(build_absorbing_mdp(mdp, s, u1), 1e-10)).values;
        const Vector v2 = max_over_actions(optimal_q(build_absorbing_mdp(mdp, s, u2), 1e-10)).values;
        worst = std::max(worst, sup_distance(v1, v2) - std::abs(u1 - u2));
    }
    return {worst <= 1e-8, "200 instances, max(||V1 - V2|| - |u1 - u2|) = " + fmt(worst) + " (want <= 1e-8)"};
}

Outcome tabular_reduction() {
    int mismatches = 0;
    int runs = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto states = static_cast<Index>(3 + seed);
        const Index actions = 1 + static_cast<Index>(seed % 3);
        const TabularMDP mdp = random_tabular_mdp(states, actions, 0.9, seed);
        const LinearMDP embedded = tabular_embedding(mdp);
        std::vector<Index> pairs(static_cast<std::size_t>(mdp.num_pairs()));
        for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = static_cast<Index>(i);
        const AnchorSet anchors = build_anchor_set(embedded, pairs);
        for (std::int64_t n : {1, 16, 250}) {
            ++runs;
            const std::uint64_t sample_seed = rng::derive(seed, static_cast<std::uint64_t>(n));
            const ModelBasedResult r = run_model_based(mdp, anchors, n, 1e-8, sample_seed);
            const oracle::TabularRun ref = oracle::tabular_model_based(
                mdp.transition(), mdp.reward(), 0.9, states, actions, n, 1e-8, sample_seed);
            bool same = r.policy.action == ref.policy && r.planner_iterations == ref.iterations;
            for (Index i = 0; i < mdp.num_pairs() && same; ++i)
                same = r.empirical_q_star.values()[i] == ref.q[i];
            if (!same) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(runs - mismatches) + "/" + std::to_string(runs) + " runs bit-identical"};
}

Outcome one_step_unbiasedness() {
    const SimplexModel m = random_simplex_model(6, 2, 3, 0.9, 909);
    const TabularMDP& mdp = m.model.base();
    rng::SplitMix64 gen(910);
    Vector values(12);
    for (Index i = 0; i < 12; ++i) values[i] = gen.uniform(0.0, mdp.value_scale());
    const QFunction q(6, 2, values);

    const int draws = 100000;
    Vector mean = Vector::Zero(12);
    for (int t = 0; t < draws; ++t)
        mean += empirical_bellman_apply(q, one_hot_batch(mdp, m.anchors, rng::derive(911, t)), m.anchors,
                                        mdp.reward(), mdp.discount())
                    .values();
    mean /= draws;

    // Each draw lies in an interval of width gamma * (max Q - min Q).
    const double width = mdp.discount() * (values.maxCoeff() - values.minCoeff());
    const double envelope = 4.0 * width / (2.0 * std::sqrt(static_cast<double>(draws)));
    const double deviation = sup_distance(mean, bellman_operator(q, mdp).values());
    return {deviation <= envelope, "max deviation " + fmt(deviation) + " (4 sigma envelope " + fmt(envelope) + ")"};
}

Outcome normalization_round_trip() {
    int failures = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (int which = 0; which < 2; ++which) {
            const planted::Model pm = which == 0 ? planted::extra_dependent_column(seed) : planted::extra_anchor(seed);
            try {
                const LinearMDP normalized = normalize_model(pm.model, pm.anchors);
                const double err = (normalized.features() * normalized.factor() - pm.model.base().transition())
                                       .cwiseAbs()
                                       .maxCoeff();
                worst = std::max(worst, err);
                if (normalized.feature_dim() != static_cast<Index>(pm.anchors.size()) || err > 1e-10) ++failures;
                (void)build_anchor_set(normalized, pm.anchors);
            } catch (const Error&) {
                ++failures;
            }
        }
    }
    return {failures == 0, "20 planted cases (Kd = Kn +/- 1), worst reconstruction " + fmt(worst) +
                               ", failures " + std::to_string(failures)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", 10.0, oracle_equivalence},
        {2, "model-based sqrt(N) rate", 300.0, model_based_rate},
        {3, "|S| independence", 600.0, state_count_independence},
        {4, "Q-learning convergence", 300.0, q_learning_convergence},
        {5, "misspecification stability", 0.0, misspecification_stability},
        {6, "anchor variance inequality", 5.0, anchor_variance_inequality},
        {7, "absorbing-MDP contraction", 0.0, absorbing_contraction},
        {8, "tabular reduction", 0.0, tabular_reduction},
        {9, "one-step unbiasedness", 0.0, one_step_unbiasedness},
        {10, "feature normalization round trip", 0.0, normalization_round_trip},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome{false, ""};
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string timing = fmt(seconds) + " s";
        if (c.time_limit_s > 0) {
            timing += " / limit " + fmt(c.time_limit_s) + " s";
            if (seconds >= c.time_limit_s) {
                outcome.passed = false;
                outcome.detail += "; over time limit";
            }
        }
        if (!outcome.passed) ++failed;
        std::printf("[%s] criterion %d %s: %s [%s]\n", outcome.passed ? "PASS" : "FAIL", c.id, c.name,
                    outcome.detail.c_str(), timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
