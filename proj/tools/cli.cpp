#include "cli.hpp"

#include "anchormdp/harness.hpp"
#include "anchormdp/rng.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>

namespace anchormdp::cli {
namespace {

struct GenOptions {
    Index states = 50;
    Index actions = 3;
    Index feature_dim = 5;
    double gamma = 0.9;
    std::uint64_t seed = 0;
    bool tabular = false;
    double xi = 0.0;
    std::string output;
};

struct PlanOptions {
    std::string model;
    std::int64_t per_anchor = 1024;
    double eps_opt = 1e-6;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    bool exact = false;
    std::string policy_out;
    std::string dump_samples;
};

struct QLearnOptions {
    std::string model;
    std::int64_t horizon = 10000;
    std::string schedule = "rescaled";
    double c1 = 1.0;
    double c2 = 1.0;
    std::uint64_t seed = 0;
    std::string trace;
    std::string policy_out;
};

struct SweepOptions {
    std::string config;
    std::string output;
    unsigned workers = 0;
};

struct VerifyOptions {
    std::string model;
    std::uint64_t seed = 0;
};

struct EvalOptions {
    std::string model;
    std::string policy;
};

std::ofstream open_output(const std::string& path) {
    std::ofstream file(path);
    if (!file) throw PreconditionError("cannot open " + path + " for writing");
    file << std::setprecision(17);
    return file;
}

void write_policy_file(const std::string& path, const Policy& pi) {
    std::ofstream file = open_output(path);
    write_policy(file, pi);
}

int gen(const GenOptions& o, std::ostream& out) {
    const std::uint64_t model_seed = o.seed;
    std::optional<ModelFile> file;
    if (o.tabular) {
        const TabularMDP mdp = random_tabular_mdp(o.states, o.actions, o.gamma, model_seed);
        LinearMDP linear = tabular_embedding(mdp);
        std::vector<Index> pairs(static_cast<std::size_t>(mdp.num_pairs()));
        for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = static_cast<Index>(i);
        AnchorSet anchors = build_anchor_set(linear, pairs);
        file.emplace(ModelFile{std::move(linear), std::move(anchors), std::nullopt});
    } else {
        SimplexModel m = random_simplex_model(o.states, o.actions, o.feature_dim, o.gamma, model_seed);
        file.emplace(ModelFile{std::move(m.model), std::move(m.anchors), std::nullopt});
    }
    if (o.xi > 0.0)
        file->true_transition = perturb_model(file->reference, o.xi, rng::derive(model_seed, 0x70657274ULL)).transition();
    save_model(o.output, *file);
    out << "wrote " << o.output << ": |S|=" << o.states << " |A|=" << o.actions
        << " K=" << file->anchors.size();
    if (file->true_transition)
        out << " xi=" << misspecification_distance(*file->true_transition, file->reference.base().transition());
    out << '\n';
    return 0;
}

int plan(const PlanOptions& o, std::ostream& out) {
    const ModelFile file = load_model(o.model);
    const TabularMDP truth = file.true_mdp();
    ModelBasedResult result;
    if (o.exact) {
        result = plan_on_kernel(truth, file.anchors, exact_anchor_kernel(truth, file.anchors), o.eps_opt, 0);
    } else {
        const SampleBatch batch = sample_anchor_transitions(truth, file.anchors, o.per_anchor, o.seed, o.workers);
        if (!o.dump_samples.empty()) {
            std::ofstream dump = open_output(o.dump_samples);
            write_batch_csv(dump, batch);
        }
        result = plan_on_kernel(truth, file.anchors, empirical_kernel(batch, file.anchors), o.eps_opt,
                                o.per_anchor * static_cast<std::int64_t>(file.anchors.size()));
    }
    if (!o.policy_out.empty()) write_policy_file(o.policy_out, result.policy);
    out << std::setprecision(17) << "error " << evaluate_policy_error(truth, result.policy) << '\n'
        << "samples " << result.sample_count << '\n'
        << "planner_iterations " << result.planner_iterations << '\n'
        << "planner_change " << result.planner_change << '\n';
    return 0;
}

int qlearn(const QLearnOptions& o, std::ostream& out) {
    const ModelFile file = load_model(o.model);
    const TabularMDP truth = file.true_mdp();
    const LearningRateSchedule schedule{parse_schedule_kind(o.schedule), o.c1, o.c2, o.horizon, truth.discount()};
    QLearningOptions options;
    options.oracle_q_star = optimal_q(truth, 1e-10);
    const QLearningResult result = run_q_learning(truth, file.anchors, o.horizon, schedule,
                                                  QFunction(truth.num_states(), truth.num_actions()), o.seed,
                                                  options);
    if (!o.trace.empty()) {
        std::ofstream trace = open_output(o.trace);
        trace << "t,sup_error\n";
        for (const ErrorCheckpoint& c : result.error_trace) trace << c.t << ',' << c.sup_error << '\n';
    }
    if (!o.policy_out.empty()) write_policy_file(o.policy_out, result.policy);
    out << std::setprecision(17) << "error " << result.error_trace.back().sup_error << '\n'
        << "policy_error " << evaluate_policy_error(truth, result.policy, *options.oracle_q_star) << '\n';
    return 0;
}

int run_sweep(const SweepOptions& o, std::ostream& out) {
    ExperimentConfig config = load_config(o.config);
    if (!o.output.empty()) config.output = o.output;
    if (o.workers > 0) config.workers = o.workers;
    const std::vector<RunRecord> records = sweep(config);
    if (config.output.empty()) {
        out << std::setprecision(17);
        write_records_csv(out, records);
        return 0;
    }
    out << "wrote " << records.size() << " records to " << config.output << '\n';
    for (const auto& [param, error] : aggregate_errors(records)) out << "median " << param << ' ' << error << '\n';
    if (config.grid.size() >= 3) {
        try {
            out << "slope " << fit_loglog_slope(records) << '\n';
        } catch (const Error& e) {
            out << "slope undefined: " << e.what() << '\n';
        }
    }
    return 0;
}

int verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
    std::ifstream in(o.model);
    if (!in) throw PreconditionError("cannot open " + o.model);
    const std::vector<InvariantCheck> checks = verify_model(read_raw_model(in), o.seed);
    int failed = 0;
    for (const InvariantCheck& c : checks) {
        out << (c.passed ? "ok     " : "FAILED ") << c.name;
        if (!c.detail.empty()) out << ": " << c.detail;
        out << '\n';
        if (!c.passed) {
            ++failed;
            err << "invariant failed: " << c.name << '\n';
        }
    }
    return failed == 0 ? 0 : 1;
}

int eval(const EvalOptions& o, std::ostream& out) {
    const ModelFile file = load_model(o.model);
    const TabularMDP truth = file.true_mdp();
    std::ifstream in(o.policy);
    if (!in) throw PreconditionError("cannot open " + o.policy);
    const Policy pi = read_policy(in);
    const QFunction q_star = optimal_q(truth, 1e-10);
    const Vector v_pi = exact_v_for_policy(truth, pi).values;
    const Vector v_star = max_over_actions(q_star).values;
    out << std::setprecision(17) << "error " << evaluate_policy_error(truth, pi, q_star) << '\n'
        << "state,value,optimal_value\n";
    for (Index s = 0; s < truth.num_states(); ++s) out << s << ',' << v_pi[s] << ',' << v_star[s] << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anchor-state linear MDP planning and Q-learning"};
    app.name("anchormdp");
    app.require_subcommand(1);

    GenOptions g;
    CLI::App* gen_cmd = app.add_subcommand("gen", "Write a random model file");
    gen_cmd->add_option("--states", g.states, "|S|")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--actions", g.actions, "|A|")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--feature-dim", g.feature_dim, "K (ignored with --tabular)")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--gamma", g.gamma, "Discount factor");
    gen_cmd->add_option("--seed", g.seed, "Model seed");
    gen_cmd->add_flag("--tabular", g.tabular, "Tabular embedding of a random tabular MDP");
    gen_cmd->add_option("--xi", g.xi, "Perturb the kernel to l1 distance in [xi/2, xi]");
    gen_cmd->add_option("-o,--output", g.output, "Model file")->required();

    PlanOptions p;
    CLI::App* plan_cmd = app.add_subcommand("plan", "Model-based planning from anchor samples");
    plan_cmd->add_option("model", p.model, "Model file")->required();
    plan_cmd->add_option("-N,--samples", p.per_anchor, "Samples per anchor")->check(CLI::PositiveNumber);
    plan_cmd->add_option("--eps-opt", p.eps_opt, "Planner accuracy");
    plan_cmd->add_option("--seed", p.seed, "Sampling seed");
    plan_cmd->add_option("--workers", p.workers, "Sampling threads")->check(CLI::PositiveNumber);
    plan_cmd->add_flag("--inject-exact-counts", p.exact, "Plan on the exact anchor kernel (test hook)");
    plan_cmd->add_option("--policy-out", p.policy_out, "Write the greedy policy here");
    plan_cmd->add_option("--dump-samples", p.dump_samples, "Write the sample counts as CSV");

    QLearnOptions q;
    CLI::App* qlearn_cmd = app.add_subcommand("qlearn", "Anchor-sample Q-learning");
    qlearn_cmd->add_option("model", q.model, "Model file")->required();
    qlearn_cmd->add_option("-T,--iterations", q.horizon, "Iterations T");
    qlearn_cmd->add_option("--schedule", q.schedule, "rescaled | constant");
    qlearn_cmd->add_option("--c1", q.c1, "Schedule constant c1");
    qlearn_cmd->add_option("--c2", q.c2, "Schedule constant c2");
    qlearn_cmd->add_option("--seed", q.seed, "Sampling seed");
    qlearn_cmd->add_option("--trace", q.trace, "Write the error trace as CSV");
    qlearn_cmd->add_option("--policy-out", q.policy_out, "Write the greedy policy here");

    SweepOptions w;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run an experiment config");
    sweep_cmd->add_option("-c,--config", w.config, "key = value config file")->required();
    sweep_cmd->add_option("-o,--output", w.output, "CSV path (overrides the config)");
    sweep_cmd->add_option("--workers", w.workers, "Threads (overrides the config)");

    VerifyOptions v;
    CLI::App* verify_cmd = app.add_subcommand("verify", "Check a model file's invariants");
    verify_cmd->add_option("model", v.model, "Model file")->required();
    verify_cmd->add_option("--seed", v.seed, "Seed for randomized checks");

    EvalOptions e;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Exact evaluation of a policy");
    eval_cmd->add_option("model", e.model, "Model file")->required();
    eval_cmd->add_option("--policy", e.policy, "Policy file")->required();

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& ex) {
        return app.exit(ex, out, err);
    }

    try {
        if (*gen_cmd) return gen(g, out);
        if (*plan_cmd) return plan(p, out);
        if (*qlearn_cmd) return qlearn(q, out);
        if (*sweep_cmd) return run_sweep(w, out);
        if (*verify_cmd) return verify(v, out, err);
        if (*eval_cmd) return eval(e, out);
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace anchormdp::cli
