#include "anchormdp/harness.hpp"

#include "anchormdp/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <mutex>
#include <thread>

namespace anchormdp {

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw FormatError("config: invalid value '" + text + "' for key '" + key + "'");
    return value;
}

std::string format_real(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

// Perturbation stream of a model seed.
constexpr std::uint64_t kPerturbStream = 0x70657274ULL;

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
    if (name == "model_based") return Algorithm::model_based;
    if (name == "q_learning") return Algorithm::q_learning;
    throw PreconditionError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(Algorithm algo) {
    return algo == Algorithm::q_learning ? "q_learning" : "model_based";
}

void validate_config(const ExperimentConfig& c) {
    auto fail = [](const std::string& what) { throw PreconditionError("config: " + what); };
    if (c.states < 1) fail("states must be positive");
    if (c.actions < 1) fail("actions must be positive");
    if (c.feature_dim < 1 || c.feature_dim > c.states * c.actions)
        fail("feature_dim must lie in [1, states*actions]");
    if (!(c.gamma > 0.0 && c.gamma < 1.0)) fail("gamma must lie in (0,1)");
    if (!(c.xi >= 0.0 && c.xi <= 1.0)) fail("xi must lie in [0,1]");
    if (c.grid.empty()) fail("grid must not be empty");
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        if (c.grid[i] < 1) fail("grid values must be positive");
        if (i > 0 && c.grid[i] <= c.grid[i - 1]) fail("grid values must be strictly increasing");
    }
    if (c.algorithm == Algorithm::q_learning && c.grid.front() < 2)
        fail("q_learning grid values (T) must be >= 2");
    if (c.trials < 1) fail("trials must be >= 1");
    if (!(c.eps_opt > 0.0)) fail("eps_opt must be positive");
    if (!(c.c1 > 0.0 && c.c2 > 0.0 && c.c1 >= c.c2)) fail("need c1 >= c2 > 0");
    if (c.workers < 1) fail("workers must be >= 1");
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << "config line " << line_no << ": expected 'key = value'";
            throw FormatError(msg.str());
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));

        if (key == "states") c.states = parse_number<Index>(value, key);
        else if (key == "actions") c.actions = parse_number<Index>(value, key);
        else if (key == "feature_dim") c.feature_dim = parse_number<Index>(value, key);
        else if (key == "gamma") c.gamma = parse_number<double>(value, key);
        else if (key == "model_seed") c.model_seed = parse_number<std::uint64_t>(value, key);
        else if (key == "xi") c.xi = parse_number<double>(value, key);
        else if (key == "algorithm") c.algorithm = parse_algorithm(value);
        else if (key == "grid") {
            c.grid.clear();
            std::stringstream items(value);
            std::string item;
            while (std::getline(items, item, ','))
                c.grid.push_back(parse_number<std::int64_t>(trim(item), key));
        } else if (key == "trials") c.trials = parse_number<int>(value, key);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, key);
        else if (key == "eps_opt") c.eps_opt = parse_number<double>(value, key);
        else if (key == "schedule") c.schedule = parse_schedule_kind(value);
        else if (key == "c1") c.c1 = parse_number<double>(value, key);
        else if (key == "c2") c.c2 = parse_number<double>(value, key);
        else if (key == "output") c.output = value;
        else if (key == "workers") c.workers = parse_number<unsigned>(value, key);
        else {
            std::ostringstream msg;
            msg << "config line " << line_no << ": unknown key '" << key << "'";
            throw FormatError(msg.str());
        }
    }
    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file '" + path + "'");
    return parse_config(in);
}

Experiment prepare_experiment(const ExperimentConfig& config) {
    validate_config(config);
    SimplexModel simplex = random_simplex_model(config.states, config.actions,
                                                config.feature_dim, config.gamma,
                                                config.model_seed);
    TabularMDP true_mdp =
        config.xi > 0.0
            ? perturb_model(simplex.model, config.xi, rng::derive(config.model_seed, kPerturbStream))
            : simplex.model.base();
    QFunction q_star = optimal_q(true_mdp, 1e-10);
    return Experiment{std::move(simplex), std::move(true_mdp), std::move(q_star)};
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
    return rng::derive(base_seed, static_cast<std::uint64_t>(trial));
}

RunRecord run_cell(const Experiment& experiment, const ExperimentConfig& config,
                   std::int64_t param, int trial) {
    RunRecord record;
    record.algo = config.algorithm;
    record.states = config.states;
    record.actions = config.actions;
    record.feature_dim = config.feature_dim;
    record.gamma = config.gamma;
    record.xi = config.xi;
    record.param = param;
    record.seed = trial_seed(config.seed, trial);

    const auto start = std::chrono::steady_clock::now();
    const TabularMDP& mdp = experiment.true_mdp;
    const AnchorSet& anchors = experiment.simplex.anchors;
    if (config.algorithm == Algorithm::model_based) {
        const ModelBasedResult result =
            run_model_based(mdp, anchors, param, config.eps_opt, record.seed);
        record.error = evaluate_policy_error(mdp, result.policy, experiment.q_star);
        record.samples = result.sample_count;
    } else {
        const LearningRateSchedule schedule{config.schedule, config.c1, config.c2, param,
                                            config.gamma};
        const QLearningResult result =
            run_q_learning(mdp, anchors, param, schedule,
                           QFunction(mdp.num_states(), mdp.num_actions()), record.seed);
        record.error = sup_distance(result.q_final.values(), experiment.q_star.values());
        record.samples = param * anchors.size();
    }
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return record;
}

std::vector<RunRecord> sweep(const Experiment& experiment, const ExperimentConfig& config) {
    validate_config(config);
    struct Cell {
        std::int64_t param;
        int trial;
    };
    std::vector<Cell> cells;
    for (std::int64_t param : config.grid)
        for (int trial = 0; trial < config.trials; ++trial) cells.push_back({param, trial});

    std::vector<RunRecord> records(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                records[i] = run_cell(experiment, config, cells[i].param, cells[i].trial);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned workers = std::min<unsigned>(config.workers, static_cast<unsigned>(cells.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        return a.param != b.param ? a.param < b.param : a.seed < b.seed;
    });

    if (!config.output.empty()) {
        std::ofstream out(config.output);
        if (!out) throw PreconditionError("sweep: cannot write output '" + config.output + "'");
        write_records_csv(out, records);
        if (!out) throw PreconditionError("sweep: error while writing '" + config.output + "'");
    }
    return records;
}

std::vector<RunRecord> sweep(const ExperimentConfig& config) {
    return sweep(prepare_experiment(config), config);
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << kCsvHeader << '\n';
    for (const RunRecord& r : records) {
        out << to_string(r.algo) << ',' << r.states << ',' << r.actions << ',' << r.feature_dim
            << ',' << format_real(r.gamma) << ',' << format_real(r.xi) << ',' << r.param << ','
            << r.seed << ',' << format_real(r.error) << ',' << r.samples << ','
            << format_real(std::round(r.wall_ms * 1000.0) / 1000.0) << '\n';
    }
}

std::vector<RunRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCsvHeader)
        throw FormatError("records CSV: missing or unexpected header");
    std::vector<RunRecord> records;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(trim(field));
        if (fields.size() != 11) throw FormatError("records CSV: expected 11 fields");
        RunRecord r;
        r.algo = parse_algorithm(fields[0]);
        r.states = parse_number<Index>(fields[1], "S");
        r.actions = parse_number<Index>(fields[2], "A");
        r.feature_dim = parse_number<Index>(fields[3], "K");
        r.gamma = parse_number<double>(fields[4], "gamma");
        r.xi = parse_number<double>(fields[5], "xi");
        r.param = parse_number<std::int64_t>(fields[6], "param");
        r.seed = parse_number<std::uint64_t>(fields[7], "seed");
        r.error = parse_number<double>(fields[8], "error");
        r.samples = parse_number<std::int64_t>(fields[9], "samples");
        r.wall_ms = parse_number<double>(fields[10], "wall_ms");
        records.push_back(r);
    }
    return records;
}

double median(std::vector<double> values) {
    if (values.empty()) throw PreconditionError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<std::pair<std::int64_t, double>> aggregate_errors(const std::vector<RunRecord>& records,
                                                              Aggregate) {
    std::map<std::int64_t, std::vector<double>> groups;
    for (const RunRecord& r : records) groups[r.param].push_back(r.error);
    std::vector<std::pair<std::int64_t, double>> out;
    for (auto& [param, errors] : groups) out.emplace_back(param, median(std::move(errors)));
    return out;
}

double fit_loglog_slope(const std::vector<RunRecord>& records, Aggregate aggregate) {
    const auto points = aggregate_errors(records, aggregate);
    if (points.size() < 3)
        throw PreconditionError("fit_loglog_slope: need at least three distinct grid values");
    double mean_x = 0.0;
    double mean_y = 0.0;
    std::vector<std::pair<double, double>> logs;
    for (const auto& [param, err] : points) {
        if (!(param > 0 && err > 0.0)) {
            std::ostringstream msg;
            msg << "fit_loglog_slope: non-positive aggregate error " << err << " at param "
                << param;
            throw PreconditionError(msg.str());
        }
        logs.emplace_back(std::log(static_cast<double>(param)), std::log(err));
        mean_x += logs.back().first;
        mean_y += logs.back().second;
    }
    mean_x /= static_cast<double>(logs.size());
    mean_y /= static_cast<double>(logs.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [x, y] : logs) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    return sxy / sxx;
}

}  // namespace anchormdp
