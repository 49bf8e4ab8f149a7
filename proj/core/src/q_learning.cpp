#include "anchormdp/q_learning.hpp"

#include "anchormdp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace anchormdp {

namespace {

double log_squared(std::int64_t horizon) {
    const double l = std::log(static_cast<double>(horizon));
    return l * l;
}

void check_schedule(const LearningRateSchedule& schedule) {
    if (schedule.horizon < 2) throw PreconditionError("learning_rate: horizon T must be >= 2");
    if (!(schedule.discount > 0.0 && schedule.discount < 1.0))
        throw PreconditionError("learning_rate: discount must lie in (0,1)");
    if (!(schedule.c1 > 0.0 && schedule.c2 > 0.0))
        throw PreconditionError("learning_rate: c1 and c2 must be positive");
}

// Q_K(i) = max_a' Q(successor_i, a'); out = r + gamma * Lambda Q_K.
void anchored_target(const QFunction& q, const std::vector<Index>& successors,
                     const AnchorSet& anchors, const Vector& reward, double discount,
                     Vector& anchor_values, Vector& out) {
    const Index k = anchors.size();
    anchor_values.resize(k);
    for (Index i = 0; i < k; ++i) {
        const Index next = successors[static_cast<std::size_t>(i)];
        double best = q(next, 0);
        for (Index a = 1; a < q.num_actions(); ++a) best = std::max(best, q(next, a));
        anchor_values[i] = best;
    }
    apply_rows(anchors.coefficients, anchor_values, out);
    out = reward + discount * out;
}

}  // namespace

ScheduleKind parse_schedule_kind(std::string_view name) {
    if (name == "rescaled" || name == "linearly_rescaled") return ScheduleKind::linearly_rescaled;
    if (name == "constant") return ScheduleKind::constant;
    throw PreconditionError("unknown learning-rate schedule '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleKind kind) {
    return kind == ScheduleKind::constant ? "constant" : "rescaled";
}

double learning_rate(std::int64_t t, const LearningRateSchedule& schedule) {
    check_schedule(schedule);
    if (t < 1 || t > schedule.horizon)
        throw PreconditionError("learning_rate: iteration must satisfy 1 <= t <= T");
    const double scale = (1.0 - schedule.discount) / log_squared(schedule.horizon);
    if (schedule.kind == ScheduleKind::constant)
        return 1.0 / (1.0 + schedule.c1 * scale * static_cast<double>(schedule.horizon));
    return 1.0 / (1.0 + schedule.c2 * scale * static_cast<double>(t));
}

StepSizeBounds step_size_bounds(std::int64_t t, const LearningRateSchedule& schedule) {
    check_schedule(schedule);
    const double scale = (1.0 - schedule.discount) / log_squared(schedule.horizon);
    return StepSizeBounds{
        1.0 / (1.0 + schedule.c1 * scale * static_cast<double>(schedule.horizon)),
        1.0 / (1.0 + schedule.c2 * scale * static_cast<double>(t)),
    };
}

std::vector<std::int64_t> default_checkpoints(std::int64_t horizon) {
    std::vector<std::int64_t> points;
    for (std::int64_t p = 1; p < horizon; p *= 2) points.push_back(p);
    points.push_back(horizon);
    return points;
}

std::uint64_t iteration_seed(std::uint64_t seed, std::int64_t t) {
    return rng::derive(seed, static_cast<std::uint64_t>(t));
}

QFunction empirical_bellman_apply(const QFunction& q, const EmpiricalKernel& one_hot,
                                  const AnchorSet& anchors, const Vector& reward,
                                  double discount) {
    const Index k = anchors.size();
    if (one_hot.anchor_rows.rows() != k || one_hot.anchor_rows.cols() != q.num_states())
        throw DimensionError("empirical_bellman_apply: kernel must be K x |S|");
    if (reward.size() != q.values().size() || anchors.coefficients.rows() != reward.size())
        throw DimensionError("empirical_bellman_apply: reward/coefficients do not match Q");

    std::vector<Index> successors(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
        Index hit = -1;
        for (Index j = 0; j < one_hot.anchor_rows.cols(); ++j) {
            const double x = one_hot.anchor_rows(i, j);
            if (x == 1.0 && hit < 0) {
                hit = j;
            } else if (x != 0.0) {
                hit = -2;
                break;
            }
        }
        if (hit < 0) {
            std::ostringstream msg;
            msg << "empirical_bellman_apply: anchor row " << i << " is not one-hot";
            throw PreconditionError(msg.str());
        }
        successors[static_cast<std::size_t>(i)] = hit;
    }
    Vector anchor_values;
    Vector out;
    anchored_target(q, successors, anchors, reward, discount, anchor_values, out);
    return QFunction(q.num_states(), q.num_actions(), std::move(out));
}

QLearningResult run_q_learning(const TabularMDP& mdp, const AnchorSet& anchors,
                               std::int64_t horizon, const LearningRateSchedule& schedule,
                               const QFunction& q0, std::uint64_t seed,
                               const QLearningOptions& options) {
    if (horizon < 2) throw PreconditionError("run_q_learning: T must be >= 2");
    if (schedule.horizon != horizon)
        throw PreconditionError("run_q_learning: schedule horizon differs from T");
    if (schedule.discount != mdp.discount())
        throw PreconditionError("run_q_learning: schedule discount differs from the MDP's");
    if (schedule.c1 < schedule.c2)
        throw PreconditionError("run_q_learning: step-size constants must satisfy c1 >= c2");
    if (q0.num_states() != mdp.num_states() || q0.num_actions() != mdp.num_actions())
        throw DimensionError("run_q_learning: q0 shape does not match the MDP");
    const double ceiling = mdp.value_scale();
    if (q0.values().size() > 0 &&
        !(q0.values().minCoeff() >= 0.0 && q0.values().maxCoeff() <= ceiling))
        throw PreconditionError("run_q_learning: q0 must lie in [0, 1/(1-gamma)]");
    if (options.oracle_q_star && options.oracle_q_star->values().size() != mdp.num_pairs())
        throw DimensionError("run_q_learning: oracle Q* has the wrong shape");

    std::vector<std::int64_t> checkpoints =
        options.checkpoints.empty() ? default_checkpoints(horizon) : options.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());
    std::size_t next_checkpoint = 0;

    const auto samplers = anchor_samplers(mdp, anchors);
    QLearningResult result{q0, {}, {}};
    Vector& q = result.q_final.values();
    std::vector<Index> successors;
    Vector anchor_values;
    Vector target;

    for (std::int64_t t = 1; t <= horizon; ++t) {
        draw_one_hot_successors(samplers, iteration_seed(seed, t), successors);
        anchored_target(result.q_final, successors, anchors, mdp.reward(), mdp.discount(),
                        anchor_values, target);
        const double eta = learning_rate(t, schedule);
        for (Index i = 0; i < q.size(); ++i) {
            // A convex combination of values in [0, 1/(1-gamma)]; clamp round-off.
            q[i] = std::clamp((1.0 - eta) * q[i] + eta * target[i], 0.0, ceiling);
        }
        if (options.oracle_q_star) {
            while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] < t)
                ++next_checkpoint;
            if (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == t) {
                result.error_trace.push_back(
                    {t, sup_distance(q, options.oracle_q_star->values())});
                ++next_checkpoint;
            }
        }
    }
    result.policy = greedy_policy(result.q_final);
    return result;
}

}  // namespace anchormdp
