#pragma once

#include "anchormdp/sampling.hpp"

#include <optional>
#include <string_view>

namespace anchormdp {

enum class ScheduleKind { linearly_rescaled, constant };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view to_string(ScheduleKind kind);

/**
 * Step sizes for anchor-sampled Q-learning, with L = ln(T)^2:
 *   linearly_rescaled: eta_t = 1 / (1 + c2 (1-gamma) t / L)
 *   constant:          eta_t = 1 / (1 + c1 (1-gamma) T / L)
 * Both satisfy 1/(1 + c1(1-gamma)T/L) <= eta_t <= 1/(1 + c2(1-gamma)t/L)
 * whenever c1 >= c2.
 */
struct LearningRateSchedule {
    ScheduleKind kind = ScheduleKind::linearly_rescaled;
    double c1 = 1.0;
    double c2 = 1.0;
    std::int64_t horizon = 2;
    double discount = 0.9;
};

double learning_rate(std::int64_t t, const LearningRateSchedule& schedule);

/// Lower and upper step-size envelope at iteration t.
struct StepSizeBounds {
    double lower;
    double upper;
};
StepSizeBounds step_size_bounds(std::int64_t t, const LearningRateSchedule& schedule);

struct ErrorCheckpoint {
    std::int64_t t;
    double sup_error;
};

struct QLearningResult {
    QFunction q_final;
    Policy policy;
    std::vector<ErrorCheckpoint> error_trace;
};

/// Powers of two below T, then T.
std::vector<std::int64_t> default_checkpoints(std::int64_t horizon);

/**
 * One-sample empirical Bellman operator:
 *   T_K(Q)(s,a) = r(s,a) + gamma * lambda(s,a) . Q_K,
 *   Q_K(i) = max_a' Q(s_i', a'), s_i' the sampled successor of anchor i.
 * Throws PreconditionError if `one_hot` is not one-hot per anchor row.
 */
QFunction empirical_bellman_apply(const QFunction& q, const EmpiricalKernel& one_hot,
                                  const AnchorSet& anchors, const Vector& reward,
                                  double discount);

/// Seed of the one-hot batch used at iteration t.
std::uint64_t iteration_seed(std::uint64_t seed, std::int64_t t);

struct QLearningOptions {
    /// When set, sup-norm errors against it are recorded at `checkpoints`.
    std::optional<QFunction> oracle_q_star;
    /// Defaults to default_checkpoints(T) when empty.
    std::vector<std::int64_t> checkpoints;
};

/**
 * Q_t = (1 - eta_t) Q_{t-1} + eta_t T_K^(t)(Q_{t-1}) for t = 1..T, drawing one
 * fresh successor per anchor each iteration from one_hot_batch(iteration_seed(seed, t)).
 * Requires 0 <= q0 <= 1/(1-gamma), T >= 2 and c1 >= c2 > 0.
 */
QLearningResult run_q_learning(const TabularMDP& mdp, const AnchorSet& anchors,
                               std::int64_t horizon, const LearningRateSchedule& schedule,
                               const QFunction& q0, std::uint64_t seed,
                               const QLearningOptions& options = {});

}  // namespace anchormdp
