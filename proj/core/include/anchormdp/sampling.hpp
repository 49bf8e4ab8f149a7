#pragma once

#include "anchormdp/linear_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>

namespace anchormdp {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Next-state counts from N generative-model draws at each anchor.
struct SampleBatch {
    CountMatrix counts;  // K x |S|
    std::int64_t per_anchor = 0;
    std::uint64_t seed = 0;
};

/**
 * Plug-in kernel estimate at the anchors. The full kernel is
 * coefficients * anchor_rows and is only materialized on request.
 *
 * `successors` is filled for one-hot kernels (one draw per anchor).
 */
struct EmpiricalKernel {
    Matrix anchor_rows;  // K x |S|
    std::optional<std::vector<Index>> successors;
};

/// Inverse-CDF sampler over one probability row.
class CategoricalSampler {
public:
    explicit CategoricalSampler(const Eigen::Ref<const Vector>& probabilities);
    /// Maps u in [0,1) to an outcome; zero-probability outcomes are never returned.
    Index draw(double u) const;

private:
    std::vector<double> cumulative_;
};

/// One sampler per anchor row of mdp.
std::vector<CategoricalSampler> anchor_samplers(const TabularMDP& mdp, const AnchorSet& anchors);

/// Draw j at anchor i uses the uniform to_unit(derive(seed, i, j)).
SampleBatch sample_anchor_transitions(const TabularMDP& mdp, const AnchorSet& anchors,
                                      std::int64_t per_anchor, std::uint64_t seed,
                                      unsigned workers = 1);

/// anchor_rows = counts / N. Throws CorruptedBatch if a row does not sum to N.
EmpiricalKernel empirical_kernel(const SampleBatch& batch, const AnchorSet& anchors);

/// Materialized coefficients * anchor_rows.
Matrix full_kernel(const EmpiricalKernel& kernel, const AnchorSet& anchors);

/// One draw per anchor; anchor i uses to_unit(derive(seed_t, i)).
EmpiricalKernel one_hot_batch(const TabularMDP& mdp, const AnchorSet& anchors,
                              std::uint64_t seed_t);
void draw_one_hot_successors(const std::vector<CategoricalSampler>& samplers,
                             std::uint64_t seed_t, std::vector<Index>& successors);

/// Audit CSV: header "anchor_index,state,count", non-zero counts only.
void write_batch_csv(std::ostream& out, const SampleBatch& batch);

}  // namespace anchormdp
