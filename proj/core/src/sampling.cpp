#include "anchormdp/sampling.hpp"

#include "anchormdp/rng.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <thread>

namespace anchormdp {

CategoricalSampler::CategoricalSampler(const Eigen::Ref<const Vector>& probabilities) {
    const Index n = probabilities.size();
    if (n == 0) throw PreconditionError("CategoricalSampler: empty distribution");
    cumulative_.resize(static_cast<std::size_t>(n));
    double acc = 0.0;
    Index last_positive = -1;
    for (Index i = 0; i < n; ++i) {
        if (probabilities[i] > 0.0) last_positive = i;
        acc += probabilities[i];
        cumulative_[static_cast<std::size_t>(i)] = acc;
    }
    if (last_positive < 0) throw PreconditionError("CategoricalSampler: distribution has no mass");
    // Everything from the last supported outcome on is pinned to exactly 1, so
    // u in [0,1) can never land past it.
    std::fill(cumulative_.begin() + last_positive, cumulative_.end(), 1.0);
}

Index CategoricalSampler::draw(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<Index>(it - cumulative_.begin());
}

std::vector<CategoricalSampler> anchor_samplers(const TabularMDP& mdp, const AnchorSet& anchors) {
    std::vector<CategoricalSampler> samplers;
    samplers.reserve(anchors.pairs.size());
    for (Index pair : anchors.pairs) {
        if (pair < 0 || pair >= mdp.num_pairs())
            throw PreconditionError("anchor pair out of range for this MDP");
        samplers.emplace_back(mdp.transition().row(pair).transpose());
    }
    return samplers;
}

SampleBatch sample_anchor_transitions(const TabularMDP& mdp, const AnchorSet& anchors,
                                      std::int64_t per_anchor, std::uint64_t seed,
                                      unsigned workers) {
    if (per_anchor < 1) throw PreconditionError("sample_anchor_transitions: N must be positive");
    const auto samplers = anchor_samplers(mdp, anchors);
    const Index k = anchors.size();

    SampleBatch batch{CountMatrix::Zero(k, mdp.num_states()), per_anchor, seed};
    auto fill_anchor = [&](Index i) {
        const auto& sampler = samplers[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < per_anchor; ++j) {
            const double u = rng::to_unit(rng::derive(seed, static_cast<std::uint64_t>(i),
                                                      static_cast<std::uint64_t>(j)));
            ++batch.counts(i, sampler.draw(u));
        }
    };

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(k)));
    if (workers == 1) {
        for (Index i = 0; i < k; ++i) fill_anchor(i);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (Index i = w; i < k; i += workers) fill_anchor(i);
            });
        }
    }
    return batch;
}

EmpiricalKernel empirical_kernel(const SampleBatch& batch, const AnchorSet& anchors) {
    if (batch.counts.rows() != anchors.size())
        throw DimensionError("empirical_kernel: batch has a different number of anchors");
    if (batch.per_anchor < 1) throw CorruptedBatch("empirical_kernel: N must be positive");
    EmpiricalKernel kernel{Matrix(batch.counts.rows(), batch.counts.cols()), std::nullopt};
    const auto n = static_cast<double>(batch.per_anchor);
    for (Index i = 0; i < batch.counts.rows(); ++i) {
        std::int64_t total = 0;
        for (Index j = 0; j < batch.counts.cols(); ++j) {
            const std::int64_t c = batch.counts(i, j);
            if (c < 0) throw CorruptedBatch("empirical_kernel: negative count");
            total += c;
            kernel.anchor_rows(i, j) = static_cast<double>(c) / n;
        }
        if (total != batch.per_anchor) {
            std::ostringstream msg;
            msg << "empirical_kernel: anchor " << i << " has " << total << " samples, expected "
                << batch.per_anchor;
            throw CorruptedBatch(msg.str());
        }
    }
    return kernel;
}

Matrix full_kernel(const EmpiricalKernel& kernel, const AnchorSet& anchors) {
    if (kernel.anchor_rows.rows() != anchors.size())
        throw DimensionError("full_kernel: anchor count mismatch");
    return anchors.coefficients * kernel.anchor_rows;
}

void draw_one_hot_successors(const std::vector<CategoricalSampler>& samplers,
                             std::uint64_t seed_t, std::vector<Index>& successors) {
    successors.resize(samplers.size());
    for (std::size_t i = 0; i < samplers.size(); ++i) {
        successors[i] = samplers[i].draw(rng::to_unit(rng::derive(seed_t, i)));
    }
}

EmpiricalKernel one_hot_batch(const TabularMDP& mdp, const AnchorSet& anchors,
                              std::uint64_t seed_t) {
    const auto samplers = anchor_samplers(mdp, anchors);
    std::vector<Index> successors;
    draw_one_hot_successors(samplers, seed_t, successors);
    EmpiricalKernel kernel{Matrix::Zero(anchors.size(), mdp.num_states()), std::nullopt};
    for (std::size_t i = 0; i < successors.size(); ++i)
        kernel.anchor_rows(static_cast<Index>(i), successors[i]) = 1.0;
    kernel.successors = std::move(successors);
    return kernel;
}

void write_batch_csv(std::ostream& out, const SampleBatch& batch) {
    out << "anchor_index,state,count\n";
    for (Index i = 0; i < batch.counts.rows(); ++i)
        for (Index j = 0; j < batch.counts.cols(); ++j)
            if (batch.counts(i, j) != 0) out << i << ',' << j << ',' << batch.counts(i, j) << '\n';
}

}  // namespace anchormdp
