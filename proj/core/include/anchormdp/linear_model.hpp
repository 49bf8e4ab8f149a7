#pragma once

#include "anchormdp/mdp_core.hpp"

#include <Eigen/LU>

#include <cstdint>
#include <span>
#include <vector>

namespace anchormdp {

/**
 * An MDP whose kernel factors as P = features * factor, i.e.
 * P(s'|s,a) = sum_k phi_k(s,a) psi_k(s').
 *
 * `features` is (|S||A|) x K, `factor` is K x |S|. Construction checks the
 * factorization against the base kernel to 1e-10.
 */
class LinearMDP {
public:
    LinearMDP(TabularMDP base, Matrix features, Matrix factor);

    /// Builds the base kernel from the product features * factor.
    static LinearMDP from_factors(Index num_states, Index num_actions, Matrix features,
                                  Matrix factor, Vector reward, double discount);

    const TabularMDP& base() const noexcept { return base_; }
    const Matrix& features() const noexcept { return features_; }
    const Matrix& factor() const noexcept { return factor_; }
    Index feature_dim() const noexcept { return features_.cols(); }

private:
    TabularMDP base_;
    Matrix features_;
    Matrix factor_;
};

/**
 * Anchor state-action pairs together with the convex coefficients that express
 * every feature vector through them.
 *
 * Invariants (checked by build_anchor_set):
 *  - anchor_features is invertible,
 *  - every coefficient row is in the probability simplex,
 *  - coefficients * anchor_features == features (1e-8),
 *  - coefficients * P_K == P (1e-8), P_K being the anchor rows of P.
 */
struct AnchorSet {
    std::vector<Index> pairs;
    Matrix anchor_features;  // K x K
    Matrix coefficients;     // |S||A| x K

    Index size() const noexcept { return static_cast<Index>(pairs.size()); }
};

/// Solves lambda^T anchor_features = phi^T for many phi with one factorization.
class ConvexCoefficientSolver {
public:
    explicit ConvexCoefficientSolver(const Matrix& anchor_features);

    /// Throws AnchorViolation (tagged with `pair`) when lambda is not in the
    /// simplex up to 1e-9; small negative entries are clipped and the vector
    /// renormalized to sum to one.
    Vector solve(const Eigen::Ref<const Vector>& phi, Index pair = -1) const;

private:
    Matrix anchor_features_;
    Eigen::PartialPivLU<Matrix> transposed_lu_;
};

/// Throws AnchorsNotIndependent unless sigma_min > 1e-10 * sigma_max.
void require_invertible(const Matrix& anchor_features, const char* where);

Vector solve_convex_coefficients(const Vector& phi, const Matrix& anchor_features);

AnchorSet build_anchor_set(const LinearMDP& mdp, std::span<const Index> pairs);

/// Rows of `m` selected by the given flat pair indices.
Matrix select_rows(const Matrix& m, std::span<const Index> rows);

/// Tabular MDP viewed as a linear model with one-hot features.
LinearMDP tabular_embedding(const TabularMDP& mdp);

struct SimplexModel {
    LinearMDP model;
    AnchorSet anchors;
};

/**
 * Random linear model with K anchors. Anchor pairs are K distinct random
 * pairs with features e_1..e_K; every other pair gets a Dirichlet(1) feature
 * vector. Factor rows are Dirichlet(1) over S. Rewards depend on the state
 * only, r(s,a) = r(s) ~ U[0,1], so the greedy action is decided by the kernel.
 */
SimplexModel random_simplex_model(Index num_states, Index num_actions, Index feature_dim,
                                  double discount, std::uint64_t seed);

/// Largest row-wise l1 distance between two kernels.
double misspecification_distance(const Matrix& p, const Matrix& p_tilde);

/**
 * Tabular MDP within l1 distance xi_target of mdp's (linear) kernel.
 *
 * Each row is picked with probability 1/2 and has m in [xi/4, xi/2] of mass
 * moved from its largest to its second-largest entry (capped by the largest
 * entry). If no picked row reached xi/2 in l1, the row holding the smallest
 * entry is reset and 3xi/8 of mass is moved into that entry from the others,
 * largest first. Result distance lies in [xi/2, xi].
 */
TabularMDP perturb_model(const LinearMDP& mdp, double xi_target, std::uint64_t seed);

/// theta with anchor_features * theta = rewards_at_anchors.
Vector recover_reward_coefficients(const Vector& rewards_at_anchors,
                                   const Matrix& anchor_features);

struct NormalizedFeatures {
    Matrix features;      // |S||A| x K_n
    Matrix coefficients;  // |S||A| x K_n convex coefficients w.r.t. the anchors
    /// Original columns kept when the feature dimension exceeded the anchor
    /// count; empty otherwise.
    std::vector<Index> kept_columns;
};

/**
 * Re-expresses features so the feature dimension equals the number of anchors.
 *
 *  - K_d == K_n: features unchanged.
 *  - K_d >  K_n: keep the first K_n linearly independent columns, scanning in
 *    index order; dropped columns are linear combinations of the kept ones.
 *  - K_d <  K_n: anchor features are padded with unit columns until square and
 *    invertible; every other pair is re-expressed as lambda * new anchor
 *    features, lambda found by a non-negative least-squares feasibility solve.
 *
 * Throws RankDeficiency if the anchor features have rank < min(K_d, K_n).
 */
NormalizedFeatures normalize_features(const Matrix& features, std::span<const Index> anchors);

/// normalize_features plus a matching factor, so the kernel is unchanged.
LinearMDP normalize_model(const LinearMDP& mdp, std::span<const Index> anchors);

/// Row-wise maximum l1 distance ||coefficients * P_K - P||.
double anchor_reconstruction_error(const AnchorSet& anchors, const Matrix& transition);

}  // namespace anchormdp
