#include "anchormdp/linear_model.hpp"

#include "anchormdp/nnls.hpp"
#include "anchormdp/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <sstream>

namespace anchormdp {

namespace {

constexpr double kCoefficientTolerance = 1e-9;
constexpr double kReconstructionTolerance = 1e-8;
constexpr double kFactorTolerance = 1e-10;
constexpr double kRankTolerance = 1e-10;

Vector dirichlet_ones(rng::SplitMix64& gen, Index n) {
    Vector x(n);
    for (Index i = 0; i < n; ++i) x[i] = gen.exponential();
    return x / x.sum();
}

Index numeric_rank(const Matrix& m) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > kRankTolerance * sv[0]) ++rank;
    }
    return rank;
}

double max_row_l1(const Matrix& diff) {
    double worst = 0.0;
    for (Index i = 0; i < diff.rows(); ++i) worst = std::max(worst, diff.row(i).lpNorm<1>());
    return worst;
}

/// Greedily accepts candidate vectors that are independent of those accepted
/// so far (Gram-Schmidt with one re-orthogonalization pass), in order, until
/// `want` are accepted. Returns the indices of accepted candidates.
class IndependentSet {
public:
    explicit IndependentSet(Index dim) : dim_(dim) {}

    bool try_add(const Vector& candidate) {
        const double scale = candidate.norm();
        if (scale == 0.0) return false;
        Vector r = candidate;
        for (int pass = 0; pass < 2; ++pass) {
            for (const Vector& q : basis_) r -= q.dot(r) * q;
        }
        const double residual = r.norm();
        if (residual <= kRankTolerance * std::max(1.0, scale) || residual <= 1e-9 * scale)
            return false;
        basis_.push_back(r / residual);
        return true;
    }

    Index size() const noexcept { return static_cast<Index>(basis_.size()); }
    Index dim() const noexcept { return dim_; }

private:
    Index dim_;
    std::vector<Vector> basis_;
};

void check_pairs(std::span<const Index> pairs, Index num_pairs, const char* where) {
    for (Index p : pairs) {
        if (p < 0 || p >= num_pairs) {
            std::ostringstream msg;
            msg << where << ": anchor pair " << p << " out of range";
            throw PreconditionError(msg.str());
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------

LinearMDP::LinearMDP(TabularMDP base, Matrix features, Matrix factor)
    : base_(std::move(base)), features_(std::move(features)), factor_(std::move(factor)) {
    if (features_.cols() < 1) throw PreconditionError("LinearMDP: feature_dim must be >= 1");
    if (features_.rows() != base_.num_pairs())
        throw DimensionError("LinearMDP: features must have |S||A| rows");
    if (factor_.rows() != features_.cols() || factor_.cols() != base_.num_states())
        throw DimensionError("LinearMDP: factor must be K x |S|");
    const double err = (features_ * factor_ - base_.transition()).cwiseAbs().maxCoeff();
    if (!(err <= kFactorTolerance)) {
        std::ostringstream msg;
        msg << "LinearMDP: features * factor differs from the kernel by " << err;
        throw PreconditionError(msg.str());
    }
}

LinearMDP LinearMDP::from_factors(Index num_states, Index num_actions, Matrix features,
                                  Matrix factor, Vector reward, double discount) {
    if (features.cols() != factor.rows())
        throw DimensionError("LinearMDP::from_factors: inner dimensions differ");
    Matrix transition = features * factor;
    TabularMDP base(num_states, num_actions, std::move(transition), std::move(reward), discount);
    return LinearMDP(std::move(base), std::move(features), std::move(factor));
}

// ---------------------------------------------------------------------------

void require_invertible(const Matrix& anchor_features, const char* where) {
    if (anchor_features.rows() != anchor_features.cols() || anchor_features.rows() == 0) {
        std::ostringstream msg;
        msg << where << ": anchor feature matrix must be square and non-empty";
        throw AnchorsNotIndependent(msg.str());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(anchor_features);
    const auto& sv = svd.singularValues();
    const double largest = sv[0];
    const double smallest = sv[sv.size() - 1];
    if (!(largest > 0.0) || !(smallest > kRankTolerance * largest)) {
        std::ostringstream msg;
        msg << where << ": anchor features are not linearly independent (sigma_min/sigma_max = "
            << (largest > 0.0 ? smallest / largest : 0.0) << ")";
        throw AnchorsNotIndependent(msg.str());
    }
}

ConvexCoefficientSolver::ConvexCoefficientSolver(const Matrix& anchor_features)
    : anchor_features_(anchor_features) {
    require_invertible(anchor_features_, "ConvexCoefficientSolver");
    transposed_lu_.compute(anchor_features_.transpose());
}

Vector ConvexCoefficientSolver::solve(const Eigen::Ref<const Vector>& phi, Index pair) const {
    if (phi.size() != anchor_features_.cols())
        throw DimensionError("solve_convex_coefficients: feature length does not match K");
    Vector lambda = transposed_lu_.solve(phi);

    const double fit = (anchor_features_.transpose() * lambda - phi).cwiseAbs().maxCoeff();
    const double negative = std::max(0.0, -lambda.minCoeff());
    const double sum_defect = std::abs(lambda.sum() - 1.0);
    if (negative > kCoefficientTolerance || sum_defect > kCoefficientTolerance ||
        !(fit <= kReconstructionTolerance)) {
        const double worst = std::max({negative, sum_defect, fit});
        std::ostringstream msg;
        msg << "anchor assumption violated";
        if (pair >= 0) msg << " at pair " << pair;
        msg << ": worst violation " << worst << " (min coefficient " << lambda.minCoeff()
            << ", sum " << lambda.sum() << ")";
        throw AnchorViolation(msg.str(), pair, worst);
    }
    lambda = lambda.cwiseMax(0.0);
    lambda /= lambda.sum();
    return lambda;
}

Vector solve_convex_coefficients(const Vector& phi, const Matrix& anchor_features) {
    return ConvexCoefficientSolver(anchor_features).solve(phi);
}

Matrix select_rows(const Matrix& m, std::span<const Index> rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= m.rows()) throw DimensionError("select_rows: index out of range");
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    }
    return out;
}

double anchor_reconstruction_error(const AnchorSet& anchors, const Matrix& transition) {
    const Matrix anchor_rows = select_rows(transition, anchors.pairs);
    return max_row_l1(anchors.coefficients * anchor_rows - transition);
}

AnchorSet build_anchor_set(const LinearMDP& mdp, std::span<const Index> pairs) {
    const Index k = mdp.feature_dim();
    if (static_cast<Index>(pairs.size()) != k) {
        std::ostringstream msg;
        msg << "build_anchor_set: expected " << k << " anchor pairs, got " << pairs.size();
        throw PreconditionError(msg.str());
    }
    check_pairs(pairs, mdp.base().num_pairs(), "build_anchor_set");

    AnchorSet set;
    set.pairs.assign(pairs.begin(), pairs.end());
    set.anchor_features = select_rows(mdp.features(), pairs);
    const ConvexCoefficientSolver solver(set.anchor_features);

    const Index n = mdp.base().num_pairs();
    set.coefficients.resize(n, k);
    for (Index sa = 0; sa < n; ++sa) {
        set.coefficients.row(sa) = solver.solve(mdp.features().row(sa).transpose(), sa).transpose();
    }
    for (Index i = 0; i < k; ++i) {
        set.coefficients.row(set.pairs[static_cast<std::size_t>(i)]).setZero();
        set.coefficients(set.pairs[static_cast<std::size_t>(i)], i) = 1.0;
    }

    const double feature_err =
        (set.coefficients * set.anchor_features - mdp.features()).cwiseAbs().maxCoeff();
    if (!(feature_err <= kReconstructionTolerance)) {
        std::ostringstream msg;
        msg << "build_anchor_set: coefficients reproduce features only to " << feature_err;
        throw AnchorViolation(msg.str(), -1, feature_err);
    }
    const double kernel_err = anchor_reconstruction_error(set, mdp.base().transition());
    if (!(kernel_err <= kReconstructionTolerance)) {
        std::ostringstream msg;
        msg << "build_anchor_set: coefficients reproduce the kernel only to " << kernel_err;
        throw AnchorViolation(msg.str(), -1, kernel_err);
    }
    return set;
}

LinearMDP tabular_embedding(const TabularMDP& mdp) {
    const Index n = mdp.num_pairs();
    return LinearMDP(mdp, Matrix::Identity(n, n), mdp.transition());
}

SimplexModel random_simplex_model(Index num_states, Index num_actions, Index feature_dim,
                                  double discount, std::uint64_t seed) {
    const Index n = num_states * num_actions;
    if (num_states < 1 || num_actions < 1)
        throw PreconditionError("random_simplex_model: |S| and |A| must be positive");
    if (feature_dim < 1 || feature_dim > n)
        throw PreconditionError("random_simplex_model: need 1 <= K <= |S||A|");

    rng::SplitMix64 gen(seed);

    // Partial Fisher-Yates: the first K entries become the anchors, in order.
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    for (Index i = 0; i < feature_dim; ++i) {
        const auto j = static_cast<Index>(i + static_cast<Index>(gen.below(static_cast<std::uint64_t>(n - i))));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    std::vector<Index> anchors(order.begin(), order.begin() + feature_dim);

    std::vector<Index> anchor_slot(static_cast<std::size_t>(n), -1);
    for (Index i = 0; i < feature_dim; ++i) anchor_slot[static_cast<std::size_t>(anchors[static_cast<std::size_t>(i)])] = i;

    Matrix features(n, feature_dim);
    for (Index sa = 0; sa < n; ++sa) {
        const Index slot = anchor_slot[static_cast<std::size_t>(sa)];
        if (slot >= 0) {
            features.row(sa).setZero();
            features(sa, slot) = 1.0;
        } else {
            features.row(sa) = dirichlet_ones(gen, feature_dim).transpose();
        }
    }
    Matrix factor(feature_dim, num_states);
    for (Index k = 0; k < feature_dim; ++k) factor.row(k) = dirichlet_ones(gen, num_states).transpose();
    // r(s,a) = r(s): actions differ only through their transitions.
    Vector reward(n);
    for (Index s = 0; s < num_states; ++s)
        reward.segment(s * num_actions, num_actions).setConstant(gen.uniform());

    LinearMDP model = LinearMDP::from_factors(num_states, num_actions, std::move(features),
                                              std::move(factor), std::move(reward), discount);
    AnchorSet set = build_anchor_set(model, anchors);
    return SimplexModel{std::move(model), std::move(set)};
}

double misspecification_distance(const Matrix& p, const Matrix& p_tilde) {
    if (p.rows() != p_tilde.rows() || p.cols() != p_tilde.cols())
        throw DimensionError("misspecification_distance: kernels differ in shape");
    if (p.rows() == 0) return 0.0;
    return max_row_l1(p_tilde - p);
}

TabularMDP perturb_model(const LinearMDP& mdp, double xi_target, std::uint64_t seed) {
    if (!(xi_target >= 0.0 && xi_target <= 1.0))
        throw PreconditionError("perturb_model: xi_target must lie in [0,1]");
    const TabularMDP& base = mdp.base();
    if (xi_target == 0.0) return base;

    Matrix p = base.transition();
    const Index n = p.rows();
    rng::SplitMix64 gen(seed);

    struct TopTwo {
        Index first;
        Index second;
    };
    auto top_two = [&p](Index row) {
        TopTwo t{0, -1};
        for (Index j = 1; j < p.cols(); ++j) {
            if (p(row, j) > p(row, t.first)) {
                t.second = t.first;
                t.first = j;
            } else if (t.second < 0 || p(row, j) > p(row, t.second)) {
                t.second = j;
            }
        }
        return t;
    };
    auto move_mass = [&p](Index row, const TopTwo& t, double amount) {
        p(row, t.first) -= amount;
        p(row, t.second) += amount;
    };

    if (p.cols() < 2) throw PreconditionError("perturb_model: no row can be perturbed (|S| = 1)");

    double achieved = 0.0;
    for (Index row = 0; row < n; ++row) {
        const bool chosen = gen.uniform() < 0.5;
        const double fraction = gen.uniform(0.5, 1.0);
        if (!chosen) continue;
        const TopTwo t = top_two(row);
        const double amount = std::min(0.5 * xi_target * fraction, p(row, t.first));
        move_mass(row, t, amount);
        achieved = std::max(achieved, 2.0 * amount);
    }
    if (achieved < 0.5 * xi_target) {
        // Restore the row with the smallest entry and move 3/8 xi of mass into that entry.
        Index best_row = 0;
        Index sink = 0;
        for (Index row = 0; row < n; ++row) {
            Index j;
            const double low = base.transition().row(row).minCoeff(&j);
            if (low < base.transition()(best_row, sink)) {
                best_row = row;
                sink = j;
            }
        }
        p.row(best_row) = base.transition().row(best_row);
        double remaining = 0.375 * xi_target;
        if (1.0 - p(best_row, sink) < remaining)
            throw PreconditionError("perturb_model: target xi is infeasible for every row");
        std::vector<Index> order;
        for (Index j = 0; j < p.cols(); ++j)
            if (j != sink) order.push_back(j);
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return p(best_row, a) > p(best_row, b); });
        for (Index j : order) {
            if (remaining <= 0.0) break;
            const double take = std::min(remaining, p(best_row, j));
            p(best_row, j) -= take;
            p(best_row, sink) += take;
            remaining -= take;
        }
    }
    return TabularMDP(base.num_states(), base.num_actions(), std::move(p), base.reward(),
                      base.discount());
}

Vector recover_reward_coefficients(const Vector& rewards_at_anchors,
                                   const Matrix& anchor_features) {
    if (rewards_at_anchors.size() != anchor_features.rows())
        throw DimensionError("recover_reward_coefficients: reward length does not match K");
    require_invertible(anchor_features, "recover_reward_coefficients");
    const Vector theta = anchor_features.partialPivLu().solve(rewards_at_anchors);
    const double residual = (anchor_features * theta - rewards_at_anchors).cwiseAbs().maxCoeff();
    if (!(residual <= 1e-10)) {
        std::ostringstream msg;
        msg << "recover_reward_coefficients: residual " << residual << " exceeds 1e-10";
        throw InternalError(msg.str());
    }
    return theta;
}

// ---------------------------------------------------------------------------

NormalizedFeatures normalize_features(const Matrix& features, std::span<const Index> anchors) {
    const Index n = features.rows();
    const Index dim = features.cols();
    const auto count = static_cast<Index>(anchors.size());
    if (count < 1) throw PreconditionError("normalize_features: need at least one anchor");
    check_pairs(anchors, n, "normalize_features");

    const Matrix anchor_features = select_rows(features, anchors);
    const Index rank = numeric_rank(anchor_features);
    if (rank < std::min(dim, count)) {
        std::ostringstream msg;
        msg << "normalize_features: anchor features have rank " << rank << " < min(K_d=" << dim
            << ", K_n=" << count << "); drop redundant anchors first";
        throw RankDeficiency(msg.str());
    }

    NormalizedFeatures out;
    if (dim >= count) {
        // Keep the first `count` independent feature coordinates.
        IndependentSet kept(count);
        for (Index j = 0; j < dim && kept.size() < count; ++j) {
            if (kept.try_add(anchor_features.col(j))) out.kept_columns.push_back(j);
        }
        if (kept.size() < count) throw RankDeficiency("normalize_features: column selection failed");
        out.features.resize(n, count);
        for (Index k = 0; k < count; ++k) out.features.col(k) = features.col(out.kept_columns[static_cast<std::size_t>(k)]);

        const Matrix new_anchor_features = select_rows(out.features, anchors);
        const ConvexCoefficientSolver solver(new_anchor_features);
        out.coefficients.resize(n, count);
        for (Index sa = 0; sa < n; ++sa)
            out.coefficients.row(sa) = solver.solve(out.features.row(sa).transpose(), sa).transpose();

        const double err = (out.coefficients * anchor_features - features).cwiseAbs().maxCoeff();
        if (!(err <= kReconstructionTolerance)) {
            std::ostringstream msg;
            msg << "normalize_features: dropped coordinates are not spanned by the anchors (error "
                << err << ")";
            throw AnchorViolation(msg.str(), -1, err);
        }
        if (dim == count) out.kept_columns.clear();
    } else {
        // Convex coefficients from a feasibility NNLS: [Phi_K^T; 1^T] lambda = [phi; 1].
        Matrix system(dim + 1, count);
        system.topRows(dim) = anchor_features.transpose();
        system.row(dim).setOnes();
        std::vector<Index> slot(static_cast<std::size_t>(n), -1);
        for (Index i = 0; i < count; ++i) slot[static_cast<std::size_t>(anchors[static_cast<std::size_t>(i)])] = i;

        out.coefficients = Matrix::Zero(n, count);
        Vector rhs(dim + 1);
        rhs[dim] = 1.0;
        for (Index sa = 0; sa < n; ++sa) {
            if (slot[static_cast<std::size_t>(sa)] >= 0) {
                out.coefficients(sa, slot[static_cast<std::size_t>(sa)]) = 1.0;
                continue;
            }
            rhs.head(dim) = features.row(sa).transpose();
            Vector lambda = nnls(system, rhs);
            const double residual = (system * lambda - rhs).cwiseAbs().maxCoeff();
            if (!(residual <= kCoefficientTolerance)) {
                std::ostringstream msg;
                msg << "anchor assumption violated at pair " << sa
                    << ": no convex combination of anchors within " << residual;
                throw AnchorViolation(msg.str(), sa, residual);
            }
            out.coefficients.row(sa) = (lambda / lambda.sum()).transpose();
        }

        // Pad the anchor feature matrix with unit columns up to full rank.
        Matrix padded(count, count);
        padded.leftCols(dim) = anchor_features;
        IndependentSet span(count);
        for (Index j = 0; j < dim; ++j) span.try_add(anchor_features.col(j));
        Index next = dim;
        for (Index e = 0; e < count && next < count; ++e) {
            const Vector unit = Vector::Unit(count, e);
            if (span.try_add(unit)) padded.col(next++) = unit;
        }
        if (next < count) throw RankDeficiency("normalize_features: could not complete anchor basis");
        out.features = out.coefficients * padded;
        for (Index i = 0; i < count; ++i) out.features.row(anchors[static_cast<std::size_t>(i)]) = padded.row(i);
    }
    return out;
}

LinearMDP normalize_model(const LinearMDP& mdp, std::span<const Index> anchors) {
    NormalizedFeatures nf = normalize_features(mdp.features(), anchors);
    const Index dim = mdp.feature_dim();
    const auto count = static_cast<Index>(anchors.size());
    if (dim == count) return mdp;

    Matrix factor;
    if (dim > count) {
        // psi'_k = psi_k + sum_d c_{k,d} psi_d over dropped coordinates d.
        std::vector<bool> is_kept(static_cast<std::size_t>(dim), false);
        for (Index k : nf.kept_columns) is_kept[static_cast<std::size_t>(k)] = true;
        std::vector<Index> dropped;
        for (Index j = 0; j < dim; ++j) {
            if (!is_kept[static_cast<std::size_t>(j)]) dropped.push_back(j);
        }
        const Matrix anchor_features = select_rows(mdp.features(), anchors);
        Matrix kept_block(count, count);
        Matrix dropped_block(count, static_cast<Index>(dropped.size()));
        for (Index k = 0; k < count; ++k) kept_block.col(k) = anchor_features.col(nf.kept_columns[static_cast<std::size_t>(k)]);
        for (std::size_t d = 0; d < dropped.size(); ++d) dropped_block.col(static_cast<Index>(d)) = anchor_features.col(dropped[d]);
        const Matrix combination = kept_block.partialPivLu().solve(dropped_block);

        factor.resize(count, mdp.base().num_states());
        for (Index k = 0; k < count; ++k) factor.row(k) = mdp.factor().row(nf.kept_columns[static_cast<std::size_t>(k)]);
        for (std::size_t d = 0; d < dropped.size(); ++d)
            factor += combination.col(static_cast<Index>(d)) * mdp.factor().row(dropped[d]);
    } else {
        const Matrix new_anchor_features = select_rows(nf.features, anchors);
        const Matrix anchor_rows = select_rows(mdp.base().transition(), anchors);
        factor = new_anchor_features.partialPivLu().solve(anchor_rows);
    }
    return LinearMDP(mdp.base(), std::move(nf.features), std::move(factor));
}

}  // namespace anchormdp
