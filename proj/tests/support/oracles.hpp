#pragma once

// Brute-force reference computations for the test suites. Nothing here calls
// into the library's algorithms; only plain containers and the documented
// random stream (rng::derive / rng::to_unit) are shared.

#include "anchormdp/mdp_core.hpp"
#include "anchormdp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using anchormdp::Index;
using anchormdp::Matrix;
using anchormdp::Vector;

inline double v_max(const Vector& q, Index s, Index num_actions) {
    double best = q[s * num_actions];
    for (Index a = 1; a < num_actions; ++a) best = std::max(best, q[s * num_actions + a]);
    return best;
}

// T(Q)(s,a) = r(s,a) + gamma * sum_{s'} P(s'|s,a) max_a' Q(s',a'), summed in a double loop.
inline Vector bellman(const Matrix& p, const Vector& r, double gamma, Index num_states,
                      Index num_actions, const Vector& q) {
    Vector out(num_states * num_actions);
    for (Index s = 0; s < num_states; ++s) {
        for (Index a = 0; a < num_actions; ++a) {
            const Index sa = s * num_actions + a;
            double sum = 0.0;
            for (Index next = 0; next < num_states; ++next)
                sum += p(sa, next) * v_max(q, next, num_actions);
            out[sa] = r[sa] + gamma * sum;
        }
    }
    return out;
}

// Q <- r + gamma P^pi Q, repeated.
inline Vector policy_q_by_iteration(const Matrix& p, const Vector& r, double gamma,
                                    Index num_states, Index num_actions,
                                    const std::vector<Index>& pi, int iterations) {
    Vector q = Vector::Zero(num_states * num_actions);
    for (int it = 0; it < iterations; ++it) {
        Vector next(q.size());
        for (Index sa = 0; sa < q.size(); ++sa) {
            double sum = 0.0;
            for (Index s2 = 0; s2 < num_states; ++s2)
                sum += p(sa, s2) * q[s2 * num_actions + pi[static_cast<std::size_t>(s2)]];
            next[sa] = r[sa] + gamma * sum;
        }
        q = next;
    }
    return q;
}

inline double mean(const std::vector<double>& p, const std::vector<double>& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) m += p[i] * v[i];
    return m;
}

// Second central moment, computed as sum p (v - mean)^2.
inline double variance(const std::vector<double>& p, const std::vector<double>& v) {
    const double m = mean(p, v);
    double var = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) var += p[i] * (v[i] - m) * (v[i] - m);
    return var;
}

inline double row_l1(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        double sum = 0.0;
        for (Index j = 0; j < a.cols(); ++j) sum += std::abs(a(i, j) - b(i, j));
        worst = std::max(worst, sum);
    }
    return worst;
}

// Inverse CDF by linear scan: the first outcome whose running total exceeds u,
// never past the last outcome with positive mass.
inline Index draw(const double* row, Index n, double u) {
    Index last = 0;
    for (Index j = 0; j < n; ++j)
        if (row[j] > 0.0) last = j;
    double acc = 0.0;
    for (Index j = 0; j < last; ++j) {
        acc += row[j];
        if (u < acc) return j;
    }
    return last;
}

struct TabularRun {
    Vector q;
    std::vector<Index> policy;
    Index iterations = 0;
};

// Plain tabular certainty-equivalence: N draws per (s,a), draw j at pair sa
// from to_unit(derive(seed, sa, j)); value iteration from zero on counts / N
// until the sup change is at most eps (1-gamma) / (2 gamma); argmax with the
// lowest index on ties.
inline TabularRun tabular_model_based(const Matrix& p, const Vector& r, double gamma,
                                      Index num_states, Index num_actions, std::int64_t n,
                                      double eps, std::uint64_t seed) {
    const Index pairs = num_states * num_actions;
    Matrix p_hat = Matrix::Zero(pairs, num_states);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(num_states));
    for (Index sa = 0; sa < pairs; ++sa) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::int64_t j = 0; j < n; ++j) {
            const double u = anchormdp::rng::to_unit(anchormdp::rng::derive(
                seed, static_cast<std::uint64_t>(sa), static_cast<std::uint64_t>(j)));
            ++counts[static_cast<std::size_t>(draw(p.data() + sa * num_states, num_states, u))];
        }
        for (Index s2 = 0; s2 < num_states; ++s2)
            p_hat(sa, s2) = static_cast<double>(counts[static_cast<std::size_t>(s2)]) /
                            static_cast<double>(n);
    }

    TabularRun run;
    run.q = Vector::Zero(pairs);
    Vector v = Vector::Zero(num_states);
    const double threshold = eps * (1.0 - gamma) / (2.0 * gamma);
    while (true) {
        double change = 0.0;
        for (Index sa = 0; sa < pairs; ++sa) {
            double sum = 0.0;
            for (Index s2 = 0; s2 < num_states; ++s2) sum += p_hat(sa, s2) * v[s2];
            const double updated = r[sa] + gamma * sum;
            change = std::max(change, std::abs(updated - run.q[sa]));
            run.q[sa] = updated;
        }
        ++run.iterations;
        for (Index s = 0; s < num_states; ++s) v[s] = v_max(run.q, s, num_actions);
        if (change <= threshold) break;
    }
    run.policy.resize(static_cast<std::size_t>(num_states));
    for (Index s = 0; s < num_states; ++s) {
        Index best = 0;
        for (Index a = 1; a < num_actions; ++a)
            if (run.q[s * num_actions + a] > run.q[s * num_actions + best]) best = a;
        run.policy[static_cast<std::size_t>(s)] = best;
    }
    return run;
}

// Random row-stochastic matrix from normalized uniforms.
inline Matrix random_stochastic(anchormdp::rng::SplitMix64& gen, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (Index j = 0; j < cols; ++j) {
            m(i, j) = gen.open_uniform();
            sum += m(i, j);
        }
        for (Index j = 0; j < cols; ++j) m(i, j) /= sum;
    }
    return m;
}

}  // namespace oracle
