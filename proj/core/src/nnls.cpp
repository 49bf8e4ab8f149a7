#include "anchormdp/nnls.hpp"

#include <Eigen/QR>

#include <limits>

namespace anchormdp {

namespace {

// Unconstrained least squares restricted to the passive columns.
Vector passive_solve(const Matrix& a, const Vector& b, const std::vector<bool>& passive) {
    std::vector<Index> cols;
    for (Index j = 0; j < a.cols(); ++j) {
        if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    }
    Eigen::MatrixXd sub(a.rows(), static_cast<Index>(cols.size()));
    for (Index k = 0; k < sub.cols(); ++k) sub.col(k) = a.col(cols[static_cast<std::size_t>(k)]);
    const Vector z = sub.colPivHouseholderQr().solve(b);
    Vector full = Vector::Zero(a.cols());
    for (Index k = 0; k < sub.cols(); ++k) full[cols[static_cast<std::size_t>(k)]] = z[k];
    return full;
}

}  // namespace

Vector nnls(const Matrix& a, const Vector& b, double tol) {
    if (a.rows() != b.size()) throw DimensionError("nnls: row count mismatch");
    const Index n = a.cols();
    Vector x = Vector::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const Index max_outer = 3 * n + 10;

    for (Index outer = 0; outer < max_outer; ++outer) {
        const Vector w = a.transpose() * (b - a * x);
        Index enter = -1;
        double best = tol;
        for (Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w[j] > best) {
                best = w[j];
                enter = j;
            }
        }
        if (enter < 0) break;
        passive[static_cast<std::size_t>(enter)] = true;

        for (Index inner = 0; inner <= n; ++inner) {
            const Vector z = passive_solve(a, b, passive);
            double alpha = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) {
                    const double denom = x[j] - z[j];
                    alpha = std::min(alpha, denom > 0.0 ? x[j] / denom : 0.0);
                }
            }
            if (!std::isfinite(alpha)) {
                x = z;
                break;
            }
            x += alpha * (z - x);
            for (Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    return x;
}

}  // namespace anchormdp
