#pragma once

#include "anchormdp/mdp_core.hpp"

namespace anchormdp {

/// Lawson-Hanson active-set solver for min ||A x - b||_2 subject to x >= 0.
Vector nnls(const Matrix& a, const Vector& b, double tol = 1e-12);

}  // namespace anchormdp
