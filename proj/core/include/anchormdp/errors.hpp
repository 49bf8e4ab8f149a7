#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace anchormdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument violates a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A numerical post-condition failed; indicates a bug or a pathological input.
class InternalError : public Error {
public:
    using Error::Error;
};

/// Some feature vector is not a convex combination of the anchor features.
class AnchorViolation : public Error {
public:
    AnchorViolation(const std::string& what, Eigen::Index pair, double violation)
        : Error(what), pair_(pair), violation_(violation) {}

    /// Flat state-action index of the offending pair, or -1 when not known.
    Eigen::Index pair() const noexcept { return pair_; }
    /// Largest observed violation (negative mass or sum-to-one defect).
    double violation() const noexcept { return violation_; }

private:
    Eigen::Index pair_;
    double violation_;
};

/// The anchor feature matrix is singular.
class AnchorsNotIndependent : public Error {
public:
    using Error::Error;
};

/// Anchor features have rank below min(feature_dim, num_anchors).
class RankDeficiency : public Error {
public:
    using Error::Error;
};

/// A sample batch whose counts do not sum to the declared sample size.
class CorruptedBatch : public Error {
public:
    using Error::Error;
};

/// Malformed model, config or policy file.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace anchormdp
