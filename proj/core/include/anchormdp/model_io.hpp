#pragma once

#include "anchormdp/linear_model.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace anchormdp {

// Model file, version 1. Plain text, whitespace separated, every real printed
// with 17 significant digits so a save/load cycle is exact:
//
//     anchormdp-model 1
//     <|S|> <|A|> <K> <misspecified: 0|1>
//     <|S||A| lines of K numbers>      features, row (s,a) at line s*|A|+a
//     <K lines of |S| numbers>         factor
//     <|S||A| numbers>                 reward
//     <gamma>
//     <K integers>                     anchor pairs, flat s*|A|+a
//     <|S||A| lines of |S| numbers>    true kernel, only when misspecified = 1
//
// Without the trailing block the true kernel is features * factor.

/// Parsed but unvalidated file contents.
struct RawModel {
    Index num_states = 0;
    Index num_actions = 0;
    Matrix features;
    Matrix factor;
    Vector reward;
    double discount = 0.0;
    std::vector<Index> anchors;
    std::optional<Matrix> true_transition;
};

/// A validated model: the linear reference, its anchors, and optionally a
/// true kernel that the reference only approximates.
struct ModelFile {
    LinearMDP reference;
    AnchorSet anchors;
    std::optional<Matrix> true_transition;

    /// The MDP samples are drawn from.
    TabularMDP true_mdp() const;
};

RawModel read_raw_model(std::istream& in);
void write_raw_model(std::ostream& out, const RawModel& model);

/// Validates a raw model (factorization, anchor assumption, true kernel).
ModelFile validate_model(const RawModel& raw);
RawModel to_raw(const ModelFile& model);

ModelFile load_model(const std::string& path);
void save_model(const std::string& path, const ModelFile& model);

/// Policy file: "anchormdp-policy 1", |S|, then |S| action indices.
void write_policy(std::ostream& out, const Policy& pi);
Policy read_policy(std::istream& in);

}  // namespace anchormdp
