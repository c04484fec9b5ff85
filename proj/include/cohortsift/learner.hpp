#pragma once

#include "cohortsift/bitvector.hpp"
#include "cohortsift/features.hpp"
#include "cohortsift/program_tree.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace cohortsift {

struct TrainConfig {
    std::size_t static_features = 3000;
    std::size_t dynamic_features = 50;
    std::size_t eval_budget = 20000;
    std::uint64_t seed = 1;
    // Consecutive non-improving passes before a new epoch starts.
    std::size_t restart_stagnation = 4;
    std::size_t max_depth = 6;
};

struct Representation {
    ProgramTree tree;
    double train_accuracy = 0.0;
    std::uint64_t seed = 0;
    std::size_t evaluations_used = 0;

    friend bool operator==(Representation const&, Representation const&) = default;
};

/// Fraction of rows where the tree agrees with the matrix target. Does not
/// touch any budget; the learner counts its own calls.
[[nodiscard]] double score_tree(ProgramTree const& tree, FeatureMatrix const& matrix);

/// Features most informative about where `exemplar` errs: the k columns with
/// the highest class MI against the exemplar's misclassification vector,
/// excluding features already in the exemplar. Ties go to the lower index.
[[nodiscard]] std::vector<std::size_t> dynamic_select(ProgramTree const& exemplar, FeatureMatrix const& matrix,
                                                      std::size_t k);

// Called whenever the best-so-far score changes: (evaluations used, score).
using ProgressObserver = std::function<void(std::size_t, double)>;

/// Evolutionary search for one boolean representation of the training matrix.
///
/// Starts from the single literal with the highest class MI and hill-climbs
/// with first-improvement over a seeded shuffle of the neighborhood: add a
/// dynamically selected literal or a two-literal clause to a connective,
/// extend a literal into a two-literal connective, remove or negate a
/// literal, swap a connective. When none of these improves, three-literal
/// clauses are tried, appended under or wrapped around a connective. Each
/// pass ends with one crossover that splices in a subtree of the epoch's best
/// tree. After `restart_stagnation` idle passes, or once an epoch has used
/// max(eval_budget / 16, 2000) evaluations, a new epoch starts from a random
/// informative literal (every second one deepened with a slot). The best tree
/// over all epochs is returned. Stops at a perfect score or when
/// `eval_budget` scoring calls have been spent.
[[nodiscard]] Representation train_representation(FeatureMatrix const& matrix, TrainConfig const& config,
                                                  ProgressObserver const& observer = {});

struct KeywordLists {
    std::vector<std::string> positive;
    std::vector<std::string> negative;
};

/// Terms used as plain literals (positive) and as negated literals (negative)
/// anywhere in the representations; a term can be in both lists.
[[nodiscard]] KeywordLists extract_keywords(std::span<Representation const> reps,
                                            std::span<FeatureId const> features);

} // namespace cohortsift
