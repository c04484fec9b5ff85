#pragma once

#include "cohortsift/bitvector.hpp"
#include "cohortsift/features.hpp"
#include "cohortsift/learner.hpp"
#include "cohortsift/metrics.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cohortsift {

// An ensemble of representations over one feature table, classifying by
// majority vote.
struct Model {
    std::vector<Representation> reps;
    std::vector<FeatureId> features;
    int positive_label = 1;
    int negative_label = 0;
};

struct Vote {
    double p_pos = 0.0;
    int inferred = 0;
    double confidence = 0.0;
};

/// p_pos is the fraction of representations voting positive. A strict
/// majority decides; an exact tie goes to the negative label with confidence
/// 0. Otherwise confidence = 2*max(p_pos, 1-p_pos) - 1.
[[nodiscard]] Vote classify(Model const& model, BitVector const& row);

/// Vote fractions for every row of `matrix` (which must use the model's
/// feature table).
[[nodiscard]] std::vector<double> vote_fractions(Model const& model, FeatureMatrix const& matrix);

[[nodiscard]] Vote vote_from_fraction(double p_pos, int positive_label, int negative_label);

[[nodiscard]] ConfusionMatrix model_confusion(Model const& model, FeatureMatrix const& matrix);

/// Rows per vote-fraction bin, split by true label. Bin b covers
/// [b/bins, (b+1)/bins); the last bin is closed.
[[nodiscard]] std::map<int, std::vector<std::size_t>> vote_histogram(Model const& model,
                                                                     FeatureMatrix const& matrix,
                                                                     std::size_t bins = 10);

// Model file: "cohortsift-model<TAB>1", then feature_table, positive_label,
// negative_label and representations header lines, then one tree per line.
void write_model(std::ostream& out, Model const& model, std::string const& feature_table);

struct ModelFile {
    Model model;
    std::string feature_table;
};

/// With `features` empty, literal features are collected from the trees
/// themselves in first-seen order; otherwise every literal must name one of
/// `features`.
[[nodiscard]] ModelFile read_model(std::istream& in, std::vector<FeatureId> const& features = {});
[[nodiscard]] ModelFile read_model_file(std::string const& path, std::vector<FeatureId> const& features = {});

} // namespace cohortsift
