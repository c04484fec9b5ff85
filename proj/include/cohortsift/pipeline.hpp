#pragma once

#include "cohortsift/corpus.hpp"
#include "cohortsift/features.hpp"
#include "cohortsift/phrases.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cohortsift {

// Everything that turns raw records into a training matrix.
struct PipelineConfig {
    int positive_label = 2;
    int negative_label = 3;
    int arity = 1;
    CutSpec cuts;
    int num_thresholds = 1;
    std::size_t static_features = 3000;
};

// Per-record bags of n-grams (arities 1..arity), computed once per corpus.
class RecordBags {
public:
    RecordBags(Corpus const& corpus, int arity);

    [[nodiscard]] Corpus const& corpus() const noexcept { return *corpus_; }
    [[nodiscard]] int arity() const noexcept { return arity_; }
    [[nodiscard]] NGramMap<double> const& bag(std::size_t record) const { return bags_.at(record); }

private:
    Corpus const* corpus_;
    int arity_;
    std::vector<NGramMap<double>> bags_;
};

/// Summed n-gram counts over `records`.
[[nodiscard]] NGramMap<double> ngram_totals(RecordBags const& bags, std::span<std::size_t const> records);

/// Counts of the given terms (n-gram names) over `records`, in that order.
[[nodiscard]] TermCounts collect_term_counts(RecordBags const& bags, std::span<std::size_t const> records,
                                             std::vector<NGram> const& terms);

/// Columns for exactly `features`, whose terms must be among `counts.terms`.
[[nodiscard]] FeatureMatrix binarize_features(TermCounts const& counts, std::vector<FeatureId> const& features,
                                              std::vector<int> labels, int positive_label);

// Training-side artifacts of one fold plus the matching held-out matrix.
struct FoldFeatures {
    std::vector<std::size_t> train_records;
    std::vector<std::size_t> test_records;
    ThresholdSpec thresholds;
    FeatureMatrix train;
    FeatureMatrix test;
};

/// Runs cuts, thresholds and static selection using the training records
/// only, then binarizes the test records with the training thresholds and
/// selected features. Test-record contents cannot influence anything but the
/// test matrix.
[[nodiscard]] FoldFeatures prepare_fold(RecordBags const& bags, std::span<std::size_t const> train_records,
                                        std::span<std::size_t const> test_records, PipelineConfig const& config);

/// Indices of records carrying either cohort label, in corpus order.
[[nodiscard]] std::vector<std::size_t> cohort_records(Corpus const& corpus, PipelineConfig const& config);

} // namespace cohortsift
