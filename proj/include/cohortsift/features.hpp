#pragma once

#include "cohortsift/bitvector.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cohortsift {

// A thresholded term: true for a record iff the term occurs `threshold` or
// more times in it.
struct FeatureId {
    std::string term;
    double threshold = 0.0;

    /// TERM_t<threshold>, threshold in shortest round-trip form.
    [[nodiscard]] std::string name() const;
    /// Inverse of name(); throws Error if there is no "_t<number>" suffix.
    [[nodiscard]] static FeatureId parse(std::string_view name);

    friend bool operator==(FeatureId const&, FeatureId const&) = default;
};

/// Smallest threshold a feature may carry. Non-positive cutpoints are raised
/// to it so a zero count never satisfies a feature.
inline constexpr double kMinThreshold = 4.9406564584124654e-324;

/// Cutpoints from the mean and population standard deviation of one term's
/// counts over all records (zeros included):
///   1 -> [mean], 2 -> [mean-sd, mean+sd], 3 -> [mean-sd, mean, mean+sd].
[[nodiscard]] std::vector<double> compute_thresholds(std::span<double const> counts, int num_thresholds);

struct ThresholdSpec {
    int num_thresholds = 1;
    std::map<std::string, std::vector<double>> per_term;
};

// Sparse per-term counts over a fixed list of records.
struct TermCounts {
    std::size_t num_records = 0;
    std::vector<std::string> terms;
    // by_term[t] holds (record index, count) for records where the count is > 0.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> by_term;

    [[nodiscard]] std::vector<double> dense(std::size_t term) const;
};

/// Thresholds for every term of `counts` computed over its own records.
[[nodiscard]] ThresholdSpec fit_thresholds(TermCounts const& counts, int num_thresholds);

/// Boolean feature matrix stored column-wise, one bit per record.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<FeatureId> features, std::vector<BitVector> columns, std::vector<int> labels,
                  int positive_label);

    [[nodiscard]] std::size_t rows() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return features_.size(); }
    [[nodiscard]] std::vector<FeatureId> const& features() const noexcept { return features_; }
    [[nodiscard]] FeatureId const& feature(std::size_t j) const { return features_.at(j); }
    [[nodiscard]] BitVector const& column(std::size_t j) const { return columns_.at(j); }
    [[nodiscard]] std::vector<BitVector> const& columns() const noexcept { return columns_; }
    [[nodiscard]] std::vector<int> const& labels() const noexcept { return labels_; }
    [[nodiscard]] int positive_label() const noexcept { return positive_label_; }
    /// Bit i set iff record i carries the positive label.
    [[nodiscard]] BitVector const& target() const noexcept { return target_; }

    [[nodiscard]] BitVector row(std::size_t i) const;
    /// Columns `cols` in the given order.
    [[nodiscard]] FeatureMatrix select_columns(std::span<std::size_t const> cols) const;

    friend bool operator==(FeatureMatrix const&, FeatureMatrix const&) = default;

private:
    std::vector<FeatureId> features_;
    std::vector<BitVector> columns_;
    std::vector<int> labels_;
    int positive_label_ = 0;
    BitVector target_;
};

/// One column per distinct (term, threshold); true iff count >= threshold.
/// Every term in `counts` must be covered by `spec`. `labels` has one entry per
/// record of `counts`.
[[nodiscard]] FeatureMatrix binarize(TermCounts const& counts, ThresholdSpec const& spec,
                                     std::vector<int> labels, int positive_label);

/// Largest pointwise mutual information over the four (class, value) cells,
/// log2(p(g,v) / (p(g) p(v))); empty cells are skipped. A large value at
/// (positive, false) captures anti-correlated features.
[[nodiscard]] double class_mi(BitVector const& column, BitVector const& labels);

/// Column order by descending class MI against the target; ties by term then
/// ascending threshold.
[[nodiscard]] std::vector<std::size_t> rank_by_class_mi(FeatureMatrix const& matrix);

/// The top-n columns of rank_by_class_mi, in rank order.
[[nodiscard]] FeatureMatrix select_static(FeatureMatrix const& matrix, std::size_t n);

// Feature matrix file: a tab-separated text header (magic line, dimensions,
// labels, one "feature<TAB>term<TAB>threshold" line per column, then "data")
// followed by row-major packed bits, ceil(cols/8) bytes per row, LSB first.
void write_feature_matrix(std::ostream& out, FeatureMatrix const& matrix);
[[nodiscard]] FeatureMatrix read_feature_matrix(std::istream& in);

/// term<TAB>thresholds... sorted by term.
void write_thresholds_tsv(std::ostream& out, ThresholdSpec const& spec);

} // namespace cohortsift
