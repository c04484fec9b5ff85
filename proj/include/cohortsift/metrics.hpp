#pragma once

#include <cstddef>
#include <iosfwd>

namespace cohortsift {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + fn + tn; }

    ConfusionMatrix& operator+=(ConfusionMatrix const& o) noexcept
    {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend bool operator==(ConfusionMatrix const&, ConfusionMatrix const&) = default;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double fp_rate = 0.0;
    // Set when some ratio had a zero denominator and was reported as 0.
    bool degenerate = false;
};

/// Textbook scores: recall TP/(TP+FN), precision TP/(TP+FP), accuracy,
/// F1 = 2PR/(P+R), F2 = 5PR/(4P+R), false-positive rate FP/(FP+TN).
/// Throws Error on an all-zero matrix.
[[nodiscard]] Metrics metrics_from_confusion(ConfusionMatrix const& cm);

/// Header plus one row: tp fp fn tn accuracy precision recall f1 f2 fp_rate degenerate.
void write_confusion_tsv(std::ostream& out, ConfusionMatrix const& cm);
void write_confusion_tsv_row(std::ostream& out, char const* key, ConfusionMatrix const& cm);
void write_confusion_tsv_header(std::ostream& out);

} // namespace cohortsift
