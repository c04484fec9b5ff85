#include "cohortsift/features.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cohortsift {

namespace {

double parse_double(std::string_view s)
{
    double v = 0.0;
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ptr != s.data() + s.size() || (ec != std::errc{} && ec != std::errc::result_out_of_range)) {
        throw Error(fmt::format("not a number: '{}'", s));
    }
    return v;
}

std::vector<std::string> split_tabs(std::string const& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) out.push_back(field);
    return out;
}

} // namespace

std::string FeatureId::name() const
{
    return fmt::format("{}_t{}", term, threshold);
}

FeatureId FeatureId::parse(std::string_view name)
{
    auto const pos = name.rfind("_t");
    if (pos == std::string_view::npos || pos == 0 || pos + 2 >= name.size()) {
        throw Error(fmt::format("malformed feature name '{}'", name));
    }
    return FeatureId{std::string(name.substr(0, pos)), parse_double(name.substr(pos + 2))};
}

std::vector<double> compute_thresholds(std::span<double const> counts, int num_thresholds)
{
    if (num_thresholds < 1 || num_thresholds > 3) {
        throw Error(fmt::format("number of thresholds must be 1..3, got {}", num_thresholds));
    }
    if (counts.empty()) {
        throw Error("thresholds need at least one record");
    }
    double const n = static_cast<double>(counts.size());
    double const mean = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
    double var = 0.0;
    for (double c : counts) var += (c - mean) * (c - mean);
    double const sd = std::sqrt(var / n);

    std::vector<double> t;
    switch (num_thresholds) {
    case 1: t = {mean}; break;
    case 2: t = {mean - sd, mean + sd}; break;
    default: t = {mean - sd, mean, mean + sd}; break;
    }
    for (double& x : t) x = std::max(x, kMinThreshold);
    return t;
}

std::vector<double> TermCounts::dense(std::size_t term) const
{
    std::vector<double> v(num_records, 0.0);
    for (auto const& [r, c] : by_term.at(term)) v[r] = c;
    return v;
}

ThresholdSpec fit_thresholds(TermCounts const& counts, int num_thresholds)
{
    ThresholdSpec spec{num_thresholds, {}};
    for (std::size_t t = 0; t < counts.terms.size(); ++t) {
        auto const dense = counts.dense(t);
        spec.per_term[counts.terms[t]] = compute_thresholds(dense, num_thresholds);
    }
    return spec;
}

FeatureMatrix::FeatureMatrix(std::vector<FeatureId> features, std::vector<BitVector> columns,
                             std::vector<int> labels, int positive_label)
    : features_(std::move(features)), columns_(std::move(columns)), labels_(std::move(labels)),
      positive_label_(positive_label), target_(labels_.size())
{
    if (features_.size() != columns_.size()) {
        throw Error("feature matrix: one column per feature required");
    }
    for (auto const& c : columns_) {
        if (c.size() != labels_.size()) {
            throw Error("feature matrix: column length differs from row count");
        }
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        target_.set(i, labels_[i] == positive_label_);
    }
}

BitVector FeatureMatrix::row(std::size_t i) const
{
    if (i >= rows()) throw Error("feature matrix: row out of range");
    BitVector r(cols());
    for (std::size_t j = 0; j < cols(); ++j) r.set(j, columns_[j].test(i));
    return r;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<std::size_t const> cols) const
{
    std::vector<FeatureId> f;
    std::vector<BitVector> c;
    f.reserve(cols.size());
    c.reserve(cols.size());
    for (std::size_t j : cols) {
        f.push_back(features_.at(j));
        c.push_back(columns_.at(j));
    }
    return FeatureMatrix(std::move(f), std::move(c), labels_, positive_label_);
}

FeatureMatrix binarize(TermCounts const& counts, ThresholdSpec const& spec, std::vector<int> labels,
                       int positive_label)
{
    if (labels.size() != counts.num_records) {
        throw Error("binarize: one label per record required");
    }
    std::vector<FeatureId> features;
    std::vector<BitVector> columns;
    for (std::size_t t = 0; t < counts.terms.size(); ++t) {
        auto it = spec.per_term.find(counts.terms[t]);
        if (it == spec.per_term.end()) {
            throw Error(fmt::format("no thresholds for term '{}'", counts.terms[t]));
        }
        std::vector<double> thresholds = it->second;
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
        for (double th : thresholds) {
            BitVector col(counts.num_records);
            for (auto const& [r, c] : counts.by_term[t]) {
                if (c >= th) col.set(r);
            }
            features.push_back({counts.terms[t], th});
            columns.push_back(std::move(col));
        }
    }
    return FeatureMatrix(std::move(features), std::move(columns), std::move(labels), positive_label);
}

double class_mi(BitVector const& column, BitVector const& labels)
{
    if (column.size() != labels.size() || column.empty()) {
        throw Error("class_mi: column and labels must have equal nonzero length");
    }
    double const n = static_cast<double>(column.size());
    double const n_pos = static_cast<double>(labels.count());
    double const n_true = static_cast<double>(column.count());
    double const tt = static_cast<double>(count_and(column, labels));
    // (class, value) cells: joint count, class count, value count
    struct Cell {
        double joint, cls, val;
    };
    Cell const cells[4] = {
        {tt, n_pos, n_true},
        {n_pos - tt, n_pos, n - n_true},
        {n_true - tt, n - n_pos, n_true},
        {n - n_pos - n_true + tt, n - n_pos, n - n_true},
    };
    double best = -std::numeric_limits<double>::infinity();
    for (auto const& c : cells) {
        if (c.joint > 0.0) {
            best = std::max(best, std::log2(c.joint * n / (c.cls * c.val)));
        }
    }
    return best;
}

std::vector<std::size_t> rank_by_class_mi(FeatureMatrix const& matrix)
{
    std::vector<double> mi(matrix.cols());
    for (std::size_t j = 0; j < matrix.cols(); ++j) mi[j] = class_mi(matrix.column(j), matrix.target());
    std::vector<std::size_t> order(matrix.cols());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (mi[a] != mi[b]) return mi[a] > mi[b];
        auto const& fa = matrix.feature(a);
        auto const& fb = matrix.feature(b);
        if (fa.term != fb.term) return fa.term < fb.term;
        return fa.threshold < fb.threshold;
    });
    return order;
}

FeatureMatrix select_static(FeatureMatrix const& matrix, std::size_t n)
{
    if (n == 0) throw Error("static selection needs n >= 1");
    auto order = rank_by_class_mi(matrix);
    order.resize(std::min(n, order.size()));
    return matrix.select_columns(order);
}

void write_feature_matrix(std::ostream& out, FeatureMatrix const& m)
{
    out << "cohortsift-features\t1\n";
    fmt::print(out, "rows\t{}\ncols\t{}\npositive_label\t{}\nlabels", m.rows(), m.cols(), m.positive_label());
    for (int l : m.labels()) fmt::print(out, "\t{}", l);
    out << '\n';
    for (auto const& f : m.features()) fmt::print(out, "feature\t{}\t{}\n", f.term, f.threshold);
    out << "data\n";
    std::size_t const stride = (m.cols() + 7) / 8;
    std::string row(stride, '\0');
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::fill(row.begin(), row.end(), '\0');
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (m.column(j).test(i)) row[j / 8] = static_cast<char>(row[j / 8] | (1 << (j % 8)));
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
}

FeatureMatrix read_feature_matrix(std::istream& in)
{
    auto expect = [&](std::string_view key) {
        std::string line;
        if (!std::getline(in, line)) throw Error("feature matrix: truncated header");
        auto fields = split_tabs(line);
        if (fields.empty() || fields[0] != key) {
            throw Error(fmt::format("feature matrix: expected '{}' line", key));
        }
        return fields;
    };
    auto magic = expect("cohortsift-features");
    if (magic.size() != 2 || magic[1] != "1") throw Error("feature matrix: unsupported version");
    std::size_t const rows = std::stoul(expect("rows").at(1));
    std::size_t const cols = std::stoul(expect("cols").at(1));
    int const positive = std::stoi(expect("positive_label").at(1));
    auto lab = expect("labels");
    if (lab.size() != rows + 1) throw Error("feature matrix: label count mismatch");
    std::vector<int> labels;
    for (std::size_t i = 1; i < lab.size(); ++i) labels.push_back(std::stoi(lab[i]));
    std::vector<FeatureId> features;
    for (std::size_t j = 0; j < cols; ++j) {
        auto f = expect("feature");
        if (f.size() != 3) throw Error("feature matrix: malformed feature line");
        features.push_back({f[1], parse_double(f[2])});
    }
    expect("data");
    std::size_t const stride = (cols + 7) / 8;
    std::vector<BitVector> columns(cols, BitVector(rows));
    std::string row(stride, '\0');
    for (std::size_t i = 0; i < rows; ++i) {
        if (!in.read(row.data(), static_cast<std::streamsize>(stride))) {
            throw Error("feature matrix: truncated data");
        }
        for (std::size_t j = 0; j < cols; ++j) {
            if ((static_cast<unsigned char>(row[j / 8]) >> (j % 8)) & 1u) columns[j].set(i);
        }
    }
    return FeatureMatrix(std::move(features), std::move(columns), std::move(labels), positive);
}

void write_thresholds_tsv(std::ostream& out, ThresholdSpec const& spec)
{
    out << "term\tthresholds\n";
    for (auto const& [term, ts] : spec.per_term) {
        out << term;
        for (double t : ts) fmt::print(out, "\t{}", t);
        out << '\n';
    }
}

} // namespace cohortsift
