#include "cohortsift/ensemble.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cohortsift {

Vote vote_from_fraction(double p_pos, int positive_label, int negative_label)
{
    Vote v;
    v.p_pos = p_pos;
    if (p_pos > 0.5) {
        v.inferred = positive_label;
        v.confidence = 2.0 * p_pos - 1.0;
    } else if (p_pos < 0.5) {
        v.inferred = negative_label;
        v.confidence = 2.0 * (1.0 - p_pos) - 1.0;
    } else {
        v.inferred = negative_label;
        v.confidence = 0.0;
    }
    return v;
}

Vote classify(Model const& model, BitVector const& row)
{
    if (model.reps.empty()) throw Error("model has no representations");
    if (row.size() != model.features.size()) {
        throw Error(fmt::format("row has {} features, model expects {}", row.size(), model.features.size()));
    }
    std::size_t votes = 0;
    for (auto const& r : model.reps) votes += r.tree.evaluate(row) ? 1 : 0;
    return vote_from_fraction(static_cast<double>(votes) / static_cast<double>(model.reps.size()),
                              model.positive_label, model.negative_label);
}

std::vector<double> vote_fractions(Model const& model, FeatureMatrix const& matrix)
{
    if (model.reps.empty()) throw Error("model has no representations");
    if (matrix.cols() != model.features.size()) {
        throw Error(fmt::format("matrix has {} features, model expects {}", matrix.cols(), model.features.size()));
    }
    std::vector<std::size_t> votes(matrix.rows(), 0);
    for (auto const& r : model.reps) {
        BitVector const pred = r.tree.evaluate(matrix.columns(), matrix.rows());
        for (std::size_t i = 0; i < matrix.rows(); ++i) votes[i] += pred.test(i) ? 1 : 0;
    }
    std::vector<double> p(matrix.rows());
    double const n = static_cast<double>(model.reps.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(votes[i]) / n;
    return p;
}

ConfusionMatrix model_confusion(Model const& model, FeatureMatrix const& matrix)
{
    auto const p = vote_fractions(model, matrix);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < p.size(); ++i) {
        bool const predicted = vote_from_fraction(p[i], 1, 0).inferred == 1;
        bool const actual = matrix.labels()[i] == model.positive_label;
        if (actual) {
            (predicted ? cm.tp : cm.fn) += 1;
        } else {
            (predicted ? cm.fp : cm.tn) += 1;
        }
    }
    return cm;
}

std::map<int, std::vector<std::size_t>> vote_histogram(Model const& model, FeatureMatrix const& matrix,
                                                       std::size_t bins)
{
    if (bins < 2) throw Error("vote histogram needs at least two bins");
    auto const p = vote_fractions(model, matrix);
    std::map<int, std::vector<std::size_t>> hist;
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto& h = hist[matrix.labels()[i]];
        h.resize(bins, 0);
        auto b = static_cast<std::size_t>(p[i] * static_cast<double>(bins));
        h[std::min(b, bins - 1)] += 1;
    }
    return hist;
}

void write_model(std::ostream& out, Model const& model, std::string const& feature_table)
{
    fmt::print(out, "cohortsift-model\t1\nfeature_table\t{}\npositive_label\t{}\nnegative_label\t{}\nrepresentations\t{}\n",
               feature_table, model.positive_label, model.negative_label, model.reps.size());
    for (auto const& r : model.reps) out << r.tree.to_string(model.features) << '\n';
}

namespace {

std::string header_value(std::istream& in, std::string_view key)
{
    std::string line;
    if (!std::getline(in, line)) throw Error(fmt::format("model file: missing '{}' line", key));
    auto const tab = line.find('\t');
    if (tab == std::string::npos || line.substr(0, tab) != key) {
        throw Error(fmt::format("model file: expected '{}' line", key));
    }
    return line.substr(tab + 1);
}

} // namespace

ModelFile read_model(std::istream& in, std::vector<FeatureId> const& features)
{
    if (header_value(in, "cohortsift-model") != "1") throw Error("model file: unsupported version");
    ModelFile mf;
    mf.feature_table = header_value(in, "feature_table");
    try {
        mf.model.positive_label = std::stoi(header_value(in, "positive_label"));
        mf.model.negative_label = std::stoi(header_value(in, "negative_label"));
    } catch (std::logic_error const&) {
        throw Error("model file: malformed label");
    }
    std::size_t const n = std::stoul(header_value(in, "representations"));

    std::unordered_map<std::string, std::size_t> interned;
    std::function<std::size_t(FeatureId const&)> resolve;
    if (features.empty()) {
        resolve = [&](FeatureId const& f) {
            auto [it, fresh] = interned.emplace(f.name(), mf.model.features.size());
            if (fresh) mf.model.features.push_back(f);
            return it->second;
        };
    } else {
        mf.model.features = features;
        for (std::size_t i = 0; i < features.size(); ++i) interned.emplace(features[i].name(), i);
        resolve = [&](FeatureId const& f) {
            auto it = interned.find(f.name());
            if (it == interned.end()) throw Error(fmt::format("model file: unknown feature '{}'", f.name()));
            return it->second;
        };
    }
    std::string line;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw Error("model file: fewer representations than declared");
        Representation r;
        r.tree = parse_tree(line, resolve);
        mf.model.reps.push_back(std::move(r));
    }
    if (mf.model.reps.empty()) throw Error("model file: no representations");
    return mf;
}

ModelFile read_model_file(std::string const& path, std::vector<FeatureId> const& features)
{
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open '{}'", path));
    try {
        return read_model(in, features);
    } catch (Error const& e) {
        throw Error(fmt::format("{}: {}", path, e.what()));
    }
}

} // namespace cohortsift
