#include "cohortsift/pipeline.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

namespace cohortsift {

RecordBags::RecordBags(Corpus const& corpus, int arity) : corpus_(&corpus), arity_(arity)
{
    bags_.reserve(corpus.size());
    for (std::size_t r = 0; r < corpus.size(); ++r) bags_.push_back(record_ngrams(corpus, r, arity));
}

NGramMap<double> ngram_totals(RecordBags const& bags, std::span<std::size_t const> records)
{
    NGramMap<double> totals;
    for (std::size_t r : records) {
        for (auto const& [g, n] : bags.bag(r)) totals[g] += n;
    }
    return totals;
}

TermCounts collect_term_counts(RecordBags const& bags, std::span<std::size_t const> records,
                               std::vector<NGram> const& terms)
{
    TermCounts tc;
    tc.num_records = records.size();
    tc.by_term.resize(terms.size());
    NGramMap<std::size_t> index;
    index.reserve(terms.size());
    for (std::size_t t = 0; t < terms.size(); ++t) {
        index.emplace(terms[t], t);
        tc.terms.push_back(ngram_name(terms[t], bags.corpus().vocabulary()));
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto const& bag = bags.bag(records[i]);
        if (bag.size() < index.size()) {
            for (auto const& [g, n] : bag) {
                if (auto it = index.find(g); it != index.end()) {
                    tc.by_term[it->second].emplace_back(static_cast<std::uint32_t>(i), n);
                }
            }
        } else {
            for (std::size_t t = 0; t < terms.size(); ++t) {
                if (auto it = bag.find(terms[t]); it != bag.end()) {
                    tc.by_term[t].emplace_back(static_cast<std::uint32_t>(i), it->second);
                }
            }
        }
    }
    // Either loop order above must give record-ordered lists.
    for (auto& v : tc.by_term) std::sort(v.begin(), v.end());
    return tc;
}

FeatureMatrix binarize_features(TermCounts const& counts, std::vector<FeatureId> const& features,
                                std::vector<int> labels, int positive_label)
{
    std::unordered_map<std::string, std::size_t> term_index;
    for (std::size_t t = 0; t < counts.terms.size(); ++t) term_index.emplace(counts.terms[t], t);
    std::vector<BitVector> columns;
    columns.reserve(features.size());
    for (auto const& f : features) {
        auto it = term_index.find(f.term);
        if (it == term_index.end()) throw Error(fmt::format("no counts for term '{}'", f.term));
        BitVector col(counts.num_records);
        for (auto const& [r, c] : counts.by_term[it->second]) {
            if (c >= f.threshold) col.set(r);
        }
        columns.push_back(std::move(col));
    }
    return FeatureMatrix(features, std::move(columns), std::move(labels), positive_label);
}

std::vector<std::size_t> cohort_records(Corpus const& corpus, PipelineConfig const& config)
{
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        int const g = corpus.record(r).group;
        if (g == config.positive_label || g == config.negative_label) out.push_back(r);
    }
    return out;
}

namespace {

std::vector<int> labels_of(Corpus const& corpus, std::span<std::size_t const> records)
{
    std::vector<int> l;
    l.reserve(records.size());
    for (std::size_t r : records) l.push_back(corpus.record(r).group);
    return l;
}

} // namespace

FoldFeatures prepare_fold(RecordBags const& bags, std::span<std::size_t const> train_records,
                          std::span<std::size_t const> test_records, PipelineConfig const& config)
{
    if (config.arity != bags.arity()) {
        throw Error(fmt::format("bags built for arity {}, pipeline wants {}", bags.arity(), config.arity));
    }
    Corpus const& corpus = bags.corpus();
    FoldFeatures fold;
    fold.train_records.assign(train_records.begin(), train_records.end());
    fold.test_records.assign(test_records.begin(), test_records.end());

    auto const totals = ngram_totals(bags, train_records);
    PairStats stats;
    if (config.arity >= 2) stats = PairStats::from_corpus(corpus, train_records);
    auto const kept = apply_cuts(totals, corpus.vocabulary(), stats, config.cuts);

    std::vector<std::pair<std::string, NGram>> named;
    named.reserve(kept.size());
    for (auto const& g : kept) named.emplace_back(ngram_name(g, corpus.vocabulary()), g);
    std::sort(named.begin(), named.end());
    std::vector<NGram> terms;
    terms.reserve(named.size());
    for (auto& [name, g] : named) terms.push_back(g);

    TermCounts const train_counts = collect_term_counts(bags, train_records, terms);
    fold.thresholds = fit_thresholds(train_counts, config.num_thresholds);
    FeatureMatrix const full =
        binarize(train_counts, fold.thresholds, labels_of(corpus, train_records), config.positive_label);
    fold.train = select_static(full, std::max<std::size_t>(config.static_features, 1));

    std::vector<NGram> selected_terms;
    {
        std::vector<std::string> wanted;
        for (auto const& f : fold.train.features()) wanted.push_back(f.term);
        std::sort(wanted.begin(), wanted.end());
        wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
        for (auto const& [name, g] : named) {
            if (std::binary_search(wanted.begin(), wanted.end(), name)) selected_terms.push_back(g);
        }
    }
    TermCounts const test_counts = collect_term_counts(bags, test_records, selected_terms);
    fold.test = binarize_features(test_counts, fold.train.features(), labels_of(corpus, test_records),
                                  config.positive_label);
    return fold;
}

} // namespace cohortsift
