#include "cohortsift/phrases.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cohortsift {

NGram::NGram(std::span<TokenId const> ids)
{
    if (ids.empty() || ids.size() > words.size()) {
        throw Error(fmt::format("n-gram arity must be 1..4, got {}", ids.size()));
    }
    std::copy(ids.begin(), ids.end(), words.begin());
    arity = static_cast<std::uint8_t>(ids.size());
}

bool NGram::contains(TokenId id) const noexcept
{
    auto v = view();
    return std::find(v.begin(), v.end(), id) != v.end();
}

std::size_t NGramHash::operator()(NGram const& g) const noexcept
{
    std::uint64_t h = 0x9E3779B97F4A7C15ull ^ g.arity;
    for (TokenId w : g.view()) {
        h ^= w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        h *= 0xBF58476D1CE4E5B9ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 31));
}

std::string ngram_name(NGram const& g, Vocabulary const& vocab)
{
    std::string name;
    for (TokenId w : g.view()) {
        if (!name.empty()) name.push_back('_');
        name += vocab.name(w);
    }
    return name;
}

NGramMap<double> record_ngrams(Corpus const& corpus, std::size_t record, int max_arity)
{
    if (max_arity < 1 || max_arity > 4) {
        throw Error(fmt::format("n-gram arity must be 1..4, got {}", max_arity));
    }
    NGramMap<double> bag;
    if (corpus.note_tokens(record).empty()) {
        // Counts-only corpora carry unigrams alone.
        for (auto const& [id, n] : corpus.counts(record)) {
            bag[NGram(std::array<TokenId, 1>{id})] += n;
        }
        return bag;
    }
    auto add = [&](auto const& ids) { bag[NGram(ids)] += 1.0; };
    for (auto const& note : corpus.note_tokens(record)) {
        std::span<TokenId const> toks(note);
        for (TokenId id : toks) add(std::array<TokenId, 1>{id});
        if (max_arity >= 2) for_each_pair(toks, add);
        if (max_arity >= 3) for_each_trigram(toks, add);
        if (max_arity >= 4) for_each_fourgram(toks, add);
    }
    return bag;
}

void PairStats::add(NGram const& pair, double count)
{
    if (pair.arity != 2) {
        throw Error("PairStats only accepts word pairs");
    }
    pair_count_[pair] += count;
    left_[pair.words[0]] += count;
    right_[pair.words[1]] += count;
    total_ += count;
}

PairStats PairStats::from_corpus(Corpus const& corpus, std::span<std::size_t const> records)
{
    PairStats stats;
    auto visit = [&](std::size_t r) {
        for (auto const& note : corpus.note_tokens(r)) {
            for_each_pair(std::span<TokenId const>(note),
                          [&](std::array<TokenId, 2> const& p) { stats.add(NGram(p)); });
        }
    };
    if (records.empty()) {
        for (std::size_t r = 0; r < corpus.size(); ++r) visit(r);
    } else {
        for (std::size_t r : records) visit(r);
    }
    return stats;
}

double PairStats::pair_count(NGram const& pair) const
{
    auto it = pair_count_.find(pair);
    return it == pair_count_.end() ? 0.0 : it->second;
}

double PairStats::left_marginal(TokenId x) const
{
    auto it = left_.find(x);
    return it == left_.end() ? 0.0 : it->second;
}

double PairStats::right_marginal(TokenId y) const
{
    auto it = right_.find(y);
    return it == right_.end() ? 0.0 : it->second;
}

double pair_mi(PairStats const& stats, NGram const& pair)
{
    double const joint = stats.pair_count(pair);
    if (joint <= 0.0) {
        throw Error("pair_mi: pair never observed");
    }
    double const left = stats.left_marginal(pair.words[0]);
    double const right = stats.right_marginal(pair.words[1]);
    if (left <= 0.0 || right <= 0.0) {
        throw Error("pair_mi: zero marginal");
    }
    // p(x,y)/(p(x,*)p(*,y)) with the total folded in once.
    return std::log2(joint * stats.total_pairs() / (left * right));
}

NGramSet apply_cuts(NGramMap<double> const& ngram_totals, Vocabulary const& vocab, PairStats const& stats,
                    CutSpec const& spec)
{
    std::unordered_set<TokenId> significant;
    if (spec.significant_words) {
        for (auto const& w : *spec.significant_words) {
            if (TokenId const* id = vocab.find(w)) significant.insert(*id);
        }
    }
    NGramSet kept;
    for (auto const& [g, n] : ngram_totals) {
        if (!(n > spec.min_ngram_count)) continue;
        if (g.arity == 1) {
            if (!(n > spec.min_word_count)) continue;
            kept.insert(g);
            continue;
        }
        if (g.arity == 2 && spec.min_mi) {
            if (stats.pair_count(g) <= 0.0 || !(pair_mi(stats, g) > *spec.min_mi)) continue;
        }
        if (spec.significant_words) {
            auto v = g.view();
            if (std::none_of(v.begin(), v.end(), [&](TokenId w) { return significant.contains(w); })) continue;
        }
        kept.insert(g);
    }
    return kept;
}

void write_ngram_tsv(std::ostream& out, NGramMap<double> const& ngram_totals, Vocabulary const& vocab,
                     PairStats const* stats)
{
    struct Row {
        std::string name;
        NGram gram;
        double count;
    };
    std::vector<Row> rows;
    rows.reserve(ngram_totals.size());
    for (auto const& [g, n] : ngram_totals) rows.push_back({ngram_name(g, vocab), g, n});
    std::sort(rows.begin(), rows.end(), [](Row const& a, Row const& b) {
        return a.count != b.count ? a.count > b.count : a.name < b.name;
    });
    out << "ngram\tarity\tcount\tmi\n";
    for (auto const& r : rows) {
        fmt::print(out, "{}\t{}\t{}\t", r.name, static_cast<int>(r.gram.arity), r.count);
        if (stats && r.gram.arity == 2 && stats->pair_count(r.gram) > 0.0) {
            fmt::print(out, "{}", pair_mi(*stats, r.gram));
        }
        out << '\n';
    }
}

} // namespace cohortsift
