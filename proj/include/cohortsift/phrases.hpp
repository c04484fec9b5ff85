#pragma once

#include "cohortsift/corpus.hpp"

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cohortsift {

// Skip-gram enumeration. Pairs are every adjacent pair plus every pair with
// one elided middle word; trigrams are the C(4,3) order-preserving picks from
// each window of four consecutive words; fourgrams the C(5,4) picks from each
// window of five. A sequence exactly as long as the n-gram yields itself.

template <class T, class F>
void for_each_pair(std::span<T const> tokens, F&& emit)
{
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        emit(std::array<T, 2>{tokens[i], tokens[i + 1]});
        if (i + 2 < tokens.size()) {
            emit(std::array<T, 2>{tokens[i], tokens[i + 2]});
        }
    }
}

template <class T, class F>
void for_each_trigram(std::span<T const> tokens, F&& emit)
{
    if (tokens.size() == 3) {
        emit(std::array<T, 3>{tokens[0], tokens[1], tokens[2]});
        return;
    }
    static constexpr std::array<std::array<int, 3>, 4> picks{{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
    for (std::size_t w = 0; w + 4 <= tokens.size(); ++w) {
        for (auto const& p : picks) {
            emit(std::array<T, 3>{tokens[w + p[0]], tokens[w + p[1]], tokens[w + p[2]]});
        }
    }
}

template <class T, class F>
void for_each_fourgram(std::span<T const> tokens, F&& emit)
{
    if (tokens.size() == 4) {
        emit(std::array<T, 4>{tokens[0], tokens[1], tokens[2], tokens[3]});
        return;
    }
    static constexpr std::array<std::array<int, 4>, 5> picks{
        {{0, 1, 2, 3}, {0, 1, 2, 4}, {0, 1, 3, 4}, {0, 2, 3, 4}, {1, 2, 3, 4}}};
    for (std::size_t w = 0; w + 5 <= tokens.size(); ++w) {
        for (auto const& p : picks) {
            emit(std::array<T, 4>{tokens[w + p[0]], tokens[w + p[1]], tokens[w + p[2]], tokens[w + p[3]]});
        }
    }
}

template <class T>
std::vector<std::array<T, 2>> generate_pairs(std::span<T const> tokens)
{
    std::vector<std::array<T, 2>> out;
    for_each_pair(tokens, [&](auto const& g) { out.push_back(g); });
    return out;
}

template <class T>
std::vector<std::array<T, 3>> generate_trigrams(std::span<T const> tokens)
{
    std::vector<std::array<T, 3>> out;
    for_each_trigram(tokens, [&](auto const& g) { out.push_back(g); });
    return out;
}

template <class T>
std::vector<std::array<T, 4>> generate_fourgrams(std::span<T const> tokens)
{
    std::vector<std::array<T, 4>> out;
    for_each_fourgram(tokens, [&](auto const& g) { out.push_back(g); });
    return out;
}

// An n-gram of 1..4 interned tokens. Unused trailing slots are zero.
struct NGram {
    std::array<TokenId, 4> words{};
    std::uint8_t arity = 0;

    NGram() = default;
    explicit NGram(std::span<TokenId const> ids);
    template <std::size_t N>
    explicit NGram(std::array<TokenId, N> const& ids) : NGram(std::span<TokenId const>(ids))
    {
    }

    [[nodiscard]] std::span<TokenId const> view() const noexcept { return {words.data(), arity}; }
    [[nodiscard]] bool contains(TokenId id) const noexcept;

    friend auto operator<=>(NGram const&, NGram const&) = default;
};

struct NGramHash {
    std::size_t operator()(NGram const& g) const noexcept;
};

template <class V>
using NGramMap = std::unordered_map<NGram, V, NGramHash>;
using NGramSet = std::unordered_set<NGram, NGramHash>;

/// Words joined with '_' (the external name of an n-gram).
[[nodiscard]] std::string ngram_name(NGram const& g, Vocabulary const& vocab);

/// Counts of every n-gram of arity 1..max_arity in each note of record i.
/// N-grams never span two notes.
[[nodiscard]] NGramMap<double> record_ngrams(Corpus const& corpus, std::size_t record, int max_arity);

// Pooled adjacent and skip-one pair counts with their marginals.
class PairStats {
public:
    PairStats() = default;

    void add(NGram const& pair, double count = 1.0);

    /// Pools the pairs of the given records (all records if `records` empty).
    [[nodiscard]] static PairStats from_corpus(Corpus const& corpus, std::span<std::size_t const> records = {});

    [[nodiscard]] NGramMap<double> const& pair_counts() const noexcept { return pair_count_; }
    [[nodiscard]] double pair_count(NGram const& pair) const;
    [[nodiscard]] double left_marginal(TokenId x) const;
    [[nodiscard]] double right_marginal(TokenId y) const;
    [[nodiscard]] double total_pairs() const noexcept { return total_; }

private:
    NGramMap<double> pair_count_;
    std::unordered_map<TokenId, double> left_;
    std::unordered_map<TokenId, double> right_;
    double total_ = 0.0;
};

/// Pointwise mutual information log2(p(x,y) / (p(x,*) p(*,y))), positive for
/// collocations. Throws Error if the pair was never observed.
[[nodiscard]] double pair_mi(PairStats const& stats, NGram const& pair);

struct CutSpec {
    double min_word_count = 0.0;
    double min_ngram_count = 0.0;
    std::optional<double> min_mi;
    std::optional<std::set<std::string>> significant_words;
};

/// Keeps an n-gram iff its count exceeds min_ngram_count, a single word's
/// count exceeds min_word_count, a pair's MI exceeds min_mi (when set) and some
/// component word is significant (when a set is given). Single words are
/// exempt from the MI and significance tests; MI is only defined for pairs.
[[nodiscard]] NGramSet apply_cuts(NGramMap<double> const& ngram_totals, Vocabulary const& vocab,
                                  PairStats const& stats, CutSpec const& spec);

/// TSV dump: ngram, arity, count, mi (blank unless arity 2). Rows sorted by
/// descending count, then name.
void write_ngram_tsv(std::ostream& out, NGramMap<double> const& ngram_totals, Vocabulary const& vocab,
                     PairStats const* stats);

} // namespace cohortsift
