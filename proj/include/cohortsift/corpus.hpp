#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cohortsift {

using TokenId = std::uint32_t;

struct PatientRecord {
    std::string id;
    int group = 0;
    std::vector<std::string> notes;

    friend bool operator==(PatientRecord const&, PatientRecord const&) = default;
};

/// Splits free text into uppercase alphanumeric tokens.
///
/// Hyphens and underscores are deleted first so that joined words fuse into
/// one run-on token; every other non-alphanumeric byte (punctuation, control
/// characters, non-ASCII bytes) then acts as whitespace. Digits are kept.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view text);

// Bidirectional token <-> id table. Ids are dense and assigned in first-seen
// order.
class Vocabulary {
public:
    TokenId intern(std::string_view token);
    [[nodiscard]] TokenId const* find(std::string_view token) const;
    [[nodiscard]] std::string const& name(TokenId id) const { return names_.at(id); }
    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, TokenId> ids_;
};

using TokenCounts = std::unordered_map<TokenId, double>;

/// Tokenized, counted collection of patient records.
///
/// Immutable once built. Counts are reals so that normalized counts can be
/// carried through the feature pipeline; ingestion from text yields integers.
class Corpus {
public:
    /// Tokenizes every note. Throws Error naming the first duplicated id.
    [[nodiscard]] static Corpus build(std::vector<PatientRecord> records);

    /// Builds from precomputed per-record counts (possibly non-integer).
    /// `counts[i]` belongs to `records[i]`; the records' notes are ignored.
    [[nodiscard]] static Corpus from_counts(std::vector<PatientRecord> records,
                                            std::vector<std::map<std::string, double>> const& counts);

    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] std::vector<PatientRecord> const& records() const noexcept { return records_; }
    [[nodiscard]] PatientRecord const& record(std::size_t i) const { return records_.at(i); }
    [[nodiscard]] Vocabulary const& vocabulary() const noexcept { return vocab_; }

    /// Token ids of each note of record i, in order.
    [[nodiscard]] std::vector<std::vector<TokenId>> const& note_tokens(std::size_t i) const
    {
        return note_tokens_.at(i);
    }
    [[nodiscard]] TokenCounts const& counts(std::size_t i) const { return counts_.at(i); }
    [[nodiscard]] double count(std::size_t i, TokenId token) const;

    /// Corpus-wide count per token id.
    [[nodiscard]] std::vector<double> const& totals() const noexcept { return totals_; }
    [[nodiscard]] double total(std::string_view token) const;
    [[nodiscard]] double total_count() const noexcept { return total_count_; }

    /// Distinct group labels present, ascending.
    [[nodiscard]] std::vector<int> groups() const;

private:
    std::vector<PatientRecord> records_;
    Vocabulary vocab_;
    std::vector<std::vector<std::vector<TokenId>>> note_tokens_;
    std::vector<TokenCounts> counts_;
    std::vector<double> totals_;
    double total_count_ = 0.0;
};

struct RankEntry {
    std::string token;
    double count = 0.0;
    std::size_t rank = 0;
    double normalized_frequency = 0.0;
};

/// Tokens sorted by descending total count, ties broken lexicographically.
/// Throws Error on an empty vocabulary.
[[nodiscard]] std::vector<RankEntry> rank_distribution(Corpus const& corpus);

/// For each threshold, the number of distinct tokens occurring at least that
/// many times in the whole corpus.
[[nodiscard]] std::map<int, std::size_t> word_occurrence_table(Corpus const& corpus,
                                                               std::span<int const> thresholds);

// predicted frequency = amplitude * (rank + shift)^(-exponent)
struct ZipfFit {
    double amplitude = 0.0;
    double shift = 0.0;
    double exponent = 0.0;
    double residual = 0.0;

    [[nodiscard]] double predict(double rank) const;
};

/// Least-squares fit of the Zipf-Mandelbrot law in log-log space.
///
/// For a fixed shift the log-amplitude and exponent solve a linear least
/// squares problem exactly, so only the shift (constrained >= 0) is searched:
/// a geometric grid scan brackets the minimum of the profile residual and a
/// Brent search refines it. Requires at least three entries with positive
/// counts.
[[nodiscard]] ZipfFit fit_zipf_mandelbrot(std::span<RankEntry const> entries);

// --- I/O ---

/// Parses one record per line: {"id": str, "group": int, "notes": [str...]}.
/// Blank lines are skipped; malformed lines throw Error with the 1-based line
/// number.
[[nodiscard]] std::vector<PatientRecord> read_jsonl(std::istream& in);
[[nodiscard]] std::vector<PatientRecord> read_jsonl_file(std::string const& path);
void write_jsonl(std::ostream& out, std::span<PatientRecord const> records);

void write_rank_tsv(std::ostream& out, std::span<RankEntry const> entries);
void write_occurrence_tsv(std::ostream& out, std::map<int, std::size_t> const& table);

} // namespace cohortsift
