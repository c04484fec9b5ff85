#include "cohortsift/corpus.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

namespace cohortsift {

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    for (char ch : text) {
        auto const c = static_cast<unsigned char>(ch);
        if (c == '-' || c == '_') {
            continue;
        }
        if (c >= 'a' && c <= 'z') {
            current.push_back(static_cast<char>(c - 'a' + 'A'));
        } else if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) {
            current.push_back(static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

TokenId Vocabulary::intern(std::string_view token)
{
    std::string key(token);
    if (auto it = ids_.find(key); it != ids_.end()) {
        return it->second;
    }
    auto const id = static_cast<TokenId>(names_.size());
    names_.push_back(key);
    ids_.emplace(std::move(key), id);
    return id;
}

TokenId const* Vocabulary::find(std::string_view token) const
{
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? nullptr : &it->second;
}

namespace {

void check_unique_ids(std::span<PatientRecord const> records)
{
    std::unordered_set<std::string> seen;
    for (auto const& r : records) {
        if (!seen.insert(r.id).second) {
            throw Error(fmt::format("duplicate record id '{}'", r.id));
        }
    }
}

} // namespace

Corpus Corpus::build(std::vector<PatientRecord> records)
{
    check_unique_ids(records);
    Corpus c;
    c.records_ = std::move(records);
    c.note_tokens_.resize(c.records_.size());
    c.counts_.resize(c.records_.size());
    for (std::size_t i = 0; i < c.records_.size(); ++i) {
        for (auto const& note : c.records_[i].notes) {
            auto& ids = c.note_tokens_[i].emplace_back();
            for (auto const& tok : tokenize(note)) {
                TokenId const id = c.vocab_.intern(tok);
                ids.push_back(id);
                c.counts_[i][id] += 1.0;
            }
        }
    }
    c.totals_.assign(c.vocab_.size(), 0.0);
    for (auto const& counts : c.counts_) {
        for (auto const& [id, n] : counts) {
            c.totals_[id] += n;
            c.total_count_ += n;
        }
    }
    return c;
}

Corpus Corpus::from_counts(std::vector<PatientRecord> records,
                           std::vector<std::map<std::string, double>> const& counts)
{
    if (counts.size() != records.size()) {
        throw Error("from_counts: one count map per record required");
    }
    check_unique_ids(records);
    Corpus c;
    c.records_ = std::move(records);
    c.note_tokens_.resize(c.records_.size());
    c.counts_.resize(c.records_.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        for (auto const& [tok, n] : counts[i]) {
            if (!(n >= 0.0)) {
                throw Error(fmt::format("negative count for '{}' in record '{}'", tok, c.records_[i].id));
            }
            if (n > 0.0) {
                c.counts_[i][c.vocab_.intern(tok)] += n;
            }
        }
    }
    c.totals_.assign(c.vocab_.size(), 0.0);
    for (auto const& m : c.counts_) {
        for (auto const& [id, n] : m) {
            c.totals_[id] += n;
            c.total_count_ += n;
        }
    }
    return c;
}

double Corpus::count(std::size_t i, TokenId token) const
{
    auto const& m = counts_.at(i);
    auto it = m.find(token);
    return it == m.end() ? 0.0 : it->second;
}

double Corpus::total(std::string_view token) const
{
    TokenId const* id = vocab_.find(token);
    return id ? totals_[*id] : 0.0;
}

std::vector<int> Corpus::groups() const
{
    std::vector<int> g;
    for (auto const& r : records_) g.push_back(r.group);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

std::vector<RankEntry> rank_distribution(Corpus const& corpus)
{
    auto const& totals = corpus.totals();
    std::vector<RankEntry> entries;
    for (TokenId id = 0; id < totals.size(); ++id) {
        if (totals[id] > 0.0) {
            entries.push_back({corpus.vocabulary().name(id), totals[id], 0, 0.0});
        }
    }
    if (entries.empty()) {
        throw Error("rank distribution of an empty corpus");
    }
    std::sort(entries.begin(), entries.end(), [](RankEntry const& a, RankEntry const& b) {
        return a.count != b.count ? a.count > b.count : a.token < b.token;
    });
    double const sum = std::accumulate(entries.begin(), entries.end(), 0.0,
                                       [](double acc, RankEntry const& e) { return acc + e.count; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
        entries[i].rank = i + 1;
        entries[i].normalized_frequency = entries[i].count / sum;
    }
    return entries;
}

std::map<int, std::size_t> word_occurrence_table(Corpus const& corpus, std::span<int const> thresholds)
{
    std::vector<double> sorted;
    for (double t : corpus.totals()) {
        if (t > 0.0) sorted.push_back(t);
    }
    std::sort(sorted.begin(), sorted.end());
    std::map<int, std::size_t> table;
    for (int k : thresholds) {
        if (k < 1) {
            throw Error(fmt::format("occurrence threshold must be >= 1, got {}", k));
        }
        auto it = std::lower_bound(sorted.begin(), sorted.end(), static_cast<double>(k));
        table[k] = static_cast<std::size_t>(sorted.end() - it);
    }
    return table;
}

double ZipfFit::predict(double rank) const
{
    return amplitude * std::pow(rank + shift, -exponent);
}

namespace {

struct LineFit {
    double log_amplitude;
    double exponent;
    double residual;
};

// Exact least squares of y = a - e*log(r + s) for fixed s.
LineFit fit_for_shift(std::span<double const> ranks, std::span<double const> logf, double shift)
{
    double const n = static_cast<double>(ranks.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        double const x = std::log(ranks[i] + shift);
        sx += x;
        sy += logf[i];
        sxx += x * x;
        sxy += x * logf[i];
    }
    double const mx = sx / n;
    double const my = sy / n;
    double const vxx = sxx / n - mx * mx;
    double const vxy = sxy / n - mx * my;
    double const slope = vxx > 0 ? vxy / vxx : 0.0;
    LineFit fit{my - slope * mx, -slope, 0.0};
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        double const r = logf[i] - (fit.log_amplitude - fit.exponent * std::log(ranks[i] + shift));
        fit.residual += r * r;
    }
    return fit;
}

} // namespace

ZipfFit fit_zipf_mandelbrot(std::span<RankEntry const> entries)
{
    std::vector<double> ranks;
    std::vector<double> logf;
    for (auto const& e : entries) {
        if (e.normalized_frequency > 0.0 && e.rank >= 1) {
            ranks.push_back(static_cast<double>(e.rank));
            logf.push_back(std::log(e.normalized_frequency));
        }
    }
    if (ranks.size() < 3) {
        throw Error("Zipf-Mandelbrot fit needs at least three positive entries");
    }

    auto profile = [&](double s) { return fit_for_shift(ranks, logf, s).residual; };

    // Geometric grid over shifts, then Brent refinement inside the winning
    // bracket.
    std::vector<double> grid{0.0};
    double const max_rank = *std::max_element(ranks.begin(), ranks.end());
    for (double s = 1e-4; s <= 10.0 * max_rank; s *= 1.15) {
        grid.push_back(s);
    }
    std::size_t best = 0;
    double best_res = profile(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double const r = profile(grid[i]);
        if (r < best_res) {
            best_res = r;
            best = i;
        }
    }
    double const lo = best == 0 ? 0.0 : grid[best - 1];
    double const hi = best + 1 < grid.size() ? grid[best + 1] : grid[best];
    double shift = grid[best];
    if (hi > lo) {
        boost::uintmax_t max_iter = 10000;
        auto const [s_opt, r_opt] = boost::math::tools::brent_find_minima(
            profile, lo, hi, std::numeric_limits<double>::digits, max_iter);
        if (r_opt <= best_res) {
            shift = s_opt;
        }
    }
    LineFit const fit = fit_for_shift(ranks, logf, shift);
    return ZipfFit{std::exp(fit.log_amplitude), shift, fit.exponent, fit.residual};
}

std::vector<PatientRecord> read_jsonl(std::istream& in)
{
    std::vector<PatientRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto const j = nlohmann::json::parse(line);
            PatientRecord r;
            r.id = j.at("id").get<std::string>();
            r.group = j.at("group").get<int>();
            if (auto it = j.find("notes"); it != j.end()) {
                r.notes = it->get<std::vector<std::string>>();
            }
            records.push_back(std::move(r));
        } catch (nlohmann::json::exception const& e) {
            throw Error(fmt::format("line {}: malformed record: {}", lineno, e.what()));
        }
    }
    return records;
}

std::vector<PatientRecord> read_jsonl_file(std::string const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(fmt::format("cannot open '{}'", path));
    }
    return read_jsonl(in);
}

void write_jsonl(std::ostream& out, std::span<PatientRecord const> records)
{
    for (auto const& r : records) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["group"] = r.group;
        j["notes"] = r.notes;
        out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
}

void write_rank_tsv(std::ostream& out, std::span<RankEntry const> entries)
{
    out << "rank\ttoken\tcount\tnormalized_frequency\n";
    for (auto const& e : entries) {
        fmt::print(out, "{}\t{}\t{}\t{}\n", e.rank, e.token, e.count, e.normalized_frequency);
    }
}

void write_occurrence_tsv(std::ostream& out, std::map<int, std::size_t> const& table)
{
    out << "threshold\ttokens\n";
    for (auto const& [k, n] : table) {
        fmt::print(out, "{}\t{}\n", k, n);
    }
}

} // namespace cohortsift
