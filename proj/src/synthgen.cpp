#include "cohortsift/synthgen.hpp"

#include "cohortsift/error.hpp"
#include "cohortsift/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cohortsift {

namespace {

std::vector<PlantedTerm> six_terms(double pos, double neg)
{
    std::vector<PlantedTerm> t;
    for (char const* w : {"OVERDOSE", "FIREARM", "HOPELESS", "INSOMNIA", "WITHDRAWAL", "ISOLATION"}) {
        t.push_back({w, pos, neg});
    }
    return t;
}

// Portable draws straight off the engine.
double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_between(std::mt19937_64& rng, std::size_t lo, std::size_t hi)
{
    return lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

std::string background_name(std::size_t index)
{
    std::string s;
    do {
        s.insert(s.begin(), static_cast<char>('a' + index % 26));
        index /= 26;
    } while (index > 0);
    return "w" + s;
}

} // namespace

SynthSpec synth_preset(std::string const& name)
{
    SynthSpec s;
    if (name == "paper-scale") return s;
    if (name == "strong-signal") {
        s.planted_terms = six_terms(0.6, 0.05);
        return s;
    }
    if (name == "null-signal") {
        s.planted_terms = six_terms(0.3, 0.3);
        return s;
    }
    if (name == "weak-signal") {
        s.planted_terms = six_terms(0.05, 0.025);
        return s;
    }
    throw Error(fmt::format("unknown synthetic preset '{}'", name));
}

SynthCorpus generate(SynthSpec const& spec)
{
    if (spec.background_vocab < 1) throw Error("background vocabulary must be >= 1");
    if (spec.min_notes > spec.max_notes || spec.min_words > spec.max_words) {
        throw Error("synthetic ranges must satisfy min <= max");
    }
    for (auto const& t : spec.planted_terms) {
        if (t.rate_pos < 0 || t.rate_neg < 0) throw Error("planted rates must be >= 0");
    }
    for (auto const& p : spec.planted_pairs) {
        if (p.rate_pos < 0 || p.rate_neg < 0) throw Error("planted rates must be >= 0");
    }

    std::set<std::string> reserved;
    auto reserve = [&](std::string const& w) {
        for (auto& t : tokenize(w)) reserved.insert(std::move(t));
    };
    for (auto const& t : spec.planted_terms) reserve(t.token);
    for (auto const& p : spec.planted_pairs) {
        reserve(p.words.first);
        reserve(p.words.second);
    }

    SynthCorpus out;
    out.background.reserve(spec.background_vocab);
    for (std::size_t i = 0; out.background.size() < spec.background_vocab; ++i) {
        std::string name = background_name(i);
        std::string upper = tokenize(name).at(0);
        if (!reserved.contains(upper)) out.background.push_back(std::move(name));
    }

    std::vector<double> cdf(spec.background_vocab);
    double acc = 0.0;
    for (std::size_t r = 0; r < spec.background_vocab; ++r) {
        acc += std::pow(static_cast<double>(r + 1) + spec.zipf_shift, -spec.zipf_exponent);
        cdf[r] = acc;
    }
    for (double& c : cdf) c /= acc;

    std::size_t const patients = spec.positive_patients + spec.negative_patients;
    for (std::size_t p = 0; p < patients; ++p) {
        std::mt19937_64 rng(rep_seed(spec.seed, p));
        bool const positive = p < spec.positive_patients;
        PatientRecord rec;
        rec.id = fmt::format("P{:04d}", p);
        rec.group = positive ? spec.positive_group : spec.negative_group;
        std::size_t const notes = uniform_between(rng, spec.min_notes, spec.max_notes);
        for (std::size_t n = 0; n < notes; ++n) {
            std::size_t const len = uniform_between(rng, spec.min_words, spec.max_words);
            std::vector<std::string> words;
            words.reserve(len + 4);
            for (std::size_t w = 0; w < len; ++w) {
                double const u = uniform01(rng);
                auto const idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                words.push_back(out.background[std::min(idx, cdf.size() - 1)]);
            }
            auto insert_at = [&](std::vector<std::string> ins) {
                std::size_t const at = uniform_between(rng, 0, words.size());
                words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), ins.begin(), ins.end());
            };
            for (auto const& t : spec.planted_terms) {
                if (uniform01(rng) < (positive ? t.rate_pos : t.rate_neg)) insert_at({t.token});
            }
            for (auto const& pp : spec.planted_pairs) {
                if (uniform01(rng) < (positive ? pp.rate_pos : pp.rate_neg)) {
                    insert_at({pp.words.first, pp.words.second});
                }
            }
            out.tokens_emitted += words.size();
            std::string text;
            for (auto const& w : words) {
                if (!text.empty()) text.push_back(' ');
                text += w;
            }
            text.push_back('.');
            rec.notes.push_back(std::move(text));
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

void write_ground_truth_tsv(std::ostream& out, SynthSpec const& spec)
{
    out << "kind\ttoken\trate_pos\trate_neg\n";
    for (auto const& t : spec.planted_terms) fmt::print(out, "term\t{}\t{}\t{}\n", t.token, t.rate_pos, t.rate_neg);
    for (auto const& p : spec.planted_pairs) {
        fmt::print(out, "pair\t{}_{}\t{}\t{}\n", p.words.first, p.words.second, p.rate_pos, p.rate_neg);
    }
}

} // namespace cohortsift
