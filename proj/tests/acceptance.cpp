// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include "cohortsift/app.hpp"
#include "cohortsift/corpus.hpp"
#include "cohortsift/evaluation.hpp"
#include "cohortsift/features.hpp"
#include "cohortsift/learner.hpp"
#include "cohortsift/metrics.hpp"
#include "cohortsift/phrases.hpp"
#include "cohortsift/pipeline.hpp"
#include "cohortsift/synthgen.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

using namespace cohortsift;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

fs::path scratch_root()
{
    static fs::path const root = [] {
        auto p = fs::temp_directory_path() / fmt::format("cohortsift-acceptance-{}", ::getpid());
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> snapshot(fs::path const& dir)
{
    std::map<std::string, std::string> out;
    for (auto const& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
    }
    return out;
}

std::string write_records(std::vector<PatientRecord> const& records, fs::path const& path)
{
    std::ofstream out(path, std::ios::binary);
    write_jsonl(out, records);
    return path.string();
}

char const* const kPlanted[] = {"OVERDOSE", "FIREARM", "HOPELESS", "INSOMNIA", "WITHDRAWAL", "ISOLATION"};

// Settings for the paper-scale synthetic corpora: the frequency cut drops the
// long tail of words too rare to be informative at 139 patients.
ExperimentConfig synthetic_config(std::string input, fs::path const& out)
{
    ExperimentConfig c;
    c.input = std::move(input);
    c.min_word_count = 40;
    c.model_size = 5;
    c.out = out.string();
    return c;
}

// --- 1 ---

Verdict metric_oracle()
{
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-4; };
    auto const t5 = metrics_from_confusion({47, 27, 22, 43});
    bool ok = near(t5.accuracy, 0.6475) && near(t5.precision, 0.6351) && near(t5.recall, 0.6812) &&
              near(t5.f1, 0.6573) && near(t5.f2, 0.6714) && near(t5.fp_rate, 0.3857);
    auto const t4 = metrics_from_confusion({265, 3, 11, 277});
    ok = ok && near(t4.accuracy, 0.9748) && near(t4.precision, 0.9888) && near(t4.recall, 0.9601) &&
         near(t4.fp_rate, 0.0107) && near(t4.f1, 0.9743) && near(t4.f2, 0.9657);

    using oracle::Rational;
    std::size_t mismatches = 0, total = 0;
    for (std::int64_t tp = 0; tp <= 20; ++tp) {
        for (std::int64_t fp = 0; fp <= 20; ++fp) {
            for (std::int64_t fn = 0; fn <= 20; ++fn) {
                for (std::int64_t tn = 0; tn <= 20; ++tn) {
                    if (tp + fp + fn + tn == 0) continue;
                    ++total;
                    auto const m = metrics_from_confusion({static_cast<std::size_t>(tp), static_cast<std::size_t>(fp),
                                                           static_cast<std::size_t>(fn), static_cast<std::size_t>(tn)});
                    Rational const p = Rational::of(tp, tp + fp);
                    Rational const r = Rational::of(tp, tp + fn);
                    double const want[] = {Rational::of(tp + tn, tp + fp + fn + tn).value(), p.value(), r.value(),
                                           ((2 * (p * r)) / (p + r)).value(), ((5 * (p * r)) / ((4 * p) + r)).value(),
                                           Rational::of(fp, fp + tn).value()};
                    double const got[] = {m.accuracy, m.precision, m.recall, m.f1, m.f2, m.fp_rate};
                    bool same = true;
                    for (int i = 0; i < 6; ++i) same = same && std::abs(want[i] - got[i]) <= 1e-12;
                    bool const degenerate = tp == 0 || fp + tn == 0;
                    if (!same || m.degenerate != degenerate) ++mismatches;
                }
            }
        }
    }
    return {ok && mismatches == 0,
            fmt::format("tables {}, {} of {} small matrices disagree", ok ? "match" : "differ", mismatches, total)};
}

// --- 2 ---

Verdict table3_anchor()
{
    auto const c = Corpus::from_counts({{"r", 1, {}}}, {{{"THE", 26588}, {"REST", 971189 - 26588}}});
    auto const ranks = rank_distribution(c);
    double lf = 0.0;
    for (auto const& e : ranks) {
        if (e.token == "THE") lf = std::log2(e.normalized_frequency);
    }
    return {std::abs(lf - -5.191) <= 1e-3, fmt::format("log2 frequency {:.4f}", lf)};
}

// --- 3 ---

std::string word_name(std::size_t i)
{
    std::string s;
    do {
        s.insert(s.begin(), static_cast<char>('a' + i % 26));
        i /= 26;
    } while (i > 0);
    return "x" + s;
}

Verdict feature_counts()
{
    std::size_t const terms = 31000;
    std::string once, thrice;
    for (std::size_t i = 0; i < terms; ++i) {
        auto const w = word_name(i);
        once += w + " ";
        thrice += w + " " + w + " " + w + " ";
    }
    auto const corpus = Corpus::build({{"a", 2, {once}}, {"b", 3, {thrice}}, {"c", 2, {"unrelated"}}});
    RecordBags const bags(corpus, 1);
    std::vector<std::size_t> const all{0, 1, 2};
    std::vector<NGram> vocab;
    for (auto const& [g, n] : ngram_totals(bags, all)) {
        if (corpus.vocabulary().name(g.words[0]) != "UNRELATED") vocab.push_back(g);
    }
    auto const counts = collect_term_counts(bags, all, vocab);
    std::vector<int> const labels{2, 3, 2};
    std::size_t const one = binarize(counts, fit_thresholds(counts, 1), labels, 2).cols();
    std::size_t const two = binarize(counts, fit_thresholds(counts, 2), labels, 2).cols();
    return {vocab.size() == terms && one == 31000 && two == 62000,
            fmt::format("{} terms: {} features with 1 threshold, {} with 2", vocab.size(), one, two)};
}

// --- 4 ---

template <std::size_t N>
std::multiset<std::vector<std::string>> as_multiset(std::vector<std::array<std::string, N>> const& v)
{
    std::multiset<std::vector<std::string>> m;
    for (auto const& a : v) m.insert(std::vector<std::string>(a.begin(), a.end()));
    return m;
}

std::multiset<std::vector<std::string>> as_multiset(std::vector<std::vector<std::string>> const& v)
{
    return {v.begin(), v.end()};
}

Verdict ngram_enumeration()
{
    using Seq = std::vector<std::string>;
    Seq const balloon = tokenize("big red balloon");
    std::span<std::string const> bs(balloon);
    bool ok = as_multiset(generate_pairs(bs)) ==
                  std::multiset<Seq>{{"BIG", "RED"}, {"RED", "BALLOON"}, {"BIG", "BALLOON"}} &&
              as_multiset(generate_trigrams(bs)) == std::multiset<Seq>{{"BIG", "RED", "BALLOON"}} &&
              generate_fourgrams(bs).empty();

    std::mt19937_64 rng(2718);
    std::uniform_int_distribution<int> len(0, 12), sym(0, 4);
    std::size_t bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Seq s;
        for (int i = len(rng); i > 0; --i) s.push_back(std::string(1, static_cast<char>('A' + sym(rng))));
        std::span<std::string const> sp(s);
        bool const same = as_multiset(generate_pairs(sp)) == oracle::skip_pairs(s) &&
                          as_multiset(generate_trigrams(sp)) == as_multiset(oracle::window_picks(s, 3, 4)) &&
                          as_multiset(generate_fourgrams(sp)) == as_multiset(oracle::window_picks(s, 4, 5));
        bad += !same;
    }
    return {ok && bad == 0, fmt::format("big red balloon {}, {} of 1000 sequences disagree", ok ? "exact" : "wrong", bad)};
}

// --- 5 ---

Verdict pair_mi_oracle()
{
    std::mt19937_64 rng(3141);
    std::uniform_int_distribution<int> len(2, 100), sym(0, 7);
    double worst = 0.0, worst_scaled = 0.0;
    std::size_t pairs = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> words;
        for (int i = len(rng); i > 0; --i) words.push_back(std::string(1, static_cast<char>('A' + sym(rng))));
        std::string text;
        for (auto const& w : words) text += w + " ";
        auto const c = Corpus::build({{"r", 1, {text}}});
        auto const stats = PairStats::from_corpus(c);
        PairStats scaled;
        for (auto const& [g, n] : stats.pair_counts()) scaled.add(g, 13.25 * n);

        std::vector<std::pair<std::string, std::string>> observed;
        for (auto const& p : oracle::skip_pairs(words)) observed.emplace_back(p[0], p[1]);
        for (auto const& [g, n] : stats.pair_counts()) {
            double const want = oracle::pair_mi(observed, c.vocabulary().name(g.words[0]),
                                                c.vocabulary().name(g.words[1]));
            worst = std::max(worst, std::abs(pair_mi(stats, g) - want));
            worst_scaled = std::max(worst_scaled, std::abs(pair_mi(scaled, g) - want));
            ++pairs;
        }
    }
    return {worst <= 1e-12 && worst_scaled <= 1e-12,
            fmt::format("{} pairs, max error {:.2e}, scaled {:.2e}", pairs, worst, worst_scaled)};
}

// --- 6 ---

FeatureMatrix matrix_of(std::vector<std::vector<bool>> const& cols, std::vector<bool> const& labels)
{
    std::vector<FeatureId> ids;
    std::vector<BitVector> bits;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        ids.push_back({"F" + std::to_string(j), 1.0});
        bits.push_back(oracle::to_bits(cols[j]));
    }
    std::vector<int> l(labels.begin(), labels.end());
    return FeatureMatrix(std::move(ids), std::move(bits), std::move(l), 1);
}

// Random tree over six distinct features: literals of random polarity joined
// pairwise in random order by random connectives.
ProgramTree random_six_literal_tree(std::mt19937_64& g, std::size_t width)
{
    std::bernoulli_distribution coin(0.5);
    std::vector<std::size_t> feats(width);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    std::shuffle(feats.begin(), feats.end(), g);
    std::vector<ProgramTree> parts;
    for (int k = 0; k < 6; ++k) parts.push_back(ProgramTree::literal(feats[k], coin(g)));
    while (parts.size() > 1) {
        auto take = [&] {
            std::size_t const i = std::uniform_int_distribution<std::size_t>(0, parts.size() - 1)(g);
            ProgramTree t = parts[i];
            parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(i));
            return t;
        };
        ProgramTree a = take();
        ProgramTree b = take();
        parts.push_back(coin(g) ? ProgramTree::all_of({a, b}) : ProgramTree::any_of({a, b}));
    }
    return parts.front().normalized();
}

Verdict learner_capacity()
{
    std::mt19937_64 rng(77);
    std::vector<std::vector<bool>> cols(12);
    std::vector<bool> labels;
    for (int rep = 0; rep < 10; ++rep) {
        for (int combo = 0; combo < 4; ++combo) {
            bool const a = combo & 1, b = combo & 2;
            cols[0].push_back(a);
            cols[1].push_back(b);
            labels.push_back(a != b);
        }
    }
    for (std::size_t j = 2; j < cols.size(); ++j) cols[j] = oracle::random_bools(rng, labels.size());
    auto const xor_m = matrix_of(cols, labels);
    int solved = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        TrainConfig c;
        c.eval_budget = 10000;
        c.seed = seed;
        solved += train_representation(xor_m, c).train_accuracy == 1.0;
    }

    std::size_t const instances = 50, width = 100, rows = 300;
    std::size_t reached = 0;
    double lowest = 1.0;
    for (std::size_t t = 0; t < instances; ++t) {
        std::mt19937_64 g(9000 + t);
        std::vector<std::vector<bool>> fc(width);
        for (auto& c : fc) c = oracle::random_bools(g, rows);
        ProgramTree const target = random_six_literal_tree(g, width);
        std::vector<BitVector> bits;
        for (auto const& c : fc) bits.push_back(oracle::to_bits(c));
        BitVector const y = target.evaluate(bits, rows);
        std::vector<bool> lab(rows);
        for (std::size_t i = 0; i < rows; ++i) lab[i] = y.test(i);
        TrainConfig c;
        c.eval_budget = 160000;
        double const acc = train_representation(matrix_of(fc, lab), c).train_accuracy;
        reached += acc >= 0.97;
        lowest = std::min(lowest, acc);
    }
    return {solved >= 95 && reached == instances,
            fmt::format("xor solved {}/100; six-literal targets {}/{} at >= 0.97 (lowest {:.4f})", solved, reached,
                        instances, lowest)};
}

// --- 7 and 9 ---

std::vector<std::string> fold_models(fs::path const& run, std::size_t k)
{
    std::vector<std::string> out;
    for (std::size_t f = 0; f < k; ++f) out.push_back((run / fmt::format("fold_{}", f) / "model.txt").string());
    return out;
}

Verdict end_to_end(std::ostream& log)
{
    fs::path const root = scratch_root() / "recovery";
    fs::create_directories(root);
    auto const strong = synth_preset("strong-signal");
    auto const strong_in = write_records(generate(strong).records, root / "strong.jsonl");
    auto const cv = cmd_cv(synthetic_config(strong_in, root / "strong"), log);

    std::stringstream kw;
    write_keyword_tsv(kw, keyword_report(fold_models(root / "strong", 5)));
    std::set<std::string> listed;
    std::string line;
    while (std::getline(kw, line)) {
        std::stringstream fields(line);
        std::string polarity, term;
        fields >> polarity >> term;
        listed.insert(term);
    }
    int found = 0;
    for (char const* t : kPlanted) found += listed.contains(t);

    auto const null = synth_preset("null-signal");
    auto const null_in = write_records(generate(null).records, root / "null.jsonl");
    auto const null_cv = cmd_cv(synthetic_config(null_in, root / "null"), log);
    double const a = cv.pooled_metrics.accuracy, n = null_cv.pooled_metrics.accuracy;
    return {a >= 0.9 && found >= 4 && n >= 0.38 && n <= 0.62,
            fmt::format("strong accuracy {:.4f} with {}/6 planted keywords; null accuracy {:.4f}", a, found, n)};
}

Verdict determinism(std::ostream& log)
{
    fs::path const root = scratch_root() / "recovery";
    auto const first = snapshot(root / "strong");
    ExperimentConfig again;
    apply_json(again, nlohmann::json::parse(first.at("manifest.json")));
    fs::remove_all(root / "strong");
    (void)cmd_cv(again, log);
    bool const cv_same = snapshot(root / "strong") == first;

    fs::path const sw = scratch_root() / "sweep";
    fs::create_directories(sw);
    nlohmann::ordered_json grid;
    grid["base"] = to_json(synthetic_config((root / "null.jsonl").string(), sw));
    grid["base"]["eval_budget"] = 500;
    grid["base"]["model_size"] = 1;
    grid["base"]["seeds"] = 2;
    grid["grid"] = {{"thresholds", {1, 2}}};
    grid["voting"] = {{"sizes", {1, 3}}, {"models", 2}};
    std::ofstream(sw / "grid.json") << grid.dump(2);
    cmd_sweep((sw / "grid.json").string(), (sw / "a").string(), 1, log);
    std::ofstream(sw / "again.json") << slurp(sw / "a" / "manifest.json");
    cmd_sweep((sw / "again.json").string(), (sw / "b").string(), 1, log);
    bool const sweep_same = snapshot(sw / "a") == snapshot(sw / "b");

    std::size_t models = 0;
    for (auto const& [name, body] : first) models += name.ends_with("model.txt");
    return {cv_same && sweep_same && models == 5,
            fmt::format("cv rerun {} ({} files, {} models), sweep rerun {}", cv_same ? "identical" : "differs",
                        first.size(), models, sweep_same ? "identical" : "differs")};
}

// --- 8 ---

Verdict voting_behaviour()
{
    auto const corpus = Corpus::build(generate(synth_preset("weak-signal")).records);
    auto const config = synthetic_config("", scratch_root());
    PreparedFolds const prepared = prepare_folds(corpus, config.pipeline(), 5);
    std::size_t const sizes[] = {1, 31};
    auto const r = voting_sweep(prepared, config.train(), sizes, 50);
    return {r[1].std_dev < r[0].std_dev && r[1].mean >= r[0].mean - 0.01,
            fmt::format("N=1 mean {:.4f} sd {:.4f}; N=31 mean {:.4f} sd {:.4f}", r[0].mean, r[0].std_dev, r[1].mean,
                        r[1].std_dev)};
}

// --- 10 ---

std::vector<RankEntry> zipf_entries(double a, double s, double e, std::size_t n, double noise)
{
    std::mt19937_64 rng(1618);
    std::normal_distribution<double> nd(0.0, noise > 0 ? noise : 1.0);
    std::vector<RankEntry> out;
    for (std::size_t r = 1; r <= n; ++r) {
        double f = a * std::pow(static_cast<double>(r) + s, -e);
        if (noise > 0) f *= 1.0 + nd(rng);
        out.push_back({"T" + std::to_string(r), f, r, f});
    }
    return out;
}

Verdict zipf_round_trip()
{
    auto const exact = fit_zipf_mandelbrot(zipf_entries(0.16, 7.0, 1.0, 2000, 0.0));
    bool const ok = std::abs(exact.amplitude - 0.16) <= 1e-4 && std::abs(exact.shift - 7.0) <= 1e-4 &&
                    std::abs(exact.exponent - 1.0) <= 1e-4;
    auto const noisy = fit_zipf_mandelbrot(zipf_entries(0.16, 7.0, 1.0, 2000, 0.01));
    return {ok && std::abs(noisy.exponent - 1.0) <= 0.05,
            fmt::format("noiseless ({:.6f}, {:.6f}, {:.6f}); 1% noise exponent {:.4f}", exact.amplitude, exact.shift,
                        exact.exponent, noisy.exponent)};
}

// --- 11 ---

Verdict no_leakage(std::ostream& log)
{
    fs::path const root = scratch_root() / "leakage";
    fs::create_directories(root);
    auto records = generate(synth_preset("strong-signal")).records;
    auto config = synthetic_config(write_records(records, root / "a.jsonl"), root / "a");
    config.eval_budget = 3000;
    (void)cmd_cv(config, log);

    auto const corpus = Corpus::build(records);
    auto const ids = cohort_records(corpus, config.pipeline());
    auto const held_out = kfold_split(ids, config.k).front();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> letter(0, 25);
    for (std::size_t r : held_out) {
        for (auto& note : records[r].notes) {
            std::string junk;
            for (int w = 0; w < 40; ++w) junk += fmt::format("zz{}{} FIREARM ", static_cast<char>('a' + letter(rng)), w);
            note = junk;
        }
    }
    config.input = write_records(records, root / "b.jsonl");
    config.out = (root / "b").string();
    (void)cmd_cv(config, log);

    std::size_t compared = 0, differing = 0;
    for (char const* f : {"thresholds.tsv", "features.tsv", "train.fm", "model.txt", "reps.tsv"}) {
        ++compared;
        differing += slurp(root / "a" / "fold_0" / f) != slurp(root / "b" / "fold_0" / f);
    }
    bool const test_changed = slurp(root / "a" / "confusion.tsv") != slurp(root / "b" / "confusion.tsv");
    return {differing == 0 && test_changed,
            fmt::format("{} of {} training artifacts differ after rewriting {} held-out records; held-out results {}",
                        differing, compared, held_out.size(), test_changed ? "changed" : "unchanged")};
}

} // namespace

int main()
{
    std::stringstream log;
    std::vector<std::pair<char const*, std::function<Verdict()>>> const checks{
        {"metric oracle", metric_oracle},
        {"rank frequency anchor", table3_anchor},
        {"feature counts", feature_counts},
        {"n-gram enumeration", ngram_enumeration},
        {"pair MI oracle", pair_mi_oracle},
        {"learner capacity", learner_capacity},
        {"end-to-end recovery", [&] { return end_to_end(log); }},
        {"voting behaviour", voting_behaviour},
        {"determinism", [&] { return determinism(log); }},
        {"Zipf fit round trip", zipf_round_trip},
        {"no leakage", [&] { return no_leakage(log); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        auto const start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = checks[i].second();
        } catch (std::exception const& e) {
            v = {false, fmt::format("error: {}", e.what())};
        }
        double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !v.pass;
        std::cout << fmt::format("{:2d} {} {}: {} [{:.1f} s]", i + 1, v.pass ? "PASS" : "FAIL", checks[i].first,
                                 v.detail, secs)
                  << std::endl;
    }
    fs::remove_all(scratch_root());
    return failures == 0 ? 0 : 1;
}
