#include "cohortsift/app.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cohortsift {

namespace fs = std::filesystem;

PipelineConfig ExperimentConfig::pipeline() const
{
    PipelineConfig p;
    p.positive_label = pos_group;
    p.negative_label = neg_group;
    p.arity = arity;
    p.cuts.min_word_count = min_word_count;
    p.cuts.min_ngram_count = min_ngram_count;
    p.cuts.min_mi = min_mi;
    if (!significant_words_file.empty()) p.cuts.significant_words = read_word_list(significant_words_file);
    p.num_thresholds = thresholds;
    p.static_features = static_features;
    return p;
}

TrainConfig ExperimentConfig::train() const
{
    TrainConfig t;
    t.static_features = static_features;
    t.dynamic_features = dynamic_features;
    t.eval_budget = eval_budget;
    t.seed = seed;
    t.restart_stagnation = restart_stagnation;
    return t;
}

void ExperimentConfig::validate() const
{
    auto require = [](bool ok, std::string const& what) {
        if (!ok) throw Error(what);
    };
    require(arity >= 1 && arity <= 4, fmt::format("--arity must be 1..4, got {}", arity));
    require(thresholds >= 1 && thresholds <= 3, fmt::format("--thresholds must be 1..3, got {}", thresholds));
    require(min_word_count >= 0 && min_ngram_count >= 0, "minimum counts must be >= 0");
    require(static_features >= 1, "--static-features must be >= 1");
    require(dynamic_features >= 1, "--dynamic-features must be >= 1");
    require(eval_budget >= 1, "--eval-budget must be >= 1");
    require(restart_stagnation >= 1, "restart_stagnation must be >= 1");
    require(k >= 2, "--k must be >= 2");
    require(seeds >= 1, "--seeds must be >= 1");
    require(model_size >= 1, "--model-size must be >= 1");
    require(pos_group != neg_group, "--pos-group and --neg-group must differ");
    require(emit_significant == "none" || emit_significant.starts_with("from-feature-selection:") ||
                emit_significant.starts_with("from-ensemble:"),
            fmt::format("unknown significant-words source '{}'", emit_significant));
}

nlohmann::ordered_json to_json(ExperimentConfig const& c)
{
    nlohmann::ordered_json j;
    j["input"] = c.input;
    j["pos_group"] = c.pos_group;
    j["neg_group"] = c.neg_group;
    j["arity"] = c.arity;
    j["min_word_count"] = c.min_word_count;
    j["min_ngram_count"] = c.min_ngram_count;
    j["min_mi"] = c.min_mi ? nlohmann::ordered_json(*c.min_mi) : nlohmann::ordered_json(nullptr);
    j["significant_words"] = c.significant_words_file;
    j["thresholds"] = c.thresholds;
    j["static_features"] = c.static_features;
    j["dynamic_features"] = c.dynamic_features;
    j["eval_budget"] = c.eval_budget;
    j["restart_stagnation"] = c.restart_stagnation;
    j["k"] = c.k;
    j["seeds"] = c.seeds;
    j["model_size"] = c.model_size;
    j["emit_significant"] = c.emit_significant;
    j["out"] = c.out;
    j["seed"] = c.seed;
    return j;
}

void apply_json(ExperimentConfig& c, nlohmann::json const& j)
{
    if (!j.is_object()) throw Error("config must be a JSON object");
    try {
        for (auto const& [key, v] : j.items()) {
            if (key == "input") c.input = v.get<std::string>();
            else if (key == "pos_group") c.pos_group = v.get<int>();
            else if (key == "neg_group") c.neg_group = v.get<int>();
            else if (key == "arity") c.arity = v.get<int>();
            else if (key == "min_word_count") c.min_word_count = v.get<double>();
            else if (key == "min_ngram_count") c.min_ngram_count = v.get<double>();
            else if (key == "min_mi") c.min_mi = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
            else if (key == "significant_words") c.significant_words_file = v.get<std::string>();
            else if (key == "thresholds") c.thresholds = v.get<int>();
            else if (key == "static_features") c.static_features = v.get<std::size_t>();
            else if (key == "dynamic_features") c.dynamic_features = v.get<std::size_t>();
            else if (key == "eval_budget") c.eval_budget = v.get<std::size_t>();
            else if (key == "restart_stagnation") c.restart_stagnation = v.get<std::size_t>();
            else if (key == "k") c.k = v.get<std::size_t>();
            else if (key == "seeds") c.seeds = v.get<std::size_t>();
            else if (key == "model_size") c.model_size = v.get<std::size_t>();
            else if (key == "emit_significant") c.emit_significant = v.get<std::string>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "jobs") c.jobs = v.get<std::size_t>();
            else throw Error(fmt::format("unknown config key '{}'", key));
        }
    } catch (nlohmann::json::exception const& e) {
        throw Error(fmt::format("bad config value: {}", e.what()));
    }
}

std::vector<int> default_occurrence_thresholds()
{
    return {1, 2, 3, 4, 5, 8, 16, 32, 64};
}

std::set<std::string> read_word_list(std::string const& path)
{
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open '{}'", path));
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        for (auto& t : tokenize(line)) words.insert(std::move(t));
    }
    return words;
}

namespace {

std::ofstream open_out(fs::path const& p)
{
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", p.string()));
    return out;
}

Corpus load_corpus(std::string const& input)
{
    auto records = read_jsonl_file(input);
    if (records.empty()) throw Error(fmt::format("'{}' holds no records", input));
    return Corpus::build(std::move(records));
}

} // namespace

void cmd_stats(std::string const& input, std::string const& out, std::ostream& log)
{
    Corpus const corpus = load_corpus(input);
    fs::path const dir(out);
    auto const ranks = rank_distribution(corpus);
    {
        auto f = open_out(dir / "rank.tsv");
        write_rank_tsv(f, ranks);
    }
    {
        auto const th = default_occurrence_thresholds();
        auto f = open_out(dir / "occurrence.tsv");
        write_occurrence_tsv(f, word_occurrence_table(corpus, th));
    }
    {
        PairStats const stats = PairStats::from_corpus(corpus);
        auto f = open_out(dir / "pairs.tsv");
        write_ngram_tsv(f, stats.pair_counts(), corpus.vocabulary(), &stats);
    }
    {
        auto f = open_out(dir / "zipf.tsv");
        f << "amplitude\tshift\texponent\tresidual\n";
        if (ranks.size() >= 3) {
            ZipfFit const z = fit_zipf_mandelbrot(ranks);
            fmt::print(f, "{}\t{}\t{}\t{}\n", z.amplitude, z.shift, z.exponent, z.residual);
        }
    }
    fmt::print(log, "{} records, {} tokens, {} distinct\n", corpus.size(), corpus.total_count(), ranks.size());
}

std::vector<std::string> significant_words_by_mi(Corpus const& corpus, ExperimentConfig const& config,
                                                 std::size_t count)
{
    PipelineConfig p = config.pipeline();
    p.arity = 1;
    p.cuts.min_mi.reset();
    p.cuts.significant_words.reset();
    RecordBags const bags(corpus, 1);
    auto const ids = cohort_records(corpus, p);
    std::vector<std::size_t> none;
    p.static_features = std::numeric_limits<std::size_t>::max();
    FoldFeatures const all = prepare_fold(bags, ids, none, p);
    std::vector<std::string> words;
    std::set<std::string> seen;
    for (auto const& f : all.train.features()) {
        if (words.size() >= count) break;
        if (seen.insert(f.term).second) words.push_back(f.term);
    }
    std::sort(words.begin(), words.end());
    return words;
}

std::vector<std::string> significant_words_from_ensemble(Corpus const& corpus, ExperimentConfig const& config,
                                                         std::size_t models)
{
    PipelineConfig p = config.pipeline();
    p.arity = 1;
    p.cuts.min_mi.reset();
    p.cuts.significant_words.reset();
    RecordBags const bags(corpus, 1);
    auto const ids = cohort_records(corpus, p);
    std::vector<std::size_t> none;
    FoldFeatures const all = prepare_fold(bags, ids, none, p);
    std::size_t const n = models * config.model_size;
    std::vector<Representation> reps(n);
    TrainConfig const base = config.train();
    parallel_for(n, config.jobs, [&](std::size_t r) {
        TrainConfig c = base;
        c.seed = rep_seed(base.seed, r);
        reps[r] = train_representation(all.train, c);
    });
    auto const kw = extract_keywords(reps, all.train.features());
    std::set<std::string> words(kw.positive.begin(), kw.positive.end());
    words.insert(kw.negative.begin(), kw.negative.end());
    return {words.begin(), words.end()};
}

CrossValidation cmd_cv(ExperimentConfig const& config, std::ostream& log)
{
    config.validate();
    Corpus const corpus = load_corpus(config.input);
    PipelineConfig const pipeline = config.pipeline();
    if (config.model_size % 2 == 0) {
        fmt::print(log, "warning: even model size {}; tied votes resolve to group {}\n", config.model_size,
                   config.neg_group);
    }
    PreparedFolds const prepared = prepare_folds(corpus, pipeline, config.k, config.jobs);
    CrossValidation const cv = evaluate_folds(prepared, config.train(), config.model_size, config.jobs);

    fs::path const dir(config.out);
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        fs::path const fd = dir / fmt::format("fold_{}", f);
        auto const& fold = prepared.folds[f];
        {
            auto o = open_out(fd / "thresholds.tsv");
            write_thresholds_tsv(o, fold.thresholds);
        }
        {
            auto o = open_out(fd / "features.tsv");
            o << "rank\tfeature\n";
            for (std::size_t j = 0; j < fold.train.cols(); ++j) {
                fmt::print(o, "{}\t{}\n", j + 1, fold.train.feature(j).name());
            }
        }
        {
            auto o = open_out(fd / "train.fm");
            write_feature_matrix(o, fold.train);
        }
        {
            auto o = open_out(fd / "model.txt");
            write_model(o, cv.folds[f].model, "train.fm");
        }
        {
            auto o = open_out(fd / "reps.tsv");
            o << "seed\ttrain_accuracy\tevaluations\n";
            for (auto const& r : cv.folds[f].model.reps) {
                fmt::print(o, "{}\t{:.6f}\t{}\n", r.seed, r.train_accuracy, r.evaluations_used);
            }
        }
    }
    {
        auto o = open_out(dir / "confusion.tsv");
        write_confusion_tsv_header(o);
        for (std::size_t f = 0; f < cv.folds.size(); ++f) {
            write_confusion_tsv_row(o, fmt::format("fold_{}", f).c_str(), cv.folds[f].confusion);
        }
        write_confusion_tsv_row(o, "pooled", cv.pooled);
    }
    if (config.emit_significant != "none") {
        auto const colon = config.emit_significant.find(':');
        std::size_t const n = std::stoul(config.emit_significant.substr(colon + 1));
        auto const words = config.emit_significant.starts_with("from-ensemble:")
                               ? significant_words_from_ensemble(corpus, config, n)
                               : significant_words_by_mi(corpus, config, n);
        auto o = open_out(dir / "significant_words.txt");
        for (auto const& w : words) o << w << '\n';
    }
    {
        auto o = open_out(dir / "manifest.json");
        o << to_json(config).dump(2) << '\n';
    }
    fmt::print(log, "pooled accuracy {:.4f} over {} held-out records\n", cv.pooled_metrics.accuracy,
               cv.pooled.total());
    return cv;
}

namespace {

void write_seed_list(std::ostream& o, SweepResult const& r)
{
    o << "seed_index\taccuracy\n";
    for (std::size_t i = 0; i < r.accuracies.size(); ++i) fmt::print(o, "{}\t{:.6f}\n", i, r.accuracies[i]);
}

} // namespace

void cmd_sweep(std::string const& grid_file, std::string const& out, std::size_t jobs, std::ostream& log)
{
    std::ifstream in(grid_file);
    if (!in) throw Error(fmt::format("cannot open '{}'", grid_file));
    nlohmann::json spec;
    try {
        spec = nlohmann::json::parse(in);
    } catch (nlohmann::json::exception const& e) {
        throw Error(fmt::format("{}: {}", grid_file, e.what()));
    }
    if (!spec.is_object()) throw Error("grid file must hold a JSON object");

    ExperimentConfig base;
    if (spec.contains("base")) apply_json(base, spec["base"]);
    base.jobs = jobs;
    base.validate();

    // Cartesian product over the grid axes, in key order.
    std::vector<std::pair<std::string, nlohmann::json>> axes;
    if (spec.contains("grid")) {
        if (!spec["grid"].is_object()) throw Error("'grid' must be an object of value lists");
        if (spec["grid"].empty()) throw Error("empty grid");
        for (auto const& [key, values] : spec["grid"].items()) {
            if (!values.is_array()) throw Error(fmt::format("grid axis '{}' must be a list", key));
            axes.emplace_back(key, values);
        }
    }
    std::size_t points = 1;
    for (auto const& [key, values] : axes) points *= values.size();
    if (points == 0) throw Error("empty grid");

    Corpus const corpus = load_corpus(base.input);
    std::vector<SweepPoint> grid;
    for (std::size_t i = 0; i < points; ++i) {
        ExperimentConfig c = base;
        std::string descriptor;
        std::size_t rest = i;
        for (auto const& [key, values] : axes) {
            auto const& v = values[rest % values.size()];
            rest /= values.size();
            apply_json(c, nlohmann::json{{key, v}});
            descriptor += fmt::format("{}{}={}", descriptor.empty() ? "" : ",", key, v.dump());
        }
        c.validate();
        grid.push_back({descriptor.empty() ? "base" : descriptor, c.pipeline(), c.train(), c.k, c.model_size});
    }

    fs::path const dir(out);
    auto const results = sweep(corpus, grid, base.seeds, jobs);
    {
        auto o = open_out(dir / "sweep.tsv");
        write_sweep_tsv(o, results);
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
        auto h = open_out(dir / fmt::format("histogram_{}.tsv", i));
        write_histogram_tsv(h, results[i]);
        auto s = open_out(dir / fmt::format("seeds_{}.tsv", i));
        write_seed_list(s, results[i]);
        fmt::print(log, "{}: mean {:.4f} sd {:.4f}\n", results[i].descriptor, results[i].mean, results[i].std_dev);
    }

    if (spec.contains("voting")) {
        auto const& v = spec["voting"];
        std::vector<std::size_t> sizes;
        std::size_t models = 0;
        try {
            sizes = v.at("sizes").get<std::vector<std::size_t>>();
            models = v.at("models").get<std::size_t>();
        } catch (nlohmann::json::exception const& e) {
            throw Error(fmt::format("bad 'voting' section: {}", e.what()));
        }
        PreparedFolds const prepared = prepare_folds(corpus, base.pipeline(), base.k, jobs);
        auto const voting = voting_sweep(prepared, base.train(), sizes, models, jobs);
        auto o = open_out(dir / "voting.tsv");
        write_sweep_tsv(o, voting);
        for (std::size_t i = 0; i < voting.size(); ++i) {
            auto h = open_out(dir / fmt::format("voting_histogram_{}.tsv", sizes[i]));
            write_histogram_tsv(h, voting[i]);
            fmt::print(log, "{}: mean {:.4f} sd {:.4f}\n", voting[i].descriptor, voting[i].mean, voting[i].std_dev);
        }
    }
    {
        auto o = open_out(dir / "manifest.json");
        o << spec.dump(2) << '\n';
    }
}

KeywordReport keyword_report(std::vector<std::string> const& model_files)
{
    std::map<std::string, std::size_t> pos, neg;
    KeywordReport report;
    for (auto const& path : model_files) {
        auto const mf = read_model_file(path);
        for (auto const& r : mf.model.reps) {
            ++report.representations;
            std::set<std::string> p, n;
            for (auto const* lit : r.tree.literals()) {
                (lit->negated() ? n : p).insert(mf.model.features[lit->feature()].term);
            }
            for (auto const& t : p) ++pos[t];
            for (auto const& t : n) ++neg[t];
        }
    }
    double const total = static_cast<double>(std::max<std::size_t>(report.representations, 1));
    for (auto const& [t, c] : pos) report.positive.push_back({t, static_cast<double>(c) / total});
    for (auto const& [t, c] : neg) report.negative.push_back({t, static_cast<double>(c) / total});
    return report;
}

void write_keyword_tsv(std::ostream& out, KeywordReport const& report)
{
    out << "polarity\tterm\tshare\n";
    for (auto const& k : report.positive) fmt::print(out, "positive\t{}\t{:.6f}\n", k.term, k.share);
    for (auto const& k : report.negative) fmt::print(out, "negative\t{}\t{:.6f}\n", k.term, k.share);
}

} // namespace cohortsift
