#include "cohortsift/app.hpp"
#include "cohortsift/error.hpp"
#include "cohortsift/synthgen.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <doctest.h>

using namespace cohortsift;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("cohortsift_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(fs::path const& dir)
{
    std::map<std::string, std::string> files;
    for (auto const& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return files;
}

fs::path write_corpus(fs::path const& dir)
{
    SynthSpec spec;
    spec.positive_patients = 30;
    spec.negative_patients = 30;
    spec.min_notes = 3;
    spec.max_notes = 6;
    spec.min_words = 15;
    spec.max_words = 25;
    spec.background_vocab = 500;
    spec.planted_terms = {{"MARKER", 0.6, 0.05}};
    fs::path const p = dir / "corpus.jsonl";
    std::ofstream out(p, std::ios::binary);
    write_jsonl(out, generate(spec).records);
    return p;
}

ExperimentConfig quick_config(fs::path const& input, fs::path const& out)
{
    ExperimentConfig c;
    c.input = input.string();
    c.out = out.string();
    // drop the rare words that are class-pure by chance
    c.min_word_count = 20;
    c.static_features = 200;
    c.dynamic_features = 10;
    c.eval_budget = 300;
    c.model_size = 3;
    return c;
}

} // namespace

TEST_CASE("cmd_stats writes the corpus reports")
{
    TempDir tmp;
    auto const input = write_corpus(tmp.path);
    std::stringstream log;
    cmd_stats(input.string(), (tmp.path / "stats").string(), log);
    for (char const* f : {"rank.tsv", "occurrence.tsv", "pairs.tsv", "zipf.tsv"}) {
        CHECK(fs::exists(tmp.path / "stats" / f));
    }
    std::stringstream rank(slurp(tmp.path / "stats" / "rank.tsv"));
    std::string header, first;
    std::getline(rank, header);
    std::getline(rank, first);
    CHECK(header == "rank\ttoken\tcount\tnormalized_frequency");
    CHECK(first.starts_with("1\tWA\t"));

    std::ofstream(tmp.path / "empty.jsonl").close();
    CHECK_THROWS_AS(cmd_stats((tmp.path / "empty.jsonl").string(), (tmp.path / "x").string(), log), Error);
    std::ofstream(tmp.path / "bad.jsonl") << "{\"id\": \"a\", \"group\": 2, \"notes\": []}\n{oops\n";
    CHECK_THROWS_WITH_AS(cmd_stats((tmp.path / "bad.jsonl").string(), (tmp.path / "x").string(), log),
                         doctest::Contains("line 2"), Error);

    std::ofstream(tmp.path / "utf8.jsonl") << "{\"id\": \"u\", \"group\": 2, \"notes\": [\"caf\xc3\xa9 na\xc3\xafve r\xc3\xa9sum\xc3\xa9 ok\"]}\n";
    cmd_stats((tmp.path / "utf8.jsonl").string(), (tmp.path / "u").string(), log);
    CHECK(slurp(tmp.path / "u" / "rank.tsv").find("CAF\t") != std::string::npos);
}

TEST_CASE("cmd_cv writes reproducible artifacts")
{
    TempDir tmp;
    auto const input = write_corpus(tmp.path);
    auto config = quick_config(input, tmp.path / "run");
    config.emit_significant = "from-feature-selection:20";
    std::stringstream log;
    auto const cv = cmd_cv(config, log);
    CHECK(cv.pooled.total() == 60);
    CHECK(cv.pooled_metrics.accuracy >= 0.8);

    auto const first = snapshot(tmp.path / "run");
    for (char const* f : {"confusion.tsv", "manifest.json", "significant_words.txt", "fold_0/thresholds.tsv",
                          "fold_0/features.tsv", "fold_0/train.fm", "fold_0/model.txt", "fold_4/reps.tsv"}) {
        CHECK_MESSAGE(first.contains(f), f);
    }
    CHECK(first.at("significant_words.txt").find("MARKER\n") != std::string::npos);

    // rerun from the manifest alone
    ExperimentConfig again;
    apply_json(again, nlohmann::json::parse(first.at("manifest.json")));
    fs::remove_all(tmp.path / "run");
    (void)cmd_cv(again, log);
    CHECK(snapshot(tmp.path / "run") == first);

    // thread count does not change any output
    again.jobs = 3;
    fs::remove_all(tmp.path / "run");
    (void)cmd_cv(again, log);
    auto threaded = snapshot(tmp.path / "run");
    threaded.erase("manifest.json");
    auto expected = first;
    expected.erase("manifest.json");
    CHECK(threaded == expected);

    // the significant words feed a later pairs run
    auto pairs = quick_config(input, tmp.path / "pairs");
    pairs.arity = 2;
    pairs.significant_words_file = (tmp.path / "sig.txt").string();
    std::ofstream(pairs.significant_words_file) << first.at("significant_words.txt");
    (void)cmd_cv(pairs, log);
    std::string const features = slurp(tmp.path / "pairs" / "fold_0" / "features.tsv");
    CHECK(features.find("MARKER") != std::string::npos);
}

TEST_CASE("cmd_cv errors")
{
    TempDir tmp;
    auto const input = write_corpus(tmp.path);
    std::stringstream log;
    auto config = quick_config(input, tmp.path / "run");
    config.k = 61;
    CHECK_THROWS_AS((void)cmd_cv(config, log), Error);
    config = quick_config(input, tmp.path / "run");
    config.neg_group = 7;
    CHECK_THROWS_AS((void)cmd_cv(config, log), Error);
    config = quick_config(input, tmp.path / "run");
    config.thresholds = 4;
    CHECK_THROWS_AS((void)cmd_cv(config, log), Error);
    config = quick_config(input, tmp.path / "run");
    config.model_size = 2;
    (void)cmd_cv(config, log);
    CHECK(log.str().find("warning: even model size") != std::string::npos);

    ExperimentConfig c;
    CHECK_THROWS_AS(apply_json(c, nlohmann::json{{"no_such_knob", 1}}), Error);
    CHECK_THROWS_AS(apply_json(c, nlohmann::json{{"eval_budget", "many"}}), Error);
}

TEST_CASE("config json round trip")
{
    ExperimentConfig c;
    c.input = "x.jsonl";
    c.min_mi = 2.5;
    c.thresholds = 3;
    c.seed = 99;
    c.emit_significant = "from-ensemble:4";
    ExperimentConfig d;
    apply_json(d, to_json(c));
    CHECK(to_json(d) == to_json(c));
    CHECK(d.min_mi == 2.5);
}

TEST_CASE("cmd_sweep")
{
    TempDir tmp;
    auto const input = write_corpus(tmp.path);
    nlohmann::json grid = {
        {"base", {{"input", input.string()}, {"static_features", 100}, {"eval_budget", 60}, {"dynamic_features", 5},
                  {"seeds", 3}}},
        {"grid", {{"thresholds", {1, 2}}}},
        {"voting", {{"sizes", {1, 3}}, {"models", 2}}}};
    auto const gf = tmp.path / "grid.json";
    std::ofstream(gf) << grid.dump();
    std::stringstream log;
    cmd_sweep(gf.string(), (tmp.path / "sw").string(), 1, log);
    auto const first = snapshot(tmp.path / "sw");
    std::stringstream sweep(first.at("sweep.tsv"));
    std::string header, a, b, extra;
    std::getline(sweep, header);
    std::getline(sweep, a);
    std::getline(sweep, b);
    CHECK_FALSE(std::getline(sweep, extra));
    CHECK(a.starts_with("thresholds=1\t3\t"));
    CHECK(b.starts_with("thresholds=2\t3\t"));
    for (char const* f : {"histogram_0.tsv", "histogram_1.tsv", "seeds_1.tsv", "voting.tsv", "voting_histogram_3.tsv",
                          "manifest.json"}) {
        CHECK_MESSAGE(first.contains(f), f);
    }
    std::stringstream hist(first.at("histogram_0.tsv"));
    std::string line;
    std::getline(hist, line);
    std::size_t total = 0;
    while (std::getline(hist, line)) total += std::stoul(line.substr(line.find('\t') + 1));
    CHECK(total == 3);

    fs::remove_all(tmp.path / "sw");
    cmd_sweep(gf.string(), (tmp.path / "sw").string(), 2, log);
    CHECK(snapshot(tmp.path / "sw") == first);

    std::ofstream(tmp.path / "empty.json") << R"({"base": {"input": ")" << input.string()
                                           << R"("}, "grid": {"thresholds": []}})";
    CHECK_THROWS_WITH_AS(cmd_sweep((tmp.path / "empty.json").string(), (tmp.path / "e").string(), 1, log),
                         doctest::Contains("empty grid"), Error);
    std::ofstream(tmp.path / "none.json") << R"({"grid": {}})";
    CHECK_THROWS_AS(cmd_sweep((tmp.path / "none.json").string(), (tmp.path / "e").string(), 1, log), Error);
}

TEST_CASE("keyword report")
{
    TempDir tmp;
    std::vector<FeatureId> const f{{"A", 1}, {"B", 2}, {"C", 1}};
    auto write = [&](std::string const& name, std::vector<ProgramTree> trees) {
        Model m;
        m.features = f;
        m.positive_label = 2;
        m.negative_label = 3;
        for (auto& t : trees) m.reps.push_back({std::move(t), 1.0, 1, 1});
        std::ofstream o(tmp.path / name);
        write_model(o, m, "train.fm");
        return (tmp.path / name).string();
    };
    using T = ProgramTree;
    auto const one = write("one.txt", {T::all_of({T::literal(0), T::literal(1, true)})});
    auto r = keyword_report({one});
    REQUIRE(r.positive.size() == 1);
    CHECK(r.positive[0].term == "A");
    CHECK(r.positive[0].share == 1.0);
    REQUIRE(r.negative.size() == 1);
    CHECK(r.negative[0].term == "B");

    std::vector<std::string> files;
    for (int m = 0; m < 10; ++m) {
        std::vector<T> trees;
        for (int k = 0; k < 10; ++k) trees.push_back(k % 2 ? T::any_of({T::literal(2), T::literal(0)}) : T::literal(2));
        files.push_back(write("m" + std::to_string(m) + ".txt", trees));
    }
    r = keyword_report(files);
    CHECK(r.representations == 100);
    CHECK(r.positive[0].term == "A");
    CHECK(r.positive[0].share == doctest::Approx(0.5));
    CHECK(r.positive[1].term == "C");
    CHECK(r.positive[1].share == 1.0);
    CHECK(r.negative.empty());

    std::stringstream ss;
    write_keyword_tsv(ss, r);
    CHECK(ss.str().starts_with("polarity\tterm\tshare\npositive\tA\t0.500000\n"));

    std::ofstream(tmp.path / "junk.txt") << "cohortsift-model\t1\nfeature_table\tx\n";
    CHECK_THROWS_AS((void)keyword_report({(tmp.path / "junk.txt").string()}), Error);
}
