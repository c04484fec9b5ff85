#include "cohortsift/error.hpp"
#include "cohortsift/evaluation.hpp"
#include "cohortsift/synthgen.hpp"

#include "oracles.hpp"

#include <numeric>
#include <sstream>

#include <doctest.h>

using namespace cohortsift;

namespace {

// 139 short records, positives first, with one strongly planted term.
Corpus small_corpus(std::uint64_t seed = 3)
{
    SynthSpec spec;
    spec.min_notes = 2;
    spec.max_notes = 4;
    spec.min_words = 10;
    spec.max_words = 20;
    spec.background_vocab = 30;
    spec.planted_terms = {{"SIGNAL", 0.7, 0.05}};
    spec.seed = seed;
    return Corpus::build(generate(spec).records);
}

TrainConfig quick_train()
{
    TrainConfig t;
    t.eval_budget = 300;
    t.dynamic_features = 10;
    return t;
}

PipelineConfig small_pipeline()
{
    PipelineConfig p;
    p.static_features = 100;
    return p;
}

} // namespace

TEST_CASE("kfold_split")
{
    std::vector<std::size_t> ids(139);
    std::iota(ids.begin(), ids.end(), 0);
    auto const folds = kfold_split(ids, 5);
    std::vector<std::size_t> sizes;
    for (auto const& f : folds) sizes.push_back(f.size());
    CHECK(sizes == std::vector<std::size_t>{28, 28, 28, 28, 27});
    std::vector<int> seen(139);
    for (std::size_t f = 0; f < 5; ++f) {
        for (auto i : folds[f]) {
            CHECK(i % 5 == f);
            ++seen[i];
        }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }));

    std::vector<std::size_t> four{10, 20, 30, 40};
    auto const single = kfold_split(four, 4);
    for (std::size_t f = 0; f < 4; ++f) CHECK(single[f] == std::vector<std::size_t>{four[f]});
    CHECK_THROWS_AS((void)kfold_split(four, 1), Error);
    CHECK_THROWS_AS((void)kfold_split(four, 5), Error);
}

TEST_CASE("metrics from published confusion matrices")
{
    auto const t5 = metrics_from_confusion({47, 27, 22, 43});
    CHECK(std::abs(t5.accuracy - 0.6475) <= 1e-4);
    CHECK(std::abs(t5.precision - 0.6351) <= 1e-4);
    CHECK(std::abs(t5.recall - 0.6812) <= 1e-4);
    CHECK(std::abs(t5.f1 - 0.6573) <= 1e-4);
    CHECK(std::abs(t5.f2 - 0.6714) <= 1e-4);
    CHECK(std::abs(t5.fp_rate - 0.3857) <= 1e-4);
    CHECK_FALSE(t5.degenerate);

    auto const t4 = metrics_from_confusion({265, 3, 11, 277});
    CHECK(std::abs(t4.accuracy - 0.9748) <= 1e-4);
    CHECK(std::abs(t4.precision - 0.9888) <= 1e-4);
    CHECK(std::abs(t4.recall - 0.9601) <= 1e-4);
    CHECK(std::abs(t4.fp_rate - 0.0107) <= 1e-4);
    CHECK(std::abs(t4.f1 - 0.9743) <= 1e-4);
    CHECK(std::abs(t4.f2 - 0.9657) <= 1e-4);

    auto const perfect = metrics_from_confusion({9, 0, 0, 9});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.f2 == 1.0);
    CHECK(perfect.fp_rate == 0.0);
}

TEST_CASE("metrics: degenerate denominators")
{
    auto const no_pred = metrics_from_confusion({0, 0, 5, 5});
    CHECK(no_pred.precision == 0.0);
    CHECK(no_pred.f1 == 0.0);
    CHECK(no_pred.degenerate);
    auto const no_neg = metrics_from_confusion({3, 0, 1, 0});
    CHECK(no_neg.fp_rate == 0.0);
    CHECK(no_neg.degenerate);
    CHECK_THROWS_AS((void)metrics_from_confusion({}), Error);
}

TEST_CASE("metrics agree with rational arithmetic on small matrices")
{
    using oracle::Rational;
    std::size_t mismatches = 0;
    for (std::int64_t tp = 0; tp <= 20; ++tp) {
        for (std::int64_t fp = 0; fp <= 20; ++fp) {
            for (std::int64_t fn = 0; fn <= 20; ++fn) {
                for (std::int64_t tn = 0; tn <= 20; ++tn) {
                    if (tp + fp + fn + tn == 0) continue;
                    auto const m = metrics_from_confusion({static_cast<std::size_t>(tp), static_cast<std::size_t>(fp),
                                                           static_cast<std::size_t>(fn), static_cast<std::size_t>(tn)});
                    Rational const acc = Rational::of(tp + tn, tp + fp + fn + tn);
                    Rational const p = Rational::of(tp, tp + fp);
                    Rational const r = Rational::of(tp, tp + fn);
                    Rational const f1 = (2 * (p * r)) / (p + r);
                    Rational const f2 = (5 * (p * r)) / ((4 * p) + r);
                    Rational const fpr = Rational::of(fp, fp + tn);
                    bool const ok = std::abs(m.accuracy - acc.value()) <= 1e-12 &&
                                    std::abs(m.precision - p.value()) <= 1e-12 &&
                                    std::abs(m.recall - r.value()) <= 1e-12 && std::abs(m.f1 - f1.value()) <= 1e-12 &&
                                    std::abs(m.f2 - f2.value()) <= 1e-12 && std::abs(m.fp_rate - fpr.value()) <= 1e-12;
                    // F1 and F2 are 0/0 once precision and recall are both 0
                    bool const degenerate = tp + fp == 0 || tp + fn == 0 || fp + tn == 0 || tp == 0;
                    if (!ok || m.degenerate != degenerate) ++mismatches;
                }
            }
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("confusion TSV")
{
    std::stringstream ss;
    write_confusion_tsv(ss, {47, 27, 22, 43});
    std::string header, row;
    std::getline(ss, header);
    std::getline(ss, row);
    CHECK(header.starts_with("key\ttp\tfp\tfn\ttn\taccuracy"));
    CHECK(row.find("\t47\t27\t22\t43\t") != std::string::npos);
}

TEST_CASE("cross validation on 139 records")
{
    auto const corpus = small_corpus();
    auto const cv = cross_validate(corpus, small_pipeline(), quick_train(), 5, 3);
    std::size_t train = 0, test = 0;
    ConfusionMatrix pooled;
    for (auto const& f : cv.folds) {
        train += f.train_rows;
        test += f.test_rows;
        pooled += f.confusion;
        CHECK(f.confusion.total() == f.test_rows);
        CHECK(f.model.reps.size() == 3);
    }
    CHECK(train == 556);
    CHECK(test == 139);
    CHECK(cv.pooled == pooled);
    CHECK(cv.pooled_metrics.accuracy ==
          static_cast<double>(pooled.tp + pooled.tn) / static_cast<double>(pooled.total()));
    CHECK(cv.pooled_metrics.accuracy > 0.75);

    auto const again = cross_validate(corpus, small_pipeline(), quick_train(), 5, 3, 2);
    CHECK(again.pooled == cv.pooled);
    for (std::size_t f = 0; f < 5; ++f) {
        for (std::size_t r = 0; r < 3; ++r) CHECK(again.folds[f].model.reps[r] == cv.folds[f].model.reps[r]);
    }
}

TEST_CASE("cross validation rejects single-cohort folds")
{
    std::vector<PatientRecord> recs;
    for (int i = 0; i < 12; ++i) recs.push_back({"r" + std::to_string(i), i < 11 ? 2 : 3, {"word"}});
    auto const corpus = Corpus::build(recs);
    CHECK_THROWS_WITH_AS((void)prepare_folds(corpus, small_pipeline(), 5), doctest::Contains("fold"), Error);
    PipelineConfig absent = small_pipeline();
    absent.negative_label = 9;
    CHECK_THROWS_AS((void)prepare_folds(corpus, absent, 5), Error);
}

TEST_CASE("summarize")
{
    auto const one = summarize("x", {0.61});
    CHECK(one.std_dev == 0.0);
    CHECK(one.mean == 0.61);
    CHECK(one.histogram == std::map<long, std::size_t>{{30, 1}});

    std::vector<double> acc{0.5, 0.52, 0.55, 0.6, 0.6, 0.64};
    auto const s = summarize("y", acc);
    double mean = 0;
    for (double a : acc) mean += a;
    mean /= 6;
    double var = 0;
    for (double a : acc) var += (a - mean) * (a - mean);
    CHECK(s.mean == doctest::Approx(mean));
    CHECK(s.std_dev == doctest::Approx(std::sqrt(var / 6)));
    CHECK(s.gaussian.mean == s.mean);
    CHECK(s.gaussian.std_dev == s.std_dev);
    CHECK(s.histogram == std::map<long, std::size_t>{{25, 1}, {26, 1}, {27, 1}, {30, 2}, {32, 1}});
}

TEST_CASE("sweep statistics are recomputable from the emitted accuracies")
{
    auto const corpus = small_corpus(5);
    SweepPoint point{"p", small_pipeline(), quick_train(), 5, 1};
    point.train.eval_budget = 60;
    std::vector<SweepPoint> grid{point};
    auto const res = sweep(corpus, grid, 6);
    REQUIRE(res.size() == 1);
    auto const& r = res[0];
    REQUIRE(r.accuracies.size() == 6);
    auto const re = summarize("p", r.accuracies);
    CHECK(r.mean == re.mean);
    CHECK(r.std_dev == re.std_dev);
    std::size_t total = 0;
    for (auto const& [bin, n] : r.histogram) total += n;
    CHECK(total == 6);

    for (std::size_t s = 0; s < 6; ++s) {
        TrainConfig t = point.train;
        t.seed = point.train.seed + s;
        CHECK(cross_validate(corpus, point.pipeline, t, 5, 1).pooled_metrics.accuracy == r.accuracies[s]);
    }
    CHECK(sweep(corpus, grid, 1)[0].std_dev == 0.0);

    std::stringstream ss;
    write_sweep_tsv(ss, res);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "config\tn\tmean\tstd_dev\taccuracies");
}

TEST_CASE("voting sweep")
{
    auto const corpus = small_corpus(7);
    auto const prepared = prepare_folds(corpus, small_pipeline(), 5);
    TrainConfig t = quick_train();
    t.eval_budget = 60;
    std::vector<std::size_t> sizes{1, 3};
    auto const res = voting_sweep(prepared, t, sizes, 4);
    REQUIRE(res.size() == 2);
    CHECK(res[0].accuracies.size() == 4);
    CHECK(res[1].accuracies.size() == 4);

    // model 0 of size 1 is the first representation of the seed sequence
    auto const direct = evaluate_folds(prepared, t, 1);
    CHECK(direct.pooled_metrics.accuracy == res[0].accuracies[0]);
}
