#include "cohortsift/evaluation.hpp"

#include "cohortsift/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cohortsift {

std::vector<std::vector<std::size_t>> kfold_split(std::span<std::size_t const> ids, std::size_t k)
{
    if (k < 2 || k > ids.size()) {
        throw Error(fmt::format("k must be in 2..{} (record count), got {}", ids.size(), k));
    }
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < ids.size(); ++i) folds[i % k].push_back(ids[i]);
    return folds;
}

std::uint64_t rep_seed(std::uint64_t seed, std::size_t r)
{
    // splitmix64 finalizer over (seed, r)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(r) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

void parallel_for(std::size_t n, std::size_t jobs, std::function<void(std::size_t)> const& fn)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

bool has_both(Corpus const& corpus, std::span<std::size_t const> records, PipelineConfig const& p)
{
    bool pos = false, neg = false;
    for (std::size_t r : records) {
        pos = pos || corpus.record(r).group == p.positive_label;
        neg = neg || corpus.record(r).group == p.negative_label;
    }
    return pos && neg;
}

} // namespace

PreparedFolds prepare_folds(Corpus const& corpus, PipelineConfig const& pipeline, std::size_t k, std::size_t jobs)
{
    if (pipeline.positive_label == pipeline.negative_label) {
        throw Error("positive and negative cohorts must differ");
    }
    auto const groups = corpus.groups();
    for (int g : {pipeline.positive_label, pipeline.negative_label}) {
        if (!std::binary_search(groups.begin(), groups.end(), g)) {
            throw Error(fmt::format("cohort label {} does not occur in the data", g));
        }
    }
    auto const ids = cohort_records(corpus, pipeline);
    auto const split = kfold_split(ids, k);
    std::vector<std::vector<std::size_t>> trains(k);
    for (std::size_t f = 0; f < k; ++f) {
        for (std::size_t g = 0; g < k; ++g) {
            if (g != f) trains[f].insert(trains[f].end(), split[g].begin(), split[g].end());
        }
        std::sort(trains[f].begin(), trains[f].end());
        if (!has_both(corpus, trains[f], pipeline)) {
            throw Error(fmt::format("fold {}: training part holds only one cohort", f));
        }
        if (!has_both(corpus, split[f], pipeline)) {
            throw Error(fmt::format("fold {}: held-out part holds only one cohort", f));
        }
    }
    RecordBags const bags(corpus, pipeline.arity);
    PreparedFolds out{pipeline, std::vector<FoldFeatures>(k)};
    parallel_for(k, jobs, [&](std::size_t f) { out.folds[f] = prepare_fold(bags, trains[f], split[f], pipeline); });
    return out;
}

namespace {

Model make_model(FoldFeatures const& fold, PipelineConfig const& p)
{
    Model m;
    m.features = fold.train.features();
    m.positive_label = p.positive_label;
    m.negative_label = p.negative_label;
    return m;
}

ConfusionMatrix confusion_from_votes(std::span<double const> p_pos, BitVector const& target)
{
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < p_pos.size(); ++i) {
        bool const predicted = p_pos[i] > 0.5;
        if (target.test(i)) {
            (predicted ? cm.tp : cm.fn) += 1;
        } else {
            (predicted ? cm.fp : cm.tn) += 1;
        }
    }
    return cm;
}

} // namespace

CrossValidation evaluate_folds(PreparedFolds const& prepared, TrainConfig const& config, std::size_t model_size,
                               std::size_t jobs)
{
    if (model_size < 1) throw Error("model size must be >= 1");
    std::size_t const k = prepared.folds.size();
    CrossValidation cv;
    cv.folds.resize(k);
    for (std::size_t f = 0; f < k; ++f) {
        cv.folds[f].model = make_model(prepared.folds[f], prepared.pipeline);
        cv.folds[f].model.reps.resize(model_size);
    }
    parallel_for(k * model_size, jobs, [&](std::size_t job) {
        std::size_t const f = job / model_size;
        std::size_t const r = job % model_size;
        TrainConfig c = config;
        c.seed = rep_seed(config.seed, r);
        cv.folds[f].model.reps[r] = train_representation(prepared.folds[f].train, c);
    });
    for (std::size_t f = 0; f < k; ++f) {
        auto& fr = cv.folds[f];
        auto const& fold = prepared.folds[f];
        fr.confusion = model_confusion(fr.model, fold.test);
        fr.metrics = metrics_from_confusion(fr.confusion);
        fr.train_rows = fold.train.rows();
        fr.test_rows = fold.test.rows();
        cv.pooled += fr.confusion;
    }
    cv.pooled_metrics = metrics_from_confusion(cv.pooled);
    return cv;
}

CrossValidation cross_validate(Corpus const& corpus, PipelineConfig const& pipeline, TrainConfig const& config,
                               std::size_t k, std::size_t model_size, std::size_t jobs)
{
    return evaluate_folds(prepare_folds(corpus, pipeline, k, jobs), config, model_size, jobs);
}

SweepResult summarize(std::string descriptor, std::vector<double> accuracies)
{
    SweepResult r;
    r.descriptor = std::move(descriptor);
    r.accuracies = std::move(accuracies);
    if (!r.accuracies.empty()) {
        double const n = static_cast<double>(r.accuracies.size());
        r.mean = std::accumulate(r.accuracies.begin(), r.accuracies.end(), 0.0) / n;
        double var = 0.0;
        for (double a : r.accuracies) var += (a - r.mean) * (a - r.mean);
        r.std_dev = std::sqrt(var / n);
    }
    for (double a : r.accuracies) {
        // Nudge so that exact multiples of the width land in their own bin.
        auto const bin = static_cast<long>(std::floor(a / kHistogramBinWidth + 1e-9));
        r.histogram[bin] += 1;
    }
    r.gaussian = {r.mean, r.std_dev};
    return r;
}

std::vector<SweepResult> sweep(Corpus const& corpus, std::span<SweepPoint const> grid, std::size_t n_seeds,
                               std::size_t jobs)
{
    if (n_seeds < 1) throw Error("sweep needs at least one seed");
    std::vector<SweepResult> out;
    for (auto const& point : grid) {
        PreparedFolds const prepared = prepare_folds(corpus, point.pipeline, point.k, jobs);
        std::vector<double> acc(n_seeds);
        for (std::size_t s = 0; s < n_seeds; ++s) {
            TrainConfig c = point.train;
            c.seed = point.train.seed + s;
            acc[s] = evaluate_folds(prepared, c, point.model_size, jobs).pooled_metrics.accuracy;
        }
        out.push_back(summarize(point.descriptor, std::move(acc)));
    }
    return out;
}

std::vector<SweepResult> voting_sweep(PreparedFolds const& prepared, TrainConfig const& config,
                                      std::span<std::size_t const> sizes, std::size_t n_models, std::size_t jobs)
{
    if (sizes.empty() || n_models < 1) throw Error("voting sweep needs sizes and at least one model");
    if (std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end()) {
        throw Error("model sizes must be >= 1");
    }
    std::size_t const pool = n_models * *std::max_element(sizes.begin(), sizes.end());
    std::size_t const k = prepared.folds.size();

    // Held-out predictions of every pooled representation, per fold.
    std::vector<std::vector<BitVector>> predictions(k, std::vector<BitVector>(pool));
    parallel_for(k * pool, jobs, [&](std::size_t job) {
        std::size_t const f = job / pool;
        std::size_t const r = job % pool;
        TrainConfig c = config;
        c.seed = rep_seed(config.seed, r);
        auto const& fold = prepared.folds[f];
        Representation const rep = train_representation(fold.train, c);
        predictions[f][r] = rep.tree.evaluate(fold.test.columns(), fold.test.rows());
    });

    std::vector<SweepResult> out;
    for (std::size_t n : sizes) {
        std::vector<double> acc;
        for (std::size_t j = 0; j < n_models; ++j) {
            ConfusionMatrix pooled;
            for (std::size_t f = 0; f < k; ++f) {
                auto const& test = prepared.folds[f].test;
                std::vector<double> p(test.rows(), 0.0);
                for (std::size_t r = j * n; r < (j + 1) * n; ++r) {
                    for (std::size_t i = 0; i < test.rows(); ++i) p[i] += predictions[f][r].test(i) ? 1.0 : 0.0;
                }
                for (double& x : p) x /= static_cast<double>(n);
                pooled += confusion_from_votes(p, test.target());
            }
            acc.push_back(metrics_from_confusion(pooled).accuracy);
        }
        out.push_back(summarize(fmt::format("model_size={}", n), std::move(acc)));
    }
    return out;
}

void write_sweep_tsv(std::ostream& out, std::span<SweepResult const> results)
{
    out << "config\tn\tmean\tstd_dev\taccuracies\n";
    for (auto const& r : results) {
        fmt::print(out, "{}\t{}\t{:.6f}\t{:.6f}\t", r.descriptor, r.accuracies.size(), r.mean, r.std_dev);
        for (std::size_t i = 0; i < r.accuracies.size(); ++i) {
            fmt::print(out, "{}{:.6f}", i ? "," : "", r.accuracies[i]);
        }
        out << '\n';
    }
}

void write_histogram_tsv(std::ostream& out, SweepResult const& result)
{
    out << "bin_left_edge\tcount\n";
    for (auto const& [bin, count] : result.histogram) {
        fmt::print(out, "{:.2f}\t{}\n", static_cast<double>(bin) * kHistogramBinWidth, count);
    }
}

} // namespace cohortsift
