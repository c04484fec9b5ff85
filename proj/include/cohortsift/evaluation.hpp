#pragma once

#include "cohortsift/ensemble.hpp"
#include "cohortsift/learner.hpp"
#include "cohortsift/metrics.hpp"
#include "cohortsift/pipeline.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cohortsift {

/// Round-robin assignment: item i goes to fold i mod k.
[[nodiscard]] std::vector<std::vector<std::size_t>> kfold_split(std::span<std::size_t const> ids, std::size_t k);

/// Seed of the r-th representation derived from a run seed.
[[nodiscard]] std::uint64_t rep_seed(std::uint64_t seed, std::size_t r);

/// Runs fn(0..n-1) on up to `jobs` threads. fn must only write to its own slot.
void parallel_for(std::size_t n, std::size_t jobs, std::function<void(std::size_t)> const& fn);

// Featurized folds, reusable across seeds and model sizes.
struct PreparedFolds {
    PipelineConfig pipeline;
    std::vector<FoldFeatures> folds;
};

/// Splits the two cohorts round-robin and prepares each fold from its
/// training part alone. Throws Error naming the first fold whose training or
/// held-out part lacks one of the cohorts.
[[nodiscard]] PreparedFolds prepare_folds(Corpus const& corpus, PipelineConfig const& pipeline, std::size_t k,
                                          std::size_t jobs = 1);

struct FoldResult {
    ConfusionMatrix confusion;
    Metrics metrics;
    Model model;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
};

struct CrossValidation {
    std::vector<FoldResult> folds;
    ConfusionMatrix pooled;
    Metrics pooled_metrics;
};

/// Trains a model of `model_size` representations per fold (seeds
/// rep_seed(config.seed, r)) and scores it on the held-out part. Pooled
/// metrics come from the summed confusion matrices.
[[nodiscard]] CrossValidation evaluate_folds(PreparedFolds const& prepared, TrainConfig const& config,
                                             std::size_t model_size, std::size_t jobs = 1);

[[nodiscard]] CrossValidation cross_validate(Corpus const& corpus, PipelineConfig const& pipeline,
                                             TrainConfig const& config, std::size_t k = 5,
                                             std::size_t model_size = 1, std::size_t jobs = 1);

struct GaussianFit {
    double mean = 0.0;
    double std_dev = 0.0;
};

struct SweepResult {
    std::string descriptor;
    std::vector<double> accuracies;
    double mean = 0.0;
    double std_dev = 0.0;  // population
    // Left bin edge index (edge = index * kHistogramBinWidth) -> count.
    std::map<long, std::size_t> histogram;
    GaussianFit gaussian;
};

inline constexpr double kHistogramBinWidth = 0.02;

/// Mean, population standard deviation, 0.02-wide histogram and the moment
/// matched Gaussian of a list of accuracies.
[[nodiscard]] SweepResult summarize(std::string descriptor, std::vector<double> accuracies);

struct SweepPoint {
    std::string descriptor;
    PipelineConfig pipeline;
    TrainConfig train;
    std::size_t k = 5;
    std::size_t model_size = 1;
};

/// Cross-validates every point once per seed (train.seed + s for s < n_seeds).
[[nodiscard]] std::vector<SweepResult> sweep(Corpus const& corpus, std::span<SweepPoint const> grid,
                                             std::size_t n_seeds, std::size_t jobs = 1);

/// For each size N builds n_models models of N representations with distinct
/// seeds (model j uses representations j*N .. j*N+N-1 of one shared seed
/// sequence) and reports the spread of their pooled cross-validated accuracy.
[[nodiscard]] std::vector<SweepResult> voting_sweep(PreparedFolds const& prepared, TrainConfig const& config,
                                                    std::span<std::size_t const> sizes, std::size_t n_models,
                                                    std::size_t jobs = 1);

void write_sweep_tsv(std::ostream& out, std::span<SweepResult const> results);
void write_histogram_tsv(std::ostream& out, SweepResult const& result);

} // namespace cohortsift
