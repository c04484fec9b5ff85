#pragma once

#include "cohortsift/evaluation.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace cohortsift {

// All knobs of one experiment. Serialized verbatim into each run's
// manifest.json, which can be fed back with --config to reproduce the run.
struct ExperimentConfig {
    std::string input;
    int pos_group = 2;
    int neg_group = 3;
    int arity = 1;
    double min_word_count = 0;
    double min_ngram_count = 0;
    std::optional<double> min_mi;
    std::string significant_words_file;  // empty: no membership cut
    int thresholds = 1;
    std::size_t static_features = 3000;
    std::size_t dynamic_features = 50;
    std::size_t eval_budget = 20000;
    std::size_t restart_stagnation = 4;
    std::size_t k = 5;
    std::size_t seeds = 1;
    std::size_t model_size = 1;
    // "none", "from-feature-selection:<words>" or "from-ensemble:<models>"
    std::string emit_significant = "none";
    std::string out = "out";
    std::uint64_t seed = 1;
    std::size_t jobs = 1;

    [[nodiscard]] PipelineConfig pipeline() const;
    [[nodiscard]] TrainConfig train() const;
    void validate() const;
};

[[nodiscard]] nlohmann::ordered_json to_json(ExperimentConfig const& c);
/// Overlays the keys present in `j` onto `c`; unknown keys throw Error.
void apply_json(ExperimentConfig& c, nlohmann::json const& j);

/// Default occurrence thresholds for the word-distribution report.
[[nodiscard]] std::vector<int> default_occurrence_thresholds();

// Each command writes its reports under `out` and logs progress to `log`.

/// rank.tsv, occurrence.tsv, pairs.tsv, zipf.tsv.
void cmd_stats(std::string const& input, std::string const& out, std::ostream& log);

/// Cross-validation with per-fold artifacts, confusion.tsv and manifest.json.
/// Returns the pooled result.
CrossValidation cmd_cv(ExperimentConfig const& config, std::ostream& log);

/// Grid sweep and optional voting sweep described by a JSON grid file.
void cmd_sweep(std::string const& grid_file, std::string const& out, std::size_t jobs, std::ostream& log);

struct KeywordShare {
    std::string term;
    double share = 0.0;
};

struct KeywordReport {
    std::vector<KeywordShare> positive;
    std::vector<KeywordShare> negative;
    std::size_t representations = 0;
};

/// Keywords of all representations in the model files, with the fraction of
/// representations using each term in that polarity.
[[nodiscard]] KeywordReport keyword_report(std::vector<std::string> const& model_files);
void write_keyword_tsv(std::ostream& out, KeywordReport const& report);

/// Significant words by class MI of single-word features over the whole input.
[[nodiscard]] std::vector<std::string> significant_words_by_mi(Corpus const& corpus, ExperimentConfig const& config,
                                                               std::size_t count);

/// Significant words harvested from `models` models trained on the whole input.
[[nodiscard]] std::vector<std::string> significant_words_from_ensemble(Corpus const& corpus,
                                                                       ExperimentConfig const& config,
                                                                       std::size_t models);

[[nodiscard]] std::set<std::string> read_word_list(std::string const& path);

} // namespace cohortsift
