#include "cohortsift/app.hpp"
#include "cohortsift/error.hpp"
#include "cohortsift/synthgen.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

using namespace cohortsift;

namespace {

std::uint64_t env_seed()
{
    if (char const* s = std::getenv("COHORTSIFT_SEED")) {
        try {
            return std::stoull(s);
        } catch (std::exception const&) {
            throw Error(fmt::format("COHORTSIFT_SEED is not an integer: '{}'", s));
        }
    }
    return 1;
}

void add_experiment_flags(CLI::App* cmd, ExperimentConfig& c, double& min_mi)
{
    cmd->add_option("--input", c.input, "JSONL records");
    cmd->add_option("--pos-group", c.pos_group, "Positive cohort label");
    cmd->add_option("--neg-group", c.neg_group, "Negative cohort label");
    cmd->add_option("--arity", c.arity, "Largest n-gram arity (1..4)");
    cmd->add_option("--min-word-count", c.min_word_count, "Cut words occurring this often or less");
    cmd->add_option("--min-ngram-count", c.min_ngram_count, "Cut n-grams occurring this often or less");
    cmd->add_option("--min-mi", min_mi, "Cut word pairs with MI at or below this");
    cmd->add_option("--significant-words", c.significant_words_file, "Keep only n-grams containing a listed word");
    cmd->add_option("--thresholds", c.thresholds, "Thresholds per term (1..3)");
    cmd->add_option("--static-features", c.static_features, "Features kept by static selection");
    cmd->add_option("--dynamic-features", c.dynamic_features, "Features offered per exemplar");
    cmd->add_option("--eval-budget", c.eval_budget, "Scoring calls per representation");
    cmd->add_option("--restart-stagnation", c.restart_stagnation, "Idle passes before a fresh start");
    cmd->add_option("--k", c.k, "Cross-validation folds");
    cmd->add_option("--seeds", c.seeds, "Seeds per configuration");
    cmd->add_option("--model-size", c.model_size, "Representations per model");
    cmd->add_option("--emit-significant", c.emit_significant,
                    "none | from-feature-selection:N | from-ensemble:M");
    cmd->add_option("--seed", c.seed, "Run seed (default $COHORTSIFT_SEED or 1)");
    cmd->add_option("--jobs", c.jobs, "Worker threads");
    cmd->add_option("--out", c.out, "Output directory");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cohortsift: bag-of-phrases cohort classification experiments"};
    app.require_subcommand(1);

    ExperimentConfig cv_config;
    double cv_min_mi = 0;
    std::string cv_config_file;
    std::string stats_input, stats_out = "out";
    std::string sweep_grid, sweep_out = "out";
    std::size_t sweep_jobs = 1;
    std::vector<std::string> model_files;
    std::string keywords_out;
    std::string synth_preset_name = "paper-scale", synth_out, synth_truth;
    std::uint64_t synth_seed = 1;

    try {
        cv_config.seed = env_seed();
        synth_seed = cv_config.seed;
    } catch (Error const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    auto* stats = app.add_subcommand("stats", "Corpus statistics: ranks, occurrences, pair MI, Zipf fit");
    stats->add_option("--input", stats_input, "JSONL records")->required();
    stats->add_option("--out", stats_out, "Output directory");

    auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
    add_experiment_flags(cv, cv_config, cv_min_mi);
    cv->add_option("--config", cv_config_file, "JSON config or manifest; its values override flags");

    auto* sw = app.add_subcommand("sweep", "Parameter and voting sweeps from a JSON grid file");
    sw->add_option("grid", sweep_grid, "Grid file")->required();
    sw->add_option("--out", sweep_out, "Output directory");
    sw->add_option("--jobs", sweep_jobs, "Worker threads");

    auto* kw = app.add_subcommand("keywords", "Positive and negative keywords of model files");
    kw->add_option("models", model_files, "Model files")->required();
    kw->add_option("--out", keywords_out, "Write keywords.tsv here instead of stdout");

    auto* syn = app.add_subcommand("synth", "Generate a synthetic corpus");
    syn->add_option("--preset", synth_preset_name, "paper-scale | strong-signal | null-signal | weak-signal");
    syn->add_option("--seed", synth_seed, "Generator seed");
    syn->add_option("--out", synth_out, "JSONL output")->required();
    syn->add_option("--truth", synth_truth, "Ground-truth TSV output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (stats->parsed()) {
            cmd_stats(stats_input, stats_out, std::cerr);
        } else if (cv->parsed()) {
            if (cv->count("--min-mi") > 0) cv_config.min_mi = cv_min_mi;
            if (!cv_config_file.empty()) {
                std::ifstream in(cv_config_file);
                if (!in) throw Error(fmt::format("cannot open '{}'", cv_config_file));
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(in);
                } catch (nlohmann::json::exception const& e) {
                    throw Error(fmt::format("{}: {}", cv_config_file, e.what()));
                }
                apply_json(cv_config, j);
            }
            if (cv_config.input.empty()) throw Error("--input is required");
            (void)cmd_cv(cv_config, std::cerr);
        } else if (sw->parsed()) {
            cmd_sweep(sweep_grid, sweep_out, sweep_jobs, std::cerr);
        } else if (kw->parsed()) {
            auto const report = keyword_report(model_files);
            if (keywords_out.empty()) {
                write_keyword_tsv(std::cout, report);
            } else {
                std::filesystem::create_directories(keywords_out);
                std::ofstream o(std::filesystem::path(keywords_out) / "keywords.tsv", std::ios::binary);
                write_keyword_tsv(o, report);
            }
        } else if (syn->parsed()) {
            SynthSpec spec = synth_preset(synth_preset_name);
            spec.seed = synth_seed;
            auto const corpus = generate(spec);
            std::ofstream o(synth_out, std::ios::binary);
            if (!o) throw Error(fmt::format("cannot write '{}'", synth_out));
            write_jsonl(o, corpus.records);
            if (!synth_truth.empty()) {
                std::ofstream t(synth_truth, std::ios::binary);
                write_ground_truth_tsv(t, spec);
            }
        }
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
