#pragma once

#include "cohortsift/corpus.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cohortsift {

struct PlantedTerm {
    std::string token;
    double rate_pos = 0.0;  // per-note insertion probability, positive cohort
    double rate_neg = 0.0;
};

struct PlantedPair {
    std::pair<std::string, std::string> words;
    double rate_pos = 0.0;
    double rate_neg = 0.0;
};

struct SynthSpec {
    std::size_t positive_patients = 70;
    std::size_t negative_patients = 69;
    int positive_group = 2;
    int negative_group = 3;
    std::size_t min_notes = 27;
    std::size_t max_notes = 77;
    std::size_t min_words = 60;
    std::size_t max_words = 104;
    std::size_t background_vocab = 25000;
    double zipf_shift = 7.0;
    double zipf_exponent = 1.0;
    std::vector<PlantedTerm> planted_terms;
    std::vector<PlantedPair> planted_pairs;
    std::uint64_t seed = 1;
};

/// Named presets: "paper-scale" (no planted signal), "strong-signal",
/// "null-signal" and "weak-signal". Throws Error for unknown names.
[[nodiscard]] SynthSpec synth_preset(std::string const& name);

struct SynthCorpus {
    std::vector<PatientRecord> records;
    // Background token of each rank (index 0 is rank 1).
    std::vector<std::string> background;
    // Tokens emitted, background and planted together.
    std::size_t tokens_emitted = 0;
};

/// Background words are drawn from a Zipf-Mandelbrot law over the background
/// vocabulary; each planted term (pair) is inserted into a note with its
/// cohort's rate, pairs as two adjacent words. Positive patients come first.
/// Every patient draws from its own stream derived from (seed, index).
[[nodiscard]] SynthCorpus generate(SynthSpec const& spec);

/// kind, token, rate_pos, rate_neg
void write_ground_truth_tsv(std::ostream& out, SynthSpec const& spec);

} // namespace cohortsift
