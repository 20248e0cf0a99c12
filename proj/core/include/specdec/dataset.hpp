#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specdec/synth.hpp"
#include "specdec/trial.hpp"

namespace specdec {

enum class Scenario { standard, phase_only };

/// Everything the synthetic generator needs; recorded verbatim in the manifest.
struct GeneratorSpec {
    SignalBankParams bank{};      // bank.seed is ignored; derived from `seed`
    Scenario scenario = Scenario::standard;
    double phase_amplitude = 1.0; // phase_only scenario
    double sigma = 1.0;
    int window = 650;             // samples per trial
    int num_trials = 827;
    int num_edcs = 1;
    double edc_divergence = 0.0;  // per-EDC perturbation of the class means
    DepthLayout depth{};
    TrialShape shape{};
    double sample_rate_hz = 1000.0;
    std::uint64_t seed = 0;
};

struct EdcInfo {
    std::string edc_id;
    std::vector<double> depth_vector;
};

struct Dataset {
    int num_classes = 0;
    int num_channels = 0;
    int window = 0;                // samples per trial
    double sample_rate_hz = 1000.0;
    std::string rng_algorithm;
    std::vector<EdcInfo> edcs;
    std::vector<TrialRecord> trials;
    std::optional<GeneratorSpec> generator;
};

/// Trials are spread over EDCs in contiguous blocks; labels cycle 1..K within
/// each EDC so every cluster is near-balanced.
Dataset generate_dataset(const GeneratorSpec& spec);

/// The class-mean bank generate_dataset uses for EDC `edc` (0-based).
ClassSignalBank dataset_bank(const GeneratorSpec& spec, int edc = 0);

struct WriteOptions {
    bool text = false;   // CSV sample files instead of little-endian float64
    bool force = false;  // allow writing into a non-empty directory
};

/// Writes manifest.json plus one sample file per trial under trials/.
/// Returns the dataset checksum.
std::string write_dataset(const std::string& directory, const Dataset& dataset,
                          const WriteOptions& options = {});

struct LoadedDataset {
    Dataset dataset;
    std::string checksum;  // sha256 over manifest bytes then sample files in manifest order
};

LoadedDataset read_dataset(const std::string& directory);

/// Checksum without parsing sample values.
std::string dataset_checksum(const std::string& directory);

/// Generator parameters as a JSON object (the manifest's "generator" block).
std::string serialize_generator(const GeneratorSpec& spec);
/// Keys absent from `text` keep their value from `defaults`; unknown keys are rejected.
GeneratorSpec parse_generator(std::string_view text, const GeneratorSpec& defaults = {});

std::string_view to_string(Scenario scenario);
Scenario parse_scenario(std::string_view name);

}  // namespace specdec
