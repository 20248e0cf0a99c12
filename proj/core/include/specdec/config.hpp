#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "specdec/decoder.hpp"
#include "specdec/spectral.hpp"

namespace specdec {

/// Free parameters of one decoding run. T and D are in samples (milliseconds
/// at the 1 kHz rate).
struct ExperimentConfig {
    int window = 650;          // T
    int delay = 0;             // D
    int num_frequencies = 4;   // L
    int modes = 187;           // P
    FeatureFlavor flavor = FeatureFlavor::complex_spectrum;
    ShrinkageSpec shrinkage{};
    bool log_power = false;
    bool whiten = true;        // PCA + ZCA before LDA
    int cluster_window = 900;  // W, trials
    double ridge = 1e-6;       // relative: lambda = ridge * trace(pooled) / P
    double zca_epsilon = 0.0;
    std::uint64_t seed = 0;
    std::string dataset;
    std::string anchor;        // EDC to evaluate; empty selects the first EDC
    std::map<int, std::string> grouping;  // class label -> direction group

    FeatureOptions feature_options() const;
    DecoderOptions decoder_options() const;
    ModelFingerprint fingerprint() const;

    /// Range checks that do not need the dataset; throws ParameterError.
    void validate() const;
    /// Checks against dataset geometry (window overrun, P vs feature dimension).
    void validate_against(int num_samples, int num_channels) const;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Cartesian grid over the free parameters. Empty axes keep the base value.
struct GridSpec {
    std::vector<int> windows;
    std::vector<int> delays;
    std::vector<int> frequencies;
    std::vector<int> modes;
    std::vector<FeatureFlavor> flavors;
    std::vector<std::string> anchors;  // clusters to evaluate; "all" means every EDC
    int power_modes = 0;               // if > 0, P used by power-flavor cells

    bool empty() const;
    /// Parameter cells in fixed order: flavor, L, P, T, D (D varies fastest).
    /// Anchors are not part of the expansion; they select datasets.
    std::vector<ExperimentConfig> expand(const ExperimentConfig& base) const;
};

/// "a:b:step" (inclusive) or "a,b,c".
std::vector<int> parse_int_list(std::string_view text);

/// Canonical JSON text. Parsing it back yields an equal config.
std::string serialize_config(const ExperimentConfig& config);
/// Accepts JSON with // and /* */ comments; unknown keys are rejected.
ExperimentConfig parse_config(std::string_view text);

/// Reads the optional "grid" object from a config document.
GridSpec parse_grid(std::string_view config_text);
std::string serialize_grid(const GridSpec& grid);

ExperimentConfig load_config_file(const std::string& path);
GridSpec load_grid_file(const std::string& path);

}  // namespace specdec
