#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "specdec/config.hpp"
#include "specdec/dataset.hpp"
#include "specdec/error.hpp"
#include "specdec/harness.hpp"

namespace specdec::app {

inline constexpr const char* kCodeVersion = "specdec 0.1.0";

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Library error kinds that indicate a bad configuration rather than a
/// failure while running.
bool is_config_error(ErrorKind kind);

struct GenerateArgs {
    GeneratorSpec spec{};
    std::string out_dir;
    WriteOptions write{};
};

/// Returns the dataset checksum.
std::string cmd_generate(const GenerateArgs& args);

struct EvaluateArgs {
    ExperimentConfig config{};
    std::string out_dir;
    bool force = false;
    ExecutionOptions exec{};
    /// When set, the config and expected dataset checksum come from this run manifest.
    std::string from_manifest;
};

struct EvaluateOutcome {
    LoocvResult result;
    ClusteredDataset cluster;
    std::string dataset_checksum;
    std::vector<std::string> files;  // result files, relative to out_dir
};

EvaluateOutcome cmd_evaluate(EvaluateArgs args);

struct SweepArgs {
    ExperimentConfig config{};
    GridSpec grid{};
    std::string out_dir;
    bool force = false;
    ExecutionOptions exec{};
};

struct SweepOutcome {
    std::vector<SweepRow> rows;
    std::string dataset_checksum;
    std::vector<std::string> files;
};

SweepOutcome cmd_sweep(const SweepArgs& args);

/// Long-format rows (figure axis, x, metric, value) from a sweep CSV.
void cmd_plot_data(const std::string& sweep_csv, std::ostream& out);

struct InspectArgs {
    std::string dataset;
    int channel = 0;
    int num_frequencies = 5;
    std::string edc;                 // empty: the EDC with the most trials
    std::string covariance_csv;      // optional output path
};

/// Writes a JSON report with the manifest summary and the residual noise diagnostic.
void cmd_inspect(const InspectArgs& args, std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace specdec::app
