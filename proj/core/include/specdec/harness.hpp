#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specdec/config.hpp"
#include "specdec/dataset.hpp"
#include "specdec/decoder.hpp"

namespace specdec {

// ---- EDC clustering -------------------------------------------------------

struct EdcEntry {
    std::string edc_id;
    std::vector<double> depth_vector;  // millimeters
    std::vector<std::string> trial_ids;
};

struct EdcTable {
    std::vector<EdcEntry> entries;

    const EdcEntry& find(const std::string& edc_id) const;
    std::size_t total_trials() const;
};

/// Groups a dataset's trials by EDC, preserving manifest order.
EdcTable make_edc_table(const Dataset& dataset);

struct ClusteredDataset {
    std::string anchor;
    std::vector<std::string> members;   // trial ids, anchor's first
    std::vector<std::string> edcs;      // EDCs in append order
    int window = 0;                     // W
};

/// Starts from the anchor's trials and appends whole EDCs in order of depth
/// vector distance to the anchor (ties: smaller edc_id) until W is reached.
ClusteredDataset cluster_edcs(const std::string& anchor, const EdcTable& table, int window);

/// Pointers into `dataset.trials` for the cluster's members, in member order.
std::vector<const TrialRecord*> resolve(const Dataset& dataset, const ClusteredDataset& cluster);

double depth_distance(const std::vector<double>& a, const std::vector<double>& b);

// ---- confusion and summaries ----------------------------------------------

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes = 0);

    int num_classes() const { return static_cast<int>(counts_.rows()); }
    void add(int true_label, int decoded_label);

    long long count(int true_label, int decoded_label) const;
    const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& counts() const { return counts_; }
    long long total() const;
    long long trace() const;
    double accuracy() const;

    /// Rows divided by their sums; empty rows stay zero.
    Eigen::MatrixXd row_normalized() const;
    /// Diagonal of the row-normalized view; NaN for empty rows.
    Eigen::VectorXd per_class_accuracy() const;

    static ConfusionMatrix from_counts(const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& counts);

private:
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts_;
};

/// Mean per-class recall within each group. Every class must be mapped; every
/// group listed in `required_groups` must contain at least one class.
std::map<std::string, double> directional_summary(const ConfusionMatrix& cm,
                                                  const std::map<int, std::string>& grouping,
                                                  std::span<const std::string> required_groups = {});

/// (acc_complex - acc_power) / acc_power
double relative_gain(double acc_complex, double acc_power);

/// sqrt(p (1 - p) / n)
double binomial_standard_error(double p, double n);

// ---- cross-validation -----------------------------------------------------

struct ExecutionOptions {
    int threads = 0;  // 0 = hardware concurrency
};

struct LoocvResult {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    int evaluated_folds = 0;
    int skipped_folds = 0;
    std::vector<int> predictions;  // per row; 0 where the fold was skipped
};

/// Features of every trial, one row each.
Eigen::MatrixXd feature_matrix(std::span<const TrialRecord* const> trials, const FeatureOptions& options);

/// Leave-one-out over precomputed feature rows. A fold whose training split
/// leaves any class with fewer than two rows is skipped and counted.
LoocvResult loocv_features(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const int> labels, int num_classes,
                           const DecoderOptions& options, const ExecutionOptions& exec = {});

/// Feature extraction (stateless, done once) followed by loocv_features.
LoocvResult loocv(std::span<const TrialRecord* const> trials, int num_classes,
                  const ExperimentConfig& config, const ExecutionOptions& exec = {});

// ---- sweeps ----------------------------------------------------------------

struct SweepRow {
    std::size_t cell = 0;
    ExperimentConfig config;
    std::string anchor;
    std::size_t num_trials = 0;
    std::uint64_t cell_seed = 0;
    bool ok = false;
    std::string error;         // set when !ok
    LoocvResult result;
    double runtime_seconds = 0.0;
};

/// Runs loocv on every (config, dataset) pair, config-major. Failures are
/// recorded on the row and do not stop the sweep.
std::vector<SweepRow> sweep(const std::vector<ExperimentConfig>& grid,
                            const std::vector<ClusteredDataset>& datasets, const Dataset& source,
                            const ExecutionOptions& exec = {});

}  // namespace specdec
