#include "specdec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "specdec/error.hpp"
#include "specdec/random.hpp"

namespace specdec {

// ---- EDC clustering -------------------------------------------------------

const EdcEntry& EdcTable::find(const std::string& edc_id) const {
    for (const auto& e : entries) {
        if (e.edc_id == edc_id) return e;
    }
    throw LookupError("unknown EDC '" + edc_id + "'");
}

std::size_t EdcTable::total_trials() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.trial_ids.size();
    return n;
}

EdcTable make_edc_table(const Dataset& dataset) {
    EdcTable table;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& e : dataset.edcs) {
        if (!index.emplace(e.edc_id, table.entries.size()).second) {
            throw ParameterError("duplicate edc_id '" + e.edc_id + "'");
        }
        table.entries.push_back({e.edc_id, e.depth_vector, {}});
    }
    for (const auto& t : dataset.trials) {
        const auto it = index.find(t.edc_id);
        if (it == index.end()) {
            throw LookupError("trial '" + t.trial_id + "' belongs to unknown EDC '" + t.edc_id + "'");
        }
        table.entries[it->second].trial_ids.push_back(t.trial_id);
    }
    return table;
}

double depth_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("depth vectors differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

ClusteredDataset cluster_edcs(const std::string& anchor, const EdcTable& table, int window) {
    if (window < 1) throw ParameterError("clustering window W must be >= 1");
    const EdcEntry& origin = table.find(anchor);

    ClusteredDataset cluster;
    cluster.anchor = anchor;
    cluster.window = window;
    cluster.edcs.push_back(anchor);
    cluster.members = origin.trial_ids;

    std::vector<std::pair<double, const EdcEntry*>> others;
    for (const auto& e : table.entries) {
        if (e.edc_id != anchor) others.emplace_back(depth_distance(origin.depth_vector, e.depth_vector), &e);
    }
    std::sort(others.begin(), others.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first < y.first;
        return x.second->edc_id < y.second->edc_id;
    });
    for (const auto& [dist, entry] : others) {
        if (static_cast<int>(cluster.members.size()) >= window) break;
        cluster.edcs.push_back(entry->edc_id);
        cluster.members.insert(cluster.members.end(), entry->trial_ids.begin(), entry->trial_ids.end());
    }
    return cluster;
}

std::vector<const TrialRecord*> resolve(const Dataset& dataset, const ClusteredDataset& cluster) {
    std::unordered_map<std::string, const TrialRecord*> by_id;
    by_id.reserve(dataset.trials.size());
    for (const auto& t : dataset.trials) by_id.emplace(t.trial_id, &t);
    std::vector<const TrialRecord*> out;
    out.reserve(cluster.members.size());
    for (const auto& id : cluster.members) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw LookupError("unknown trial '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

// ---- confusion and summaries ----------------------------------------------

ConfusionMatrix::ConfusionMatrix(int num_classes) {
    if (num_classes < 0) throw ParameterError("negative class count");
    counts_ = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(num_classes, num_classes);
}

void ConfusionMatrix::add(int true_label, int decoded_label) {
    if (true_label < 1 || true_label > num_classes() || decoded_label < 1 || decoded_label > num_classes()) {
        throw ParameterError("confusion label out of range");
    }
    ++counts_(true_label - 1, decoded_label - 1);
}

long long ConfusionMatrix::count(int true_label, int decoded_label) const {
    return counts_(true_label - 1, decoded_label - 1);
}

long long ConfusionMatrix::total() const { return counts_.sum(); }

long long ConfusionMatrix::trace() const { return counts_.diagonal().sum(); }

double ConfusionMatrix::accuracy() const {
    const long long n = total();
    return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

Eigen::MatrixXd ConfusionMatrix::row_normalized() const {
    Eigen::MatrixXd out = counts_.cast<double>();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double s = out.row(r).sum();
        if (s > 0.0) out.row(r) /= s;
    }
    return out;
}

Eigen::VectorXd ConfusionMatrix::per_class_accuracy() const {
    Eigen::VectorXd out(num_classes());
    for (int k = 0; k < num_classes(); ++k) {
        const long long row = counts_.row(k).sum();
        out[k] = row == 0 ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(counts_(k, k)) / static_cast<double>(row);
    }
    return out;
}

ConfusionMatrix ConfusionMatrix::from_counts(
    const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& counts) {
    if (counts.rows() != counts.cols()) throw ShapeError("confusion matrix must be square");
    if ((counts.array() < 0).any()) throw ParameterError("confusion counts must be nonnegative");
    ConfusionMatrix cm(static_cast<int>(counts.rows()));
    cm.counts_ = counts;
    return cm;
}

std::map<std::string, double> directional_summary(const ConfusionMatrix& cm,
                                                  const std::map<int, std::string>& grouping,
                                                  std::span<const std::string> required_groups) {
    const Eigen::VectorXd recall = cm.per_class_accuracy();
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& g : required_groups) acc.emplace(g, std::pair{0.0, 0});
    std::map<std::string, int> members;
    for (int k = 1; k <= cm.num_classes(); ++k) {
        const auto it = grouping.find(k);
        if (it == grouping.end()) {
            throw ParameterError("grouping does not cover class " + std::to_string(k));
        }
        ++members[it->second];
        auto& slot = acc[it->second];
        if (!std::isnan(recall[k - 1])) {
            slot.first += recall[k - 1];
            ++slot.second;
        }
    }
    std::map<std::string, double> out;
    for (const auto& [group, sum_count] : acc) {
        if (members[group] == 0) throw ParameterError("direction group '" + group + "' is empty");
        out[group] = sum_count.second == 0 ? std::numeric_limits<double>::quiet_NaN()
                                           : sum_count.first / sum_count.second;
    }
    return out;
}

double relative_gain(double acc_complex, double acc_power) {
    if (!(acc_power > 0.0)) {
        throw UndefinedGainError("relative gain undefined for baseline accuracy " + std::to_string(acc_power));
    }
    return (acc_complex - acc_power) / acc_power;
}

double binomial_standard_error(double p, double n) {
    if (!(n > 0.0)) throw ParameterError("standard error needs n > 0");
    return std::sqrt(p * (1.0 - p) / n);
}

// ---- cross-validation -----------------------------------------------------

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers. Exceptions are
// rethrown for the lowest failing index so the outcome does not depend on timing.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body body) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

Eigen::MatrixXd feature_matrix(std::span<const TrialRecord* const> trials, const FeatureOptions& options) {
    if (trials.empty()) return {};
    const FourierBasis basis(options.window, options.num_frequencies);
    const auto channels = static_cast<int>(trials.front()->num_channels());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(trials.size()), feature_length(options, channels));
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (trials[i]->num_channels() != channels) {
            throw ShapeError("trial '" + trials[i]->trial_id + "' has a different channel count");
        }
        out.row(static_cast<Eigen::Index>(i)) = extract_features(*trials[i], options, basis).values.transpose();
    }
    return out;
}

LoocvResult loocv_features(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const int> labels, int num_classes,
                           const DecoderOptions& options, const ExecutionOptions& exec) {
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeError("one label per feature row required");

    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (int l : labels) {
        if (l < 1 || l > num_classes) throw ParameterError("label out of range");
        ++counts[static_cast<std::size_t>(l - 1)];
    }
    std::string missing;
    for (int k = 0; k < num_classes; ++k) {
        if (counts[static_cast<std::size_t>(k)] == 0) missing += (missing.empty() ? "" : ",") + std::to_string(k + 1);
    }
    if (!missing.empty()) throw InsufficientDataError("classes absent from dataset: " + missing);
    if (options.whiten) {
        if (options.modes > d) {
            throw ParameterError("P=" + std::to_string(options.modes) + " exceeds feature dimension " +
                                 std::to_string(d));
        }
        if (n < num_classes + options.modes + 2) {
            throw InsufficientDataError("LOOCV needs at least K+P+2=" +
                                        std::to_string(num_classes + options.modes + 2) +
                                        " trials, have " + std::to_string(n));
        }
    } else if (n - 1 - num_classes < 1) {
        throw InsufficientDataError("LOOCV needs more than K+1 trials");
    }

    LoocvResult result;
    result.predictions.assign(static_cast<std::size_t>(n), 0);
    parallel_for(static_cast<std::size_t>(n), exec.threads, [&](std::size_t fold) {
        const int held_label = labels[fold];
        if (counts[static_cast<std::size_t>(held_label - 1)] - 1 < 2) return;  // skipped
        Eigen::MatrixXd train(n - 1, d);
        std::vector<int> train_labels;
        train_labels.reserve(static_cast<std::size_t>(n - 1));
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (static_cast<std::size_t>(i) == fold) continue;
            train.row(r++) = features.row(i);
            train_labels.push_back(labels[static_cast<std::size_t>(i)]);
        }
        const Decoder decoder(fit_decoder(train, train_labels, num_classes, options));
        result.predictions[fold] = decoder.predict(features.row(static_cast<Eigen::Index>(fold)).transpose()).label;
    });

    result.confusion = ConfusionMatrix(num_classes);
    for (std::size_t i = 0; i < result.predictions.size(); ++i) {
        if (result.predictions[i] == 0) {
            ++result.skipped_folds;
            continue;
        }
        result.confusion.add(labels[i], result.predictions[i]);
        ++result.evaluated_folds;
    }
    result.accuracy = result.confusion.accuracy();
    return result;
}

LoocvResult loocv(std::span<const TrialRecord* const> trials, int num_classes,
                  const ExperimentConfig& config, const ExecutionOptions& exec) {
    if (trials.empty()) throw InsufficientDataError("LOOCV on an empty dataset");
    config.validate_against(static_cast<int>(trials.front()->num_samples()),
                            static_cast<int>(trials.front()->num_channels()));
    const Eigen::MatrixXd x = feature_matrix(trials, config.feature_options());
    std::vector<int> labels;
    labels.reserve(trials.size());
    for (const auto* t : trials) labels.push_back(t->label);
    return loocv_features(x, labels, num_classes, config.decoder_options(), exec);
}

// ---- sweeps ----------------------------------------------------------------

std::vector<SweepRow> sweep(const std::vector<ExperimentConfig>& grid,
                            const std::vector<ClusteredDataset>& datasets, const Dataset& source,
                            const ExecutionOptions& exec) {
    if (grid.empty()) throw ParameterError("sweep grid is empty");
    if (datasets.empty()) throw ParameterError("sweep needs at least one dataset");

    std::vector<std::vector<const TrialRecord*>> resolved;
    resolved.reserve(datasets.size());
    for (const auto& ds : datasets) resolved.push_back(resolve(source, ds));

    std::vector<SweepRow> rows;
    rows.reserve(grid.size() * datasets.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        for (std::size_t j = 0; j < datasets.size(); ++j) {
            SweepRow row;
            row.cell = rows.size();
            row.config = grid[c];
            row.config.anchor = datasets[j].anchor;
            row.config.cluster_window = datasets[j].window;
            row.anchor = datasets[j].anchor;
            row.num_trials = resolved[j].size();
            row.cell_seed = derive_seed(grid[c].seed, 0x5eed, row.cell);
            const auto start = std::chrono::steady_clock::now();
            try {
                row.result = loocv(resolved[j], source.num_classes, row.config, exec);
                row.ok = true;
            } catch (const Error& e) {
                row.error = std::string(to_string(e.kind())) + ": " + e.what();
            }
            row.runtime_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace specdec
