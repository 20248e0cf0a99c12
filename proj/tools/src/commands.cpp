#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "specdec/checksum.hpp"
#include "specdec/error.hpp"
#include "specdec/random.hpp"
#include "specdec/synth.hpp"

namespace specdec::app {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

bool is_config_error(ErrorKind kind) {
    return kind == ErrorKind::parameter || kind == ErrorKind::lookup;
}

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "NaN";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void prepare_out_dir(const std::string& dir, bool force) {
    if (dir.empty()) throw ParameterError("an output directory is required");
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec)) throw IoError("'" + dir + "' exists and is not a directory");
        if (!force && !fs::is_empty(dir, ec)) {
            throw IoError("output directory '" + dir + "' is not empty (use --force to overwrite)");
        }
    } else {
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
    }
}

class OutputSet {
public:
    explicit OutputSet(std::string dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& bytes) {
        const fs::path path = fs::path(dir_) / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + path.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for '" + path.string() + "'");
        names_.push_back(name);
        digests_[name] = sha256_hex(bytes);
    }

    const std::vector<std::string>& names() const { return names_; }

    json digests() const {
        json out = json::object();
        for (const auto& n : names_) out[n] = digests_.at(n);
        return out;
    }

private:
    std::string dir_;
    std::vector<std::string> names_;
    std::map<std::string, std::string> digests_;
};

json config_json(const ExperimentConfig& config) {
    return json::parse(serialize_config(config));
}

std::string config_digest(const ExperimentConfig& config) {
    return sha256_hex(serialize_config(config));
}

json matrix_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

json counts_json(const ConfusionMatrix& cm) {
    json out = json::array();
    for (int r = 0; r < cm.num_classes(); ++r) {
        json row = json::array();
        for (int c = 0; c < cm.num_classes(); ++c) row.push_back(cm.counts()(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

json per_class_json(const ConfusionMatrix& cm) {
    json out = json::array();
    const Eigen::VectorXd pc = cm.per_class_accuracy();
    for (Eigen::Index k = 0; k < pc.size(); ++k) {
        if (std::isnan(pc[k])) out.push_back(nullptr);
        else out.push_back(pc[k]);
    }
    return out;
}

json summary_json(const ConfusionMatrix& cm, const std::map<int, std::string>& grouping) {
    if (grouping.empty()) return nullptr;
    json out = json::object();
    for (const auto& [group, value] : directional_summary(cm, grouping)) out[group] = value;
    return out;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "true_label";
    for (int c = 1; c <= cm.num_classes(); ++c) out += ",decoded_" + std::to_string(c);
    out += '\n';
    for (int r = 0; r < cm.num_classes(); ++r) {
        out += std::to_string(r + 1);
        for (int c = 0; c < cm.num_classes(); ++c) out += "," + std::to_string(cm.counts()(r, c));
        out += '\n';
    }
    return out;
}

double rms_depth(const std::vector<double>& depth) {
    if (depth.empty()) return 0.0;
    double s = 0.0;
    for (double d : depth) s += d * d;
    return std::sqrt(s / static_cast<double>(depth.size()));
}

std::string resolve_anchor(const std::string& requested, const EdcTable& table) {
    if (table.entries.empty()) throw InsufficientDataError("dataset has no trials");
    if (requested.empty()) return table.entries.front().edc_id;
    table.find(requested);
    return requested;
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

json run_manifest(const std::string& command, const std::string& started, const json& config,
                  const std::string& config_sha, const std::string& dataset_path,
                  const std::string& dataset_sha, const ExecutionOptions& exec, const OutputSet& outputs) {
    json m;
    m["format"] = "specdec-run-v1";
    m["command"] = command;
    m["code_version"] = kCodeVersion;
    m["rng_algorithm"] = std::string(kRngAlgorithm);
    m["config"] = config;
    m["config_sha256"] = config_sha;
    m["dataset"] = dataset_path;
    m["dataset_sha256"] = dataset_sha;
    m["threads"] = exec.threads;
    m["started_utc"] = started;
    m["finished_utc"] = utc_now();
    m["outputs"] = outputs.digests();
    return m;
}

// ---- sweep tables ----------------------------------------------------------

const char* const kSweepColumns[] = {
    "cell", "anchor", "edc_distance_mm", "W", "n_trials", "T", "D", "L", "P", "flavor", "shrinkage",
    "log_power", "whiten", "cell_seed", "status", "accuracy", "evaluated_folds", "skipped_folds",
    "per_class_accuracy", "group_accuracy", "error",
};

std::string sweep_csv(const std::vector<SweepRow>& rows, const EdcTable& table, const std::string& header) {
    std::string out = header;
    for (std::size_t i = 0; i < std::size(kSweepColumns); ++i) {
        if (i > 0) out += ',';
        out += kSweepColumns[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        const auto& c = row.config;
        std::string per_class;
        std::string groups;
        if (row.ok) {
            const Eigen::VectorXd pc = row.result.confusion.per_class_accuracy();
            for (Eigen::Index k = 0; k < pc.size(); ++k) {
                if (k > 0) per_class += ';';
                per_class += fmt(pc[k]);
            }
            if (!c.grouping.empty()) {
                for (const auto& [g, v] : directional_summary(row.result.confusion, c.grouping)) {
                    if (!groups.empty()) groups += ';';
                    groups += g + "=" + fmt(v);
                }
            }
        }
        const std::vector<std::string> fields = {
            std::to_string(row.cell),
            row.anchor,
            fmt(rms_depth(table.find(row.anchor).depth_vector)),
            std::to_string(c.cluster_window),
            std::to_string(row.num_trials),
            std::to_string(c.window),
            std::to_string(c.delay),
            std::to_string(c.num_frequencies),
            std::to_string(c.modes),
            std::string(to_string(c.flavor)),
            std::string(to_string(c.shrinkage.kind)),
            c.log_power ? "1" : "0",
            c.whiten ? "1" : "0",
            std::to_string(row.cell_seed),
            row.ok ? "ok" : "error",
            row.ok ? fmt(row.result.accuracy) : "",
            row.ok ? std::to_string(row.result.evaluated_folds) : "",
            row.ok ? std::to_string(row.result.skipped_folds) : "",
            per_class,
            groups,
            row.ok ? "" : sanitize(row.error),
        };
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out += ',';
            out += fields[i];
        }
        out += '\n';
    }
    return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

void plot_rows(std::istream& in, std::ostream& out) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        header = split(line, ',');
        break;
    }
    if (header.empty()) throw IoError("sweep table has no header");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* name : kSweepColumns) {
        if (!col.count(name)) throw IoError(std::string("sweep table lacks column '") + name + "'");
    }

    out << "x_name,x,metric,value,anchor,flavor,T,D,L,P,cell\n";
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto f = split(line, ',');
        if (f.size() != header.size()) throw IoError("sweep table row has the wrong number of fields");
        auto at = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
        if (at("status") != "ok") continue;

        std::vector<std::pair<std::string, std::string>> metrics = {{"accuracy", at("accuracy")}};
        if (!at("per_class_accuracy").empty()) {
            const auto pc = split(at("per_class_accuracy"), ';');
            for (std::size_t k = 0; k < pc.size(); ++k) {
                metrics.emplace_back("recall_class_" + std::to_string(k + 1), pc[k]);
            }
        }
        if (!at("group_accuracy").empty()) {
            for (const auto& kv : split(at("group_accuracy"), ';')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw IoError("bad group_accuracy entry '" + kv + "'");
                metrics.emplace_back("group_" + kv.substr(0, eq), kv.substr(eq + 1));
            }
        }
        const std::pair<const char*, const char*> axes[] = {
            {"edc_distance_mm", "edc_distance_mm"}, {"window_ms", "T"}, {"delay_ms", "D"}};
        const std::string tail = "," + at("anchor") + "," + at("flavor") + "," + at("T") + "," + at("D") +
                                 "," + at("L") + "," + at("P") + "," + at("cell") + "\n";
        for (const auto& [x_name, column] : axes) {
            for (const auto& [metric, value] : metrics) {
                out << x_name << ',' << at(column) << ',' << metric << ',' << value << tail;
            }
        }
    }
}

json sweep_summary(const std::vector<SweepRow>& rows, const std::string& dataset_sha, const std::string& config_sha,
                   const GridSpec& grid) {
    json s;
    s["format"] = "specdec-sweep-summary-v1";
    s["dataset_sha256"] = dataset_sha;
    s["config_sha256"] = config_sha;
    s["grid"] = json::parse(serialize_grid(grid));
    json cells = json::array();
    for (const auto& row : rows) {
        json c;
        c["cell"] = row.cell;
        c["anchor"] = row.anchor;
        c["config"] = config_json(row.config);
        c["n_trials"] = row.num_trials;
        c["status"] = row.ok ? "ok" : "error";
        if (row.ok) {
            c["accuracy"] = row.result.accuracy;
            c["evaluated_folds"] = row.result.evaluated_folds;
            c["skipped_folds"] = row.result.skipped_folds;
            c["per_class_accuracy"] = per_class_json(row.result.confusion);
            c["confusion"] = counts_json(row.result.confusion);
            c["directional_summary"] = summary_json(row.result.confusion, row.config.grouping);
        } else {
            c["error"] = row.error;
        }
        cells.push_back(std::move(c));
    }
    s["cells"] = std::move(cells);

    json gains = json::array();
    for (const auto& cx : rows) {
        if (!cx.ok || cx.config.flavor != FeatureFlavor::complex_spectrum) continue;
        for (const auto& pw : rows) {
            if (!pw.ok || pw.config.flavor != FeatureFlavor::power_spectrum) continue;
            if (pw.anchor != cx.anchor || pw.config.window != cx.config.window ||
                pw.config.delay != cx.config.delay || pw.config.num_frequencies != cx.config.num_frequencies) {
                continue;
            }
            json g;
            g["anchor"] = cx.anchor;
            g["T"] = cx.config.window;
            g["D"] = cx.config.delay;
            g["L"] = cx.config.num_frequencies;
            g["complex_cell"] = cx.cell;
            g["power_cell"] = pw.cell;
            g["accuracy_complex"] = cx.result.accuracy;
            g["accuracy_power"] = pw.result.accuracy;
            try {
                g["relative_gain"] = relative_gain(cx.result.accuracy, pw.result.accuracy);
            } catch (const UndefinedGainError& e) {
                g["relative_gain"] = nullptr;
                g["note"] = e.what();
            }
            gains.push_back(std::move(g));
        }
    }
    s["relative_gains"] = std::move(gains);
    return s;
}

}  // namespace

// ---- commands --------------------------------------------------------------

std::string cmd_generate(const GenerateArgs& args) {
    if (args.out_dir.empty()) throw ParameterError("an output directory is required");
    if (args.spec.num_trials <= 0) throw ParameterError("num_trials must be positive");
    const Dataset ds = generate_dataset(args.spec);
    return write_dataset(args.out_dir, ds, args.write);
}

EvaluateOutcome cmd_evaluate(EvaluateArgs args) {
    const std::string started = utc_now();
    std::string expected_checksum;
    if (!args.from_manifest.empty()) {
        json m;
        try {
            m = json::parse(read_text(args.from_manifest));
            const std::string dataset_override = args.config.dataset;
            args.config = parse_config(m.at("config").dump());
            if (!dataset_override.empty()) args.config.dataset = dataset_override;
            expected_checksum = m.at("dataset_sha256").get<std::string>();
        } catch (const json::exception& e) {
            throw ParameterError("'" + args.from_manifest + "' is not a run manifest: " + e.what());
        }
    }
    ExperimentConfig& config = args.config;
    config.validate();
    if (config.dataset.empty()) throw ParameterError("no dataset given");

    const LoadedDataset loaded = read_dataset(config.dataset);
    if (!expected_checksum.empty() && expected_checksum != loaded.checksum) {
        throw ChecksumError("dataset checksum " + loaded.checksum + " does not match manifest " + expected_checksum);
    }
    const Dataset& ds = loaded.dataset;
    config.validate_against(ds.window, ds.num_channels);

    const EdcTable table = make_edc_table(ds);
    config.anchor = resolve_anchor(config.anchor, table);
    prepare_out_dir(args.out_dir, args.force);

    EvaluateOutcome outcome;
    outcome.dataset_checksum = loaded.checksum;
    outcome.cluster = cluster_edcs(config.anchor, table, config.cluster_window);
    const auto trials = resolve(ds, outcome.cluster);
    outcome.result = loocv(trials, ds.num_classes, config, args.exec);

    // Model fit on every trial of the cluster, for later use.
    const Eigen::MatrixXd features = feature_matrix(trials, config.feature_options());
    std::vector<int> labels;
    labels.reserve(trials.size());
    for (const TrialRecord* t : trials) labels.push_back(t->label);
    const DecoderModel model =
        fit_decoder(features, labels, ds.num_classes, config.decoder_options(), config.fingerprint());

    const json cfg = config_json(config);
    const std::string cfg_sha = config_digest(config);
    const ConfusionMatrix& cm = outcome.result.confusion;

    json results;
    results["format"] = "specdec-results-v1";
    results["config"] = cfg;
    results["config_sha256"] = cfg_sha;
    results["dataset_sha256"] = loaded.checksum;
    results["anchor"] = outcome.cluster.anchor;
    results["cluster_edcs"] = outcome.cluster.edcs;
    results["n_trials"] = trials.size();
    results["evaluated_folds"] = outcome.result.evaluated_folds;
    results["skipped_folds"] = outcome.result.skipped_folds;
    results["accuracy"] = outcome.result.accuracy;
    results["standard_error"] =
        binomial_standard_error(outcome.result.accuracy, std::max(1, outcome.result.evaluated_folds));
    results["per_class_accuracy"] = per_class_json(cm);
    results["confusion"] = counts_json(cm);
    results["confusion_normalized"] = matrix_json(cm.row_normalized());
    results["directional_summary"] = summary_json(cm, config.grouping);

    OutputSet outputs(args.out_dir);
    outputs.write("results.json", results.dump(2) + "\n");
    outputs.write("confusion.csv", confusion_csv(cm));
    outputs.write("model.json", serialize_model(model));
    outcome.files = outputs.names();

    const json manifest = run_manifest("evaluate", started, cfg, cfg_sha, config.dataset, loaded.checksum,
                                       args.exec, outputs);
    OutputSet(args.out_dir).write("run_manifest.json", manifest.dump(2) + "\n");
    return outcome;
}

SweepOutcome cmd_sweep(const SweepArgs& args) {
    const std::string started = utc_now();
    if (args.grid.empty()) throw ParameterError("the sweep grid is empty");
    const ExperimentConfig& base = args.config;
    base.validate();
    if (base.dataset.empty()) throw ParameterError("no dataset given");

    const LoadedDataset loaded = read_dataset(base.dataset);
    const Dataset& ds = loaded.dataset;
    const EdcTable table = make_edc_table(ds);

    std::vector<std::string> anchors;
    for (const auto& a : args.grid.anchors) {
        if (a == "all") {
            for (const auto& e : table.entries) anchors.push_back(e.edc_id);
        } else {
            anchors.push_back(resolve_anchor(a, table));
        }
    }
    if (anchors.empty()) anchors.push_back(resolve_anchor(base.anchor, table));

    const std::vector<ExperimentConfig> cells = args.grid.expand(base);
    for (const auto& c : cells) c.validate();
    prepare_out_dir(args.out_dir, args.force);

    std::vector<ClusteredDataset> clusters;
    clusters.reserve(anchors.size());
    for (const auto& a : anchors) clusters.push_back(cluster_edcs(a, table, base.cluster_window));

    SweepOutcome outcome;
    outcome.dataset_checksum = loaded.checksum;
    outcome.rows = sweep(cells, clusters, ds, args.exec);

    const std::string cfg_sha = config_digest(base);
    const std::string header = "# dataset_sha256=" + loaded.checksum + " config_sha256=" + cfg_sha + "\n";
    const std::string table_text = sweep_csv(outcome.rows, table, header);

    std::string timing = "cell,anchor,status,runtime_seconds\n";
    for (const auto& row : outcome.rows) {
        timing += std::to_string(row.cell) + "," + row.anchor + "," + (row.ok ? "ok" : "error") + "," +
                  fmt(row.runtime_seconds) + "\n";
    }
    std::istringstream table_in(table_text);
    std::ostringstream plot;
    plot_rows(table_in, plot);

    OutputSet outputs(args.out_dir);
    outputs.write("sweep.csv", table_text);
    outputs.write("summary.json", sweep_summary(outcome.rows, loaded.checksum, cfg_sha, args.grid).dump(2) + "\n");
    outputs.write("plot_data.csv", plot.str());
    outcome.files = outputs.names();

    OutputSet extra(args.out_dir);
    extra.write("timing.csv", timing);
    json cfg = config_json(base);
    cfg["grid"] = json::parse(serialize_grid(args.grid));
    json manifest = run_manifest("sweep", started, cfg, cfg_sha, base.dataset, loaded.checksum, args.exec, outputs);
    manifest["timing_sha256"] = sha256_hex(timing);
    extra.write("run_manifest.json", manifest.dump(2) + "\n");
    return outcome;
}

void cmd_plot_data(const std::string& sweep_csv_path, std::ostream& out) {
    std::ifstream in(sweep_csv_path);
    if (!in) throw IoError("cannot read '" + sweep_csv_path + "'");
    plot_rows(in, out);
}

void cmd_inspect(const InspectArgs& args, std::ostream& out) {
    const LoadedDataset loaded = read_dataset(args.dataset);
    const Dataset& ds = loaded.dataset;
    const EdcTable table = make_edc_table(ds);
    if (table.entries.empty()) throw InsufficientDataError("dataset has no trials");
    if (args.channel < 0 || args.channel >= ds.num_channels) {
        throw ParameterError("channel " + std::to_string(args.channel) + " out of range [0, " +
                             std::to_string(ds.num_channels) + ")");
    }

    const EdcEntry* chosen = &table.entries.front();
    if (!args.edc.empty()) {
        chosen = &table.find(args.edc);
    } else {
        for (const auto& e : table.entries) {
            if (e.trial_ids.size() > chosen->trial_ids.size()) chosen = &e;
        }
    }
    ClusteredDataset single;
    single.anchor = chosen->edc_id;
    single.edcs = {chosen->edc_id};
    single.members = chosen->trial_ids;
    single.window = static_cast<int>(chosen->trial_ids.size());
    const auto trials = resolve(ds, single);
    const NoiseDiagnostic diag = noise_diagnostic(trials, args.channel, args.num_frequencies);

    std::vector<int> class_counts(static_cast<std::size_t>(ds.num_classes), 0);
    for (const auto& t : ds.trials) ++class_counts[static_cast<std::size_t>(t.label - 1)];

    json report;
    report["dataset"] = args.dataset;
    report["dataset_sha256"] = loaded.checksum;
    report["num_classes"] = ds.num_classes;
    report["num_channels"] = ds.num_channels;
    report["window"] = ds.window;
    report["sample_rate_hz"] = ds.sample_rate_hz;
    report["rng_algorithm"] = ds.rng_algorithm;
    report["num_trials"] = ds.trials.size();
    report["class_counts"] = class_counts;
    json edcs = json::array();
    for (const auto& e : table.entries) {
        edcs.push_back({{"edc_id", e.edc_id},
                        {"num_trials", e.trial_ids.size()},
                        {"rms_depth_mm", rms_depth(e.depth_vector)}});
    }
    report["edcs"] = std::move(edcs);
    report["noise"] = {{"edc", chosen->edc_id},
                       {"channel", args.channel},
                       {"L", args.num_frequencies},
                       {"num_trials", trials.size()},
                       {"window", diag.window},
                       {"diagonal_dominance", diag.diagonal_dominance}};
    out << report.dump(2) << "\n";

    if (!args.covariance_csv.empty()) {
        std::ofstream cov(args.covariance_csv, std::ios::trunc);
        if (!cov) throw IoError("cannot write '" + args.covariance_csv + "'");
        for (Eigen::Index r = 0; r < diag.covariance.rows(); ++r) {
            for (Eigen::Index c = 0; c < diag.covariance.cols(); ++c) {
                if (c > 0) cov << ',';
                cov << fmt(diag.covariance(r, c));
            }
            cov << '\n';
        }
    }
}

// ---- command line ----------------------------------------------------------

namespace {

struct ConfigFlags {
    std::string config_path;
    std::optional<std::string> dataset;
    std::optional<std::string> anchor;
    std::optional<std::uint64_t> seed;
    std::optional<int> window, delay, frequencies, modes, cluster_window;
    std::optional<std::string> flavor;
    std::optional<double> ridge;
    bool log_power = false;
    bool no_whiten = false;
    int threads = 0;

    void add(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (comments allowed)");
        cmd->add_option("--dataset", dataset, "dataset directory");
        cmd->add_option("--anchor", anchor, "EDC id of the cluster anchor");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--T", window, "analysis window, samples");
        cmd->add_option("--D", delay, "delay after movement onset, samples");
        cmd->add_option("--L", frequencies, "number of Fourier frequencies");
        cmd->add_option("--P", modes, "number of PCA modes");
        cmd->add_option("--W", cluster_window, "cluster size, trials");
        cmd->add_option("--flavor", flavor, "complex or power");
        cmd->add_option("--ridge", ridge, "relative ridge on the pooled covariance");
        cmd->add_flag("--log-power", log_power, "log of the power features");
        cmd->add_flag("--no-whiten", no_whiten, "skip PCA and ZCA");
        cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    }

    ExperimentConfig build() const {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config_file(config_path);
        if (dataset) c.dataset = *dataset;
        if (anchor) c.anchor = *anchor;
        if (seed) c.seed = *seed;
        if (window) c.window = *window;
        if (delay) c.delay = *delay;
        if (frequencies) c.num_frequencies = *frequencies;
        if (modes) c.modes = *modes;
        if (cluster_window) c.cluster_window = *cluster_window;
        if (flavor) c.flavor = parse_feature_flavor(*flavor);
        if (ridge) c.ridge = *ridge;
        if (log_power) c.log_power = true;
        if (no_whiten) c.whiten = false;
        return c;
    }
};

void require_dataset_dir(const std::string& path) {
    if (path.empty()) throw ParameterError("no dataset given (use --dataset or the config's \"dataset\")");
    std::error_code ec;
    if (!fs::exists(fs::path(path) / "manifest.json", ec)) {
        throw ParameterError("dataset '" + path + "' not found");
    }
}

void report(std::ostream& err, std::string_view kind, std::string message) {
    for (char& c : message) {
        if (c == '\n') c = ' ';
        if (c == '"') c = '\'';
    }
    err << "error: kind=" << kind << " message=\"" << message << "\"\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spectral-feature decoding experiments on synthetic multichannel recordings", "specdec"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kCodeVersion);

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a dataset");
    std::string gen_config, gen_out;
    std::optional<int> g_k, g_channels, g_window, g_trials, g_edcs, g_lgen;
    std::optional<double> g_alpha, g_radius, g_sep, g_tau, g_sigma, g_div, g_amp, g_ar;
    std::optional<int> g_support;
    std::optional<std::string> g_scenario;
    std::optional<std::uint64_t> g_seed;
    bool g_text = false, g_force = false;
    gen->add_option("--config", gen_config, "generator JSON (manifest \"generator\" keys)");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--K", g_k, "number of classes");
    gen->add_option("--channels", g_channels, "number of channels");
    gen->add_option("--T", g_window, "samples per trial");
    gen->add_option("--trials", g_trials, "number of trials");
    gen->add_option("--edcs", g_edcs, "number of EDCs");
    gen->add_option("--L-gen", g_lgen, "frequencies in the class means");
    gen->add_option("--alpha-gen", g_alpha, "smoothness exponent of the class means");
    gen->add_option("--C-sob", g_radius, "ellipsoid radius");
    gen->add_option("--separation", g_sep, "minimum pairwise distance between class vectors");
    gen->add_option("--tau", g_tau, "per-trial coefficient jitter");
    gen->add_option("--sigma", g_sigma, "noise standard deviation");
    gen->add_option("--edc-divergence", g_div, "per-EDC perturbation of the class means");
    gen->add_option("--scenario", g_scenario, "standard or phase_only");
    gen->add_option("--phase-amplitude", g_amp, "amplitude for phase_only");
    gen->add_option("--support", g_support, "samples carrying the class signal (0 = whole window)");
    gen->add_option("--noise-ar", g_ar, "AR(1) coefficient of the noise");
    gen->add_option("--seed", g_seed, "master seed");
    gen->add_flag("--text", g_text, "CSV sample files");
    gen->add_flag("--force", g_force, "overwrite a non-empty directory");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "leave-one-out decoding of one cluster");
    ConfigFlags eval_flags;
    eval_flags.add(eval);
    std::string eval_out, eval_manifest;
    bool eval_force = false;
    eval->add_option("--out", eval_out, "output directory")->required();
    eval->add_option("--from-manifest", eval_manifest, "rerun the config recorded in a run manifest");
    eval->add_flag("--force", eval_force, "overwrite a non-empty directory");

    // sweep
    auto* sw = app.add_subcommand("sweep", "evaluate a parameter grid");
    ConfigFlags sw_flags;
    sw_flags.add(sw);
    std::string sw_out, sw_windows, sw_delays, sw_l, sw_p, sw_flavors, sw_anchors;
    std::optional<int> sw_power_modes;
    bool sw_force = false;
    sw->add_option("--out", sw_out, "output directory")->required();
    sw->add_option("--windows", sw_windows, "T values, a:b:step or a,b,c");
    sw->add_option("--delays", sw_delays, "D values");
    sw->add_option("--L-grid", sw_l, "L values");
    sw->add_option("--P-grid", sw_p, "P values");
    sw->add_option("--flavors", sw_flavors, "comma-separated flavors");
    sw->add_option("--anchors", sw_anchors, "'all' or comma-separated EDC ids");
    sw->add_option("--power-modes", sw_power_modes, "P used by power cells");
    sw->add_flag("--force", sw_force, "overwrite a non-empty directory");

    // plot-data
    auto* plot = app.add_subcommand("plot-data", "long-format table from a sweep CSV");
    std::string plot_in, plot_out;
    plot->add_option("sweep_csv", plot_in, "sweep.csv")->required();
    plot->add_option("--out", plot_out, "output file (default stdout)");

    // inspect
    auto* insp = app.add_subcommand("inspect", "dataset summary and noise diagnostic");
    InspectArgs insp_args;
    insp->add_option("dataset", insp_args.dataset, "dataset directory")->required();
    insp->add_option("--channel", insp_args.channel, "channel index (0-based)");
    insp->add_option("--L", insp_args.num_frequencies, "frequencies removed before the diagnostic");
    insp->add_option("--edc", insp_args.edc, "EDC to inspect");
    insp->add_option("--covariance-csv", insp_args.covariance_csv, "write the residual covariance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        report(err, "usage", e.what());
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            GenerateArgs a;
            if (!gen_config.empty()) a.spec = parse_generator(read_text(gen_config));
            if (g_k) a.spec.bank.num_classes = *g_k;
            if (g_channels) a.spec.bank.num_channels = *g_channels;
            if (g_window) a.spec.window = *g_window;
            if (g_trials) a.spec.num_trials = *g_trials;
            if (g_edcs) a.spec.num_edcs = *g_edcs;
            if (g_lgen) a.spec.bank.gen_frequencies = *g_lgen;
            if (g_alpha) a.spec.bank.alpha = *g_alpha;
            if (g_radius) a.spec.bank.radius = *g_radius;
            if (g_sep) a.spec.bank.separation = *g_sep;
            if (g_tau) a.spec.bank.jitter = *g_tau;
            if (g_sigma) a.spec.sigma = *g_sigma;
            if (g_div) a.spec.edc_divergence = *g_div;
            if (g_scenario) a.spec.scenario = parse_scenario(*g_scenario);
            if (g_amp) a.spec.phase_amplitude = *g_amp;
            if (g_support) a.spec.shape.support = *g_support;
            if (g_ar) a.spec.shape.noise_ar = *g_ar;
            if (g_seed) a.spec.seed = *g_seed;
            a.out_dir = gen_out;
            a.write = {g_text, g_force};
            out << "dataset_sha256=" << cmd_generate(a) << "\n";
        } else if (eval->parsed()) {
            EvaluateArgs a;
            a.config = eval_flags.build();
            a.out_dir = eval_out;
            a.force = eval_force;
            a.exec.threads = eval_flags.threads;
            a.from_manifest = eval_manifest;
            if (eval_manifest.empty()) require_dataset_dir(a.config.dataset);
            const EvaluateOutcome r = cmd_evaluate(a);
            out << "accuracy=" << fmt(r.result.accuracy) << " folds=" << r.result.evaluated_folds
                << " skipped=" << r.result.skipped_folds << " anchor=" << r.cluster.anchor << "\n";
        } else if (sw->parsed()) {
            SweepArgs a;
            a.config = sw_flags.build();
            a.grid = sw_flags.config_path.empty() ? GridSpec{} : load_grid_file(sw_flags.config_path);
            if (!sw_windows.empty()) a.grid.windows = parse_int_list(sw_windows);
            if (!sw_delays.empty()) a.grid.delays = parse_int_list(sw_delays);
            if (!sw_l.empty()) a.grid.frequencies = parse_int_list(sw_l);
            if (!sw_p.empty()) a.grid.modes = parse_int_list(sw_p);
            if (!sw_flavors.empty()) {
                a.grid.flavors.clear();
                for (const auto& f : split(sw_flavors, ',')) a.grid.flavors.push_back(parse_feature_flavor(f));
            }
            if (!sw_anchors.empty()) a.grid.anchors = split(sw_anchors, ',');
            if (sw_power_modes) a.grid.power_modes = *sw_power_modes;
            a.out_dir = sw_out;
            a.force = sw_force;
            a.exec.threads = sw_flags.threads;
            require_dataset_dir(a.config.dataset);
            const SweepOutcome r = cmd_sweep(a);
            std::size_t failed = 0;
            for (const auto& row : r.rows) failed += row.ok ? 0 : 1;
            out << "cells=" << r.rows.size() << " failed=" << failed << "\n";
        } else if (plot->parsed()) {
            if (plot_out.empty()) {
                cmd_plot_data(plot_in, out);
            } else {
                std::ofstream f(plot_out, std::ios::trunc);
                if (!f) throw IoError("cannot write '" + plot_out + "'");
                cmd_plot_data(plot_in, f);
            }
        } else if (insp->parsed()) {
            require_dataset_dir(insp_args.dataset);
            cmd_inspect(insp_args, out);
        }
    } catch (const Error& e) {
        report(err, to_string(e.kind()), e.what());
        return is_config_error(e.kind()) ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        report(err, "internal", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace specdec::app
