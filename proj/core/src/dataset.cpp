#include "specdec/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json_util.hpp"
#include "specdec/checksum.hpp"
#include "specdec/error.hpp"
#include "specdec/random.hpp"

namespace specdec {

namespace fs = std::filesystem;
using detail::json;

namespace {

constexpr const char* kDatasetFormat = "specdec-dataset-v1";
constexpr const char* kManifestName = "manifest.json";
constexpr const char* kEncodingBinary = "f64le-row-major";
constexpr const char* kEncodingCsv = "csv-row-major";

constexpr std::uint64_t kStreamDatasetBank = 11;
constexpr std::uint64_t kStreamEdcBank = 12;
constexpr std::uint64_t kStreamTrial = 13;
constexpr std::uint64_t kStreamDepthLayout = 14;

std::string format_id(const char* prefix, int value, int width) {
    std::string digits = std::to_string(value);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

json generator_to_json(const GeneratorSpec& g) {
    return {
        {"scenario", std::string(to_string(g.scenario))},
        {"K", g.bank.num_classes},
        {"num_channels", g.bank.num_channels},
        {"L_gen", g.bank.gen_frequencies},
        {"alpha_gen", g.bank.alpha},
        {"C_sob", g.bank.radius},
        {"separation", g.bank.separation},
        {"tau", g.bank.jitter},
        {"phase_amplitude", g.phase_amplitude},
        {"sigma", g.sigma},
        {"T", g.window},
        {"num_trials", g.num_trials},
        {"num_edcs", g.num_edcs},
        {"edc_divergence", g.edc_divergence},
        {"depth", {{"base_depth", g.depth.base_depth},
                   {"depth_step", g.depth.depth_step},
                   {"perturbation", g.depth.perturbation}}},
        {"signal_support", g.shape.support},
        {"noise_ar", g.shape.noise_ar},
        {"sample_rate_hz", g.sample_rate_hz},
        {"seed", g.seed},
    };
}

GeneratorSpec generator_from_json(const json& j, const GeneratorSpec& base) {
    static const char* const kKeys[] = {
        "scenario", "K", "num_channels", "L_gen", "alpha_gen", "C_sob", "separation", "tau",
        "phase_amplitude", "sigma", "T", "num_trials", "num_edcs", "edc_divergence", "depth",
        "signal_support", "noise_ar", "sample_rate_hz", "seed",
    };
    if (!j.is_object()) throw ParameterError("generator spec must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
            throw ParameterError("unknown generator key '" + key + "'");
        }
    }
    GeneratorSpec g = base;
    if (j.contains("scenario")) g.scenario = parse_scenario(j["scenario"].get<std::string>());
    g.bank.num_classes = j.value("K", g.bank.num_classes);
    g.bank.num_channels = j.value("num_channels", g.bank.num_channels);
    g.bank.gen_frequencies = j.value("L_gen", g.bank.gen_frequencies);
    g.bank.alpha = j.value("alpha_gen", g.bank.alpha);
    g.bank.radius = j.value("C_sob", g.bank.radius);
    g.bank.separation = j.value("separation", g.bank.separation);
    g.bank.jitter = j.value("tau", g.bank.jitter);
    g.phase_amplitude = j.value("phase_amplitude", g.phase_amplitude);
    g.sigma = j.value("sigma", g.sigma);
    g.window = j.value("T", g.window);
    g.num_trials = j.value("num_trials", g.num_trials);
    g.num_edcs = j.value("num_edcs", g.num_edcs);
    g.edc_divergence = j.value("edc_divergence", g.edc_divergence);
    if (j.contains("depth")) {
        const json& d = j["depth"];
        g.depth.base_depth = d.value("base_depth", g.depth.base_depth);
        g.depth.depth_step = d.value("depth_step", g.depth.depth_step);
        g.depth.perturbation = d.value("perturbation", g.depth.perturbation);
    }
    g.shape.support = j.value("signal_support", g.shape.support);
    g.shape.noise_ar = j.value("noise_ar", g.shape.noise_ar);
    g.sample_rate_hz = j.value("sample_rate_hz", g.sample_rate_hz);
    g.seed = j.value("seed", g.seed);
    return g;
}

void put_le_double(double v, char* out) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
        out[b] = static_cast<char>(bits & 0xFF);
        bits >>= 8;
    }
}

double get_le_double(const char* in) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(in[b]);
    return std::bit_cast<double>(bits);
}

std::string encode_binary(const Eigen::MatrixXd& samples) {
    std::string out(static_cast<std::size_t>(samples.size()) * 8, '\0');
    std::size_t pos = 0;
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        for (Eigen::Index c = 0; c < samples.cols(); ++c, pos += 8) put_le_double(samples(r, c), &out[pos]);
    }
    return out;
}

std::string encode_csv(const Eigen::MatrixXd& samples) {
    std::string out;
    char buf[64];
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        for (Eigen::Index c = 0; c < samples.cols(); ++c) {
            if (c > 0) out.push_back(',');
            const auto res = std::to_chars(buf, buf + sizeof(buf), samples(r, c));
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    return out;
}

Eigen::MatrixXd decode_binary(const std::string& bytes, int rows, int cols, const std::string& path) {
    const auto expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8;
    if (bytes.size() != expected) {
        throw IoError("'" + path + "' has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected));
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t pos = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c, pos += 8) m(r, c) = get_le_double(&bytes[pos]);
    }
    return m;
}

Eigen::MatrixXd decode_csv(const std::string& text, int rows, int cols, const std::string& path) {
    Eigen::MatrixXd m(rows, cols);
    const char* p = text.data();
    const char* end = p + text.size();
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc{}) {
                throw IoError("'" + path + "': bad number at row " + std::to_string(r + 1));
            }
            m(r, c) = v;
            p = res.ptr;
            const char expect = (c + 1 == cols) ? '\n' : ',';
            if (p == end || *p != expect) {
                throw IoError("'" + path + "': expected " + std::to_string(cols) +
                              " values on row " + std::to_string(r + 1));
            }
            ++p;
        }
    }
    if (p != end) throw IoError("'" + path + "': trailing data");
    return m;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string serialize_generator(const GeneratorSpec& spec) {
    return generator_to_json(spec).dump(2) + "\n";
}

GeneratorSpec parse_generator(std::string_view text, const GeneratorSpec& defaults) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("generator spec is not valid JSON: ") + e.what());
    }
    try {
        return generator_from_json(doc, defaults);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("bad generator value: ") + e.what());
    }
}

std::string_view to_string(Scenario scenario) {
    return scenario == Scenario::phase_only ? "phase_only" : "standard";
}

Scenario parse_scenario(std::string_view name) {
    if (name == "standard") return Scenario::standard;
    if (name == "phase_only" || name == "phase-only") return Scenario::phase_only;
    throw ParameterError("unknown scenario '" + std::string(name) + "'");
}

namespace {

ClassSignalBank base_bank(const GeneratorSpec& spec) {
    SignalBankParams params = spec.bank;
    params.seed = derive_seed(spec.seed, kStreamDatasetBank, 0);
    return spec.scenario == Scenario::phase_only ? make_phase_only_bank(params, spec.phase_amplitude)
                                                 : make_signal_bank(params);
}

ClassSignalBank edc_bank(const ClassSignalBank& base, const GeneratorSpec& spec, int edc) {
    return spec.edc_divergence > 0.0
               ? perturb_bank(base, spec.edc_divergence, derive_seed(spec.seed, kStreamEdcBank, edc))
               : base;
}

}  // namespace

ClassSignalBank dataset_bank(const GeneratorSpec& spec, int edc) {
    if (edc < 0 || edc >= spec.num_edcs) throw ParameterError("EDC index out of range");
    return edc_bank(base_bank(spec), spec, edc);
}

Dataset generate_dataset(const GeneratorSpec& spec) {
    if (spec.num_trials < 1) throw ParameterError("num_trials must be >= 1");
    if (spec.num_edcs < 1 || spec.num_edcs > spec.num_trials) {
        throw ParameterError("num_edcs must lie in [1, num_trials]");
    }
    if (!(spec.sample_rate_hz > 0.0)) throw ParameterError("sample rate must be > 0");

    const ClassSignalBank base = base_bank(spec);

    Dataset ds;
    ds.num_classes = base.num_classes();
    ds.num_channels = base.num_channels();
    ds.window = spec.window;
    ds.sample_rate_hz = spec.sample_rate_hz;
    ds.rng_algorithm = std::string(kRngAlgorithm);
    ds.generator = spec;

    const auto depths = make_depth_vectors(spec.num_edcs, ds.num_channels, spec.depth,
                                           derive_seed(spec.seed, kStreamDepthLayout, 0));
    ds.trials.reserve(static_cast<std::size_t>(spec.num_trials));
    int global = 0;
    for (int e = 0; e < spec.num_edcs; ++e) {
        EdcInfo edc{format_id("edc", e, 3), depths[static_cast<std::size_t>(e)]};
        const ClassSignalBank bank = edc_bank(base, spec, e);
        const long long lo = static_cast<long long>(spec.num_trials) * e / spec.num_edcs;
        const long long hi = static_cast<long long>(spec.num_trials) * (e + 1) / spec.num_edcs;
        for (long long j = 0; j < hi - lo; ++j, ++global) {
            const int label = static_cast<int>(j % ds.num_classes) + 1;
            TrialRecord trial = generate_trial(bank, label, spec.sigma, spec.window,
                                               derive_seed(spec.seed, kStreamTrial, global),
                                               spec.shape);
            trial.trial_id = format_id("t", global, 6);
            trial.edc_id = edc.edc_id;
            trial.session_id = edc.edc_id + "-s1";
            trial.depth_vector = edc.depth_vector;
            ds.trials.push_back(std::move(trial));
        }
        ds.edcs.push_back(std::move(edc));
    }
    return ds;
}

std::string write_dataset(const std::string& directory, const Dataset& dataset,
                          const WriteOptions& options) {
    const fs::path root(directory);
    std::error_code ec;
    if (fs::exists(root, ec)) {
        if (!fs::is_directory(root)) throw IoError("'" + directory + "' exists and is not a directory");
        if (!fs::is_empty(root) && !options.force) {
            throw IoError("refusing to write into non-empty directory '" + directory +
                          "' (use --force)");
        }
        fs::remove(root / kManifestName, ec);
        fs::remove_all(root / "trials", ec);
    }
    fs::create_directories(root / "trials", ec);
    if (ec) throw IoError("cannot create '" + directory + "': " + ec.message());

    json edcs = json::array();
    for (const auto& e : dataset.edcs) edcs.push_back({{"edc_id", e.edc_id}, {"depth_vector", e.depth_vector}});

    const char* ext = options.text ? ".csv" : ".bin";
    json trials = json::array();
    std::vector<std::string> payloads;
    payloads.reserve(dataset.trials.size());
    for (const auto& t : dataset.trials) {
        validate(t, dataset.num_classes);
        if (t.num_channels() != dataset.num_channels || t.num_samples() != dataset.window) {
            throw ShapeError("trial '" + t.trial_id + "' shape differs from dataset header");
        }
        const std::string rel = "trials/" + t.trial_id + ext;
        trials.push_back({{"trial_id", t.trial_id},
                          {"edc_id", t.edc_id},
                          {"session_id", t.session_id},
                          {"label", t.label},
                          {"file", rel}});
        payloads.push_back(options.text ? encode_csv(t.samples) : encode_binary(t.samples));
    }

    json manifest = {
        {"format", kDatasetFormat},
        {"K", dataset.num_classes},
        {"num_channels", dataset.num_channels},
        {"T", dataset.window},
        {"sample_rate_hz", dataset.sample_rate_hz},
        {"sample_encoding", options.text ? kEncodingCsv : kEncodingBinary},
        {"rng_algorithm", dataset.rng_algorithm},
        {"generator", dataset.generator ? generator_to_json(*dataset.generator) : json(nullptr)},
        {"edcs", edcs},
        {"trials", trials},
    };
    const std::string manifest_text = manifest.dump(1) + "\n";
    spit(root / kManifestName, manifest_text);

    Sha256 hash;
    hash.update(manifest_text);
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        spit(root / trials[i]["file"].get<std::string>(), payloads[i]);
        hash.update(payloads[i]);
    }
    return hash.hex_digest();
}

LoadedDataset read_dataset(const std::string& directory) {
    const fs::path root(directory);
    if (!fs::exists(root / kManifestName)) {
        throw IoError("no " + std::string(kManifestName) + " in '" + directory + "'");
    }
    const std::string manifest_text = slurp(root / kManifestName);
    Sha256 hash;
    hash.update(manifest_text);

    LoadedDataset out;
    Dataset& ds = out.dataset;
    try {
        const json m = json::parse(manifest_text);
        if (m.value("format", std::string{}) != kDatasetFormat) {
            throw IoError("'" + directory + "' is not a " + kDatasetFormat + " dataset");
        }
        ds.num_classes = m.at("K").get<int>();
        ds.num_channels = m.at("num_channels").get<int>();
        ds.window = m.at("T").get<int>();
        ds.sample_rate_hz = m.at("sample_rate_hz").get<double>();
        ds.rng_algorithm = m.value("rng_algorithm", std::string{});
        if (!m.at("generator").is_null()) ds.generator = generator_from_json(m.at("generator"), {});
        const std::string encoding = m.at("sample_encoding").get<std::string>();
        const bool text = encoding == kEncodingCsv;
        if (!text && encoding != kEncodingBinary) throw IoError("unknown sample encoding '" + encoding + "'");

        std::map<std::string, std::size_t> edc_index;
        for (const auto& e : m.at("edcs")) {
            EdcInfo info{e.at("edc_id").get<std::string>(), e.at("depth_vector").get<std::vector<double>>()};
            if (!edc_index.emplace(info.edc_id, ds.edcs.size()).second) {
                throw IoError("duplicate edc_id '" + info.edc_id + "'");
            }
            ds.edcs.push_back(std::move(info));
        }
        for (const auto& t : m.at("trials")) {
            TrialRecord trial;
            trial.trial_id = t.at("trial_id").get<std::string>();
            trial.edc_id = t.at("edc_id").get<std::string>();
            trial.session_id = t.value("session_id", std::string{});
            trial.label = t.at("label").get<int>();
            const auto it = edc_index.find(trial.edc_id);
            if (it == edc_index.end()) {
                throw IoError("trial '" + trial.trial_id + "' references unknown EDC '" + trial.edc_id + "'");
            }
            trial.depth_vector = ds.edcs[it->second].depth_vector;
            const fs::path file = root / t.at("file").get<std::string>();
            const std::string bytes = slurp(file);
            hash.update(bytes);
            trial.samples = text ? decode_csv(bytes, ds.num_channels, ds.window, file.string())
                                 : decode_binary(bytes, ds.num_channels, ds.window, file.string());
            validate(trial, ds.num_classes);
            ds.trials.push_back(std::move(trial));
        }
    } catch (const json::exception& e) {
        throw IoError("malformed manifest in '" + directory + "': " + e.what());
    }
    out.checksum = hash.hex_digest();
    return out;
}

std::string dataset_checksum(const std::string& directory) {
    const fs::path root(directory);
    const std::string manifest_text = slurp(root / kManifestName);
    Sha256 hash;
    hash.update(manifest_text);
    try {
        const json m = json::parse(manifest_text);
        for (const auto& t : m.at("trials")) hash.update(slurp(root / t.at("file").get<std::string>()));
    } catch (const json::exception& e) {
        throw IoError("malformed manifest in '" + directory + "': " + e.what());
    }
    return hash.hex_digest();
}

}  // namespace specdec
