#include "specdec/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "specdec/error.hpp"

namespace specdec {

using detail::json;

FeatureOptions ExperimentConfig::feature_options() const {
    FeatureOptions f;
    f.window = window;
    f.delay = delay;
    f.num_frequencies = num_frequencies;
    f.flavor = flavor;
    f.shrinkage = shrinkage;
    f.log_power = log_power;
    return f;
}

DecoderOptions ExperimentConfig::decoder_options() const {
    DecoderOptions d;
    d.modes = modes;
    d.zca_epsilon = zca_epsilon;
    d.ridge_relative = ridge;
    d.whiten = whiten;
    return d;
}

ModelFingerprint ExperimentConfig::fingerprint() const {
    ModelFingerprint f;
    f.features = feature_options();
    f.modes = modes;
    f.whiten = whiten;
    return f;
}

void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw ParameterError(msg); };
    if (window < 3) fail("T must be >= 3 samples");
    if (delay < 0) fail("D must be >= 0");
    if (num_frequencies < 1) fail("L must be >= 1");
    if (num_frequencies > max_frequencies(window)) {
        fail("L=" + std::to_string(num_frequencies) + " exceeds " +
             std::to_string(max_frequencies(window)) + " frequencies representable in T=" +
             std::to_string(window));
    }
    if (modes < 1) fail("P must be >= 1");
    if (cluster_window < 1) fail("W must be >= 1");
    if (!(ridge >= 0.0)) fail("ridge must be >= 0");
    if (!(zca_epsilon >= 0.0)) fail("zca_epsilon must be >= 0");
    if (shrinkage.kind == ShrinkageKind::pinsker) {
        if (!(shrinkage.mu > 0.0)) fail("pinsker mu must be > 0");
        if (!(shrinkage.alpha >= 0.0)) fail("pinsker alpha must be >= 0");
    }
}

void ExperimentConfig::validate_against(int num_samples, int num_channels) const {
    validate();
    if (delay + window > num_samples) {
        throw ParameterError("D+T=" + std::to_string(delay + window) + " exceeds trial length " +
                             std::to_string(num_samples));
    }
    const auto dim = feature_length(feature_options(), num_channels);
    if (whiten && modes > dim) {
        throw ParameterError("P=" + std::to_string(modes) + " exceeds feature dimension " +
                             std::to_string(dim));
    }
}

bool GridSpec::empty() const {
    return windows.empty() && delays.empty() && frequencies.empty() && modes.empty() &&
           flavors.empty() && anchors.empty();
}

std::vector<ExperimentConfig> GridSpec::expand(const ExperimentConfig& base) const {
    const auto or_base = [](const auto& axis, auto value) {
        using V = std::decay_t<decltype(value)>;
        return axis.empty() ? std::vector<V>{value} : std::vector<V>(axis.begin(), axis.end());
    };
    std::vector<ExperimentConfig> out;
    for (auto flavor : or_base(flavors, base.flavor)) {
        for (int l : or_base(frequencies, base.num_frequencies)) {
            for (int p : or_base(modes, base.modes)) {
                for (int t : or_base(windows, base.window)) {
                    for (int d : or_base(delays, base.delay)) {
                        ExperimentConfig c = base;
                        c.flavor = flavor;
                        c.num_frequencies = l;
                        c.modes = (flavor == FeatureFlavor::power_spectrum && power_modes > 0) ? power_modes : p;
                        c.window = t;
                        c.delay = d;
                        out.push_back(std::move(c));
                    }
                }
            }
        }
    }
    return out;
}

namespace {

int parse_int(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParameterError("not an integer: '" + std::string(s) + "'");
    }
    return value;
}

}  // namespace

std::vector<int> parse_int_list(std::string_view text) {
    if (text.find_first_not_of(' ') == std::string_view::npos) {
        throw ParameterError("empty integer list");
    }
    std::vector<int> out;
    if (text.find(':') != std::string_view::npos) {
        std::vector<int> parts;
        std::size_t start = 0;
        while (true) {
            const auto pos = text.find(':', start);
            parts.push_back(parse_int(text.substr(start, pos - start)));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        if (parts.size() != 3) throw ParameterError("range must be a:b:step");
        const int lo = parts[0], hi = parts[1], step = parts[2];
        if (step <= 0) throw ParameterError("range step must be > 0");
        if (hi < lo) throw ParameterError("range end precedes start");
        for (int v = lo; v <= hi; v += step) out.push_back(v);
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(',', start);
        out.push_back(parse_int(text.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

namespace {

json config_to_json(const ExperimentConfig& c) {
    json grouping = json::object();
    for (const auto& [label, group] : c.grouping) grouping[std::to_string(label)] = group;
    return {
        {"T", c.window},
        {"D", c.delay},
        {"L", c.num_frequencies},
        {"P", c.modes},
        {"flavor", std::string(to_string(c.flavor))},
        {"shrinkage", detail::to_json(c.shrinkage)},
        {"log_power", c.log_power},
        {"whiten", c.whiten},
        {"W", c.cluster_window},
        {"ridge", c.ridge},
        {"zca_epsilon", c.zca_epsilon},
        {"seed", c.seed},
        {"dataset", c.dataset},
        {"anchor", c.anchor},
        {"grouping", grouping},
    };
}

json parse_document(std::string_view text) {
    try {
        return json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config is not valid JSON: ") + e.what());
    }
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "T", "D", "L", "P", "flavor", "shrinkage", "log_power", "whiten", "W", "ridge",
        "zca_epsilon", "seed", "dataset", "anchor", "grouping", "grid",
    };
    return keys;
}

std::vector<int> int_axis(const json& j, const char* name) {
    if (j.is_string()) return parse_int_list(j.get<std::string>());
    if (!j.is_array() || j.empty()) {
        throw ParameterError(std::string("grid axis '") + name + "' must be a non-empty list or range");
    }
    return j.get<std::vector<int>>();
}

}  // namespace

std::string serialize_config(const ExperimentConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

ExperimentConfig parse_config(std::string_view text) {
    const json doc = parse_document(text);
    if (!doc.is_object()) throw ParameterError("config must be a JSON object");
    for (const auto& [key, _] : doc.items()) {
        if (!known_keys().contains(key)) throw ParameterError("unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    try {
        c.window = doc.value("T", c.window);
        c.delay = doc.value("D", c.delay);
        c.num_frequencies = doc.value("L", c.num_frequencies);
        c.modes = doc.value("P", c.modes);
        if (doc.contains("flavor")) c.flavor = parse_feature_flavor(doc["flavor"].get<std::string>());
        if (doc.contains("shrinkage")) c.shrinkage = detail::shrinkage_from_json(doc["shrinkage"]);
        c.log_power = doc.value("log_power", c.log_power);
        c.whiten = doc.value("whiten", c.whiten);
        c.cluster_window = doc.value("W", c.cluster_window);
        c.ridge = doc.value("ridge", c.ridge);
        c.zca_epsilon = doc.value("zca_epsilon", c.zca_epsilon);
        c.seed = doc.value("seed", c.seed);
        c.dataset = doc.value("dataset", c.dataset);
        c.anchor = doc.value("anchor", c.anchor);
        if (doc.contains("grouping")) {
            for (const auto& [label, group] : doc["grouping"].items()) {
                c.grouping[parse_int(label)] = group.get<std::string>();
            }
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("bad config value: ") + e.what());
    }
    return c;
}

GridSpec parse_grid(std::string_view config_text) {
    const json doc = parse_document(config_text);
    GridSpec grid;
    if (!doc.is_object() || !doc.contains("grid")) return grid;
    const json& g = doc["grid"];
    if (!g.is_object()) throw ParameterError("grid must be an object");
    try {
        for (const auto& [key, axis] : g.items()) {
            if (key == "T") grid.windows = int_axis(axis, "T");
            else if (key == "D") grid.delays = int_axis(axis, "D");
            else if (key == "L") grid.frequencies = int_axis(axis, "L");
            else if (key == "P") grid.modes = int_axis(axis, "P");
            else if (key == "flavor") {
                if (!axis.is_array() || axis.empty()) throw ParameterError("grid axis 'flavor' must be a non-empty list");
                for (const auto& f : axis) grid.flavors.push_back(parse_feature_flavor(f.get<std::string>()));
            } else if (key == "P_power") {
                grid.power_modes = axis.get<int>();
                if (grid.power_modes < 1) throw ParameterError("grid P_power must be >= 1");
            } else if (key == "anchor") {
                if (axis.is_string()) grid.anchors = {axis.get<std::string>()};
                else grid.anchors = axis.get<std::vector<std::string>>();
                if (grid.anchors.empty()) throw ParameterError("grid axis 'anchor' must be non-empty");
            } else {
                throw ParameterError("unknown grid axis '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("bad grid value: ") + e.what());
    }
    return grid;
}

std::string serialize_grid(const GridSpec& grid) {
    json g = json::object();
    if (!grid.windows.empty()) g["T"] = grid.windows;
    if (!grid.delays.empty()) g["D"] = grid.delays;
    if (!grid.frequencies.empty()) g["L"] = grid.frequencies;
    if (!grid.modes.empty()) g["P"] = grid.modes;
    if (!grid.flavors.empty()) {
        json f = json::array();
        for (auto fl : grid.flavors) f.push_back(std::string(to_string(fl)));
        g["flavor"] = f;
    }
    if (!grid.anchors.empty()) g["anchor"] = grid.anchors;
    if (grid.power_modes > 0) g["P_power"] = grid.power_modes;
    return g.dump();
}

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ExperimentConfig load_config_file(const std::string& path) { return parse_config(read_text(path)); }

GridSpec load_grid_file(const std::string& path) { return parse_grid(read_text(path)); }

}  // namespace specdec
