#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "specdec/dataset.hpp"
#include "specdec/trial.hpp"

namespace fixture {

inline std::vector<const specdec::TrialRecord*> pointers(const std::vector<specdec::TrialRecord>& trials) {
    std::vector<const specdec::TrialRecord*> out;
    out.reserve(trials.size());
    for (const auto& t : trials) out.push_back(&t);
    return out;
}

inline std::vector<double> random_signal(int length, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> s(static_cast<std::size_t>(length));
    for (auto& v : s) v = normal(gen);
    return s;
}

/// Small, fast dataset: 8 channels, short window.
inline specdec::GeneratorSpec small_spec(std::uint64_t seed) {
    specdec::GeneratorSpec g;
    g.bank.num_classes = 4;
    g.bank.num_channels = 8;
    g.bank.gen_frequencies = 3;
    g.window = 120;
    g.num_trials = 120;
    g.sigma = 2.0;
    g.seed = seed;
    return g;
}

/// Fresh empty directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("specdec-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace fixture
