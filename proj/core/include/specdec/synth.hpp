#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specdec/trial.hpp"

namespace specdec {

struct SignalBankParams {
    int num_classes = 8;
    int num_channels = 32;
    int gen_frequencies = 4;   // L_gen; each channel mean has 2 L_gen - 1 coefficients
    double alpha = 1.0;        // smoothness order of the ellipsoid
    double radius = 10.0;      // C_sob
    double separation = 0.0;   // minimum pairwise distance between class mean vectors
    double jitter = 0.0;       // tau, per-trial coefficient jitter
    std::uint64_t seed = 0;
};

/// Class-mean signals in coefficient space. means[k] is channels x (2 L_gen - 1),
/// one row per channel, with k 0-based.
struct ClassSignalBank {
    SignalBankParams params;
    std::vector<Eigen::MatrixXd> means;

    int num_classes() const { return static_cast<int>(means.size()); }
    int num_channels() const { return params.num_channels; }
    Eigen::Index coefficients_per_channel() const { return 2 * params.gen_frequencies - 1; }

    /// All channels of class `label` (1-based), flattened channel-major.
    Eigen::VectorXd class_vector(int label) const;
    double min_pairwise_distance() const;
};

/// Draws class means i.i.d. standard normal, scales each channel row into the
/// Sobolev ellipsoid and pushes pairs apart until `separation` holds.
ClassSignalBank make_signal_bank(const SignalBankParams& params);

/// Classes share every per-frequency amplitude and differ only in phase:
/// class k rotates frequency l of each channel by 2 pi (k - 1) / K. DC is zero.
ClassSignalBank make_phase_only_bank(const SignalBankParams& params, double amplitude);

/// Adds `divergence` x standard normal to every mean and re-applies the
/// ellipsoid and separation repair. Models heterogeneous recording conditions.
ClassSignalBank perturb_bank(const ClassSignalBank& bank, double divergence, std::uint64_t seed);

struct TrialShape {
    /// Samples carrying the class signal; f_t = f(t/S) for t <= S, 0 after. 0 means the whole window.
    int support = 0;
    /// AR(1) coefficient of the additive noise; 0 gives white noise.
    double noise_ar = 0.0;
};

/// Y_t = f_t + sigma Z_t with f built from jittered class-mean coefficients.
TrialRecord generate_trial(const ClassSignalBank& bank, int label, double sigma, int window,
                           std::uint64_t seed, const TrialShape& shape = {});

/// Noiseless expansion of the class mean for `label`, channels x window.
Eigen::MatrixXd class_mean_signal(const ClassSignalBank& bank, int label, int window,
                                  const TrialShape& shape = {});

struct NoiseDiagnostic {
    Eigen::MatrixXd covariance;      // window x window
    double diagonal_dominance = 0.0; // mean |off-diagonal| / mean diagonal
    int window = 0;
};

/// Residual covariance after subtracting each trial's L-frequency truncation
/// estimate on one channel, pooled over trials.
NoiseDiagnostic noise_diagnostic(std::span<const TrialRecord> trials, int channel, int num_frequencies);
NoiseDiagnostic noise_diagnostic(std::span<const TrialRecord* const> trials, int channel,
                                 int num_frequencies);

struct DepthLayout {
    double base_depth = 1.0;    // mm
    double depth_step = 0.25;   // mm added per EDC index
    double perturbation = 0.5;  // per-electrode uniform spread, mm
};

/// One depth vector per EDC, num_channels entries each.
std::vector<std::vector<double>> make_depth_vectors(int num_edcs, int num_channels,
                                                    const DepthLayout& layout, std::uint64_t seed);

}  // namespace specdec
