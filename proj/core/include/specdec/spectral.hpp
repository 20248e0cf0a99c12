#pragma once

#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "specdec/trial.hpp"

namespace specdec {

// Real Fourier basis on the grid x = t/T, t = 1..T, stored 0-based as
//   index 0        -> 1                      (DC)
//   index 2l - 1   -> sqrt(2) cos(2 pi l x)
//   index 2l       -> sqrt(2) sin(2 pi l x)
// A coefficient vector for F frequencies therefore has length 2F - 1.

/// Largest frequency count whose basis columns stay linearly independent.
inline int max_frequencies(int window) { return (window - 1) / 2 + 1; }

inline Eigen::Index coefficient_count(int num_frequencies) { return 2 * num_frequencies - 1; }

/// phi_index(x) for a 0-based coefficient index.
double basis_value(Eigen::Index index, double x);

/// Basis sampled on the t/T grid, one row per coefficient index.
class FourierBasis {
public:
    FourierBasis(int window, int num_frequencies);

    int window() const { return window_; }
    int num_frequencies() const { return num_frequencies_; }
    const Eigen::MatrixXd& table() const { return table_; }

    /// y = (1/T) Phi Y
    Eigen::VectorXd analyze(const Eigen::Ref<const Eigen::VectorXd>& signal) const;
    /// f_t = sum_l y_l phi_l(t/T); coefficients beyond the basis size are rejected.
    Eigen::VectorXd synthesize(const Eigen::Ref<const Eigen::VectorXd>& coefficients) const;

private:
    int window_;
    int num_frequencies_;
    Eigen::MatrixXd table_;
};

struct SequenceCoefficients {
    Eigen::VectorXd values;  // [DC, cos_1, sin_1, cos_2, sin_2, ...]
    int window = 0;
    int channel = 0;

    int num_frequencies() const { return static_cast<int>((values.size() + 1) / 2); }
};

SequenceCoefficients fourier_coefficients(std::span<const double> signal, int num_frequencies,
                                          int channel = 0);

Eigen::VectorXd reconstruct(const SequenceCoefficients& coeffs, int window);

/// Ellipsoid axis weights: a_1 = 1, a_{2l} = a_{2l+1} = (2l)^alpha.
struct EllipsoidWeights {
    Eigen::VectorXd a;
    double alpha = 1.0;
};

EllipsoidWeights ellipsoid_weights(double alpha, Eigen::Index count);

/// sum_l a_l^2 theta_l^2, i.e. the squared ellipsoid norm.
double ellipsoid_norm_squared(const Eigen::Ref<const Eigen::VectorXd>& theta, double alpha);

enum class ShrinkageKind { truncation, pinsker };

std::string_view to_string(ShrinkageKind kind);
ShrinkageKind parse_shrinkage_kind(std::string_view name);

struct ShrinkagePlan {
    Eigen::VectorXd weights;
    ShrinkageKind kind = ShrinkageKind::truncation;
    double alpha = 0.0;  // pinsker only
    double mu = 0.0;     // pinsker only
    int cutoff = 0;      // truncation only: number of kept frequencies L
};

/// c_l = max(0, 1 - a_l / mu) over `count` coefficients (count must be odd).
ShrinkagePlan pinsker_weights(double alpha, double mu, Eigen::Index count);

/// c_l = 1 for the first 2L - 1 coefficients and 0 for the rest.
ShrinkagePlan truncation_weights(int cutoff, Eigen::Index count);

/// theta_hat = C y. Plan entries missing past its end count as zero.
SequenceCoefficients apply_shrinkage(const SequenceCoefficients& y, const ShrinkagePlan& plan);

enum class FeatureFlavor { complex_spectrum, power_spectrum };

std::string_view to_string(FeatureFlavor flavor);
FeatureFlavor parse_feature_flavor(std::string_view name);

/// Which diagonal estimator to use; weights are materialized per window.
struct ShrinkageSpec {
    ShrinkageKind kind = ShrinkageKind::truncation;
    double alpha = 1.0;
    double mu = 1.0;

    bool operator==(const ShrinkageSpec&) const = default;
};

struct FeatureOptions {
    int window = 650;        // T, samples
    int delay = 0;           // D, samples
    int num_frequencies = 4; // L
    FeatureFlavor flavor = FeatureFlavor::complex_spectrum;
    ShrinkageSpec shrinkage{};
    bool log_power = false;  // power flavor only: log(amplitude^2 + kLogPowerFloor)
};

inline constexpr double kLogPowerFloor = 1e-12;

struct FeatureVector {
    Eigen::VectorXd values;
    FeatureFlavor flavor = FeatureFlavor::complex_spectrum;
    int per_channel_len = 0;
    int num_channels = 0;
};

Eigen::Index feature_length(const FeatureOptions& options, int num_channels);

/// Slices samples [D+1, D+T] of every channel, estimates the low band and
/// concatenates channel-major.
FeatureVector extract_features(const TrialRecord& trial, const FeatureOptions& options);

/// Same as extract_features but reuses a basis built for the options' window.
FeatureVector extract_features(const TrialRecord& trial, const FeatureOptions& options,
                               const FourierBasis& basis);

}  // namespace specdec
