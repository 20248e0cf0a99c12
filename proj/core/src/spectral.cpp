#include "specdec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "specdec/error.hpp"

namespace specdec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_frequency_count(int window, int num_frequencies) {
    if (window < 3) {
        throw ParameterError("window length must be >= 3, got " + std::to_string(window));
    }
    if (num_frequencies < 1 || num_frequencies > max_frequencies(window)) {
        throw ParameterError("num_frequencies=" + std::to_string(num_frequencies) +
                             " outside [1, " + std::to_string(max_frequencies(window)) +
                             "] for window " + std::to_string(window));
    }
}

}  // namespace

double basis_value(Eigen::Index index, double x) {
    if (index == 0) return 1.0;
    const auto l = static_cast<double>((index + 1) / 2);
    const double angle = kTwoPi * l * x;
    return std::numbers::sqrt2 * ((index % 2 == 1) ? std::cos(angle) : std::sin(angle));
}

FourierBasis::FourierBasis(int window, int num_frequencies)
    : window_(window), num_frequencies_(num_frequencies) {
    check_frequency_count(window, num_frequencies);
    const Eigen::Index rows = coefficient_count(num_frequencies);
    table_.resize(rows, window);
    table_.row(0).setOnes();
    for (int l = 1; l < num_frequencies; ++l) {
        for (int t = 1; t <= window; ++t) {
            // Reduce l*t modulo T before scaling so large products keep full precision.
            const auto phase = static_cast<long long>(l) * t % window;
            const double angle = kTwoPi * static_cast<double>(phase) / window;
            table_(2 * l - 1, t - 1) = std::numbers::sqrt2 * std::cos(angle);
            table_(2 * l, t - 1) = std::numbers::sqrt2 * std::sin(angle);
        }
    }
}

Eigen::VectorXd FourierBasis::analyze(const Eigen::Ref<const Eigen::VectorXd>& signal) const {
    if (signal.size() != window_) {
        throw ShapeError("signal length " + std::to_string(signal.size()) +
                         " does not match basis window " + std::to_string(window_));
    }
    return (table_ * signal) / static_cast<double>(window_);
}

Eigen::VectorXd FourierBasis::synthesize(const Eigen::Ref<const Eigen::VectorXd>& coefficients) const {
    if (coefficients.size() > table_.rows()) {
        throw ShapeError("coefficient vector longer than basis");
    }
    return table_.topRows(coefficients.size()).transpose() * coefficients;
}

SequenceCoefficients fourier_coefficients(std::span<const double> signal, int num_frequencies,
                                          int channel) {
    const int window = static_cast<int>(signal.size());
    const FourierBasis basis(window, num_frequencies);
    const Eigen::Map<const Eigen::VectorXd> y(signal.data(), window);
    return {basis.analyze(y), window, channel};
}

Eigen::VectorXd reconstruct(const SequenceCoefficients& coeffs, int window) {
    if (coeffs.window != window) {
        throw ShapeError("coefficients were computed for window " + std::to_string(coeffs.window) +
                         ", asked to reconstruct " + std::to_string(window));
    }
    if (coeffs.values.size() % 2 == 0) {
        throw ShapeError("coefficient vector length must be odd");
    }
    const FourierBasis basis(window, coeffs.num_frequencies());
    return basis.synthesize(coeffs.values);
}

EllipsoidWeights ellipsoid_weights(double alpha, Eigen::Index count) {
    EllipsoidWeights w;
    w.alpha = alpha;
    w.a.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        w.a[i] = (i == 0) ? 1.0 : std::pow(2.0 * static_cast<double>((i + 1) / 2), alpha);
    }
    return w;
}

double ellipsoid_norm_squared(const Eigen::Ref<const Eigen::VectorXd>& theta, double alpha) {
    const auto w = ellipsoid_weights(alpha, theta.size());
    return (w.a.array() * theta.array()).square().sum();
}

std::string_view to_string(ShrinkageKind kind) {
    return kind == ShrinkageKind::pinsker ? "pinsker" : "truncation";
}

ShrinkageKind parse_shrinkage_kind(std::string_view name) {
    if (name == "pinsker") return ShrinkageKind::pinsker;
    if (name == "truncation") return ShrinkageKind::truncation;
    throw ParameterError("unknown shrinkage kind '" + std::string(name) + "'");
}

ShrinkagePlan pinsker_weights(double alpha, double mu, Eigen::Index count) {
    if (!(mu > 0.0)) throw ParameterError("pinsker mu must be > 0");
    if (count < 1 || count % 2 == 0) throw ParameterError("pinsker plan length must be odd");
    const auto a = ellipsoid_weights(alpha, count).a;
    ShrinkagePlan plan;
    plan.kind = ShrinkageKind::pinsker;
    plan.alpha = alpha;
    plan.mu = mu;
    plan.weights = (1.0 - a.array() / mu).max(0.0);
    return plan;
}

ShrinkagePlan truncation_weights(int cutoff, Eigen::Index count) {
    if (cutoff < 1) throw ParameterError("truncation cutoff L must be >= 1");
    if (count < 1) throw ParameterError("truncation plan length must be >= 1");
    ShrinkagePlan plan;
    plan.kind = ShrinkageKind::truncation;
    plan.cutoff = cutoff;
    plan.weights = Eigen::VectorXd::Zero(count);
    plan.weights.head(std::min<Eigen::Index>(coefficient_count(cutoff), count)).setOnes();
    return plan;
}

SequenceCoefficients apply_shrinkage(const SequenceCoefficients& y, const ShrinkagePlan& plan) {
    SequenceCoefficients out = y;
    const Eigen::Index shared = std::min(y.values.size(), plan.weights.size());
    out.values.head(shared).array() *= plan.weights.head(shared).array();
    out.values.tail(y.values.size() - shared).setZero();
    return out;
}

std::string_view to_string(FeatureFlavor flavor) {
    return flavor == FeatureFlavor::power_spectrum ? "power" : "complex";
}

FeatureFlavor parse_feature_flavor(std::string_view name) {
    if (name == "complex" || name == "complex_spectrum") return FeatureFlavor::complex_spectrum;
    if (name == "power" || name == "power_spectrum") return FeatureFlavor::power_spectrum;
    throw ParameterError("unknown feature flavor '" + std::string(name) + "'");
}

Eigen::Index feature_length(const FeatureOptions& options, int num_channels) {
    const Eigen::Index per_channel = options.flavor == FeatureFlavor::complex_spectrum
                                         ? coefficient_count(options.num_frequencies)
                                         : options.num_frequencies;
    return per_channel * num_channels;
}

FeatureVector extract_features(const TrialRecord& trial, const FeatureOptions& options) {
    if (options.num_frequencies < 1) throw ParameterError("L must be >= 1");
    const FourierBasis basis(options.window, options.num_frequencies);
    return extract_features(trial, options, basis);
}

FeatureVector extract_features(const TrialRecord& trial, const FeatureOptions& options,
                               const FourierBasis& basis) {
    if (basis.window() != options.window || basis.num_frequencies() != options.num_frequencies) {
        throw ShapeError("basis does not match feature options");
    }
    if (options.delay < 0 || options.delay + options.window > trial.num_samples()) {
        throw ParameterError("trial '" + trial.trial_id + "': window [" +
                             std::to_string(options.delay + 1) + ", " +
                             std::to_string(options.delay + options.window) + "] exceeds " +
                             std::to_string(trial.num_samples()) + " samples");
    }

    const int channels = static_cast<int>(trial.num_channels());
    const Eigen::Index m = coefficient_count(options.num_frequencies);
    const ShrinkagePlan plan =
        options.shrinkage.kind == ShrinkageKind::pinsker
            ? pinsker_weights(options.shrinkage.alpha, options.shrinkage.mu, m)
            : truncation_weights(options.num_frequencies, m);

    FeatureVector fv;
    fv.flavor = options.flavor;
    fv.num_channels = channels;
    fv.per_channel_len = static_cast<int>(feature_length(options, 1));
    fv.values.resize(feature_length(options, channels));

    // Window rows, transposed so each channel becomes a contiguous column.
    const Eigen::MatrixXd window =
        trial.samples.middleCols(options.delay, options.window).transpose();
    for (int c = 0; c < channels; ++c) {
        const Eigen::VectorXd y = basis.analyze(window.col(c));
        const Eigen::VectorXd theta = y.array() * plan.weights.array();
        auto out = fv.values.segment(static_cast<Eigen::Index>(c) * fv.per_channel_len,
                                     fv.per_channel_len);
        if (options.flavor == FeatureFlavor::complex_spectrum) {
            out = theta;
            continue;
        }
        out[0] = std::abs(theta[0]);
        for (int l = 1; l < options.num_frequencies; ++l) {
            out[l] = std::hypot(theta[2 * l - 1], theta[2 * l]);
        }
        if (options.log_power) {
            out = (out.array().square() + kLogPowerFloor).log().matrix();
        }
    }
    return fv;
}

void validate(const TrialRecord& trial, int num_classes) {
    if (!trial.samples.allFinite()) {
        throw ParameterError("trial '" + trial.trial_id + "' contains non-finite samples");
    }
    if (trial.label < 1 || trial.label > num_classes) {
        throw ParameterError("trial '" + trial.trial_id + "' label " + std::to_string(trial.label) +
                             " outside [1, " + std::to_string(num_classes) + "]");
    }
    if (static_cast<Eigen::Index>(trial.depth_vector.size()) != trial.num_channels()) {
        throw ParameterError("trial '" + trial.trial_id + "' depth vector length " +
                             std::to_string(trial.depth_vector.size()) + " != channel count " +
                             std::to_string(trial.num_channels()));
    }
}

}  // namespace specdec
