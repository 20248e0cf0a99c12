#include "specdec/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "specdec/error.hpp"
#include "specdec/random.hpp"
#include "specdec/spectral.hpp"

namespace specdec {

namespace {

// Stream tags for derive_seed; fixed forever, they are part of kRngAlgorithm.
constexpr std::uint64_t kStreamBank = 1;
constexpr std::uint64_t kStreamRepair = 2;
constexpr std::uint64_t kStreamPhase = 3;
constexpr std::uint64_t kStreamPerturb = 4;
constexpr std::uint64_t kStreamDepth = 5;

constexpr int kMaxRepairRounds = 10000;

void check_bank_params(const SignalBankParams& p) {
    if (p.num_classes < 2) {
        throw ParameterError("signal bank needs K >= 2 classes, got " + std::to_string(p.num_classes));
    }
    if (p.num_channels < 1) throw ParameterError("signal bank needs at least one channel");
    if (p.gen_frequencies < 1) throw ParameterError("L_gen must be >= 1");
    if (!(p.radius > 0.0)) throw ParameterError("ellipsoid radius C_sob must be > 0");
    if (!(p.separation >= 0.0)) throw ParameterError("separation must be >= 0");
    if (!(p.jitter >= 0.0)) throw ParameterError("jitter tau must be >= 0");
    if (!(p.alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
}

// Scales a row onto or inside the ellipsoid so that the stored values satisfy
// sum a^2 theta^2 <= C^2 under floating-point evaluation.
bool project_row(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, double alpha, double radius) {
    // Evaluated on a contiguous copy with the public helper so that a later
    // membership check reproduces the same rounding.
    const auto norm2 = [&] { return ellipsoid_norm_squared(Eigen::VectorXd(row.transpose()), alpha); };
    double n2 = norm2();
    const double limit = radius * radius;
    if (n2 <= limit) return false;
    row *= radius / std::sqrt(n2);
    while (norm2() > limit) row *= 1.0 - 1e-14;
    return true;
}

void project_all(std::vector<Eigen::MatrixXd>& means, double alpha, double radius) {
    for (auto& m : means) {
        for (Eigen::Index c = 0; c < m.rows(); ++c) project_row(m.row(c), alpha, radius);
    }
}

double distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) { return (x - y).norm(); }

void repair(std::vector<Eigen::MatrixXd>& means, const SignalBankParams& p, Rng& rng) {
    const double target = p.separation;
    const auto k = means.size();
    for (int round = 0; round < kMaxRepairRounds; ++round) {
        project_all(means, p.alpha, p.radius);
        bool moved = false;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                const double d = distance(means[i], means[j]);
                if (d > 0.0 && d >= target) continue;
                Eigen::MatrixXd dir = means[i] - means[j];
                if (d == 0.0) {
                    for (Eigen::Index e = 0; e < dir.size(); ++e) dir.data()[e] = rng.normal();
                    dir /= dir.norm();
                } else {
                    dir /= d;
                }
                // Overshoot slightly so the ellipsoid projection does not stall convergence.
                const double need = std::max(target * (1.0 + 1e-9) - d, 1e-12);
                means[i] += 0.5 * need * dir;
                means[j] -= 0.5 * need * dir;
                moved = true;
            }
        }
        if (!moved) return;
    }
    throw ParameterError("cannot place " + std::to_string(p.num_classes) +
                         " class means with separation " + std::to_string(target) +
                         " inside ellipsoid of radius " + std::to_string(p.radius));
}

}  // namespace

Eigen::VectorXd ClassSignalBank::class_vector(int label) const {
    if (label < 1 || label > num_classes()) throw ParameterError("class label out of range");
    const Eigen::MatrixXd rowmajor = means[label - 1].transpose();
    return Eigen::Map<const Eigen::VectorXd>(rowmajor.data(), rowmajor.size());
}

double ClassSignalBank::min_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
        for (std::size_t j = i + 1; j < means.size(); ++j) {
            best = std::min(best, distance(means[i], means[j]));
        }
    }
    return best;
}

ClassSignalBank make_signal_bank(const SignalBankParams& params) {
    check_bank_params(params);
    ClassSignalBank bank;
    bank.params = params;
    const Eigen::Index m = 2 * params.gen_frequencies - 1;
    Rng rng(derive_seed(params.seed, kStreamBank, 0));
    bank.means.reserve(params.num_classes);
    for (int k = 0; k < params.num_classes; ++k) {
        Eigen::MatrixXd mean(params.num_channels, m);
        for (Eigen::Index c = 0; c < params.num_channels; ++c) {
            for (Eigen::Index l = 0; l < m; ++l) mean(c, l) = rng.normal();
        }
        bank.means.push_back(std::move(mean));
    }
    Rng repair_rng(derive_seed(params.seed, kStreamRepair, 0));
    repair(bank.means, params, repair_rng);
    return bank;
}

ClassSignalBank make_phase_only_bank(const SignalBankParams& params, double amplitude) {
    check_bank_params(params);
    if (params.gen_frequencies < 2) {
        throw ParameterError("phase-only bank needs L_gen >= 2 (DC carries no phase)");
    }
    if (!(amplitude > 0.0)) throw ParameterError("phase-only amplitude must be > 0");
    ClassSignalBank bank;
    bank.params = params;
    bank.params.separation = 0.0;
    const int k = params.num_classes;
    const int freqs = params.gen_frequencies;
    const Eigen::Index m = 2 * freqs - 1;
    const Eigen::VectorXd a = ellipsoid_weights(params.alpha, m).a;

    Rng rng(derive_seed(params.seed, kStreamPhase, 0));
    Eigen::MatrixXd amp = Eigen::MatrixXd::Zero(params.num_channels, freqs);
    Eigen::MatrixXd offset(params.num_channels, freqs);
    for (Eigen::Index c = 0; c < params.num_channels; ++c) {
        for (int l = 1; l < freqs; ++l) {
            amp(c, l) = amplitude * rng.uniform(0.5, 1.0);
            offset(c, l) = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        // All classes share the amplitude profile, so one scale keeps them all inside.
        double n2 = 0.0;
        for (int l = 1; l < freqs; ++l) n2 += a[2 * l - 1] * a[2 * l - 1] * amp(c, l) * amp(c, l);
        if (n2 > params.radius * params.radius) {
            amp.row(c) *= params.radius / std::sqrt(n2) * (1.0 - 1e-12);
        }
    }
    for (int cls = 0; cls < k; ++cls) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(params.num_channels, m);
        const double shift = 2.0 * std::numbers::pi * cls / k;
        for (Eigen::Index c = 0; c < params.num_channels; ++c) {
            for (int l = 1; l < freqs; ++l) {
                const double phase = offset(c, l) + shift;
                mean(c, 2 * l - 1) = amp(c, l) * std::cos(phase);
                mean(c, 2 * l) = amp(c, l) * std::sin(phase);
            }
        }
        bank.means.push_back(std::move(mean));
    }
    return bank;
}

ClassSignalBank perturb_bank(const ClassSignalBank& bank, double divergence, std::uint64_t seed) {
    if (!(divergence >= 0.0)) throw ParameterError("divergence must be >= 0");
    ClassSignalBank out = bank;
    Rng rng(derive_seed(seed, kStreamPerturb, 0));
    for (auto& mean : out.means) {
        for (Eigen::Index e = 0; e < mean.size(); ++e) mean.data()[e] += divergence * rng.normal();
    }
    Rng repair_rng(derive_seed(seed, kStreamRepair, 1));
    repair(out.means, out.params, repair_rng);
    return out;
}

namespace {

void check_trial_shape(const ClassSignalBank& bank, int label, double sigma, int window,
                       const TrialShape& shape) {
    if (label < 1 || label > bank.num_classes()) {
        throw ParameterError("class label " + std::to_string(label) + " outside [1, " +
                             std::to_string(bank.num_classes()) + "]");
    }
    if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
    const int support = shape.support == 0 ? window : shape.support;
    if (window < bank.coefficients_per_channel() || support < bank.coefficients_per_channel()) {
        throw ParameterError("window " + std::to_string(window) + " too short for L_gen=" +
                             std::to_string(bank.params.gen_frequencies));
    }
    if (support > window || support < 0) throw ParameterError("signal support exceeds window");
    if (!(std::abs(shape.noise_ar) < 1.0)) throw ParameterError("|noise_ar| must be < 1");
}

Eigen::MatrixXd expand(const Eigen::MatrixXd& coeffs, int window, int support, int freqs) {
    const FourierBasis basis(support, freqs);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(coeffs.rows(), window);
    out.leftCols(support) = coeffs * basis.table();
    return out;
}

}  // namespace

Eigen::MatrixXd class_mean_signal(const ClassSignalBank& bank, int label, int window,
                                  const TrialShape& shape) {
    check_trial_shape(bank, label, 0.0, window, shape);
    const int support = shape.support == 0 ? window : shape.support;
    return expand(bank.means[label - 1], window, support, bank.params.gen_frequencies);
}

TrialRecord generate_trial(const ClassSignalBank& bank, int label, double sigma, int window,
                           std::uint64_t seed, const TrialShape& shape) {
    check_trial_shape(bank, label, sigma, window, shape);
    const int support = shape.support == 0 ? window : shape.support;
    const auto channels = bank.num_channels();
    const auto m = bank.coefficients_per_channel();
    Rng rng(seed);

    // Draw order is fixed: all jitter first, then noise channel by channel.
    // Streams therefore line up across different tau / sigma settings.
    Eigen::MatrixXd coeffs = bank.means[label - 1];
    for (Eigen::Index c = 0; c < channels; ++c) {
        for (Eigen::Index l = 0; l < m; ++l) coeffs(c, l) += bank.params.jitter * rng.normal();
    }

    TrialRecord trial;
    trial.label = label;
    trial.samples = expand(coeffs, window, support, bank.params.gen_frequencies);
    const double innovation = std::sqrt(1.0 - shape.noise_ar * shape.noise_ar);
    for (Eigen::Index c = 0; c < channels; ++c) {
        double z = 0.0;
        for (int t = 0; t < window; ++t) {
            const double e = rng.normal();
            z = (t == 0) ? e : shape.noise_ar * z + innovation * e;
            trial.samples(c, t) += sigma * z;
        }
    }
    trial.depth_vector.assign(static_cast<std::size_t>(channels), 0.0);
    return trial;
}

NoiseDiagnostic noise_diagnostic(std::span<const TrialRecord> trials, int channel,
                                 int num_frequencies) {
    std::vector<const TrialRecord*> ptrs;
    ptrs.reserve(trials.size());
    for (const auto& t : trials) ptrs.push_back(&t);
    return noise_diagnostic(std::span<const TrialRecord* const>(ptrs), channel, num_frequencies);
}

NoiseDiagnostic noise_diagnostic(std::span<const TrialRecord* const> trials, int channel,
                                 int num_frequencies) {
    if (trials.size() < 2) {
        throw InsufficientDataError("noise diagnostic needs at least 2 trials, got " +
                                    std::to_string(trials.size()));
    }
    if (num_frequencies < 1) throw ParameterError("L must be >= 1");
    const auto window = static_cast<int>(trials.front()->num_samples());
    const FourierBasis basis(window, num_frequencies);
    const auto n = static_cast<Eigen::Index>(trials.size());

    Eigen::MatrixXd residuals(window, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const TrialRecord& trial = *trials[static_cast<std::size_t>(i)];
        if (trial.num_samples() != window) {
            throw ShapeError("trial '" + trial.trial_id + "' has " +
                             std::to_string(trial.num_samples()) + " samples, expected " +
                             std::to_string(window));
        }
        if (channel < 0 || channel >= trial.num_channels()) {
            throw ParameterError("channel " + std::to_string(channel) + " out of range");
        }
        const Eigen::VectorXd signal = trial.samples.row(channel).transpose();
        residuals.col(i) = signal - basis.synthesize(basis.analyze(signal));
    }
    residuals.colwise() -= residuals.rowwise().mean();

    NoiseDiagnostic diag;
    diag.window = window;
    diag.covariance = residuals * residuals.transpose() / static_cast<double>(n - 1);
    // Exact symmetry; the product above can differ in the last bit across halves.
    diag.covariance = 0.5 * (diag.covariance + diag.covariance.transpose()).eval();

    const double mean_diag = diag.covariance.diagonal().mean();
    const double off_count = static_cast<double>(window) * (window - 1);
    const double off_sum = diag.covariance.cwiseAbs().sum() - diag.covariance.diagonal().cwiseAbs().sum();
    // Residuals at rounding level (noise-free trials with L >= L_gen) report 0.
    double signal_power = 0.0;
    for (const TrialRecord* t : trials) signal_power += t->samples.row(channel).squaredNorm();
    signal_power /= static_cast<double>(n) * window;
    const double floor = 1e-24 * signal_power;
    diag.diagonal_dominance = mean_diag > floor ? (off_sum / off_count) / mean_diag : 0.0;
    return diag;
}

std::vector<std::vector<double>> make_depth_vectors(int num_edcs, int num_channels,
                                                    const DepthLayout& layout, std::uint64_t seed) {
    if (num_edcs < 1 || num_channels < 1) throw ParameterError("need >= 1 EDC and channel");
    if (!(layout.perturbation >= 0.0)) throw ParameterError("depth perturbation must be >= 0");
    Rng rng(derive_seed(seed, kStreamDepth, 0));
    std::vector<std::vector<double>> out(static_cast<std::size_t>(num_edcs));
    for (int e = 0; e < num_edcs; ++e) {
        auto& depth = out[static_cast<std::size_t>(e)];
        depth.resize(static_cast<std::size_t>(num_channels));
        for (auto& d : depth) {
            d = layout.base_depth + e * layout.depth_step + rng.uniform(0.0, layout.perturbation);
        }
    }
    return out;
}

}  // namespace specdec
