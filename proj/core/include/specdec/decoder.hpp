#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "specdec/spectral.hpp"

namespace specdec {

/// Mean-centred projection onto the top principal modes. Columns of `basis`
/// are unit eigenvectors of the empirical covariance (1/(n-1) scaling) in
/// descending eigenvalue order; each column's largest-magnitude entry is
/// positive (first such entry on ties).
struct PcaTransform {
    Eigen::VectorXd mean;
    Eigen::MatrixXd basis;               // feature_dim x P
    Eigen::VectorXd explained_variance;  // length P, non-increasing

    Eigen::Index modes() const { return basis.cols(); }
    Eigen::Index input_dim() const { return mean.size(); }

    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::MatrixXd apply_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows) const;
};

PcaTransform fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& rows, int modes);

/// Symmetric inverse square root of the (regularized) covariance.
struct ZcaTransform {
    Eigen::VectorXd mean;
    Eigen::MatrixXd whitener;  // P x P, symmetric
    double epsilon = 0.0;

    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::MatrixXd apply_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows) const;
};

/// Throws IllConditionedError (carrying the numerical rank) if the covariance
/// is singular and epsilon is 0.
ZcaTransform fit_zca(const Eigen::Ref<const Eigen::MatrixXd>& rows, double epsilon);

/// Shared-covariance Gaussian class model. Class labels are 1-based.
struct LdaModel {
    std::vector<Eigen::VectorXd> class_means;
    Eigen::MatrixXd shared_covariance;
    Eigen::VectorXd priors;

    int num_classes() const { return static_cast<int>(class_means.size()); }
    Eigen::Index dim() const { return shared_covariance.rows(); }
};

/// Pooled within-class covariance with divisor n - K, plus ridge * I.
LdaModel fit_lda(const Eigen::Ref<const Eigen::MatrixXd>& rows, std::span<const int> labels,
                 int num_classes, double ridge);

/// Precomputed linear discriminants: score = weights * z + bias.
class LdaScorer {
public:
    LdaScorer() = default;
    explicit LdaScorer(const LdaModel& model);

    Eigen::VectorXd scores(const Eigen::Ref<const Eigen::VectorXd>& z) const;

private:
    Eigen::MatrixXd weights_;  // K x P, row k = (Sigma^-1 mu_k)^T
    Eigen::VectorXd bias_;     // -1/2 mu_k^T Sigma^-1 mu_k + log prior_k
};

/// The (T, D, L, P, flavor) tuple, plus estimator settings, the model was fit with.
struct ModelFingerprint {
    FeatureOptions features{};
    int modes = 0;
    bool whiten = true;
};

struct DecoderOptions {
    int modes = 187;                 // P
    double zca_epsilon = 0.0;
    double ridge_relative = 1e-6;    // lambda = ridge_relative * trace(pooled) / P
    bool whiten = true;              // false skips PCA and ZCA
};

struct DecoderModel {
    std::optional<PcaTransform> pca;
    std::optional<ZcaTransform> zca;
    LdaModel lda;
    ModelFingerprint fingerprint;

    Eigen::Index input_dim() const;
    /// Applies PCA then ZCA (or nothing when the model was fit unwhitened).
    Eigen::VectorXd transform(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

DecoderModel fit_decoder(const Eigen::Ref<const Eigen::MatrixXd>& rows, std::span<const int> labels,
                         int num_classes, const DecoderOptions& options,
                         const ModelFingerprint& fingerprint = {});

struct Prediction {
    int label = 0;            // 1-based
    Eigen::VectorXd scores;   // index k - 1 holds class k
};

/// Argmax of the LDA discriminants; ties go to the lowest class index.
Prediction predict(const DecoderModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
Prediction predict(const DecoderModel& model, const FeatureVector& x);

/// Fitted model plus its cached discriminants, for repeated prediction.
class Decoder {
public:
    explicit Decoder(DecoderModel model);

    const DecoderModel& model() const { return model_; }
    Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

private:
    DecoderModel model_;
    LdaScorer scorer_;
};

std::string serialize_model(const DecoderModel& model);
DecoderModel parse_model(std::string_view text);

}  // namespace specdec
