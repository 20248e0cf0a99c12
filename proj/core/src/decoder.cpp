#include "specdec/decoder.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "json_util.hpp"
#include "specdec/error.hpp"

namespace specdec {

namespace {

Eigen::MatrixXd covariance(const Eigen::Ref<const Eigen::MatrixXd>& centred) {
    const Eigen::Index d = centred.cols();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centred.transpose());
    cov /= static_cast<double>(centred.rows() - 1);
    return cov.selfadjointView<Eigen::Lower>();
}

// Eigenvalues at or below this are treated as zero when counting rank.
double rank_tolerance(const Eigen::VectorXd& eigenvalues) {
    const double scale = std::max(eigenvalues.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return scale * static_cast<double>(eigenvalues.size()) * 1e3 * std::numeric_limits<double>::epsilon();
}

struct PooledStatistics {
    std::vector<Eigen::VectorXd> means;
    Eigen::MatrixXd pooled;
    Eigen::VectorXd priors;
};

PooledStatistics pooled_statistics(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                   std::span<const int> labels, int num_classes) {
    const Eigen::Index n = rows.rows();
    const Eigen::Index p = rows.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw ShapeError("label count " + std::to_string(labels.size()) + " != row count " +
                         std::to_string(n));
    }
    if (num_classes < 2) throw ParameterError("LDA needs K >= 2");

    std::vector<Eigen::Index> counts(static_cast<std::size_t>(num_classes), 0);
    for (int label : labels) {
        if (label < 1 || label > num_classes) {
            throw ParameterError("label " + std::to_string(label) + " outside [1, " +
                                 std::to_string(num_classes) + "]");
        }
        ++counts[static_cast<std::size_t>(label - 1)];
    }
    std::string missing;
    for (int k = 0; k < num_classes; ++k) {
        if (counts[static_cast<std::size_t>(k)] < 2) {
            if (!missing.empty()) missing += ",";
            missing += std::to_string(k + 1);
        }
    }
    if (!missing.empty()) {
        throw InsufficientDataError("classes with fewer than 2 samples: " + missing);
    }
    if (n - num_classes < 1) throw InsufficientDataError("LDA needs n - K >= 1");

    PooledStatistics stats;
    stats.means.assign(static_cast<std::size_t>(num_classes), Eigen::VectorXd::Zero(p));
    for (Eigen::Index i = 0; i < n; ++i) {
        stats.means[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)] +=
            rows.row(i).transpose();
    }
    stats.priors.resize(num_classes);
    for (int k = 0; k < num_classes; ++k) {
        const auto nk = static_cast<double>(counts[static_cast<std::size_t>(k)]);
        stats.means[static_cast<std::size_t>(k)] /= nk;
        stats.priors[k] = nk / static_cast<double>(n);
    }
    Eigen::MatrixXd centred(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        centred.row(i) = rows.row(i) -
                         stats.means[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)]
                             .transpose();
    }
    stats.pooled = Eigen::MatrixXd::Zero(p, p);
    stats.pooled.selfadjointView<Eigen::Lower>().rankUpdate(centred.transpose());
    stats.pooled /= static_cast<double>(n - num_classes);
    stats.pooled = stats.pooled.selfadjointView<Eigen::Lower>();
    return stats;
}

LdaModel finish_lda(PooledStatistics stats, double ridge) {
    if (!(ridge >= 0.0)) throw ParameterError("ridge must be >= 0");
    LdaModel model;
    model.class_means = std::move(stats.means);
    model.shared_covariance = std::move(stats.pooled);
    model.shared_covariance.diagonal().array() += ridge;
    model.priors = std::move(stats.priors);
    return model;
}

}  // namespace

Eigen::VectorXd PcaTransform::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != mean.size()) {
        throw ShapeError("PCA input has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(mean.size()));
    }
    return basis.transpose() * (x - mean);
}

Eigen::MatrixXd PcaTransform::apply_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows) const {
    if (rows.cols() != mean.size()) throw ShapeError("PCA input dimension mismatch");
    return (rows.rowwise() - mean.transpose()) * basis;
}

PcaTransform fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& rows, int modes) {
    const Eigen::Index n = rows.rows();
    const Eigen::Index d = rows.cols();
    if (n < 2) throw InsufficientDataError("PCA needs at least 2 rows");
    if (modes < 1 || modes > std::min(n - 1, d)) {
        throw ParameterError("P=" + std::to_string(modes) + " outside [1, " +
                             std::to_string(std::min(n - 1, d)) + "] (n=" + std::to_string(n) +
                             ", feature_dim=" + std::to_string(d) + ")");
    }
    PcaTransform pca;
    pca.mean = rows.colwise().mean().transpose();
    const Eigen::MatrixXd centred = rows.rowwise() - pca.mean.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance(centred));
    if (eig.info() != Eigen::Success) {
        throw IllConditionedError("PCA eigendecomposition failed", 0, d);
    }
    pca.basis.resize(d, modes);
    pca.explained_variance.resize(modes);
    for (int j = 0; j < modes; ++j) {
        const Eigen::Index src = d - 1 - j;  // ascending order from the solver
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        pca.basis.col(j) = v;
        pca.explained_variance[j] = std::max(eig.eigenvalues()[src], 0.0);
    }
    return pca;
}

Eigen::VectorXd ZcaTransform::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != mean.size()) throw ShapeError("ZCA input dimension mismatch");
    return whitener * (x - mean);
}

Eigen::MatrixXd ZcaTransform::apply_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows) const {
    if (rows.cols() != mean.size()) throw ShapeError("ZCA input dimension mismatch");
    return (rows.rowwise() - mean.transpose()) * whitener;
}

ZcaTransform fit_zca(const Eigen::Ref<const Eigen::MatrixXd>& rows, double epsilon) {
    const Eigen::Index n = rows.rows();
    const Eigen::Index p = rows.cols();
    if (!(epsilon >= 0.0)) throw ParameterError("ZCA epsilon must be >= 0");
    if (n < 2) throw InsufficientDataError("ZCA needs at least 2 rows");

    ZcaTransform zca;
    zca.epsilon = epsilon;
    zca.mean = rows.colwise().mean().transpose();
    const Eigen::MatrixXd centred = rows.rowwise() - zca.mean.transpose();
    Eigen::MatrixXd cov = covariance(centred);
    cov.diagonal().array() += epsilon;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw IllConditionedError("ZCA eigendecomposition failed", 0, p);
    }
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double tol = rank_tolerance(lambda);
    const auto rank = static_cast<long>((lambda.array() > tol).count());
    if (rank < p) {
        throw IllConditionedError("ZCA covariance is singular: rank " + std::to_string(rank) +
                                      " < dimension " + std::to_string(p) +
                                      " (set epsilon > 0 or reduce P)",
                                  rank, static_cast<long>(p));
    }
    const Eigen::MatrixXd& v = eig.eigenvectors();
    zca.whitener = v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
    zca.whitener = 0.5 * (zca.whitener + zca.whitener.transpose()).eval();
    return zca;
}

LdaModel fit_lda(const Eigen::Ref<const Eigen::MatrixXd>& rows, std::span<const int> labels,
                 int num_classes, double ridge) {
    return finish_lda(pooled_statistics(rows, labels, num_classes), ridge);
}

LdaScorer::LdaScorer(const LdaModel& model) {
    const int k = model.num_classes();
    const Eigen::LLT<Eigen::MatrixXd> chol(model.shared_covariance);
    if (chol.info() != Eigen::Success) {
        throw IllConditionedError("LDA shared covariance is not positive definite", 0,
                                  static_cast<long>(model.dim()));
    }
    weights_.resize(k, model.dim());
    bias_.resize(k);
    for (int c = 0; c < k; ++c) {
        const Eigen::VectorXd& mu = model.class_means[static_cast<std::size_t>(c)];
        const Eigen::VectorXd w = chol.solve(mu);
        weights_.row(c) = w.transpose();
        bias_[c] = -0.5 * mu.dot(w) + std::log(model.priors[c]);
    }
}

Eigen::VectorXd LdaScorer::scores(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (z.size() != weights_.cols()) throw ShapeError("LDA input dimension mismatch");
    return weights_ * z + bias_;
}

Eigen::Index DecoderModel::input_dim() const {
    return pca ? pca->input_dim() : lda.dim();
}

Eigen::VectorXd DecoderModel::transform(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != input_dim()) {
        throw ShapeError("feature vector has dimension " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(input_dim()));
    }
    if (!pca) return x;
    const Eigen::VectorXd projected = pca->apply(x);
    return zca ? zca->apply(projected) : projected;
}

DecoderModel fit_decoder(const Eigen::Ref<const Eigen::MatrixXd>& rows, std::span<const int> labels,
                         int num_classes, const DecoderOptions& options,
                         const ModelFingerprint& fingerprint) {
    if (!(options.ridge_relative >= 0.0)) throw ParameterError("ridge must be >= 0");
    DecoderModel model;
    model.fingerprint = fingerprint;
    model.fingerprint.whiten = options.whiten;
    model.fingerprint.modes = options.whiten ? options.modes : static_cast<int>(rows.cols());

    Eigen::MatrixXd z;
    if (options.whiten) {
        model.pca = fit_pca(rows, options.modes);
        const Eigen::MatrixXd projected = model.pca->apply_rows(rows);
        model.zca = fit_zca(projected, options.zca_epsilon);
        z = model.zca->apply_rows(projected);
    } else {
        z = rows;
    }
    PooledStatistics stats = pooled_statistics(z, labels, num_classes);
    double scale = stats.pooled.trace();
    if (!(scale > 0.0)) {
        // Noise-free classes: fall back to the total spread so the ridge still
        // follows the feature scale.
        const Eigen::MatrixXd centred = z.rowwise() - z.colwise().mean();
        scale = centred.squaredNorm() / static_cast<double>(z.rows() - 1);
    }
    const double ridge = options.ridge_relative * scale / static_cast<double>(stats.pooled.rows());
    model.lda = finish_lda(std::move(stats), ridge);
    return model;
}

namespace {

Prediction argmax(Eigen::VectorXd scores) {
    Prediction p;
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[best]) best = k;
    }
    p.label = static_cast<int>(best) + 1;
    p.scores = std::move(scores);
    return p;
}

}  // namespace

Prediction predict(const DecoderModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return argmax(LdaScorer(model.lda).scores(model.transform(x)));
}

Prediction predict(const DecoderModel& model, const FeatureVector& x) {
    return predict(model, x.values);
}

Decoder::Decoder(DecoderModel model) : model_(std::move(model)), scorer_(model_.lda) {}

Prediction Decoder::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return argmax(scorer_.scores(model_.transform(x)));
}

// ---- serialization -------------------------------------------------------

namespace {

constexpr const char* kModelFormat = "specdec-model-v1";

detail::json fingerprint_to_json(const ModelFingerprint& f) {
    return {
        {"T", f.features.window},
        {"D", f.features.delay},
        {"L", f.features.num_frequencies},
        {"P", f.modes},
        {"flavor", std::string(to_string(f.features.flavor))},
        {"shrinkage", detail::to_json(f.features.shrinkage)},
        {"log_power", f.features.log_power},
        {"whiten", f.whiten},
    };
}

ModelFingerprint fingerprint_from_json(const detail::json& j) {
    ModelFingerprint f;
    f.features.window = j.at("T").get<int>();
    f.features.delay = j.at("D").get<int>();
    f.features.num_frequencies = j.at("L").get<int>();
    f.modes = j.at("P").get<int>();
    f.features.flavor = parse_feature_flavor(j.at("flavor").get<std::string>());
    f.features.shrinkage = detail::shrinkage_from_json(j.at("shrinkage"));
    f.features.log_power = j.value("log_power", false);
    f.whiten = j.value("whiten", true);
    return f;
}

}  // namespace

std::string serialize_model(const DecoderModel& model) {
    using detail::json;
    json doc;
    doc["format"] = kModelFormat;
    doc["fingerprint"] = fingerprint_to_json(model.fingerprint);
    if (model.pca) {
        doc["pca"] = {{"mean", detail::to_json(model.pca->mean)},
                      {"basis", detail::to_json(model.pca->basis)},
                      {"explained_variance", detail::to_json(model.pca->explained_variance)}};
    } else {
        doc["pca"] = nullptr;
    }
    if (model.zca) {
        doc["zca"] = {{"mean", detail::to_json(model.zca->mean)},
                      {"whitener", detail::to_json(model.zca->whitener)},
                      {"epsilon", model.zca->epsilon}};
    } else {
        doc["zca"] = nullptr;
    }
    json means = json::array();
    for (const auto& m : model.lda.class_means) means.push_back(detail::to_json(m));
    doc["lda"] = {{"class_means", means},
                  {"shared_covariance", detail::to_json(model.lda.shared_covariance)},
                  {"priors", detail::to_json(model.lda.priors)}};
    return doc.dump(1) + "\n";
}

DecoderModel parse_model(std::string_view text) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("model document is not valid JSON: ") + e.what());
    }
    if (doc.value("format", std::string{}) != kModelFormat) {
        throw ParameterError("unsupported model format");
    }
    try {
        DecoderModel model;
        model.fingerprint = fingerprint_from_json(doc.at("fingerprint"));
        if (!doc.at("pca").is_null()) {
            const json& p = doc.at("pca");
            PcaTransform pca;
            pca.mean = detail::vector_from_json(p.at("mean"), "pca.mean");
            pca.basis = detail::matrix_from_json(p.at("basis"), "pca.basis");
            pca.explained_variance =
                detail::vector_from_json(p.at("explained_variance"), "pca.explained_variance");
            model.pca = std::move(pca);
        }
        if (!doc.at("zca").is_null()) {
            const json& z = doc.at("zca");
            ZcaTransform zca;
            zca.mean = detail::vector_from_json(z.at("mean"), "zca.mean");
            zca.whitener = detail::matrix_from_json(z.at("whitener"), "zca.whitener");
            zca.epsilon = z.at("epsilon").get<double>();
            model.zca = std::move(zca);
        }
        const json& l = doc.at("lda");
        for (const auto& m : l.at("class_means")) {
            model.lda.class_means.push_back(detail::vector_from_json(m, "lda.class_means"));
        }
        model.lda.shared_covariance =
            detail::matrix_from_json(l.at("shared_covariance"), "lda.shared_covariance");
        model.lda.priors = detail::vector_from_json(l.at("priors"), "lda.priors");

        const Eigen::Index p = model.lda.dim();
        const bool chained = (!model.pca || model.pca->modes() == p) &&
                             (!model.zca || model.zca->whitener.rows() == p) &&
                             static_cast<Eigen::Index>(model.lda.priors.size()) ==
                                 model.lda.num_classes();
        if (!chained) throw ShapeError("model stage dimensions do not chain");
        return model;
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed model document: ") + e.what());
    }
}

}  // namespace specdec
