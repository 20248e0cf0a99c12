#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "specdec/decoder.hpp"
#include "specdec/error.hpp"

using namespace specdec;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(gen);
    return m;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

struct Labeled {
    Eigen::MatrixXd x;
    std::vector<int> labels;
};

// Classes with means `scale * e_k` in `dim` dimensions plus standard normal noise.
Labeled simplex_data(int k, int dim, int per_class, double scale, unsigned seed) {
    Labeled out;
    out.x = gaussian(static_cast<Eigen::Index>(k) * per_class, dim, seed);
    for (int i = 0; i < k * per_class; ++i) {
        const int label = i % k + 1;
        out.x(i, label - 1) += scale;
        out.labels.push_back(label);
    }
    return out;
}

}  // namespace

TEST_CASE("pca on a line") {
    Eigen::MatrixXd x(6, 2);
    const double t[] = {-3, -2, -1, 1, 2, 3};
    for (int i = 0; i < 6; ++i) x.row(i) << t[i], t[i];
    const auto pca = fit_pca(x, 1);
    CHECK(pca.basis(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(pca.basis(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(pca.explained_variance[0] == doctest::Approx(2.0 * 28.0 / 5.0));
}

TEST_CASE("pca basis is orthonormal, ordered and sign-fixed") {
    const Eigen::MatrixXd x = gaussian(200, 50, 1) * gaussian(50, 50, 2);
    const auto pca = fit_pca(x, 20);
    const Eigen::MatrixXd g = pca.basis.transpose() * pca.basis;
    CHECK((g - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-8);
    for (int j = 1; j < 20; ++j) CHECK(pca.explained_variance[j] <= pca.explained_variance[j - 1]);
    for (int j = 0; j < 20; ++j) {
        Eigen::Index arg = 0;
        pca.basis.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(pca.basis(arg, j) > 0.0);
    }
}

TEST_CASE("full pca preserves distances") {
    const Eigen::MatrixXd x = gaussian(40, 6, 3);
    const auto pca = fit_pca(x, 6);
    const Eigen::MatrixXd z = pca.apply_rows(x);
    for (int i = 0; i < 40; i += 7)
        for (int j = 0; j < 40; j += 5)
            CHECK(std::abs((z.row(i) - z.row(j)).norm() - (x.row(i) - x.row(j)).norm()) < 1e-8);
}

TEST_CASE("pca reconstruction error equals the discarded eigenvalues") {
    const Eigen::MatrixXd x = gaussian(200, 50, 4) * gaussian(50, 50, 5);
    const int p = 12;
    const auto pca = fit_pca(x, p);
    const Eigen::MatrixXd centred = x.rowwise() - pca.mean.transpose();
    const Eigen::MatrixXd back = pca.apply_rows(x) * pca.basis.transpose();
    const double per_row = (centred - back).squaredNorm() / x.rows();

    const auto ev = oracle::jacobi_eigenvalues(sample_covariance(x));
    double discarded = 0.0;
    for (std::size_t i = p; i < ev.size(); ++i) discarded += ev[i];
    discarded *= (200.0 - 1.0) / 200.0;
    CHECK(per_row == doctest::Approx(discarded).epsilon(1e-6));
    for (int j = 0; j < p; ++j) CHECK(pca.explained_variance[j] == doctest::Approx(ev[static_cast<std::size_t>(j)]).epsilon(1e-9));
}

TEST_CASE("pca mode range") {
    const Eigen::MatrixXd x = gaussian(10, 4, 6);
    CHECK_THROWS_AS(fit_pca(x, 0), ParameterError);
    CHECK_THROWS_AS(fit_pca(x, 5), ParameterError);
    CHECK_THROWS_AS(fit_pca(gaussian(4, 8, 1), 4), ParameterError);
    CHECK_NOTHROW(fit_pca(gaussian(4, 8, 1), 3));
}

TEST_CASE("zca") {
    SUBCASE("diagonal covariance") {
        Eigen::MatrixXd x(4, 2);
        x << 2, 1, -2, 1, 2, -1, -2, -1;
        // Column variances 16/3 and 4/3; rescale to 4 and 1.
        x.col(0) *= std::sqrt(3.0 / 4.0);
        x.col(1) *= std::sqrt(3.0 / 4.0);
        const auto z = fit_zca(x, 0.0);
        CHECK(z.whitener(0, 0) == doctest::Approx(0.5));
        CHECK(z.whitener(1, 1) == doctest::Approx(1.0));
        CHECK(std::abs(z.whitener(0, 1)) < 1e-12);
    }
    SUBCASE("random full-rank data is whitened") {
        const Eigen::MatrixXd x = gaussian(300, 10, 7) * gaussian(10, 10, 8);
        const auto z = fit_zca(x, 0.0);
        CHECK((z.whitener - z.whitener.transpose()).cwiseAbs().maxCoeff() < 1e-8);
        const Eigen::MatrixXd cov = sample_covariance(z.apply_rows(x));
        CHECK((cov - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("white data gives an identity whitener") {
        Eigen::MatrixXd x = gaussian(500, 5, 9);
        x = x.rowwise() - x.colwise().mean();
        const Eigen::LLT<Eigen::MatrixXd> llt(sample_covariance(x));
        x = x * llt.matrixU().solve(Eigen::MatrixXd::Identity(5, 5));
        const auto z = fit_zca(x, 0.0);
        CHECK((z.whitener - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("singular covariance names the rank") {
        Eigen::MatrixXd x = gaussian(50, 4, 10);
        x.col(3) = x.col(0) + x.col(1);
        try {
            fit_zca(x, 0.0);
            FAIL("expected an error");
        } catch (const IllConditionedError& e) {
            CHECK(e.rank() == 3);
            CHECK(e.dimension() == 4);
        }
        CHECK_NOTHROW(fit_zca(x, 1e-3));
    }
}

TEST_CASE("lda fit") {
    SUBCASE("missing class is reported") {
        const auto d = simplex_data(3, 4, 10, 2.0, 11);
        std::vector<int> labels = d.labels;
        for (auto& l : labels)
            if (l == 2) l = 1;
        try {
            fit_lda(d.x, labels, 3, 0.0);
            FAIL("expected an error");
        } catch (const InsufficientDataError& e) {
            CHECK(std::string(e.what()).find('2') != std::string::npos);
        }
    }
    SUBCASE("duplicated samples give the same model") {
        const auto d = simplex_data(3, 4, 20, 2.0, 12);
        Eigen::MatrixXd x2(d.x.rows() * 2, d.x.cols());
        x2 << d.x, d.x;
        std::vector<int> l2 = d.labels;
        l2.insert(l2.end(), d.labels.begin(), d.labels.end());
        const auto a = fit_lda(d.x, d.labels, 3, 0.0);
        const auto b = fit_lda(x2, l2, 3, 0.0);
        const double n = static_cast<double>(d.x.rows());
        for (int k = 0; k < 3; ++k) CHECK((a.class_means[static_cast<std::size_t>(k)] - b.class_means[static_cast<std::size_t>(k)]).norm() < 1e-12);
        // Same scatter, divisor n - K versus 2n - K.
        const Eigen::MatrixXd rescaled = b.shared_covariance * (2.0 * n - 3.0) / (n - 3.0) / 2.0;
        CHECK((rescaled - a.shared_covariance).norm() < 1e-9 * a.shared_covariance.norm());
        CHECK((a.priors - b.priors).norm() < 1e-15);
    }
    SUBCASE("ridge is added to the diagonal") {
        const auto d = simplex_data(2, 3, 10, 1.0, 13);
        const auto a = fit_lda(d.x, d.labels, 2, 0.0);
        const auto b = fit_lda(d.x, d.labels, 2, 0.5);
        CHECK((b.shared_covariance - a.shared_covariance - 0.5 * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    }
    SUBCASE("parameters are recovered from a large sample") {
        const int k = 4, dim = 5, per = 2500;
        std::mt19937 gen(14);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim, dim) + 0.3 * gaussian(dim, dim, 15);
        const Eigen::MatrixXd sigma = a * a.transpose();
        std::vector<Eigen::VectorXd> mu;
        for (int c = 0; c < k; ++c) mu.push_back(3.0 * gaussian(dim, 1, 20 + c).col(0));
        Eigen::MatrixXd x(k * per, dim);
        std::vector<int> labels;
        for (int i = 0; i < k * per; ++i) {
            Eigen::VectorXd z(dim);
            for (int j = 0; j < dim; ++j) z[j] = normal(gen);
            x.row(i) = (mu[static_cast<std::size_t>(i % k)] + a * z).transpose();
            labels.push_back(i % k + 1);
        }
        const auto m = fit_lda(x, labels, k, 0.0);
        CHECK((m.shared_covariance - sigma).norm() < 0.05 * sigma.norm());
        for (int c = 0; c < k; ++c) {
            CHECK((m.class_means[static_cast<std::size_t>(c)] - mu[static_cast<std::size_t>(c)]).norm() <
                  0.05 * mu[static_cast<std::size_t>(c)].norm());
        }
        CHECK(m.priors.sum() == doctest::Approx(1.0));
    }
}

TEST_CASE("two-class boundary sits at the midpoint") {
    LdaModel m;
    m.class_means = {Eigen::VectorXd::Unit(3, 0), -Eigen::VectorXd::Unit(3, 0)};
    m.shared_covariance = Eigen::MatrixXd::Identity(3, 3);
    m.priors = Eigen::VectorXd::Constant(2, 0.5);
    DecoderModel model;
    model.lda = m;
    model.fingerprint.whiten = false;

    const auto mid = predict(model, Eigen::VectorXd::Zero(3));
    CHECK(std::abs(mid.scores[0] - mid.scores[1]) < 1e-9);
    CHECK(mid.label == 1);  // exact tie goes to the lower index

    Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
    z[0] = 0.5;
    CHECK(predict(model, z).label == 1);
    z[0] = -0.5;
    CHECK(predict(model, z).label == 2);
    z[0] = 1e-3;
    z[2] = 40.0;  // off-axis displacement does not matter
    CHECK(predict(model, z).label == 1);
    CHECK(predict(model, m.class_means[1]).label == 2);
    CHECK_THROWS_AS(predict(model, Eigen::VectorXd::Zero(4)), ShapeError);
}

TEST_CASE("scores agree with the quadratic form") {
    const auto train = simplex_data(8, 10, 60, 2.0, 30);
    const auto test = simplex_data(8, 10, 125, 2.0, 31);
    DecoderOptions opt;
    opt.modes = 10;
    const auto model = fit_decoder(train.x, train.labels, 8, opt);
    const Decoder decoder(model);
    int mismatches = 0;
    for (Eigen::Index i = 0; i < test.x.rows(); ++i) {
        const Eigen::VectorXd x = test.x.row(i).transpose();
        const Eigen::VectorXd z = model.transform(x);
        const int want = oracle::quadratic_form_label(model.lda.class_means, model.lda.shared_covariance, model.lda.priors, z);
        mismatches += decoder.predict(x).label == want ? 0 : 1;
        const auto p = predict(model, x);
        CHECK(p.label == decoder.predict(x).label);
    }
    CHECK(test.x.rows() == 1000);
    CHECK(mismatches == 0);
}

TEST_CASE("fitting is deterministic") {
    const auto d = simplex_data(4, 12, 30, 1.0, 40);
    DecoderOptions opt;
    opt.modes = 8;
    const auto a = fit_decoder(d.x, d.labels, 4, opt);
    const auto b = fit_decoder(d.x, d.labels, 4, opt);
    CHECK(serialize_model(a) == serialize_model(b));
    CHECK(a.pca->basis == b.pca->basis);
    CHECK(a.zca->whitener == b.zca->whitener);
}

TEST_CASE("model serialization round trip") {
    const auto d = simplex_data(4, 12, 30, 1.0, 41);
    DecoderOptions opt;
    opt.modes = 8;
    ModelFingerprint fp;
    fp.features.window = 321;
    fp.features.num_frequencies = 2;
    fp.modes = 8;
    const auto model = fit_decoder(d.x, d.labels, 4, opt, fp);
    const std::string text = serialize_model(model);
    const auto back = parse_model(text);
    CHECK(serialize_model(back) == text);
    CHECK(back.fingerprint.features.window == 321);
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
        const Eigen::VectorXd x = d.x.row(i).transpose();
        const auto p = predict(model, x);
        const auto q = predict(back, x);
        CHECK(p.label == q.label);
        CHECK(p.scores == q.scores);
    }
    CHECK_THROWS_AS(parse_model("{\"format\": \"nope\"}"), ParameterError);
}

TEST_CASE("unwhitened pipeline skips pca and zca") {
    const auto d = simplex_data(3, 5, 20, 2.0, 42);
    DecoderOptions opt;
    opt.whiten = false;
    const auto model = fit_decoder(d.x, d.labels, 3, opt);
    CHECK(!model.pca);
    CHECK(!model.zca);
    CHECK(model.input_dim() == 5);
    CHECK(model.lda.dim() == 5);
}
