#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "specdec/error.hpp"
#include "specdec/harness.hpp"

using namespace specdec;

namespace {

EdcTable line_table() {
    // Anchor "b" at distance 0, "c" at 1, "a" at 2, ten trials each.
    EdcTable t;
    auto add = [&](const std::string& id, double depth) {
        EdcEntry e;
        e.edc_id = id;
        e.depth_vector = {depth, 0.0};
        for (int i = 0; i < 10; ++i) e.trial_ids.push_back(id + std::to_string(i));
        t.entries.push_back(e);
    };
    add("a", -2.0);
    add("b", 0.0);
    add("c", 1.0);
    return t;
}

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.window = 120;
    c.num_frequencies = 3;
    c.modes = 20;
    return c;
}

}  // namespace

TEST_CASE("cluster_edcs") {
    const auto table = line_table();
    SUBCASE("window already full") {
        const auto c = cluster_edcs("b", table, 10);
        CHECK(c.members.size() == 10);
        CHECK(c.edcs == std::vector<std::string>{"b"});
        CHECK(cluster_edcs("b", table, 1).members.size() == 10);
    }
    SUBCASE("nearest neighbour is appended whole") {
        const auto c = cluster_edcs("b", table, 15);
        CHECK(c.members.size() == 20);
        CHECK(c.edcs == std::vector<std::string>{"b", "c"});
        CHECK(c.members.front() == "b0");
        CHECK(c.members[10] == "c0");
    }
    SUBCASE("exhaustion") {
        const auto c = cluster_edcs("b", table, 1000);
        CHECK(c.members.size() == 30);
        CHECK(c.edcs == std::vector<std::string>{"b", "c", "a"});
    }
    SUBCASE("ties go to the smaller id") {
        EdcTable t = line_table();
        t.entries[0].depth_vector = {-1.0, 0.0};
        const auto c = cluster_edcs("b", t, 11);
        CHECK(c.edcs == std::vector<std::string>{"b", "a"});
    }
    SUBCASE("unknown anchor") {
        CHECK_THROWS_AS(cluster_edcs("zz", table, 10), LookupError);
        CHECK_THROWS_AS(cluster_edcs("b", table, 0), ParameterError);
    }
    SUBCASE("smaller windows give prefixes") {
        std::vector<std::string> prev;
        for (int w = 1; w <= 35; ++w) {
            const auto c = cluster_edcs("a", table, w);
            REQUIRE(c.members.size() >= prev.size());
            CHECK(std::equal(prev.begin(), prev.end(), c.members.begin()));
            prev = c.members;
        }
    }
}

TEST_CASE("edc table from a dataset") {
    auto spec = fixture::small_spec(1);
    spec.num_edcs = 3;
    spec.num_trials = 31;
    const auto ds = generate_dataset(spec);
    const auto table = make_edc_table(ds);
    REQUIRE(table.entries.size() == 3);
    CHECK(table.total_trials() == 31);
    CHECK(table.find("edc001").trial_ids.size() >= 10);
    const auto c = cluster_edcs("edc001", table, 5);
    const auto trials = resolve(ds, c);
    REQUIRE(trials.size() == c.members.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
        CHECK(trials[i]->trial_id == c.members[i]);
        CHECK(trials[i]->edc_id == "edc001");
    }
}

TEST_CASE("confusion matrix") {
    ConfusionMatrix cm(3);
    cm.add(1, 1);
    cm.add(1, 2);
    cm.add(2, 2);
    cm.add(3, 3);
    cm.add(3, 3);
    CHECK(cm.total() == 5);
    CHECK(cm.trace() == 4);
    CHECK(cm.accuracy() == doctest::Approx(0.8));
    const Eigen::MatrixXd n = cm.row_normalized();
    for (int r = 0; r < 3; ++r) CHECK(n.row(r).sum() == doctest::Approx(1.0));
    CHECK(n(0, 1) == 0.5);
    CHECK_THROWS_AS(cm.add(4, 1), ParameterError);

    ConfusionMatrix sparse(3);
    sparse.add(1, 1);
    const auto pc = sparse.per_class_accuracy();
    CHECK(pc[0] == 1.0);
    CHECK(std::isnan(pc[1]));
    CHECK(sparse.row_normalized().row(1).sum() == 0.0);
}

TEST_CASE("directional summary") {
    std::map<int, std::string> grouping;
    for (int k = 1; k <= 8; ++k) grouping[k] = k <= 4 ? "contra_up_down" : "ipsi";

    SUBCASE("diagonal") {
        Eigen::Matrix<long long, 8, 8> d = Eigen::Matrix<long long, 8, 8>::Identity() * 5;
        const auto s = directional_summary(ConfusionMatrix::from_counts(d), grouping);
        CHECK(s.at("contra_up_down") == 1.0);
        CHECK(s.at("ipsi") == 1.0);
    }
    SUBCASE("uniform") {
        Eigen::Matrix<long long, 8, 8> u = Eigen::Matrix<long long, 8, 8>::Constant(3);
        const auto s = directional_summary(ConfusionMatrix::from_counts(u), grouping);
        CHECK(s.at("contra_up_down") == doctest::Approx(0.125));
        CHECK(s.at("ipsi") == doctest::Approx(0.125));
    }
    SUBCASE("block diagonal, computed by hand") {
        Eigen::Matrix<long long, 8, 8> b;
        b << 6, 2, 1, 1, 0, 0, 0, 0,
             1, 8, 1, 0, 0, 0, 0, 0,
             1, 1, 7, 1, 0, 0, 0, 0,
             2, 2, 1, 5, 0, 0, 0, 0,
             0, 0, 0, 0, 6, 2, 2, 2,
             0, 0, 0, 0, 1, 9, 1, 1,
             0, 0, 0, 0, 3, 3, 3, 3,
             0, 0, 0, 0, 0, 0, 0, 12;
        const auto s = directional_summary(ConfusionMatrix::from_counts(b), grouping);
        CHECK(s.at("contra_up_down") == doctest::Approx(0.65).epsilon(1e-12));
        CHECK(s.at("ipsi") == doctest::Approx(0.625).epsilon(1e-12));
    }
    SUBCASE("incomplete grouping and empty groups") {
        auto partial = grouping;
        partial.erase(8);
        Eigen::Matrix<long long, 8, 8> d = Eigen::Matrix<long long, 8, 8>::Identity();
        CHECK_THROWS_AS(directional_summary(ConfusionMatrix::from_counts(d), partial), ParameterError);
        const std::vector<std::string> required = {"contra_up_down", "ipsi", "up"};
        CHECK_THROWS_AS(directional_summary(ConfusionMatrix::from_counts(d), grouping, required), ParameterError);
    }
}

TEST_CASE("relative gain and standard error") {
    CHECK(relative_gain(0.94, 0.47) == doctest::Approx(1.0));
    CHECK(relative_gain(0.6, 0.6) == 0.0);
    CHECK_THROWS_AS(relative_gain(0.5, 0.0), UndefinedGainError);
    CHECK(binomial_standard_error(0.125, 400) == doctest::Approx(std::sqrt(0.125 * 0.875 / 400)));
}

TEST_CASE("loocv") {
    SUBCASE("noise-free classes are decoded perfectly") {
        auto spec = fixture::small_spec(2);
        spec.sigma = 0.0;
        spec.num_trials = 40;
        const auto ds = generate_dataset(spec);
        auto cfg = small_config();
        cfg.whiten = false;
        const auto r = loocv(fixture::pointers(ds.trials), 4, cfg);
        CHECK(r.accuracy == 1.0);
        CHECK(r.evaluated_folds == 40);
        const auto& counts = r.confusion.counts();
        CHECK(counts.trace() == counts.sum());
    }
    SUBCASE("bookkeeping") {
        const auto ds = generate_dataset(fixture::small_spec(3));
        const auto r = loocv(fixture::pointers(ds.trials), 4, small_config());
        CHECK(r.evaluated_folds + r.skipped_folds == 120);
        CHECK(r.confusion.total() == r.evaluated_folds);
        CHECK(r.accuracy == static_cast<double>(r.confusion.trace()) / r.confusion.total());
        CHECK(r.accuracy > 0.5);
    }
    SUBCASE("thread count does not change the answer") {
        const auto ds = generate_dataset(fixture::small_spec(4));
        ExecutionOptions one{1}, four{4};
        const auto a = loocv(fixture::pointers(ds.trials), 4, small_config(), one);
        const auto b = loocv(fixture::pointers(ds.trials), 4, small_config(), four);
        CHECK(a.predictions == b.predictions);
    }
    SUBCASE("tiny classes are skipped and counted") {
        Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, 3);
        std::vector<int> labels = {1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3};
        x.col(0) += Eigen::VectorXd::LinSpaced(12, 0.0, 11.0);
        DecoderOptions opt;
        opt.whiten = false;
        const auto r = loocv_features(x, labels, 3, opt);
        CHECK(r.skipped_folds == 2);
        CHECK(r.evaluated_folds == 10);
        CHECK(r.predictions[10] == 0);
    }
    SUBCASE("too few trials for P") {
        auto spec = fixture::small_spec(5);
        spec.num_trials = 24;
        const auto ds = generate_dataset(spec);
        CHECK_THROWS_AS(loocv(fixture::pointers(ds.trials), 4, small_config()), InsufficientDataError);
    }
    SUBCASE("P above the feature dimension") {
        const auto ds = generate_dataset(fixture::small_spec(6));
        auto cfg = small_config();
        cfg.modes = 41;
        CHECK_THROWS_AS(loocv(fixture::pointers(ds.trials), 4, cfg), ParameterError);
    }
}

TEST_CASE("sweep") {
    auto spec = fixture::small_spec(7);
    spec.num_edcs = 2;
    const auto ds = generate_dataset(spec);
    const auto table = make_edc_table(ds);
    const std::vector<ClusteredDataset> clusters = {cluster_edcs("edc000", table, 200)};

    SUBCASE("one cell equals a direct loocv") {
        const auto rows = sweep({small_config()}, clusters, ds);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].ok);
        const auto direct = loocv(resolve(ds, clusters[0]), 4, small_config());
        CHECK(rows[0].result.predictions == direct.predictions);
        CHECK(rows[0].result.accuracy == direct.accuracy);
        CHECK(rows[0].num_trials == 120);
    }
    SUBCASE("failing cells are flagged, the rest still run") {
        auto bad = small_config();
        bad.window = 500;
        auto ok = small_config();
        ok.window = 100;
        const auto rows = sweep({bad, ok}, clusters, ds);
        REQUIRE(rows.size() == 2);
        CHECK(!rows[0].ok);
        CHECK(rows[0].error.find("parameter") != std::string::npos);
        CHECK(rows[1].ok);
        CHECK(rows[1].cell == 1);
    }
    SUBCASE("relative gain from a sweep row pair") {
        GridSpec grid;
        grid.flavors = {FeatureFlavor::complex_spectrum, FeatureFlavor::power_spectrum};
        grid.power_modes = 15;
        const auto rows = sweep(grid.expand(small_config()), clusters, ds);
        REQUIRE(rows.size() == 2);
        CHECK(rows[1].config.modes == 15);
        const double cx = static_cast<double>(rows[0].result.confusion.trace()) / rows[0].result.confusion.total();
        const double pw = static_cast<double>(rows[1].result.confusion.trace()) / rows[1].result.confusion.total();
        CHECK(std::abs(relative_gain(rows[0].result.accuracy, rows[1].result.accuracy) - (cx - pw) / pw) < 1e-12);
    }
    SUBCASE("empty grid") {
        CHECK_THROWS_AS(sweep({}, clusters, ds), ParameterError);
    }
}
