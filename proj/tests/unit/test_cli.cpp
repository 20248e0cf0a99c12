#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "commands.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace specdec;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "specdec");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = app::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

int shell(const std::string& args) {
    const std::string cmd = std::string(SPECDEC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// 4 classes, 8 channels, T = 120, 2 EDCs
std::string small_dataset(const fs::path& root, const std::string& name = "data") {
    const auto dir = (root / name).string();
    const auto r = cli({"generate", "--out", dir, "--K", "4", "--channels", "8", "--T", "120", "--trials", "120",
                        "--edcs", "2", "--L-gen", "3", "--sigma", "2", "--seed", "5"});
    REQUIRE(r.code == 0);
    return dir;
}

const std::vector<std::string> kSmall = {"--T", "120", "--L", "3", "--P", "20", "--W", "60"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

}  // namespace

TEST_CASE("version and usage errors") {
    const auto v = cli({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(app::kCodeVersion) != std::string::npos);
    CHECK(cli({"frobnicate"}).code == app::kExitUsage);
    CHECK(cli({"evaluate", "--bogus"}).code == app::kExitUsage);
    CHECK(cli({"generate"}).code == app::kExitUsage);
}

TEST_CASE("generate is byte-reproducible") {
    const fs::path root = fixture::scratch_dir("cli-generate");
    const auto a = small_dataset(root, "a");
    const auto b = small_dataset(root, "b");
    CHECK(slurp(fs::path(a) / "manifest.json") == slurp(fs::path(b) / "manifest.json"));
    CHECK(dataset_checksum(a) == dataset_checksum(b));
    const auto m = read_json(fs::path(a) / "manifest.json");
    CHECK(m.contains("rng_algorithm"));
    CHECK(m["generator"]["seed"] == 5);

    SUBCASE("a different seed changes the data") {
        const auto r = cli({"generate", "--out", (root / "c").string(), "--K", "4", "--channels", "8", "--T", "120",
                            "--trials", "120", "--edcs", "2", "--L-gen", "3", "--sigma", "2", "--seed", "6"});
        REQUIRE(r.code == 0);
        CHECK(dataset_checksum(a) != dataset_checksum((root / "c").string()));
    }
    SUBCASE("refuses a non-empty directory without --force") {
        const auto r = cli({"generate", "--out", a, "--K", "4", "--trials", "40"});
        CHECK(r.code == app::kExitRuntime);
        CHECK(r.err.find("error: kind=") != std::string::npos);
    }
    SUBCASE("zero trials is a parameter error") {
        const auto r = cli({"generate", "--out", (root / "z").string(), "--trials", "0"});
        CHECK(r.code == app::kExitUsage);
        CHECK(r.err.find("kind=parameter") != std::string::npos);
    }
}

TEST_CASE("evaluate writes results and reruns from its manifest") {
    const fs::path root = fixture::scratch_dir("cli-evaluate");
    const auto data = small_dataset(root);
    const auto run1 = (root / "run1").string();
    const auto r = cli(with({"evaluate", "--dataset", data, "--out", run1}, kSmall));
    REQUIRE(r.code == 0);

    const auto results = read_json(fs::path(run1) / "results.json");
    CHECK(results["config"]["T"] == 120);
    CHECK(results["anchor"] == "edc000");
    CHECK(results["n_trials"] == 60);
    CHECK(results["accuracy"].get<double>() > 0.25);
    const auto manifest = read_json(fs::path(run1) / "run_manifest.json");
    CHECK(manifest["dataset_sha256"] == dataset_checksum(data));
    CHECK(manifest["command"] == "evaluate");
    for (const auto& [name, sha] : manifest["outputs"].items()) CHECK(fs::exists(fs::path(run1) / name));

    const auto run2 = (root / "run2").string();
    REQUIRE(cli({"evaluate", "--from-manifest", (fs::path(run1) / "run_manifest.json").string(), "--out", run2}).code == 0);
    for (const auto& [name, sha] : manifest["outputs"].items())
        CHECK(slurp(fs::path(run1) / name) == slurp(fs::path(run2) / name));
    CHECK(read_json(fs::path(run2) / "run_manifest.json")["outputs"] == manifest["outputs"]);

    SUBCASE("a changed dataset is caught") {
        const auto other = (root / "other").string();
        REQUIRE(cli({"generate", "--out", other, "--K", "4", "--channels", "8", "--T", "120", "--trials", "120",
                     "--edcs", "2", "--L-gen", "3", "--seed", "9"})
                    .code == 0);
        const auto rr = cli({"evaluate", "--from-manifest", (fs::path(run1) / "run_manifest.json").string(),
                             "--dataset", other, "--out", (root / "run3").string()});
        CHECK(rr.code == app::kExitRuntime);
        CHECK(rr.err.find("kind=checksum") != std::string::npos);
    }
    SUBCASE("a one-cell sweep agrees with evaluate") {
        const auto sw = (root / "sweep").string();
        CHECK(cli(with({"sweep", "--dataset", data, "--out", sw}, kSmall)).code == app::kExitUsage);
        REQUIRE(cli(with({"sweep", "--dataset", data, "--out", sw, "--windows", "120"}, kSmall)).code == 0);
        std::istringstream lines(slurp(fs::path(sw) / "sweep.csv"));
        std::string line;
        std::vector<std::string> rows;
        while (std::getline(lines, line))
            if (!line.empty() && line[0] != '#') rows.push_back(line);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].find("accuracy") != std::string::npos);
        CHECK(rows[1].find(",ok,") != std::string::npos);
        const auto summary = read_json(fs::path(sw) / "summary.json");
        CHECK(summary["cells"][0]["accuracy"] == results["accuracy"]);
    }
}

TEST_CASE("evaluate parameter errors exit 2") {
    const fs::path root = fixture::scratch_dir("cli-errors");
    const auto data = small_dataset(root);
    CHECK(cli({"evaluate", "--dataset", (root / "missing").string(), "--out", (root / "o1").string()}).code ==
          app::kExitUsage);
    CHECK(cli(with({"evaluate", "--dataset", data, "--out", (root / "o2").string(), "--anchor", "edc999"}, kSmall))
              .code == app::kExitUsage);
    CHECK(cli(with({"evaluate", "--dataset", data, "--out", (root / "o3").string(), "--flavor", "phase"}, kSmall))
              .code == app::kExitUsage);
    CHECK(cli({"evaluate", "--dataset", data, "--out", (root / "o4").string(), "--T", "500"}).code ==
          app::kExitUsage);
}

TEST_CASE("power flavor accepts its own P") {
    const fs::path root = fixture::scratch_dir("cli-power");
    const auto data = (root / "data").string();
    REQUIRE(cli({"generate", "--out", data, "--K", "4", "--channels", "32", "--T", "60", "--trials", "120",
                 "--L-gen", "3", "--seed", "3"})
                .code == 0);
    const auto r = cli({"evaluate", "--dataset", data, "--out", (root / "run").string(), "--T", "60", "--flavor",
                        "power", "--P", "100"});
    REQUIRE(r.code == 0);
    const auto results = read_json(root / "run" / "results.json");
    CHECK(results["config"]["P"] == 100);
    CHECK(results["config"]["flavor"] == "power");
}

TEST_CASE("default decoder settings are recorded") {
    const fs::path root = fixture::scratch_dir("cli-defaults");
    const auto data = (root / "data").string();
    REQUIRE(cli({"generate", "--out", data, "--trials", "200", "--seed", "4"}).code == 0);
    REQUIRE(cli({"evaluate", "--dataset", data, "--out", (root / "run").string()}).code == 0);
    const auto cfg = read_json(root / "run" / "run_manifest.json")["config"];
    CHECK(cfg["T"] == 650);
    CHECK(cfg["D"] == 0);
    CHECK(cfg["L"] == 4);
    CHECK(cfg["P"] == 187);
    CHECK(cfg["flavor"] == "complex");
    CHECK(cfg["W"] == 900);
    CHECK(cfg["whiten"] == true);
}

TEST_CASE("plot-data and inspect") {
    const fs::path root = fixture::scratch_dir("cli-plot");
    const auto data = small_dataset(root);
    const auto sw = (root / "sweep").string();
    REQUIRE(cli({"sweep", "--dataset", data, "--out", sw, "--T", "80", "--L", "3", "--P", "20", "--W", "60",
                 "--delays", "0,20,40", "--flavors", "complex,power", "--power-modes", "10"})
                .code == 0);
    const auto p = cli({"plot-data", (fs::path(sw) / "sweep.csv").string()});
    REQUIRE(p.code == 0);
    CHECK(p.out.rfind("x_name,x,metric,value", 0) == 0);
    CHECK(p.out.find("delay_ms,20,accuracy") != std::string::npos);

    const auto i = cli({"inspect", data, "--channel", "1", "--L", "3"});
    REQUIRE(i.code == 0);
    const auto report = json::parse(i.out);
    CHECK(report["noise"]["channel"] == 1);
    CHECK(report["noise"]["diagonal_dominance"].get<double>() >= 0.0);
    CHECK(report["edcs"].size() == 2);
}

TEST_CASE("the installed binary reports exit codes") {
    CHECK(shell("--version") == 0);
    CHECK(shell("--no-such-flag") == 2);
    CHECK(shell("evaluate --dataset /nonexistent/specdec --out /tmp/specdec-never") == 2);
    const fs::path root = fixture::scratch_dir("cli-binary");
    const auto data = small_dataset(root);
    CHECK(shell("evaluate --dataset " + data + " --out " + (root / "r").string() + " --T 120 --L 3 --P 20 --W 60") == 0);
    CHECK(shell("evaluate --dataset " + data + " --out " + (root / "r").string() + " --T 120 --L 3 --P 20 --W 60") == 1);
}
