#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtpinn/common.hpp"
#include "dtpinn/experiments.hpp"
#include "dtpinn/geometry.hpp"
#include "dtpinn/net.hpp"
#include "dtpinn/rbf_fd.hpp"
#include "dtpinn/sparse.hpp"

using namespace dtpinn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dtpinn_exp_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string first_line(const fs::path& path) {
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    return line;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path);
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    return text;
}

}  // namespace

TEST_CASE("study id names round-trip") {
    const std::vector<std::string> names{
        "depth", "biharmonic",        "linear-poisson", "nonlinear-poisson",
        "heat",  "star",              "fp32-dt"};
    for (const auto& name : names)
        CHECK(study_id_name(parse_study_id(name)) == name);
    CHECK_THROWS_AS(parse_study_id("bogus"), InvalidArgument);
    CHECK_THROWS_AS(parse_study_id(""), InvalidArgument);
}

TEST_CASE("config validation") {
    const auto dir = fresh_dir("cfg");
    CHECK_THROWS_AS(run_study(StudyId::Depth, "[]", dir.string()),
                    InvalidArgument);
    CHECK_THROWS_AS(run_study(StudyId::Depth, "not json", dir.string()),
                    InvalidArgument);
    CHECK_THROWS_AS(
        run_study(StudyId::Depth, R"({"frobnicate": 1})", dir.string()),
        InvalidArgument);
    CHECK_THROWS_AS(
        run_study(StudyId::Depth, R"({"p_values": [1]})", dir.string()),
        InvalidArgument);
    CHECK_THROWS_AS(
        run_study(StudyId::Biharmonic, R"({"p_values": [6]})", dir.string()),
        InvalidArgument);
    CHECK_THROWS_AS(
        run_study(StudyId::LinearPoisson, R"({"n_values": [10]})",
                  dir.string()),
        InvalidArgument);
    CHECK_THROWS_AS(
        run_study(StudyId::LinearPoisson, R"({"modes": ["sgd"]})",
                  dir.string()),
        InvalidArgument);
    CHECK_THROWS_AS(
        run_study(StudyId::LinearPoisson, R"({"n_t": 8})", dir.string()),
        InvalidArgument);  // heat-only key
}

TEST_CASE("depth study emits errors, timings and files") {
    const auto dir = fresh_dir("depth");
    const json cfg{{"n", 250},    {"depths", {1, 2}},
                   {"p_values", {2, 3}}, {"seeds", {0, 1}},
                   {"timing_repeats", 2}, {"width", 8}};
    const std::string text =
        run_study(StudyId::Depth, cfg.dump(), dir.string());
    const json rep = json::parse(text);

    CHECK(rep["study"] == "depth");
    CHECK(rep["rbf_errors"].size() == 8);       // 2 depths x 2 seeds x 2 p
    CHECK(rep["fp32_jet_errors"].size() == 4);  // 2 depths x 2 seeds
    for (const auto& r : rep["rbf_errors"]) {
        const double e = r["error"].get<double>();
        CHECK(std::isfinite(e));
        CHECK(e > 0.0);
    }
    for (const auto& r : rep["fp32_jet_errors"]) {
        const double e = r["error"].get<double>();
        CHECK(e > 0.0);
        CHECK(e < 1e-2);  // fp32 jets track fp64 to single precision
    }
    CHECK(rep["jet_timings"].size() == 2);
    CHECK(rep["spmv_timings"].size() == 4);
    CHECK(rep["spmv_time_cov"].get<double>() >= 0.0);

    CHECK(slurp(dir / "report.json") == text);
    CHECK(first_line(dir / "depth_errors.csv") == "s,seed,route,p,error");
    CHECK(first_line(dir / "depth_timings.csv") == "s,route,p,seconds");
}

TEST_CASE("depth study rbf error shrinks as p grows") {
    const auto dir = fresh_dir("depth_p");
    const json cfg{{"n", 900},
                   {"depths", {2}},
                   {"p_values", {2, 3, 4, 5}},
                   {"seeds", {0, 1, 2}},
                   {"timing_repeats", 1},
                   {"width", 16}};
    const json rep =
        json::parse(run_study(StudyId::Depth, cfg.dump(), dir.string()));
    CHECK(rep["rbf_error_decreasing_p3_to_p5"] == true);

    double e2 = 0.0, e5 = 0.0;
    for (const auto& r : rep["mean_rbf_errors"]) {
        if (r["p"] == 2) e2 = r["error"].get<double>();
        if (r["p"] == 5) e5 = r["error"].get<double>();
    }
    CHECK(e5 < 0.1 * e2);
}

TEST_CASE("depth study deterministic across invocations") {
    const json cfg{{"n", 200},    {"depths", {1}}, {"p_values", {2}},
                   {"seeds", {0}}, {"timing_repeats", 1}, {"width", 8}};
    const auto d1 = fresh_dir("det1");
    const auto d2 = fresh_dir("det2");
    const json r1 =
        json::parse(run_study(StudyId::Depth, cfg.dump(), d1.string()));
    const json r2 =
        json::parse(run_study(StudyId::Depth, cfg.dump(), d2.string()));
    CHECK(r1["rbf_errors"] == r2["rbf_errors"]);
    CHECK(r1["fp32_jet_errors"] == r2["fp32_jet_errors"]);
}

TEST_CASE("biharmonic annihilates constants on both routes") {
    const PointCloud cloud =
        generate_nodes(DomainShape::unit_disk(), 300, 5);
    const auto mat =
        assemble_matrix(cloud, MatrixKind::Biharmonic, 2);
    const std::vector<double> constants(cloud.n_extended(), 3.25);
    for (double v : spmv(mat, constants)) CHECK(std::abs(v) < 1e-6);

    // Constant network: zero weights, output bias 3.25.
    const MlpSpec spec{2, 8, 1, 1};
    std::vector<double> params(spec.n_params(), 0.0);
    params.back() = 3.25;
    const Mlp<double> net(spec, params);
    std::vector<double> xy;
    for (std::size_t i = 0; i < cloud.n_collocation(); ++i) {
        xy.push_back(cloud.point(i).x);
        xy.push_back(cloud.point(i).y);
    }
    const auto lj = net.laplacian_jets(xy, cloud.n_collocation());
    for (double v : lj.value) CHECK(v == doctest::Approx(3.25));
    for (double v : lj.laplacian) CHECK(v == 0.0);
}

TEST_CASE("biharmonic study orders p and times both routes") {
    const auto dir = fresh_dir("biharmonic");
    const json cfg{{"n", 600},     {"depths", {2}},
                   {"p_values", {2, 5}}, {"seeds", {0}},
                   {"timing_repeats", 1}, {"width", 8}};
    const json rep =
        json::parse(run_study(StudyId::Biharmonic, cfg.dump(), dir.string()));

    CHECK(rep["errors"].size() == 2);
    double e2 = 0.0, e5 = 0.0;
    for (const auto& r : rep["errors"]) {
        CHECK(std::isfinite(r["error"].get<double>()));
        if (r["p"] == 2) e2 = r["error"].get<double>();
        if (r["p"] == 5) e5 = r["error"].get<double>();
    }
    CHECK(e5 < e2);
    CHECK(rep["error_decreasing_in_p"] == true);
    CHECK(rep["jet_reference_seconds"].get<double>() > 0.0);
    CHECK(rep["spmv_timings"].size() == 2);
    CHECK(rep["spmv_faster_than_jets"] == true);
    CHECK(first_line(dir / "biharmonic_errors.csv") == "s,seed,p,error");
    CHECK(first_line(dir / "biharmonic_timings.csv") == "route,p,seconds");
}

TEST_CASE("training sweep runs both modes and aggregates") {
    const auto dir = fresh_dir("sweep");
    const json cfg{{"n_values", {80}},
                   {"p_values", {2}},
                   {"seeds", {0}},
                   {"modes", {"dt", "vanilla"}},
                   {"width", 8},
                   {"layers", 1},
                   {"lbfgs.max_epochs", 3},
                   {"error_every", 1}};
    const json rep = json::parse(
        run_study(StudyId::LinearPoisson, cfg.dump(), dir.string()));

    REQUIRE(rep["runs"].size() == 2);
    CHECK(rep["runs"][0]["name"] == "dt_n80_p2_seed0");
    CHECK(rep["runs"][1]["name"] == "vanilla_n80_seed0");
    for (const auto& run : rep["runs"]) {
        CHECK(run["status"] == "ok");
        CHECK(run["best_error"].get<double>() > 0.0);
        const fs::path rd = dir / run["name"].get<std::string>();
        CHECK(fs::exists(rd / "record.csv"));
        CHECK(fs::exists(rd / "summary.json"));
    }
    CHECK_FALSE(rep["runs"][1].contains("p"));

    CHECK(rep["aggregate"].size() == 2);
    REQUIRE(rep["speedup"].size() == 1);
    CHECK(rep["speedup"][0]["n"] == 80);
    CHECK(rep["speedup"][0]["p"] == 2);
    CHECK(rep["speedup"][0]["speedup"].get<double>() > 0.0);
    CHECK(first_line(dir / "aggregate.csv") ==
          "mode,n,p,runs,failures,mean_best_error,mean_best_epoch,"
          "mean_seconds_to_best");
    CHECK(fs::exists(dir / "report.json"));
}

TEST_CASE("empty sweep yields an empty report") {
    const auto dir = fresh_dir("empty");
    const json rep = json::parse(run_study(
        StudyId::LinearPoisson, R"({"n_values": []})", dir.string()));
    CHECK(rep["runs"].empty());
    CHECK(rep["aggregate"].empty());
    CHECK(rep["speedup"].empty());
    CHECK(fs::exists(dir / "report.json"));
}

TEST_CASE("run failures are recorded and the sweep continues") {
    const auto dir = fresh_dir("fail");
    const json cfg{{"n_values", {60, 70}}, {"p_values", {2}},
                   {"seeds", {0}},         {"modes", {"dt"}},
                   {"error_every", 0},  // rejected per run at train time
                   {"lbfgs.max_epochs", 1}};
    const json rep = json::parse(
        run_study(StudyId::LinearPoisson, cfg.dump(), dir.string()));

    REQUIRE(rep["runs"].size() == 2);
    for (const auto& run : rep["runs"]) {
        CHECK(run["status"] == "failed");
        CHECK_FALSE(run["error"].get<std::string>().empty());
    }
    for (const auto& row : rep["aggregate"]) {
        CHECK(row["failures"] == 1);
        CHECK_FALSE(row.contains("mean_best_error"));
    }
    CHECK(rep["speedup"].empty());
    CHECK(fs::exists(dir / "report.json"));
}

TEST_CASE("star sweep trains on the star domain") {
    const auto dir = fresh_dir("star");
    const json cfg{{"n_values", {150}},  {"p_values", {2}}, {"seeds", {0}},
                   {"modes", {"dt"}},    {"width", 8},      {"layers", 1},
                   {"lbfgs.max_epochs", 1}};
    const json rep =
        json::parse(run_study(StudyId::Star, cfg.dump(), dir.string()));
    CHECK(rep["config"]["pde"] == "linear-poisson");
    REQUIRE(rep["runs"].size() == 1);
    CHECK(rep["runs"][0]["name"] == "dt_n150_p2_seed0");
    CHECK(rep["runs"][0]["status"] == "ok");
}

TEST_CASE("fp32 sweep echoes its precision") {
    const auto dir = fresh_dir("fp32");
    const json cfg{{"n_values", {80}},  {"p_values", {2}}, {"seeds", {0}},
                   {"modes", {"dt"}},   {"width", 8},      {"layers", 1},
                   {"lbfgs.max_epochs", 1}};
    const json rep =
        json::parse(run_study(StudyId::Fp32Dt, cfg.dump(), dir.string()));
    CHECK(rep["config"]["precision"] == "fp32");
    REQUIRE(rep["runs"].size() == 1);
    CHECK(rep["runs"][0]["status"] == "ok");

    const json summary = json::parse(
        slurp(dir / "dt_n80_p2_seed0" / "summary.json"));
    CHECK(summary["config"]["precision"] == "fp32");
}

TEST_CASE("heat sweep accepts a time-step override") {
    const auto dir = fresh_dir("heat");
    const json cfg{{"n_values", {60}},  {"n_t", 3},       {"p_values", {2}},
                   {"seeds", {0}},      {"modes", {"dt"}}, {"width", 8},
                   {"layers", 1},       {"lbfgs.max_epochs", 1}};
    const json rep =
        json::parse(run_study(StudyId::Heat, cfg.dump(), dir.string()));
    CHECK(rep["config"]["pde"] == "heat");
    CHECK(rep["config"]["n_t"] == 3);
    REQUIRE(rep["runs"].size() == 1);
    CHECK(rep["runs"][0]["status"] == "ok");
}
