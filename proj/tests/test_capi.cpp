#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "dtpinn.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dtpinn_capi_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CloudGuard {
    dtpinn_cloud* ptr = nullptr;
    ~CloudGuard() { dtpinn_cloud_free(ptr); }
};

struct MatrixGuard {
    dtpinn_matrix* ptr = nullptr;
    ~MatrixGuard() { dtpinn_matrix_free(ptr); }
};

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::string(dtpinn_version()) == "0.1.0");
    CHECK(std::string(dtpinn_status_name(DTPINN_OK)) == "ok");
    CHECK(std::string(dtpinn_status_name(DTPINN_ERR_INVALID_ARGUMENT)) ==
          "invalid_argument");
    CHECK(std::string(dtpinn_status_name(DTPINN_ERR_IO)) == "io_error");
    CHECK(std::string(dtpinn_status_name(999)) == "unknown");
}

TEST_CASE("cloud lifecycle through the C surface") {
    CloudGuard cloud;
    REQUIRE(dtpinn_cloud_generate("disk", 0, 0.0, 200, 7, &cloud.ptr) ==
            DTPINN_OK);
    CHECK(std::string(dtpinn_last_error()).empty());

    long long ni = 0, nb = 0, ng = 0;
    REQUIRE(dtpinn_cloud_counts(cloud.ptr, &ni, &nb, &ng) == DTPINN_OK);
    CHECK(ni > 0);
    CHECK(nb > 0);
    CHECK(ng == nb);
    CHECK(ni + nb > 180);
    CHECK(ni + nb < 220);

    double spacing = 0.0;
    REQUIRE(dtpinn_cloud_spacing(cloud.ptr, &spacing) == DTPINN_OK);
    CHECK(spacing > 0.0);

    const long long total = ni + nb + ng;
    std::vector<double> xy(static_cast<std::size_t>(2 * total));
    REQUIRE(dtpinn_cloud_points(cloud.ptr, xy.data(), 2 * total) == DTPINN_OK);
    for (long long i = 0; i < ni + nb; ++i) {
        const double r = std::hypot(xy[2 * i], xy[2 * i + 1]);
        CHECK(r < 1.0 + 1e-12);
    }
    CHECK(dtpinn_cloud_points(cloud.ptr, xy.data(), total) ==
          DTPINN_ERR_INVALID_ARGUMENT);

    const auto dir = fresh_dir("cloud");
    const std::string path = (dir / "nodes.txt").string();
    REQUIRE(dtpinn_cloud_write(cloud.ptr, path.c_str()) == DTPINN_OK);

    CloudGuard reread;
    REQUIRE(dtpinn_cloud_read(path.c_str(), &reread.ptr) == DTPINN_OK);
    std::vector<double> xy2(xy.size());
    REQUIRE(dtpinn_cloud_points(reread.ptr, xy2.data(),
                                static_cast<long long>(xy2.size())) ==
            DTPINN_OK);
    CHECK(xy == xy2);

    CloudGuard star;
    CHECK(dtpinn_cloud_generate("star", 5, 0.25, 150, 3, &star.ptr) ==
          DTPINN_OK);
}

TEST_CASE("cloud error paths") {
    CHECK(dtpinn_cloud_generate("disk", 0, 0.0, 100, 0, nullptr) ==
          DTPINN_ERR_INVALID_ARGUMENT);
    CloudGuard cloud;
    CHECK(dtpinn_cloud_generate("triangle", 0, 0.0, 100, 0, &cloud.ptr) ==
          DTPINN_ERR_INVALID_ARGUMENT);
    CHECK(std::string(dtpinn_last_error()).find("triangle") !=
          std::string::npos);
    CHECK(dtpinn_cloud_read("/nonexistent/nodes.txt", &cloud.ptr) ==
          DTPINN_ERR_IO);
    CHECK(!std::string(dtpinn_last_error()).empty());
    CHECK(dtpinn_cloud_counts(nullptr, nullptr, nullptr, nullptr) ==
          DTPINN_ERR_INVALID_ARGUMENT);

    // success clears the sticky message
    REQUIRE(dtpinn_cloud_generate("disk", 0, 0.0, 120, 1, &cloud.ptr) ==
            DTPINN_OK);
    CHECK(std::string(dtpinn_last_error()).empty());
}

TEST_CASE("matrix assembly, spmv and file roundtrip") {
    CloudGuard cloud;
    REQUIRE(dtpinn_cloud_generate("disk", 0, 0.0, 200, 11, &cloud.ptr) ==
            DTPINN_OK);
    long long ni = 0, nb = 0, ng = 0;
    REQUIRE(dtpinn_cloud_counts(cloud.ptr, &ni, &nb, &ng) == DTPINN_OK);

    MatrixGuard lap;
    REQUIRE(dtpinn_matrix_assemble(cloud.ptr, "laplacian", 3, 1.0, 1.0,
                                   &lap.ptr) == DTPINN_OK);
    long long rows = 0, cols = 0, nnz = 0;
    REQUIRE(dtpinn_matrix_shape(lap.ptr, &rows, &cols, &nnz) == DTPINN_OK);
    CHECK(rows == ni + nb);
    CHECK(cols == ni + 2 * nb);
    CHECK(nnz == rows * 31);  // p=3 Laplacian stencil size

    std::vector<double> xy(static_cast<std::size_t>(2 * (ni + nb + ng)));
    REQUIRE(dtpinn_cloud_points(cloud.ptr, xy.data(),
                                static_cast<long long>(xy.size())) ==
            DTPINN_OK);
    std::vector<double> u(static_cast<std::size_t>(cols));
    for (long long i = 0; i < cols; ++i)
        u[i] = xy[2 * i] * xy[2 * i] + xy[2 * i + 1] * xy[2 * i + 1];
    std::vector<double> lu(static_cast<std::size_t>(rows));
    REQUIRE(dtpinn_matrix_spmv(lap.ptr, u.data(), cols, lu.data(), rows) ==
            DTPINN_OK);
    for (double v : lu) CHECK(v == doctest::Approx(4.0).epsilon(1e-6));

    CHECK(dtpinn_matrix_spmv(lap.ptr, u.data(), cols - 1, lu.data(), rows) ==
          DTPINN_ERR_INVALID_ARGUMENT);

    const auto dir = fresh_dir("matrix");
    const std::string path = (dir / "lap.txt").string();
    REQUIRE(dtpinn_matrix_write(lap.ptr, path.c_str()) == DTPINN_OK);
    MatrixGuard reread;
    REQUIRE(dtpinn_matrix_read(path.c_str(), &reread.ptr) == DTPINN_OK);
    long long r2 = 0, c2 = 0, z2 = 0;
    REQUIRE(dtpinn_matrix_shape(reread.ptr, &r2, &c2, &z2) == DTPINN_OK);
    CHECK(r2 == rows);
    CHECK(c2 == cols);
    CHECK(z2 == nnz);

    MatrixGuard robin;
    REQUIRE(dtpinn_matrix_assemble(cloud.ptr, "robin", 2, 2.0, 0.5,
                                   &robin.ptr) == DTPINN_OK);
    REQUIRE(dtpinn_matrix_shape(robin.ptr, &rows, &cols, &nnz) == DTPINN_OK);
    CHECK(rows == nb);

    MatrixGuard bad;
    CHECK(dtpinn_matrix_assemble(cloud.ptr, "gradient", 3, 1.0, 1.0,
                                 &bad.ptr) == DTPINN_ERR_INVALID_ARGUMENT);
    CHECK(dtpinn_matrix_assemble(cloud.ptr, "laplacian", 7, 1.0, 1.0,
                                 &bad.ptr) == DTPINN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("train run writes artifacts and honors node files") {
    const auto dir = fresh_dir("train");
    const std::string nodes = (dir / "nodes.txt").string();
    const std::string config =
        std::string(R"({"pde": "linear-poisson", "mode": "dt", "p": 2,)") +
        R"( "n": 80, "seed": 0, "width": 8, "layers": 1,)" +
        R"( "lbfgs.max_epochs": 2, "nodes_out": ")" + nodes + R"("})";

    dtpinn_train_summary summary{};
    REQUIRE(dtpinn_train_run(config.c_str(), (dir / "out").string().c_str(),
                             &summary) == DTPINN_OK);
    CHECK(summary.epochs_run == 2);
    CHECK(summary.best_error > 0.0);
    CHECK(summary.total_seconds >= summary.assembly_seconds);
    CHECK(std::string(summary.stop_reason) == "max_epochs");
    CHECK(fs::exists(dir / "out" / "record.csv"));
    CHECK(fs::exists(dir / "out" / "summary.json"));
    CHECK(fs::exists(nodes));

    // re-running from the saved cloud reproduces the result exactly
    const std::string config2 =
        std::string(R"({"pde": "linear-poisson", "mode": "dt", "p": 2,)") +
        R"( "n": 80, "seed": 0, "width": 8, "layers": 1,)" +
        R"( "lbfgs.max_epochs": 2, "nodes_in": ")" + nodes + R"("})";
    dtpinn_train_summary summary2{};
    REQUIRE(dtpinn_train_run(config2.c_str(), nullptr, &summary2) ==
            DTPINN_OK);
    CHECK(summary2.best_error == summary.best_error);
    CHECK(summary2.final_loss == summary.final_loss);
}

TEST_CASE("train run rejects malformed configs") {
    dtpinn_train_summary summary{};
    CHECK(dtpinn_train_run(nullptr, nullptr, &summary) ==
          DTPINN_ERR_INVALID_ARGUMENT);
    CHECK(dtpinn_train_run("[1, 2]", nullptr, &summary) ==
          DTPINN_ERR_INVALID_ARGUMENT);
    CHECK(dtpinn_train_run(R"({"optimizer": "adam"})", nullptr, &summary) ==
          DTPINN_ERR_INVALID_ARGUMENT);
    CHECK(dtpinn_train_run(R"({"pde": "wave"})", nullptr, &summary) ==
          DTPINN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("study run through the C surface") {
    const auto dir = fresh_dir("study");
    REQUIRE(dtpinn_study_run("linear-poisson", R"({"n_values": []})",
                             dir.string().c_str()) == DTPINN_OK);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(dtpinn_study_run("unknown", "{}", dir.string().c_str()) ==
          DTPINN_ERR_INVALID_ARGUMENT);
    CHECK(dtpinn_study_run(nullptr, "{}", dir.string().c_str()) ==
          DTPINN_ERR_INVALID_ARGUMENT);
}
