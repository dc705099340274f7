#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include "dtpinn/common.hpp"
#include "dtpinn/sparse.hpp"

using namespace dtpinn;

namespace {

// Dense accumulation oracle for triplet assembly.
std::vector<double> dense_from_triplets(std::size_t rows, std::size_t cols,
                                        const std::vector<Triplet>& ts) {
    std::vector<double> d(rows * cols, 0.0);
    for (const auto& [r, c, v] : ts) d[r * cols + c] += v;
    return d;
}

std::vector<Triplet> random_triplets(Rng& rng, std::size_t rows,
                                     std::size_t cols, std::size_t n) {
    std::vector<Triplet> ts;
    for (std::size_t i = 0; i < n; ++i)
        ts.emplace_back(rng.index(rows), rng.index(cols),
                        rng.uniform(-1.0, 1.0));
    return ts;
}

}  // namespace

TEST_CASE("from_triplets matches dense accumulation") {
    Rng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t rows = 7 + trial, cols = 5 + 2 * trial;
        auto ts = random_triplets(rng, rows, cols, 60);
        // Force duplicates.
        ts.push_back(ts.front());
        ts.push_back(ts.front());
        auto m = from_triplets<double>(rows, cols, ts);
        auto dense = to_dense(m);
        auto want = dense_from_triplets(rows, cols, ts);
        REQUIRE(dense.size() == rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                CHECK(dense[r][c] ==
                      doctest::Approx(want[r * cols + c]).epsilon(1e-14));
        // Canonical form: sorted strictly increasing columns per row.
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t k = m.row_ptr[r] + 1; k < m.row_ptr[r + 1]; ++k)
                CHECK(m.col_idx[k - 1] < m.col_idx[k]);
    }
}

TEST_CASE("from_triplets rejects out-of-range entries") {
    std::vector<Triplet> ts{{3, 0, 1.0}};
    CHECK_THROWS_AS(from_triplets<double>(3, 3, ts), InvalidArgument);
    std::vector<Triplet> ts2{{0, 3, 1.0}};
    CHECK_THROWS_AS(from_triplets<double>(3, 3, ts2), InvalidArgument);
}

TEST_CASE("spmv matches dense product") {
    Rng rng(33);
    const std::size_t rows = 11, cols = 9;
    auto ts = random_triplets(rng, rows, cols, 40);
    auto m = from_triplets<double>(rows, cols, ts);
    std::vector<double> x(cols);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    auto y = spmv(m, x);
    auto dense = to_dense(m);
    REQUIRE(y.size() == rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += dense[r][c] * x[c];
        CHECK(y[r] == doctest::Approx(acc).epsilon(1e-13));
    }
    std::vector<double> wrong(cols + 1, 0.0);
    CHECK_THROWS_AS(spmv(m, wrong), InvalidArgument);
}

TEST_CASE("spmv is bit-for-bit deterministic") {
    Rng rng(44);
    auto ts = random_triplets(rng, 50, 50, 600);
    auto m = from_triplets<double>(50, 50, ts);
    std::vector<double> x(50);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    auto y1 = spmv(m, x);
    auto y2 = spmv(m, x);
    CHECK(y1 == y2);
}

TEST_CASE("transpose twice is the identity") {
    Rng rng(55);
    auto ts = random_triplets(rng, 8, 13, 35);
    auto m = from_triplets<double>(8, 13, ts);
    auto t = transpose(m);
    CHECK(t.n_rows == m.n_cols);
    CHECK(t.n_cols == m.n_rows);
    auto tt = transpose(t);
    CHECK(tt.row_ptr == m.row_ptr);
    CHECK(tt.col_idx == m.col_idx);
    CHECK(tt.values == m.values);
    // (A^T)^T x == A x and y^T (A x) == (A^T y)^T x.
    std::vector<double> x(13), y(8);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : y) v = rng.uniform(-1.0, 1.0);
    auto ax = spmv(m, x);
    auto aty = spmv(t, y);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < 8; ++i) lhs += y[i] * ax[i];
    for (std::size_t i = 0; i < 13; ++i) rhs += aty[i] * x[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("float conversion narrows values") {
    std::vector<Triplet> ts{{0, 0, 0.1}, {1, 1, 2.5}};
    auto m64 = from_triplets<double>(2, 2, ts);
    auto m32 = convert<float>(m64);
    CHECK(m32.values[0] == static_cast<float>(0.1));
    CHECK(m32.values[1] == 2.5f);
    CHECK(m32.row_ptr == m64.row_ptr);
}

TEST_CASE("matrix file roundtrip preserves every digit") {
    Rng rng(66);
    auto ts = random_triplets(rng, 12, 12, 70);
    auto m = from_triplets<double>(12, 12, ts);
    std::ostringstream os;
    write_matrix(m, os);
    std::istringstream is(os.str());
    auto back = read_matrix(is);
    CHECK(back.n_rows == m.n_rows);
    CHECK(back.n_cols == m.n_cols);
    CHECK(back.row_ptr == m.row_ptr);
    CHECK(back.col_idx == m.col_idx);
    CHECK(back.values == m.values);
}

TEST_CASE("matrix header sanity") {
    Rng rng(67);
    auto ts = random_triplets(rng, 4, 6, 10);
    auto m = from_triplets<double>(4, 6, ts);
    std::ostringstream os;
    write_matrix(m, os);
    std::istringstream is(os.str());
    std::size_t rows = 0, cols = 0, nnz = 0;
    is >> rows >> cols >> nnz;
    CHECK(rows == 4);
    CHECK(cols == 6);
    CHECK(nnz == m.nnz());
}

TEST_CASE("matrix reader rejects malformed input") {
    std::istringstream bad("2 2\n");
    CHECK_THROWS_AS(read_matrix(bad), IoError);
    std::istringstream short_body("2 2 3\n0 0 1.0\n");
    CHECK_THROWS_AS(read_matrix(short_body), IoError);
}

TEST_CASE("empty rows are representable") {
    std::vector<Triplet> ts{{2, 1, 3.0}};
    auto m = from_triplets<double>(4, 3, ts);
    CHECK(m.nnz() == 1);
    std::vector<double> x{1.0, 2.0, 3.0};
    auto y = spmv(m, x);
    CHECK(y == std::vector<double>{0.0, 0.0, 6.0, 0.0});
}
