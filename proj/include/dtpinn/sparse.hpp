#ifndef DTPINN_SPARSE_HPP
#define DTPINN_SPARSE_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <tuple>
#include <vector>

#include "dtpinn/common.hpp"

namespace dtpinn {

// Compressed sparse row matrix. Column indices are strictly increasing within
// each row; spmv accumulates in that order, so results are reproducible.
template <typename T>
struct Csr {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::size_t> row_ptr;  // length n_rows + 1
    std::vector<std::size_t> col_idx;
    std::vector<T> values;

    std::size_t nnz() const { return values.size(); }
};

using Triplet = std::tuple<std::size_t, std::size_t, double>;

// Builds canonical CSR; duplicate (row, col) entries are summed.
template <typename T>
Csr<T> from_triplets(std::size_t n_rows, std::size_t n_cols,
                     std::vector<Triplet> entries);

template <typename T>
std::vector<T> spmv(const Csr<T>& m, const std::vector<T>& v);

// In-place variant over raw storage; x must hold n_cols values and y
// n_rows values.
template <typename T>
void spmv(const Csr<T>& m, const T* x, T* y);

template <typename T>
Csr<T> transpose(const Csr<T>& m);

template <typename T>
std::vector<std::vector<T>> to_dense(const Csr<T>& m);

// Converts stored values to another scalar type (fp64 assembly -> fp32
// training).
template <typename To, typename From>
Csr<To> convert(const Csr<From>& m);

// Text dump: header "rows cols nnz", then one "row col value" line per entry
// (0-based indices, 17 significant digits).
void write_matrix(const Csr<double>& m, std::ostream& os);
void write_matrix(const Csr<double>& m, const std::string& path);
Csr<double> read_matrix(std::istream& is);
Csr<double> read_matrix(const std::string& path);

}  // namespace dtpinn

#endif
