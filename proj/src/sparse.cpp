#include "dtpinn/sparse.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace dtpinn {

template <typename T>
Csr<T> from_triplets(std::size_t n_rows, std::size_t n_cols,
                     std::vector<Triplet> entries) {
    for (const auto& [r, c, v] : entries) {
        (void)v;
        if (r >= n_rows || c >= n_cols)
            throw InvalidArgument("from_triplets: index out of range");
    }
    std::sort(entries.begin(), entries.end(),
              [](const Triplet& a, const Triplet& b) {
                  if (std::get<0>(a) != std::get<0>(b))
                      return std::get<0>(a) < std::get<0>(b);
                  return std::get<1>(a) < std::get<1>(b);
              });

    Csr<T> m;
    m.n_rows = n_rows;
    m.n_cols = n_cols;
    m.row_ptr.assign(n_rows + 1, 0);
    m.col_idx.reserve(entries.size());
    m.values.reserve(entries.size());

    std::size_t i = 0;
    while (i < entries.size()) {
        const std::size_t r = std::get<0>(entries[i]);
        const std::size_t c = std::get<1>(entries[i]);
        double sum = 0.0;
        while (i < entries.size() && std::get<0>(entries[i]) == r &&
               std::get<1>(entries[i]) == c) {
            sum += std::get<2>(entries[i]);
            ++i;
        }
        m.col_idx.push_back(c);
        m.values.push_back(static_cast<T>(sum));
        ++m.row_ptr[r + 1];
    }
    for (std::size_t r = 0; r < n_rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

template <typename T>
void spmv(const Csr<T>& m, const T* x, T* y) {
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        T sum = 0;
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
            sum += m.values[k] * x[m.col_idx[k]];
        y[r] = sum;
    }
}

template <typename T>
std::vector<T> spmv(const Csr<T>& m, const std::vector<T>& v) {
    if (v.size() != m.n_cols)
        throw InvalidArgument("spmv: dimension mismatch");
    std::vector<T> out(m.n_rows);
    spmv(m, v.data(), out.data());
    return out;
}

template <typename T>
Csr<T> transpose(const Csr<T>& m) {
    Csr<T> t;
    t.n_rows = m.n_cols;
    t.n_cols = m.n_rows;
    t.row_ptr.assign(m.n_cols + 1, 0);
    t.col_idx.resize(m.nnz());
    t.values.resize(m.nnz());

    for (std::size_t k = 0; k < m.nnz(); ++k) ++t.row_ptr[m.col_idx[k] + 1];
    for (std::size_t c = 0; c < m.n_cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];

    // Walking rows in order fills each transposed row with ascending columns.
    std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            const std::size_t pos = cursor[m.col_idx[k]]++;
            t.col_idx[pos] = r;
            t.values[pos] = m.values[k];
        }
    }
    return t;
}

template <typename T>
std::vector<std::vector<T>> to_dense(const Csr<T>& m) {
    std::vector<std::vector<T>> d(m.n_rows, std::vector<T>(m.n_cols, T(0)));
    for (std::size_t r = 0; r < m.n_rows; ++r)
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
            d[r][m.col_idx[k]] = m.values[k];
    return d;
}

template <typename To, typename From>
Csr<To> convert(const Csr<From>& m) {
    Csr<To> out;
    out.n_rows = m.n_rows;
    out.n_cols = m.n_cols;
    out.row_ptr = m.row_ptr;
    out.col_idx = m.col_idx;
    out.values.assign(m.values.begin(), m.values.end());
    return out;
}

void write_matrix(const Csr<double>& m, std::ostream& os) {
    os << m.n_rows << ' ' << m.n_cols << ' ' << m.nnz() << '\n';
    char buf[40];
    for (std::size_t r = 0; r < m.n_rows; ++r)
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", m.values[k]);
            os << r << ' ' << m.col_idx[k] << ' ' << buf << '\n';
        }
}

void write_matrix(const Csr<double>& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_matrix: cannot open " + path);
    write_matrix(m, os);
    if (!os) throw IoError("write_matrix: write failed for " + path);
}

Csr<double> read_matrix(std::istream& is) {
    std::size_t rows, cols, nnz;
    if (!(is >> rows >> cols >> nnz))
        throw IoError("read_matrix: malformed header");
    std::vector<Triplet> entries;
    entries.reserve(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        std::size_t r, c;
        double v;
        if (!(is >> r >> c >> v)) throw IoError("read_matrix: truncated entries");
        entries.emplace_back(r, c, v);
    }
    return from_triplets<double>(rows, cols, std::move(entries));
}

Csr<double> read_matrix(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("read_matrix: cannot open " + path);
    return read_matrix(is);
}

template Csr<double> from_triplets<double>(std::size_t, std::size_t,
                                           std::vector<Triplet>);
template Csr<float> from_triplets<float>(std::size_t, std::size_t,
                                         std::vector<Triplet>);
template std::vector<double> spmv(const Csr<double>&, const std::vector<double>&);
template std::vector<float> spmv(const Csr<float>&, const std::vector<float>&);
template void spmv(const Csr<double>&, const double*, double*);
template void spmv(const Csr<float>&, const float*, float*);
template Csr<double> transpose(const Csr<double>&);
template Csr<float> transpose(const Csr<float>&);
template std::vector<std::vector<double>> to_dense(const Csr<double>&);
template std::vector<std::vector<float>> to_dense(const Csr<float>&);
template Csr<float> convert<float, double>(const Csr<double>&);
template Csr<double> convert<double, double>(const Csr<double>&);

}  // namespace dtpinn
