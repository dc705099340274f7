#include "dtpinn/rbf_fd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

namespace dtpinn {

int OperatorSpec::derivative_order() const {
    switch (kind) {
        case Kind::Laplacian: return 2;
        case Kind::NormalGradient: return 1;
        case Kind::Robin: return 1;
        case Kind::Biharmonic: return 4;
    }
    return 0;
}

StencilConfig StencilConfig::make(int p, int theta, int d) {
    if (p < 2) throw InvalidArgument("StencilConfig: order p must be >= 2");
    if (d != 2) throw InvalidArgument("StencilConfig: only d=2 supported");
    StencilConfig cfg;
    cfg.order = p;
    cfg.dim = d;
    cfg.poly_degree = p + theta - 1;
    int m = (cfg.poly_degree % 2 == 1) ? cfg.poly_degree : cfg.poly_degree - 1;
    const int m_min = theta <= 2 ? 3 : 5;
    if (m < m_min) m = m_min;
    cfg.phs_exponent = m;
    // C(l+2, 2) in d=2.
    cfg.n_poly = (cfg.poly_degree + 1) * (cfg.poly_degree + 2) / 2;
    cfg.stencil_size = 2 * cfg.n_poly + 1;
    return cfg;
}

double phs_apply(const OperatorSpec& op, int m, Vec2 center, Vec2 node) {
    const Vec2 diff = center - node;
    const double r = norm(diff);
    const int d = 2;
    const int theta = op.derivative_order();
    if (r == 0.0) {
        if (m - theta < 0)
            throw InvalidArgument("phs_apply: r=0 singular for m < theta");
        // lim r->0 of every term below is 0 whenever m > theta.
        return 0.0;
    }
    switch (op.kind) {
        case OperatorSpec::Kind::Laplacian:
            return m * (m + d - 2) * std::pow(r, m - 2);
        case OperatorSpec::Kind::NormalGradient:
            return m * std::pow(r, m - 2) * dot(diff, op.normal);
        case OperatorSpec::Kind::Robin:
            return op.alpha * m * std::pow(r, m - 2) * dot(diff, op.normal) +
                   op.beta * std::pow(r, m);
        case OperatorSpec::Kind::Biharmonic:
            return m * (m - 2) * (m + d - 2) * (m + d - 4) * std::pow(r, m - 4);
    }
    return 0.0;
}

namespace {

constexpr int kMaxDeriv = 4;

// legendre[k][q] = q-th derivative of P_k at x, q = 0..4, via the
// differentiated three-term recurrence.
void legendre_derivs(double x, int max_degree,
                     std::vector<std::array<double, kMaxDeriv + 1>>& out) {
    out.assign(max_degree + 1, {});
    out[0][0] = 1.0;
    if (max_degree == 0) return;
    out[1][0] = x;
    out[1][1] = 1.0;
    for (int k = 1; k < max_degree; ++k) {
        for (int q = 0; q <= kMaxDeriv; ++q) {
            const double lower = q > 0 ? q * out[k][q - 1] : 0.0;
            out[k + 1][q] = ((2 * k + 1) * (x * out[k][q] + lower) -
                             k * out[k - 1][q]) /
                            (k + 1);
        }
    }
}

// Basis exponent pairs (a, b) with a + b <= degree, ascending total degree.
std::vector<std::pair<int, int>> basis_pairs(int degree) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve((degree + 1) * (degree + 2) / 2);
    for (int t = 0; t <= degree; ++t)
        for (int a = 0; a <= t; ++a) pairs.emplace_back(a, t - a);
    return pairs;
}

}  // namespace

std::vector<double> poly_basis_eval(Vec2 p, int degree) {
    std::vector<std::array<double, kMaxDeriv + 1>> lx, ly;
    legendre_derivs(p.x, degree, lx);
    legendre_derivs(p.y, degree, ly);
    std::vector<double> out;
    for (const auto& [a, b] : basis_pairs(degree))
        out.push_back(lx[a][0] * ly[b][0]);
    return out;
}

std::vector<double> poly_basis_apply(const OperatorSpec& op, Vec2 center,
                                     int degree) {
    std::vector<std::array<double, kMaxDeriv + 1>> lx, ly;
    legendre_derivs(center.x, degree, lx);
    legendre_derivs(center.y, degree, ly);
    std::vector<double> out;
    out.reserve((degree + 1) * (degree + 2) / 2);
    for (const auto& [a, b] : basis_pairs(degree)) {
        double v = 0.0;
        switch (op.kind) {
            case OperatorSpec::Kind::Laplacian:
                v = lx[a][2] * ly[b][0] + lx[a][0] * ly[b][2];
                break;
            case OperatorSpec::Kind::NormalGradient:
                v = op.normal.x * lx[a][1] * ly[b][0] +
                    op.normal.y * lx[a][0] * ly[b][1];
                break;
            case OperatorSpec::Kind::Robin:
                v = op.alpha * (op.normal.x * lx[a][1] * ly[b][0] +
                                op.normal.y * lx[a][0] * ly[b][1]) +
                    op.beta * lx[a][0] * ly[b][0];
                break;
            case OperatorSpec::Kind::Biharmonic:
                v = lx[a][4] * ly[b][0] + 2.0 * lx[a][2] * ly[b][2] +
                    lx[a][0] * ly[b][4];
                break;
        }
        out.push_back(v);
    }
    return out;
}

namespace {

// Dense LU with partial pivoting and one iterative-refinement pass.
class DenseLu {
public:
    DenseLu(std::vector<double> a, std::size_t n, long center_index)
        : a_(std::move(a)), lu_(a_), n_(n), perm_(n) {
        double max_abs = 0.0;
        for (double v : lu_) max_abs = std::max(max_abs, std::abs(v));
        const double pivot_floor = 1e-12 * max_abs;

        for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t piv = k;
            double best = std::abs(lu_[k * n_ + k]);
            for (std::size_t i = k + 1; i < n_; ++i) {
                const double v = std::abs(lu_[i * n_ + k]);
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            if (best < pivot_floor || best == 0.0)
                throw SingularSystem(
                    "stencil system numerically rank-deficient at center " +
                        std::to_string(center_index),
                    center_index, condition_estimate());
            if (piv != k) {
                for (std::size_t j = 0; j < n_; ++j)
                    std::swap(lu_[k * n_ + j], lu_[piv * n_ + j]);
                std::swap(perm_[k], perm_[piv]);
            }
            const double inv = 1.0 / lu_[k * n_ + k];
            for (std::size_t i = k + 1; i < n_; ++i) {
                const double f = lu_[i * n_ + k] * inv;
                lu_[i * n_ + k] = f;
                for (std::size_t j = k + 1; j < n_; ++j)
                    lu_[i * n_ + j] -= f * lu_[k * n_ + j];
            }
        }
    }

    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x = substitute(b);
        // One refinement pass tightens polynomial reproduction.
        std::vector<double> r(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = b[i];
            for (std::size_t j = 0; j < n_; ++j) s -= a_[i * n_ + j] * x[j];
            r[i] = s;
        }
        const std::vector<double> dx = substitute(r);
        for (std::size_t i = 0; i < n_; ++i) x[i] += dx[i];
        return x;
    }

    double condition_estimate() const {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            const double v = std::abs(lu_[k * n_ + k]);
            if (v > 0.0) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        return lo > 0.0 && std::isfinite(lo) ? hi / lo : 0.0;
    }

private:
    std::vector<double> substitute(const std::vector<double>& b) const {
        std::vector<double> x(n_);
        for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= lu_[i * n_ + j] * x[j];
        for (std::size_t i = n_; i-- > 0;) {
            for (std::size_t j = i + 1; j < n_; ++j)
                x[i] -= lu_[i * n_ + j] * x[j];
            x[i] /= lu_[i * n_ + i];
        }
        return x;
    }

    std::vector<double> a_;
    std::vector<double> lu_;
    std::size_t n_;
    std::vector<std::size_t> perm_;
};

StencilWeights solve_stencil(const PointCloud& cloud, const KdTree& tree,
                             std::size_t center_index, const OperatorSpec& op,
                             const StencilConfig& cfg) {
    const std::size_t n = static_cast<std::size_t>(cfg.stencil_size);
    const std::size_t mp = static_cast<std::size_t>(cfg.n_poly);
    if (n > tree.size())
        throw InvalidArgument(
            "stencil_weights: stencil size exceeds available points");

    StencilWeights out;
    out.indices = knn(cloud, tree, center_index, n);

    const Vec2 center = cloud.point(center_index);
    std::vector<Vec2> local(n);
    double radius = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        local[i] = cloud.point(out.indices[i]) - center;
        radius = std::max(radius, norm(local[i]));
    }
    if (!(radius > 0.0))
        throw SingularSystem("stencil_weights: degenerate stencil at center " +
                                 std::to_string(center_index),
                             static_cast<long>(center_index), 0.0);
    const double inv_r = 1.0 / radius;
    for (Vec2& v : local) v = inv_r * v;

    const std::size_t dim = n + mp;
    std::vector<double> sys(dim * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double r = norm(local[i] - local[j]);
            sys[i * dim + j] = std::pow(r, cfg.phs_exponent);
        }
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> q = poly_basis_eval(local[i], cfg.poly_degree);
        for (std::size_t j = 0; j < mp; ++j) {
            sys[i * dim + (n + j)] = q[j];
            sys[(n + j) * dim + i] = q[j];
        }
    }

    std::vector<double> rhs(dim, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        rhs[j] = phs_apply(op, cfg.phs_exponent, local[0], local[j]);
    const std::vector<double> lq =
        poly_basis_apply(op, local[0], cfg.poly_degree);
    for (std::size_t j = 0; j < mp; ++j) rhs[n + j] = lq[j];

    const DenseLu lu(std::move(sys), dim, static_cast<long>(center_index));
    const std::vector<double> sol = lu.solve(rhs);

    const double unscale =
        std::pow(inv_r, static_cast<double>(op.derivative_order()));
    out.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.weights[i] = sol[i] * unscale;
    return out;
}

}  // namespace

StencilWeights stencil_weights(const PointCloud& cloud, const KdTree& tree,
                               std::size_t center_index, const OperatorSpec& op,
                               const StencilConfig& cfg) {
    if (op.kind != OperatorSpec::Kind::Robin)
        return solve_stencil(cloud, tree, center_index, op, cfg);
    // Robin rows: alpha * (n . grad) weights plus beta at the center. The
    // identity part is exact by construction.
    StencilWeights w = solve_stencil(
        cloud, tree, center_index, OperatorSpec::normal_gradient(op.normal), cfg);
    for (double& v : w.weights) v *= op.alpha;
    w.weights[0] += op.beta;
    return w;
}

Csr<double> assemble_matrix(const PointCloud& cloud, MatrixKind kind, int p,
                            double alpha, double beta) {
    if (cloud.n_ghost() != cloud.n_boundary())
        throw InvalidArgument("assemble_matrix: cloud lacks ghost points");

    const std::size_t ni = cloud.n_interior();
    const std::size_t nb = cloud.n_boundary();
    const std::size_t cols = ni + 2 * nb;
    const bool robin = kind == MatrixKind::Robin;
    const std::size_t rows = robin ? nb : ni + nb;

    const KdTree tree(cloud.extended_points());

    const OperatorSpec base = kind == MatrixKind::Laplacian
                                  ? OperatorSpec::laplacian()
                                  : kind == MatrixKind::Biharmonic
                                        ? OperatorSpec::biharmonic()
                                        : OperatorSpec::robin(alpha, beta, {});
    const StencilConfig cfg =
        StencilConfig::make(p, base.derivative_order(), cloud.dim);

    std::vector<StencilWeights> row_weights(rows);
    auto compute_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            const std::size_t center = robin ? ni + r : r;
            OperatorSpec op = base;
            if (robin) op.normal = cloud.normals[r];
            row_weights[r] = stencil_weights(cloud, tree, center, op, cfg);
        }
    };

    const unsigned hw = std::thread::hardware_concurrency();
    const std::size_t n_chunks =
        std::min<std::size_t>(hw > 0 ? hw : 1, std::max<std::size_t>(rows / 64, 1));
    if (n_chunks <= 1) {
        compute_range(0, rows);
    } else {
        std::vector<std::future<void>> futures;
        const std::size_t chunk = (rows + n_chunks - 1) / n_chunks;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t lo = c * chunk;
            const std::size_t hi = std::min(rows, lo + chunk);
            if (lo >= hi) break;
            futures.push_back(
                std::async(std::launch::async, compute_range, lo, hi));
        }
        for (auto& f : futures) f.get();
    }

    std::vector<Triplet> entries;
    entries.reserve(rows * static_cast<std::size_t>(cfg.stencil_size));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < row_weights[r].indices.size(); ++i)
            entries.emplace_back(r, row_weights[r].indices[i],
                                 row_weights[r].weights[i]);
    return from_triplets<double>(rows, cols, std::move(entries));
}

}  // namespace dtpinn
