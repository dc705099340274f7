#ifndef DTPINN_RBF_FD_HPP
#define DTPINN_RBF_FD_HPP

#include <cstddef>
#include <vector>

#include "dtpinn/geometry.hpp"
#include "dtpinn/sparse.hpp"

namespace dtpinn {

// Differential operator a stencil row approximates. Robin rows are composed
// as alpha * (normal-gradient weights) + beta * (center indicator).
struct OperatorSpec {
    enum class Kind { Laplacian, NormalGradient, Robin, Biharmonic };

    Kind kind = Kind::Laplacian;
    double alpha = 1.0;
    double beta = 1.0;
    Vec2 normal{};  // unit outward normal, used by NormalGradient and Robin

    static OperatorSpec laplacian() { return {}; }
    static OperatorSpec normal_gradient(Vec2 n) {
        return {Kind::NormalGradient, 1.0, 0.0, n};
    }
    static OperatorSpec robin(double alpha, double beta, Vec2 n) {
        return {Kind::Robin, alpha, beta, n};
    }
    static OperatorSpec biharmonic() { return {Kind::Biharmonic, 1.0, 1.0, {}}; }

    // Number of derivatives (theta): 2 for Laplacian, 1 for NormalGradient
    // and Robin, 4 for Biharmonic.
    int derivative_order() const;
};

// PHS + polynomial stencil parameters for order-p convergence:
// l = p + theta - 1, M = C(l+d, d), n = 2M + 1, m = l (odd) or l-1, raised
// to keep r^(m-theta) nonsingular (m >= 3 for theta <= 2, m >= 5 for
// theta = 4).
struct StencilConfig {
    int order = 3;         // p
    int dim = 2;           // d
    int poly_degree = 0;   // l
    int phs_exponent = 0;  // m
    int n_poly = 0;        // M
    int stencil_size = 0;  // n

    static StencilConfig make(int p, int theta, int d = 2);
};

// L phi(||x - node||) evaluated at x = center, phi(r) = r^m.
double phs_apply(const OperatorSpec& op, int phs_exponent, Vec2 center,
                 Vec2 node);

// Tensor-product Legendre basis for total degree <= degree, enumerated by
// ascending total degree. Values at p, and the operator applied at p.
std::vector<double> poly_basis_eval(Vec2 p, int degree);
std::vector<double> poly_basis_apply(const OperatorSpec& op, Vec2 center,
                                     int degree);

struct StencilWeights {
    std::vector<std::size_t> indices;  // global indices, center first
    std::vector<double> weights;
};

// Solves the (n+M) x (n+M) saddle-point system on the center's n-point
// neighborhood in stencil-local scaled coordinates and returns the
// de-scaled weights. The kd-tree must span the cloud's extended point set.
StencilWeights stencil_weights(const PointCloud& cloud, const KdTree& tree,
                               std::size_t center_index, const OperatorSpec& op,
                               const StencilConfig& cfg);

enum class MatrixKind { Laplacian, Robin, Biharmonic };

// Differentiation matrix over the extended column space (N_i + 2 N_b cols).
// Laplacian/Biharmonic rows cover interior+boundary points; Robin rows cover
// boundary points only. Rows are independent and may be computed in
// parallel; the result is identical to serial assembly.
Csr<double> assemble_matrix(const PointCloud& cloud, MatrixKind kind, int p,
                            double alpha = 1.0, double beta = 1.0);

}  // namespace dtpinn

#endif
