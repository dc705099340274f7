#ifndef DTPINN_PINN_HPP
#define DTPINN_PINN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dtpinn/geometry.hpp"
#include "dtpinn/lbfgs.hpp"
#include "dtpinn/net.hpp"
#include "dtpinn/rbf_fd.hpp"
#include "dtpinn/sparse.hpp"

namespace dtpinn {

// u = 1 + sin(pi x1) cos(pi x2) and its exact derivatives.
struct PoissonSolution {
    double u = 0.0;
    Vec2 grad{};
    double lap = 0.0;
};
PoissonSolution manufactured_poisson(Vec2 x);

// u = 1 + sin(pi x1) cos(pi x2) sin(pi t) and its exact derivatives.
struct HeatSolution {
    double u = 0.0;
    double ut = 0.0;
    Vec2 grad{};
    double lap = 0.0;
};
HeatSolution manufactured_heat(Vec2 x, double t);

enum class PoissonMode { Linear, Nonlinear };

// -Delta u + (e^u) = -f convention is not used; residuals follow
// Delta u - e^u - f (nonlinear) and Delta u - f (linear), with Robin data
// g = (alpha n.grad + beta) u on the boundary.
struct PoissonProblem {
    PoissonMode mode = PoissonMode::Linear;
    double alpha = 1.0;
    double beta = 1.0;
    std::vector<double> f;  // at interior+boundary, global order
    std::vector<double> g;  // at boundary

    static PoissonProblem manufactured(const PointCloud& cloud,
                                       PoissonMode mode, double alpha = 1.0,
                                       double beta = 1.0);
};

// Heat equation du/dt = Delta u + f on t in [0,1], sliced at t = k/n_t,
// k = 0..n_t, with initial data u0 = 1 and Robin boundary data g.
struct HeatProblem {
    int n_t = 24;
    double alpha = 1.0;
    double beta = 1.0;
    std::vector<double> f;   // slice-major, (n_t+1) x (N_i+N_b)
    std::vector<double> g;   // slice-major, (n_t+1) x N_b
    std::vector<double> u0;  // at interior+boundary

    double dt() const { return 1.0 / n_t; }
    std::size_t n_slices() const { return static_cast<std::size_t>(n_t) + 1; }

    static HeatProblem manufactured(const PointCloud& cloud, int n_t = 24,
                                    double alpha = 1.0, double beta = 1.0);
};

// Differentiation matrices for DT losses, stored with their transposes in
// the training precision.
template <typename T>
struct DtOperators {
    Csr<T> L;   // Laplacian rows at interior+boundary
    Csr<T> B;   // Robin rows at boundary
    Csr<T> Lt;
    Csr<T> Bt;

    static DtOperators assemble(const PointCloud& cloud, int p, double alpha,
                                double beta);
};

// Loss evaluators. Each is a pure function of the parameter vector and is
// directly usable as an L-BFGS closure; the gradient is written (not
// accumulated) into grad.

template <typename T>
class DtPoissonLoss {
public:
    DtPoissonLoss(const MlpSpec& spec, const PointCloud& cloud,
                  const PoissonProblem& prob, DtOperators<T> ops);
    double operator()(const std::vector<T>& params, std::vector<T>& grad) const;

    const MlpSpec& net_spec() const { return spec_; }

private:
    MlpSpec spec_;
    PoissonMode mode_;
    DtOperators<T> ops_;
    std::vector<T> input_;  // extended points, batch-major
    std::vector<T> f_, g_;
    std::size_t n_collocation_, n_boundary_, n_extended_;
};

template <typename T>
class VanillaPoissonLoss {
public:
    VanillaPoissonLoss(const MlpSpec& spec, const PointCloud& cloud,
                       const PoissonProblem& prob);
    double operator()(const std::vector<T>& params, std::vector<T>& grad) const;

private:
    MlpSpec spec_;
    PoissonMode mode_;
    double alpha_, beta_;
    std::vector<T> input_;  // interior+boundary only
    std::vector<T> f_, g_, nx_, ny_;
    std::size_t n_interior_, n_boundary_;
};

template <typename T>
class DtHeatLoss {
public:
    DtHeatLoss(const MlpSpec& spec, const PointCloud& cloud,
               const HeatProblem& prob, DtOperators<T> ops);
    double operator()(const std::vector<T>& params, std::vector<T>& grad) const;

private:
    MlpSpec spec_;
    DtOperators<T> ops_;
    std::vector<T> input_;  // slices x extended points, (x, y, t)
    std::vector<T> f_, g_, u0_;
    std::size_t n_collocation_, n_boundary_, n_extended_, n_slices_;
};

template <typename T>
class VanillaHeatLoss {
public:
    VanillaHeatLoss(const MlpSpec& spec, const PointCloud& cloud,
                    const HeatProblem& prob);
    double operator()(const std::vector<T>& params, std::vector<T>& grad) const;

private:
    MlpSpec spec_;
    double alpha_, beta_;
    std::vector<T> input_;  // slices x (interior+boundary), (x, y, t)
    std::vector<T> f_, g_, u0_, nx_, ny_;
    std::size_t n_interior_, n_collocation_, n_boundary_, n_slices_;
};

enum class Pde { LinearPoisson, NonlinearPoisson, Heat };
enum class TrainMode { Dt, Vanilla };

const char* pde_name(Pde pde);
Pde parse_pde(const std::string& name);
const char* train_mode_name(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

struct TrainConfig {
    Pde pde = Pde::LinearPoisson;
    TrainMode mode = TrainMode::Dt;
    int p = 4;  // RBF-FD order; unused by vanilla mode
    Precision precision = Precision::Fp64;
    int target_n = 1663;
    std::uint64_t seed = 0;
    int n_t = 24;  // heat time steps
    DomainShape shape;
    MlpSpec net;  // in_dim is overridden per PDE
    LbfgsConfig opt;
    double alpha = 1.0;
    double beta = 1.0;
    // Poisson test cloud: linear refinement factor and seed offset relative
    // to the training cloud.
    double test_refine = 3.6;
    std::uint64_t test_seed_offset = 1000;
    int error_every = 1;     // epochs between test-error evaluations
    double stop_error = 0.0; // stop once test error <= this (0 disables)
    std::string checkpoint_in;
    std::string checkpoint_out;
};

struct EpochRow {
    long epoch = 0;
    double loss = 0.0;
    double rel_error = 0.0;
    double seconds = 0.0;  // cumulative optimizer time, excluding error evals
};

struct TrainRecord {
    std::vector<EpochRow> rows;
    double best_error = 0.0;
    long best_epoch = 0;
    long epochs_run = 0;
    std::size_t n_interior = 0;
    std::size_t n_boundary = 0;
    double assembly_seconds = 0.0;
    double total_seconds = 0.0;
    double final_loss = 0.0;
    std::string stop_reason;  // max_epochs | converged | line_search_failure |
                              // target_reached
};

// Deterministic training run; the cloud is generated from the config seed.
TrainRecord train(const TrainConfig& cfg);
// Same, with an externally supplied collocation cloud.
TrainRecord train(const TrainConfig& cfg, const PointCloud& cloud);

void write_record_csv(const TrainRecord& record, const std::string& path);
void write_summary_json(const TrainRecord& record, const TrainConfig& cfg,
                        const std::string& path);

}  // namespace dtpinn

#endif
