#include "dtpinn/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <utility>

#include <json.hpp>

namespace dtpinn {

namespace {

constexpr double kPi = std::numbers::pi;

template <typename T>
std::vector<T> flatten_points(const std::vector<Vec2>& pts) {
    std::vector<T> out(2 * pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        out[2 * i] = static_cast<T>(pts[i].x);
        out[2 * i + 1] = static_cast<T>(pts[i].y);
    }
    return out;
}

template <typename T>
std::vector<T> narrow(const std::vector<double>& v) {
    return std::vector<T>(v.begin(), v.end());
}

}  // namespace

PoissonSolution manufactured_poisson(Vec2 x) {
    const double sx = std::sin(kPi * x.x), cx = std::cos(kPi * x.x);
    const double sy = std::sin(kPi * x.y), cy = std::cos(kPi * x.y);
    PoissonSolution s;
    s.u = 1.0 + sx * cy;
    s.grad = {kPi * cx * cy, -kPi * sx * sy};
    s.lap = -2.0 * kPi * kPi * sx * cy;
    return s;
}

HeatSolution manufactured_heat(Vec2 x, double t) {
    const double sx = std::sin(kPi * x.x), cx = std::cos(kPi * x.x);
    const double sy = std::sin(kPi * x.y);
    const double cy = std::cos(kPi * x.y);
    const double st = std::sin(kPi * t), ct = std::cos(kPi * t);
    HeatSolution s;
    s.u = 1.0 + sx * cy * st;
    s.ut = kPi * sx * cy * ct;
    s.grad = {kPi * cx * cy * st, -kPi * sx * sy * st};
    s.lap = -2.0 * kPi * kPi * sx * cy * st;
    return s;
}

PoissonProblem PoissonProblem::manufactured(const PointCloud& cloud,
                                            PoissonMode mode, double alpha,
                                            double beta) {
    PoissonProblem prob;
    prob.mode = mode;
    prob.alpha = alpha;
    prob.beta = beta;
    const std::size_t n = cloud.n_collocation();
    prob.f.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = manufactured_poisson(cloud.point(i));
        prob.f[i] = mode == PoissonMode::Linear ? s.lap : s.lap - std::exp(s.u);
    }
    prob.g.resize(cloud.n_boundary());
    for (std::size_t j = 0; j < cloud.n_boundary(); ++j) {
        const auto s = manufactured_poisson(cloud.boundary[j]);
        prob.g[j] = alpha * dot(cloud.normals[j], s.grad) + beta * s.u;
    }
    return prob;
}

HeatProblem HeatProblem::manufactured(const PointCloud& cloud, int n_t,
                                      double alpha, double beta) {
    if (n_t < 1) throw InvalidArgument("heat problem: n_t must be >= 1");
    HeatProblem prob;
    prob.n_t = n_t;
    prob.alpha = alpha;
    prob.beta = beta;
    const std::size_t n = cloud.n_collocation();
    const std::size_t nb = cloud.n_boundary();
    const std::size_t slices = prob.n_slices();
    prob.f.resize(slices * n);
    prob.g.resize(slices * nb);
    prob.u0.assign(n, 1.0);
    for (std::size_t k = 0; k < slices; ++k) {
        const double t = static_cast<double>(k) * prob.dt();
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = manufactured_heat(cloud.point(i), t);
            prob.f[k * n + i] = s.ut - s.lap;
        }
        for (std::size_t j = 0; j < nb; ++j) {
            const auto s = manufactured_heat(cloud.boundary[j], t);
            prob.g[k * nb + j] =
                alpha * dot(cloud.normals[j], s.grad) + beta * s.u;
        }
    }
    return prob;
}

template <typename T>
DtOperators<T> DtOperators<T>::assemble(const PointCloud& cloud, int p,
                                        double alpha, double beta) {
    const Csr<double> L =
        assemble_matrix(cloud, MatrixKind::Laplacian, p);
    const Csr<double> B =
        assemble_matrix(cloud, MatrixKind::Robin, p, alpha, beta);
    DtOperators<T> ops;
    ops.L = convert<T>(L);
    ops.B = convert<T>(B);
    ops.Lt = convert<T>(transpose(L));
    ops.Bt = convert<T>(transpose(B));
    return ops;
}

// ---------------------------------------------------------------------------
// DT Poisson

template <typename T>
DtPoissonLoss<T>::DtPoissonLoss(const MlpSpec& spec, const PointCloud& cloud,
                                const PoissonProblem& prob, DtOperators<T> ops)
    : spec_(spec),
      mode_(prob.mode),
      ops_(std::move(ops)),
      input_(flatten_points<T>(cloud.extended_points())),
      f_(narrow<T>(prob.f)),
      g_(narrow<T>(prob.g)),
      n_collocation_(cloud.n_collocation()),
      n_boundary_(cloud.n_boundary()),
      n_extended_(cloud.n_extended()) {
    if (spec_.in_dim != 2)
        throw InvalidArgument("poisson loss: network must take 2 inputs");
    if (f_.size() != n_collocation_ || g_.size() != n_boundary_)
        throw InvalidArgument("poisson loss: data length mismatch");
    if (ops_.L.n_rows != n_collocation_ || ops_.L.n_cols != n_extended_ ||
        ops_.B.n_rows != n_boundary_ || ops_.B.n_cols != n_extended_)
        throw InvalidArgument("poisson loss: operator shape mismatch");
}

template <typename T>
double DtPoissonLoss<T>::operator()(const std::vector<T>& params,
                                    std::vector<T>& grad) const {
    const Mlp<T> net(spec_, params);
    ForwardCache<T> cache;
    const std::vector<T> u = net.forward(input_, n_extended_, &cache);

    const std::size_t n = n_collocation_, nb = n_boundary_;
    std::vector<T> r_pde(n);
    spmv(ops_.L, u.data(), r_pde.data());
    if (mode_ == PoissonMode::Nonlinear) {
        for (std::size_t i = 0; i < n; ++i)
            r_pde[i] -= std::exp(u[i]) + f_[i];
    } else {
        for (std::size_t i = 0; i < n; ++i) r_pde[i] -= f_[i];
    }
    std::vector<T> r_bc(nb);
    spmv(ops_.B, u.data(), r_bc.data());
    for (std::size_t j = 0; j < nb; ++j) r_bc[j] -= g_[j];

    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        loss += static_cast<double>(r_pde[i]) * r_pde[i];
    loss /= static_cast<double>(n);
    double bc = 0.0;
    for (std::size_t j = 0; j < nb; ++j)
        bc += static_cast<double>(r_bc[j]) * r_bc[j];
    loss += bc / static_cast<double>(nb);

    // Adjoint cotangent on u: (2/N) L^T r - (2/N) e^u (.) r + (2/N_b) B^T r_b.
    const T c_pde = static_cast<T>(2.0 / static_cast<double>(n));
    const T c_bc = static_cast<T>(2.0 / static_cast<double>(nb));
    std::vector<T> cot(n_extended_, T(0));
    std::vector<T> tmp(n_extended_);
    spmv(ops_.Lt, r_pde.data(), tmp.data());
    for (std::size_t i = 0; i < n_extended_; ++i) cot[i] += c_pde * tmp[i];
    if (mode_ == PoissonMode::Nonlinear)
        for (std::size_t i = 0; i < n; ++i)
            cot[i] -= c_pde * std::exp(u[i]) * r_pde[i];
    spmv(ops_.Bt, r_bc.data(), tmp.data());
    for (std::size_t i = 0; i < n_extended_; ++i) cot[i] += c_bc * tmp[i];

    grad.assign(params.size(), T(0));
    net.backward_weights(cache, cot, grad);
    return loss;
}

// ---------------------------------------------------------------------------
// Vanilla Poisson

template <typename T>
VanillaPoissonLoss<T>::VanillaPoissonLoss(const MlpSpec& spec,
                                          const PointCloud& cloud,
                                          const PoissonProblem& prob)
    : spec_(spec),
      mode_(prob.mode),
      alpha_(prob.alpha),
      beta_(prob.beta),
      f_(narrow<T>(prob.f)),
      g_(narrow<T>(prob.g)),
      n_interior_(cloud.n_interior()),
      n_boundary_(cloud.n_boundary()) {
    if (spec_.in_dim != 2)
        throw InvalidArgument("poisson loss: network must take 2 inputs");
    std::vector<Vec2> pts = cloud.interior;
    pts.insert(pts.end(), cloud.boundary.begin(), cloud.boundary.end());
    input_ = flatten_points<T>(pts);
    nx_.resize(n_boundary_);
    ny_.resize(n_boundary_);
    for (std::size_t j = 0; j < n_boundary_; ++j) {
        nx_[j] = static_cast<T>(cloud.normals[j].x);
        ny_[j] = static_cast<T>(cloud.normals[j].y);
    }
}

template <typename T>
double VanillaPoissonLoss<T>::operator()(const std::vector<T>& params,
                                         std::vector<T>& grad) const {
    const Mlp<T> net(spec_, params);
    const std::size_t ni = n_interior_, nb = n_boundary_;
    const std::size_t batch = ni + nb;

    JetCache<T> cx, cy;
    const auto jx = net.jet_forward(input_, batch, {T(1), T(0)}, 2, &cx);
    const auto jy = net.jet_forward(input_, batch, {T(0), T(1)}, 2, &cy);

    std::vector<T> r_pde(ni);
    for (std::size_t i = 0; i < ni; ++i) {
        T r = jx.second[i] + jy.second[i] - f_[i];
        if (mode_ == PoissonMode::Nonlinear) r -= std::exp(jx.value[i]);
        r_pde[i] = r;
    }
    std::vector<T> r_bc(nb);
    const T a = static_cast<T>(alpha_), b = static_cast<T>(beta_);
    for (std::size_t j = 0; j < nb; ++j) {
        const std::size_t row = ni + j;
        r_bc[j] = a * (nx_[j] * jx.first[row] + ny_[j] * jy.first[row]) +
                  b * jx.value[row] - g_[j];
    }

    double loss = 0.0;
    for (std::size_t i = 0; i < ni; ++i)
        loss += static_cast<double>(r_pde[i]) * r_pde[i];
    loss /= static_cast<double>(ni);
    double bc = 0.0;
    for (std::size_t j = 0; j < nb; ++j)
        bc += static_cast<double>(r_bc[j]) * r_bc[j];
    loss += bc / static_cast<double>(nb);

    const T c_pde = static_cast<T>(2.0 / static_cast<double>(ni));
    const T c_bc = static_cast<T>(2.0 / static_cast<double>(nb));
    // The value channel is routed through the x-pass only so it is not
    // counted twice; the second-derivative cotangent is shared by both.
    std::vector<T> cv(batch, T(0)), c1x(batch, T(0)), c1y(batch, T(0)),
        c2(batch, T(0));
    for (std::size_t i = 0; i < ni; ++i) {
        c2[i] = c_pde * r_pde[i];
        if (mode_ == PoissonMode::Nonlinear)
            cv[i] = -c_pde * std::exp(jx.value[i]) * r_pde[i];
    }
    for (std::size_t j = 0; j < nb; ++j) {
        const std::size_t row = ni + j;
        cv[row] += c_bc * b * r_bc[j];
        c1x[row] = c_bc * a * nx_[j] * r_bc[j];
        c1y[row] = c_bc * a * ny_[j] * r_bc[j];
    }

    grad.assign(params.size(), T(0));
    net.backward_through_jets(cx, cv, c1x, c2, grad);
    net.backward_through_jets(cy, {}, c1y, c2, grad);
    return loss;
}

// ---------------------------------------------------------------------------
// DT heat

template <typename T>
DtHeatLoss<T>::DtHeatLoss(const MlpSpec& spec, const PointCloud& cloud,
                          const HeatProblem& prob, DtOperators<T> ops)
    : spec_(spec),
      ops_(std::move(ops)),
      f_(narrow<T>(prob.f)),
      g_(narrow<T>(prob.g)),
      u0_(narrow<T>(prob.u0)),
      n_collocation_(cloud.n_collocation()),
      n_boundary_(cloud.n_boundary()),
      n_extended_(cloud.n_extended()),
      n_slices_(prob.n_slices()) {
    if (spec_.in_dim != 3)
        throw InvalidArgument("heat loss: network must take 3 inputs");
    if (f_.size() != n_slices_ * n_collocation_ ||
        g_.size() != n_slices_ * n_boundary_ || u0_.size() != n_collocation_)
        throw InvalidArgument("heat loss: data length mismatch");
    const auto pts = cloud.extended_points();
    input_.resize(3 * n_slices_ * n_extended_);
    for (std::size_t k = 0; k < n_slices_; ++k) {
        const double t = static_cast<double>(k) * prob.dt();
        for (std::size_t i = 0; i < n_extended_; ++i) {
            const std::size_t row = k * n_extended_ + i;
            input_[3 * row] = static_cast<T>(pts[i].x);
            input_[3 * row + 1] = static_cast<T>(pts[i].y);
            input_[3 * row + 2] = static_cast<T>(t);
        }
    }
}

template <typename T>
double DtHeatLoss<T>::operator()(const std::vector<T>& params,
                                 std::vector<T>& grad) const {
    const Mlp<T> net(spec_, params);
    const std::size_t n = n_collocation_, nb = n_boundary_, ne = n_extended_;
    const std::size_t slices = n_slices_;
    const std::size_t batch = slices * ne;

    JetCache<T> cache;
    const auto jet =
        net.jet_forward(input_, batch, {T(0), T(0), T(1)}, 1, &cache);

    const double pde_norm = static_cast<double>(slices) * n;
    const double bc_norm = static_cast<double>(slices) * nb;
    const T c_pde = static_cast<T>(2.0 / pde_norm);
    const T c_bc = static_cast<T>(2.0 / bc_norm);
    const T c_ic = static_cast<T>(2.0 / static_cast<double>(n));

    std::vector<T> cv(batch, T(0)), c1(batch, T(0));
    std::vector<T> r_pde(n), r_bc(nb), tmp(ne);
    double pde_loss = 0.0, bc_loss = 0.0, ic_loss = 0.0;

    for (std::size_t k = 0; k < slices; ++k) {
        const T* u_k = jet.value.data() + k * ne;
        spmv(ops_.L, u_k, r_pde.data());
        for (std::size_t i = 0; i < n; ++i) {
            r_pde[i] = jet.first[k * ne + i] - r_pde[i] - f_[k * n + i];
            pde_loss += static_cast<double>(r_pde[i]) * r_pde[i];
        }
        spmv(ops_.Lt, r_pde.data(), tmp.data());
        for (std::size_t i = 0; i < ne; ++i)
            cv[k * ne + i] -= c_pde * tmp[i];
        for (std::size_t i = 0; i < n; ++i)
            c1[k * ne + i] = c_pde * r_pde[i];

        spmv(ops_.B, u_k, r_bc.data());
        for (std::size_t j = 0; j < nb; ++j) {
            r_bc[j] -= g_[k * nb + j];
            bc_loss += static_cast<double>(r_bc[j]) * r_bc[j];
        }
        spmv(ops_.Bt, r_bc.data(), tmp.data());
        for (std::size_t i = 0; i < ne; ++i)
            cv[k * ne + i] += c_bc * tmp[i];
    }

    for (std::size_t i = 0; i < n; ++i) {
        const T r = jet.value[i] - u0_[i];
        ic_loss += static_cast<double>(r) * r;
        cv[i] += c_ic * r;
    }

    grad.assign(params.size(), T(0));
    net.backward_through_jets(cache, cv, c1, {}, grad);
    return ic_loss / static_cast<double>(n) + pde_loss / pde_norm +
           bc_loss / bc_norm;
}

// ---------------------------------------------------------------------------
// Vanilla heat

template <typename T>
VanillaHeatLoss<T>::VanillaHeatLoss(const MlpSpec& spec,
                                    const PointCloud& cloud,
                                    const HeatProblem& prob)
    : spec_(spec),
      alpha_(prob.alpha),
      beta_(prob.beta),
      f_(narrow<T>(prob.f)),
      g_(narrow<T>(prob.g)),
      u0_(narrow<T>(prob.u0)),
      n_interior_(cloud.n_interior()),
      n_collocation_(cloud.n_collocation()),
      n_boundary_(cloud.n_boundary()),
      n_slices_(prob.n_slices()) {
    if (spec_.in_dim != 3)
        throw InvalidArgument("heat loss: network must take 3 inputs");
    std::vector<Vec2> pts = cloud.interior;
    pts.insert(pts.end(), cloud.boundary.begin(), cloud.boundary.end());
    input_.resize(3 * n_slices_ * n_collocation_);
    for (std::size_t k = 0; k < n_slices_; ++k) {
        const double t = static_cast<double>(k) * prob.dt();
        for (std::size_t i = 0; i < n_collocation_; ++i) {
            const std::size_t row = k * n_collocation_ + i;
            input_[3 * row] = static_cast<T>(pts[i].x);
            input_[3 * row + 1] = static_cast<T>(pts[i].y);
            input_[3 * row + 2] = static_cast<T>(t);
        }
    }
    nx_.resize(n_boundary_);
    ny_.resize(n_boundary_);
    for (std::size_t j = 0; j < n_boundary_; ++j) {
        nx_[j] = static_cast<T>(cloud.normals[j].x);
        ny_[j] = static_cast<T>(cloud.normals[j].y);
    }
}

template <typename T>
double VanillaHeatLoss<T>::operator()(const std::vector<T>& params,
                                      std::vector<T>& grad) const {
    const Mlp<T> net(spec_, params);
    const std::size_t n = n_collocation_, nb = n_boundary_;
    const std::size_t slices = n_slices_;
    const std::size_t batch = slices * n;

    JetCache<T> cx, cy, ct;
    const auto jx =
        net.jet_forward(input_, batch, {T(1), T(0), T(0)}, 2, &cx);
    const auto jy =
        net.jet_forward(input_, batch, {T(0), T(1), T(0)}, 2, &cy);
    const auto jt =
        net.jet_forward(input_, batch, {T(0), T(0), T(1)}, 1, &ct);

    const double pde_norm = static_cast<double>(slices) * n;
    const double bc_norm = static_cast<double>(slices) * nb;
    const T c_pde = static_cast<T>(2.0 / pde_norm);
    const T c_bc = static_cast<T>(2.0 / bc_norm);
    const T c_ic = static_cast<T>(2.0 / static_cast<double>(n));
    const T a = static_cast<T>(alpha_), b = static_cast<T>(beta_);

    std::vector<T> cv(batch, T(0)), c1x(batch, T(0)), c1y(batch, T(0)),
        c1t(batch, T(0)), c2(batch, T(0));
    double pde_loss = 0.0, bc_loss = 0.0, ic_loss = 0.0;

    for (std::size_t row = 0; row < batch; ++row) {
        const std::size_t k = row / n;
        const std::size_t i = row - k * n;
        const T r =
            jt.first[row] - (jx.second[row] + jy.second[row]) - f_[k * n + i];
        pde_loss += static_cast<double>(r) * r;
        c1t[row] = c_pde * r;
        c2[row] = -c_pde * r;
    }
    for (std::size_t k = 0; k < slices; ++k) {
        for (std::size_t j = 0; j < nb; ++j) {
            const std::size_t row = k * n + n_interior_ + j;
            const T r =
                a * (nx_[j] * jx.first[row] + ny_[j] * jy.first[row]) +
                b * jx.value[row] - g_[k * nb + j];
            bc_loss += static_cast<double>(r) * r;
            cv[row] += c_bc * b * r;
            c1x[row] = c_bc * a * nx_[j] * r;
            c1y[row] = c_bc * a * ny_[j] * r;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const T r = jx.value[i] - u0_[i];
        ic_loss += static_cast<double>(r) * r;
        cv[i] += c_ic * r;
    }

    grad.assign(params.size(), T(0));
    net.backward_through_jets(cx, cv, c1x, c2, grad);
    net.backward_through_jets(cy, {}, c1y, c2, grad);
    net.backward_through_jets(ct, {}, c1t, {}, grad);
    return ic_loss / static_cast<double>(n) + pde_loss / pde_norm +
           bc_loss / bc_norm;
}

// ---------------------------------------------------------------------------
// Training driver

const char* pde_name(Pde pde) {
    switch (pde) {
        case Pde::LinearPoisson: return "linear-poisson";
        case Pde::NonlinearPoisson: return "nonlinear-poisson";
        case Pde::Heat: return "heat";
    }
    return "?";
}

Pde parse_pde(const std::string& name) {
    if (name == "linear-poisson") return Pde::LinearPoisson;
    if (name == "nonlinear-poisson") return Pde::NonlinearPoisson;
    if (name == "heat") return Pde::Heat;
    throw InvalidArgument("unknown pde: " + name);
}

const char* train_mode_name(TrainMode mode) {
    return mode == TrainMode::Dt ? "dt" : "vanilla";
}

TrainMode parse_train_mode(const std::string& name) {
    if (name == "dt") return TrainMode::Dt;
    if (name == "vanilla") return TrainMode::Vanilla;
    throw InvalidArgument("unknown train mode: " + name);
}

namespace {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.mode == TrainMode::Dt && (cfg.p < 2 || cfg.p > 5))
        throw InvalidArgument("train: p must be in [2, 5]");
    if (cfg.error_every < 1)
        throw InvalidArgument("train: error_every must be >= 1");
    if (cfg.pde == Pde::Heat && cfg.n_t < 1)
        throw InvalidArgument("train: n_t must be >= 1");
    if (cfg.opt.max_epochs < 0)
        throw InvalidArgument("train: max_epochs must be >= 0");
    if (!(cfg.test_refine > 0.0))
        throw InvalidArgument("train: test_refine must be positive");
}

// Held-out evaluation set: points and exact solution values.
template <typename T>
struct TestSet {
    std::vector<T> input;
    std::vector<double> exact;
    std::size_t batch = 0;
};

template <typename T>
TestSet<T> make_poisson_test_set(const TrainConfig& cfg,
                                 const PointCloud& cloud) {
    const int target = static_cast<int>(std::lround(
        static_cast<double>(cloud.n_collocation()) * cfg.test_refine *
        cfg.test_refine));
    PointCloud test = generate_nodes(cfg.shape, target,
                                     cfg.seed + cfg.test_seed_offset);
    TestSet<T> ts;
    ts.batch = test.n_collocation();
    std::vector<Vec2> pts = test.interior;
    pts.insert(pts.end(), test.boundary.begin(), test.boundary.end());
    ts.input = flatten_points<T>(pts);
    ts.exact.resize(ts.batch);
    for (std::size_t i = 0; i < ts.batch; ++i)
        ts.exact[i] = manufactured_poisson(pts[i]).u;
    return ts;
}

// Heat errors are measured on the space-time collocation grid itself.
template <typename T>
TestSet<T> make_heat_test_set(const TrainConfig& cfg,
                              const PointCloud& cloud) {
    TestSet<T> ts;
    const std::size_t n = cloud.n_collocation();
    const std::size_t slices = static_cast<std::size_t>(cfg.n_t) + 1;
    ts.batch = slices * n;
    ts.input.resize(3 * ts.batch);
    ts.exact.resize(ts.batch);
    std::vector<Vec2> pts = cloud.interior;
    pts.insert(pts.end(), cloud.boundary.begin(), cloud.boundary.end());
    for (std::size_t k = 0; k < slices; ++k) {
        const double t = static_cast<double>(k) / cfg.n_t;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t row = k * n + i;
            ts.input[3 * row] = static_cast<T>(pts[i].x);
            ts.input[3 * row + 1] = static_cast<T>(pts[i].y);
            ts.input[3 * row + 2] = static_cast<T>(t);
            ts.exact[row] = manufactured_heat(pts[i], t).u;
        }
    }
    return ts;
}

template <typename T>
double test_error(const Mlp<T>& net, const TestSet<T>& ts) {
    const std::vector<T> out = net.forward(ts.input, ts.batch);
    std::vector<double> wide(out.begin(), out.end());
    return relative_l2(wide, ts.exact);
}

template <typename T>
TrainRecord run_train(const TrainConfig& cfg, const PointCloud& cloud) {
    validate_train_config(cfg);

    MlpSpec spec = cfg.net;
    spec.in_dim = cfg.pde == Pde::Heat ? 3 : 2;
    spec.out_dim = 1;

    Mlp<T> net = cfg.checkpoint_in.empty()
                     ? Mlp<T>::glorot(spec, cfg.seed)
                     : read_checkpoint<T>(cfg.checkpoint_in);
    if (net.spec().in_dim != spec.in_dim)
        throw InvalidArgument("train: checkpoint input dimension mismatch");
    spec = net.spec();

    TrainRecord record;
    record.n_interior = cloud.n_interior();
    record.n_boundary = cloud.n_boundary();

    // Assembly (DT only), timed separately from the training loop.
    Timer assembly_timer;
    std::function<double(const std::vector<T>&, std::vector<T>&)> closure;
    const PoissonMode pmode = cfg.pde == Pde::NonlinearPoisson
                                  ? PoissonMode::Nonlinear
                                  : PoissonMode::Linear;
    if (cfg.pde == Pde::Heat) {
        const HeatProblem prob =
            HeatProblem::manufactured(cloud, cfg.n_t, cfg.alpha, cfg.beta);
        if (cfg.mode == TrainMode::Dt) {
            auto ops = DtOperators<T>::assemble(cloud, cfg.p, cfg.alpha,
                                                cfg.beta);
            closure = DtHeatLoss<T>(spec, cloud, prob, std::move(ops));
        } else {
            closure = VanillaHeatLoss<T>(spec, cloud, prob);
        }
    } else {
        const PoissonProblem prob =
            PoissonProblem::manufactured(cloud, pmode, cfg.alpha, cfg.beta);
        if (cfg.mode == TrainMode::Dt) {
            auto ops = DtOperators<T>::assemble(cloud, cfg.p, cfg.alpha,
                                                cfg.beta);
            closure = DtPoissonLoss<T>(spec, cloud, prob, std::move(ops));
        } else {
            closure = VanillaPoissonLoss<T>(spec, cloud, prob);
        }
    }
    record.assembly_seconds = assembly_timer.seconds();

    const TestSet<T> ts = cfg.pde == Pde::Heat
                              ? make_heat_test_set<T>(cfg, cloud)
                              : make_poisson_test_set<T>(cfg, cloud);

    std::vector<T> params = net.params();
    std::vector<T> scratch;
    double loss = closure(params, scratch);
    double err = test_error(Mlp<T>(spec, params), ts);
    record.rows.push_back({0, loss, err, 0.0});
    record.best_error = err;
    record.best_epoch = 0;

    Lbfgs<T> opt(cfg.opt);
    double cum = 0.0;
    record.stop_reason = "max_epochs";
    if (cfg.stop_error > 0.0 && err <= cfg.stop_error)
        record.stop_reason = "target_reached";
    else {
        for (long epoch = 1; epoch <= cfg.opt.max_epochs; ++epoch) {
            Timer step_timer;
            LbfgsStatus status;
            try {
                status = opt.step(params, closure, loss);
            } catch (const LineSearchFailure&) {
                status = LbfgsStatus::LineSearchFailed;
            }
            cum += step_timer.seconds();

            const bool last = epoch == cfg.opt.max_epochs ||
                              status != LbfgsStatus::Ok;
            if (epoch % cfg.error_every == 0 || last)
                err = test_error(Mlp<T>(spec, params), ts);
            record.rows.push_back({epoch, loss, err, cum});
            record.epochs_run = epoch;
            if (err < record.best_error) {
                record.best_error = err;
                record.best_epoch = epoch;
            }
            if (status == LbfgsStatus::LineSearchFailed) {
                record.stop_reason = "line_search_failure";
                break;
            }
            if (status == LbfgsStatus::Converged) {
                record.stop_reason = "converged";
                break;
            }
            if (cfg.stop_error > 0.0 && err <= cfg.stop_error) {
                record.stop_reason = "target_reached";
                break;
            }
        }
    }

    record.final_loss = loss;
    record.total_seconds = record.assembly_seconds + cum;
    if (!cfg.checkpoint_out.empty())
        write_checkpoint(Mlp<T>(spec, params), cfg.checkpoint_out);
    return record;
}

}  // namespace

TrainRecord train(const TrainConfig& cfg) {
    const PointCloud cloud = generate_nodes(cfg.shape, cfg.target_n, cfg.seed);
    return train(cfg, cloud);
}

TrainRecord train(const TrainConfig& cfg, const PointCloud& cloud) {
    if (cfg.precision == Precision::Fp32) return run_train<float>(cfg, cloud);
    return run_train<double>(cfg, cloud);
}

void write_record_csv(const TrainRecord& record, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_record_csv: cannot open " + path);
    os << "epoch,loss,rel_error,cum_seconds\n";
    char buf[128];
    for (const EpochRow& row : record.rows) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g\n", row.epoch,
                      row.loss, row.rel_error, row.seconds);
        os << buf;
    }
    if (!os) throw IoError("write_record_csv: write failed for " + path);
}

void write_summary_json(const TrainRecord& record, const TrainConfig& cfg,
                        const std::string& path) {
    nlohmann::json j;
    j["config"] = {
        {"pde", pde_name(cfg.pde)},
        {"mode", train_mode_name(cfg.mode)},
        {"p", cfg.p},
        {"precision", precision_name(cfg.precision)},
        {"target_n", cfg.target_n},
        {"seed", cfg.seed},
        {"n_t", cfg.n_t},
        {"alpha", cfg.alpha},
        {"beta", cfg.beta},
        {"hidden_width", cfg.net.hidden_width},
        {"hidden_layers", cfg.net.hidden_layers},
        {"lbfgs", {{"history", cfg.opt.history},
                   {"lr", cfg.opt.lr},
                   {"max_epochs", cfg.opt.max_epochs},
                   {"wolfe_c1", cfg.opt.wolfe_c1},
                   {"wolfe_c2", cfg.opt.wolfe_c2}}},
        {"error_every", cfg.error_every},
        {"stop_error", cfg.stop_error},
    };
    j["n_interior"] = record.n_interior;
    j["n_boundary"] = record.n_boundary;
    j["best_error"] = record.best_error;
    j["best_epoch"] = record.best_epoch;
    j["epochs_run"] = record.epochs_run;
    j["assembly_seconds"] = record.assembly_seconds;
    j["total_seconds"] = record.total_seconds;
    j["final_loss"] = record.final_loss;
    j["stop_reason"] = record.stop_reason;
    std::ofstream os(path);
    if (!os) throw IoError("write_summary_json: cannot open " + path);
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write_summary_json: write failed for " + path);
}

template struct DtOperators<float>;
template struct DtOperators<double>;
template class DtPoissonLoss<float>;
template class DtPoissonLoss<double>;
template class VanillaPoissonLoss<float>;
template class VanillaPoissonLoss<double>;
template class DtHeatLoss<float>;
template class DtHeatLoss<double>;
template class VanillaHeatLoss<float>;
template class VanillaHeatLoss<double>;

}  // namespace dtpinn
