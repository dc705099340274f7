#include "dtpinn/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace dtpinn {

namespace {

template <typename T>
double dot(const std::vector<T>& a, const std::vector<T>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

template <typename T>
double max_abs(const std::vector<T>& a) {
    double m = 0.0;
    for (const T& v : a) m = std::max(m, std::abs(static_cast<double>(v)));
    return m;
}

template <typename T>
double sum_abs(const std::vector<T>& a) {
    double acc = 0.0;
    for (const T& v : a) acc += std::abs(static_cast<double>(v));
    return acc;
}

// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb), clipped to
// the central 80% of the interval; falls back to bisection when the cubic
// is degenerate.
double cubic_step(double a, double fa, double ga, double b, double fb,
                  double gb) {
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    double t = 0.5 * (lo + hi);
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc >= 0.0) {
        double d2 = std::sqrt(disc);
        if (b < a) d2 = -d2;
        const double denom = gb - ga + 2.0 * d2;
        if (denom != 0.0) t = b - (b - a) * (gb + d2 - d1) / denom;
    }
    const double margin = 0.1 * (hi - lo);
    if (!(t >= lo + margin && t <= hi - margin)) t = 0.5 * (lo + hi);
    return t;
}

}  // namespace

void LbfgsConfig::validate() const {
    if (history < 0) throw InvalidArgument("lbfgs: history must be >= 0");
    if (!(lr > 0.0)) throw InvalidArgument("lbfgs: lr must be positive");
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
        throw InvalidArgument("lbfgs: need 0 < c1 < c2 < 1");
    if (max_linesearch < 1)
        throw InvalidArgument("lbfgs: max_linesearch must be >= 1");
    if (max_epochs < 0) throw InvalidArgument("lbfgs: max_epochs must be >= 0");
}

template <typename T>
Lbfgs<T>::Lbfgs(LbfgsConfig cfg) : cfg_(cfg) {
    cfg_.validate();
}

template <typename T>
void Lbfgs<T>::two_loop_direction(std::vector<T>& dir) const {
    const std::size_t n = grad_.size();
    dir.assign(grad_.begin(), grad_.end());
    if (pairs_.empty()) {
        for (std::size_t i = 0; i < n; ++i) dir[i] = -dir[i];
        return;
    }
    const std::size_t k = pairs_.size();
    std::vector<double> alpha(k);
    for (std::size_t j = k; j-- > 0;) {
        const Pair& p = pairs_[j];
        alpha[j] = dot(p.s, dir) / p.sy;
        const T a = static_cast<T>(alpha[j]);
        for (std::size_t i = 0; i < n; ++i) dir[i] -= a * p.y[i];
    }
    const Pair& last = pairs_.back();
    const double yy = dot(last.y, last.y);
    const double gamma = yy > 0.0 ? last.sy / yy : 1.0;
    for (std::size_t i = 0; i < n; ++i)
        dir[i] = static_cast<T>(-gamma * static_cast<double>(dir[i]));
    for (std::size_t j = 0; j < k; ++j) {
        const Pair& p = pairs_[j];
        const double beta = dot(p.y, dir) / p.sy;
        const T c = static_cast<T>(alpha[j] + beta);
        for (std::size_t i = 0; i < n; ++i) dir[i] -= c * p.s[i];
    }
}

template <typename T>
LbfgsStatus Lbfgs<T>::step(std::vector<T>& params, const Closure& closure,
                           double& loss_out) {
    if (params.empty()) throw InvalidArgument("lbfgs: empty parameter vector");
    if (!have_eval_) {
        loss_ = closure(params, grad_);
        if (grad_.size() != params.size())
            throw InvalidArgument("lbfgs: closure gradient size mismatch");
        have_eval_ = true;
    }
    loss_out = loss_;
    if (max_abs(grad_) <= cfg_.grad_tol) return LbfgsStatus::Converged;

    std::vector<T> dir;
    if (cfg_.history == 0) {
        dir.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) dir[i] = -grad_[i];
    } else {
        two_loop_direction(dir);
    }
    double dg0 = dot(grad_, dir);
    if (!(dg0 < 0.0)) {
        // Not a descent direction: drop the curvature memory and fall back
        // to steepest descent.
        pairs_.clear();
        for (std::size_t i = 0; i < params.size(); ++i) dir[i] = -grad_[i];
        dg0 = -dot(grad_, grad_);
        if (!(dg0 < 0.0)) return LbfgsStatus::Converged;
    }

    const double f0 = loss_;
    const std::vector<T> x0 = params;
    const std::vector<T> g0 = grad_;

    double t = cfg_.lr;
    if (epoch_ == 0) {
        const double g1 = sum_abs(grad_);
        t = cfg_.lr * std::min(1.0, g1 > 0.0 ? 1.0 / g1 : 1.0);
    }

    auto eval = [&](double step_len, double& f, double& dg) {
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] = x0[i] + static_cast<T>(step_len) * dir[i];
        f = closure(params, grad_);
        dg = dot(grad_, dir);
    };

    const double c1 = cfg_.wolfe_c1;
    const double c2 = cfg_.wolfe_c2;
    const double t_max = 1e8;
    int evals = 0;
    bool found = false;
    double ft = 0.0, dgt = 0.0;

    // Bracketing phase (Nocedal & Wright alg. 3.5).
    double t_prev = 0.0, f_prev = f0, dg_prev = dg0;
    double lo = 0.0, f_lo = 0.0, dg_lo = 0.0;
    double hi = 0.0, f_hi = 0.0, dg_hi = 0.0;
    bool bracketed = false;
    while (evals < cfg_.max_linesearch) {
        eval(t, ft, dgt);
        ++evals;
        if (ft > f0 + c1 * t * dg0 || (evals > 1 && ft >= f_prev)) {
            lo = t_prev; f_lo = f_prev; dg_lo = dg_prev;
            hi = t; f_hi = ft; dg_hi = dgt;
            bracketed = true;
            break;
        }
        if (std::abs(dgt) <= -c2 * dg0) {
            found = true;
            break;
        }
        if (dgt >= 0.0) {
            lo = t; f_lo = ft; dg_lo = dgt;
            hi = t_prev; f_hi = f_prev; dg_hi = dg_prev;
            bracketed = true;
            break;
        }
        t_prev = t; f_prev = ft; dg_prev = dgt;
        t = std::min(2.0 * t, t_max);
        if (t >= t_max && t_prev >= t_max) break;
    }

    // Zoom phase (alg. 3.6).
    while (!found && bracketed && evals < cfg_.max_linesearch) {
        if (std::abs(hi - lo) * max_abs(dir) <
            std::numeric_limits<double>::epsilon() * (1.0 + max_abs(x0)))
            break;
        t = cubic_step(lo, f_lo, dg_lo, hi, f_hi, dg_hi);
        eval(t, ft, dgt);
        ++evals;
        if (ft > f0 + c1 * t * dg0 || ft >= f_lo) {
            hi = t; f_hi = ft; dg_hi = dgt;
        } else {
            if (std::abs(dgt) <= -c2 * dg0) {
                found = true;
                break;
            }
            if (dgt * (hi - lo) >= 0.0) {
                hi = lo; f_hi = f_lo; dg_hi = dg_lo;
            }
            lo = t; f_lo = ft; dg_lo = dgt;
        }
    }

    if (!found) {
        params = x0;
        grad_ = g0;
        loss_ = f0;
        loss_out = f0;
        return LbfgsStatus::LineSearchFailed;
    }

    if (cfg_.history > 0) {
        Pair p;
        p.s.resize(params.size());
        p.y.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            p.s[i] = params[i] - x0[i];
            p.y[i] = grad_[i] - g0[i];
        }
        p.sy = dot(p.s, p.y);
        const double sn = std::sqrt(dot(p.s, p.s));
        const double yn = std::sqrt(dot(p.y, p.y));
        if (p.sy > 1e-10 * sn * yn) {
            pairs_.push_back(std::move(p));
            if (pairs_.size() > static_cast<std::size_t>(cfg_.history))
                pairs_.pop_front();
        }
    }

    double step_norm = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i)
        step_norm = std::max(step_norm,
                             std::abs(static_cast<double>(params[i] - x0[i])));
    loss_ = ft;
    loss_out = ft;
    ++epoch_;
    if (step_norm <= cfg_.step_tol || max_abs(grad_) <= cfg_.grad_tol)
        return LbfgsStatus::Converged;
    return LbfgsStatus::Ok;
}

template class Lbfgs<float>;
template class Lbfgs<double>;

}  // namespace dtpinn
