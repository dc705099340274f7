#ifndef DTPINN_LBFGS_HPP
#define DTPINN_LBFGS_HPP

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "dtpinn/common.hpp"

namespace dtpinn {

struct LbfgsConfig {
    int history = 50;
    double lr = 1.0;  // initial line-search step scale
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_linesearch = 25;
    long max_epochs = 5000;
    double grad_tol = 1e-10;  // max-norm gradient convergence threshold
    double step_tol = 1e-12;  // max-norm parameter-change threshold

    void validate() const;
};

enum class LbfgsStatus {
    Ok,               // step accepted
    Converged,        // gradient or step below tolerance
    LineSearchFailed  // no Wolfe point found; parameters unchanged
};

// L-BFGS with strong Wolfe line search over a full-batch closure. With
// history = 0 the direction degenerates to steepest descent with line
// search. The loss is reported in double regardless of the parameter type;
// curvature dot products also accumulate in double.
template <typename T>
class Lbfgs {
public:
    // closure(params, grad_out) -> loss; grad_out is resized by the callee.
    using Closure =
        std::function<double(const std::vector<T>&, std::vector<T>&)>;

    explicit Lbfgs(LbfgsConfig cfg);

    // One optimization step (one epoch over the full collocation set).
    // On Ok/Converged, loss_out holds the loss at the (possibly updated)
    // parameters. On LineSearchFailed the parameters are restored.
    LbfgsStatus step(std::vector<T>& params, const Closure& closure,
                     double& loss_out);

    long epoch() const { return epoch_; }
    const std::vector<T>& gradient() const { return grad_; }

private:
    struct Pair {
        std::vector<T> s;
        std::vector<T> y;
        double sy = 0.0;
    };

    void two_loop_direction(std::vector<T>& dir) const;

    LbfgsConfig cfg_;
    std::deque<Pair> pairs_;
    std::vector<T> grad_;
    double loss_ = 0.0;
    bool have_eval_ = false;
    long epoch_ = 0;
};

}  // namespace dtpinn

#endif
