#include "dtpinn/net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dtpinn {

const char* precision_name(Precision p) {
    return p == Precision::Fp32 ? "fp32" : "fp64";
}

Precision parse_precision(const std::string& name) {
    if (name == "fp32") return Precision::Fp32;
    if (name == "fp64") return Precision::Fp64;
    throw InvalidArgument("unknown precision '" + name + "'");
}

std::vector<std::pair<int, int>> MlpSpec::layer_shapes() const {
    if (in_dim < 1 || hidden_width < 1 || hidden_layers < 1 || out_dim < 1)
        throw InvalidArgument("MlpSpec: all dimensions must be positive");
    std::vector<std::pair<int, int>> shapes;
    shapes.reserve(hidden_layers + 1);
    shapes.emplace_back(in_dim, hidden_width);
    for (int k = 1; k < hidden_layers; ++k)
        shapes.emplace_back(hidden_width, hidden_width);
    shapes.emplace_back(hidden_width, out_dim);
    return shapes;
}

std::size_t MlpSpec::n_params() const {
    std::size_t n = 0;
    for (const auto& [in, out] : layer_shapes())
        n += static_cast<std::size_t>(in) * out + out;
    return n;
}

template <typename T>
Mlp<T>::Mlp(MlpSpec spec, std::vector<T> params)
    : spec_(spec), params_(std::move(params)) {
    if (params_.size() != spec_.n_params())
        throw InvalidArgument("Mlp: parameter count does not match spec");
    init_offsets();
}

template <typename T>
void Mlp<T>::init_offsets() {
    weight_offsets_.clear();
    bias_offsets_.clear();
    std::size_t off = 0;
    for (const auto& [in, out] : spec_.layer_shapes()) {
        weight_offsets_.push_back(off);
        off += static_cast<std::size_t>(in) * out;
        bias_offsets_.push_back(off);
        off += out;
    }
}

template <typename T>
Mlp<T> Mlp<T>::glorot(const MlpSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<T> params;
    params.reserve(spec.n_params());
    for (const auto& [in, out] : spec.layer_shapes()) {
        const double limit = std::sqrt(6.0 / (in + out));
        for (int i = 0; i < in * out; ++i)
            params.push_back(static_cast<T>(rng.uniform(-limit, limit)));
        for (int o = 0; o < out; ++o) params.push_back(T(0));
    }
    return Mlp<T>(spec, std::move(params));
}

namespace {

// z (batch x out) = a (batch x in) . W (in x out) + bias
template <typename T>
void affine(const T* a, std::size_t batch, int in, int out, const T* w,
            const T* bias, T* z) {
    for (std::size_t b = 0; b < batch; ++b) {
        T* zr = z + b * out;
        for (int o = 0; o < out; ++o) zr[o] = bias[o];
        const T* ar = a + b * in;
        for (int i = 0; i < in; ++i) {
            const T ai = ar[i];
            const T* wr = w + static_cast<std::size_t>(i) * out;
            for (int o = 0; o < out; ++o) zr[o] += ai * wr[o];
        }
    }
}

// z (batch x out) = a . W, no bias (jet channels).
template <typename T>
void affine_nobias(const T* a, std::size_t batch, int in, int out, const T* w,
                   T* z) {
    for (std::size_t b = 0; b < batch; ++b) {
        T* zr = z + b * out;
        for (int o = 0; o < out; ++o) zr[o] = T(0);
        const T* ar = a + b * in;
        for (int i = 0; i < in; ++i) {
            const T ai = ar[i];
            const T* wr = w + static_cast<std::size_t>(i) * out;
            for (int o = 0; o < out; ++o) zr[o] += ai * wr[o];
        }
    }
}

// abar (batch x in) += zbar (batch x out) . W^T, using an explicit transpose
// of W so the inner loop is contiguous.
template <typename T>
void backprop_input(const T* zbar, std::size_t batch, int in, int out,
                    const std::vector<T>& wt, T* abar) {
    for (std::size_t b = 0; b < batch; ++b) {
        T* ar = abar + b * in;
        const T* zr = zbar + b * out;
        for (int o = 0; o < out; ++o) {
            const T zo = zr[o];
            const T* wtr = wt.data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) ar[i] += zo * wtr[i];
        }
    }
}

template <typename T>
std::vector<T> transpose_weights(const T* w, int in, int out) {
    std::vector<T> wt(static_cast<std::size_t>(in) * out);
    for (int i = 0; i < in; ++i)
        for (int o = 0; o < out; ++o)
            wt[static_cast<std::size_t>(o) * in + i] =
                w[static_cast<std::size_t>(i) * out + o];
    return wt;
}

// Wbar (in x out) += a^T . zbar; bbar (out) += column sums of zbar.
template <typename T>
void accumulate_param_grad(const T* a, const T* zbar, std::size_t batch, int in,
                           int out, T* wbar, T* bbar) {
    for (std::size_t b = 0; b < batch; ++b) {
        const T* ar = a + b * in;
        const T* zr = zbar + b * out;
        for (int i = 0; i < in; ++i) {
            const T ai = ar[i];
            T* wr = wbar + static_cast<std::size_t>(i) * out;
            for (int o = 0; o < out; ++o) wr[o] += ai * zr[o];
        }
        if (bbar)
            for (int o = 0; o < out; ++o) bbar[o] += zr[o];
    }
}

}  // namespace

template <typename T>
std::vector<T> Mlp<T>::forward(const std::vector<T>& input, std::size_t batch,
                               ForwardCache<T>* cache) const {
    const auto shapes = spec_.layer_shapes();
    if (input.size() != batch * static_cast<std::size_t>(spec_.in_dim))
        throw InvalidArgument("Mlp::forward: input size mismatch");

    std::vector<T> cur = input;
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(cur);
        cache->batch = batch;
    }
    for (std::size_t k = 0; k < shapes.size(); ++k) {
        const auto [in, out] = shapes[k];
        std::vector<T> z(batch * static_cast<std::size_t>(out));
        affine(cur.data(), batch, in, out, params_.data() + weight_offsets_[k],
               params_.data() + bias_offsets_[k], z.data());
        if (k + 1 < shapes.size())
            for (T& v : z) v = std::tanh(v);
        cur = std::move(z);
        if (cache && k + 1 < shapes.size()) cache->activations.push_back(cur);
    }
    return cur;
}

template <typename T>
void Mlp<T>::backward_weights(const ForwardCache<T>& cache,
                              const std::vector<T>& cotangent,
                              std::vector<T>& grad) const {
    const auto shapes = spec_.layer_shapes();
    const std::size_t batch = cache.batch;
    if (cache.activations.size() != shapes.size())
        throw InvalidArgument("Mlp::backward_weights: cache layer mismatch");
    if (cotangent.size() != batch * static_cast<std::size_t>(spec_.out_dim))
        throw InvalidArgument("Mlp::backward_weights: cotangent size mismatch");
    if (grad.size() != params_.size()) grad.resize(params_.size(), T(0));

    std::vector<T> zbar = cotangent;
    for (std::size_t k = shapes.size(); k-- > 0;) {
        const auto [in, out] = shapes[k];
        const T* a = cache.activations[k].data();
        accumulate_param_grad(a, zbar.data(), batch, in, out,
                              grad.data() + weight_offsets_[k],
                              grad.data() + bias_offsets_[k]);
        if (k == 0) break;
        std::vector<T> abar(batch * static_cast<std::size_t>(in), T(0));
        const auto wt = transpose_weights(params_.data() + weight_offsets_[k],
                                          in, out);
        backprop_input(zbar.data(), batch, in, out, wt, abar.data());
        // The input of this layer is a tanh output; fold in its derivative.
        for (std::size_t i = 0; i < abar.size(); ++i)
            abar[i] *= (T(1) - a[i] * a[i]);
        zbar = std::move(abar);
    }
}

template <typename T>
JetResult<T> Mlp<T>::jet_forward(const std::vector<T>& input, std::size_t batch,
                                 const std::vector<T>& direction, int order,
                                 JetCache<T>* cache) const {
    if (order != 1 && order != 2)
        throw InvalidArgument("Mlp::jet_forward: order must be 1 or 2");
    if (direction.size() != static_cast<std::size_t>(spec_.in_dim))
        throw InvalidArgument("Mlp::jet_forward: direction size mismatch");
    if (input.size() != batch * static_cast<std::size_t>(spec_.in_dim))
        throw InvalidArgument("Mlp::jet_forward: input size mismatch");
    const auto shapes = spec_.layer_shapes();

    std::vector<T> a = input;
    // Constant direction jet for every batch row; second jet starts at zero.
    std::vector<T> a1(batch * static_cast<std::size_t>(spec_.in_dim));
    for (std::size_t b = 0; b < batch; ++b)
        for (int i = 0; i < spec_.in_dim; ++i)
            a1[b * spec_.in_dim + i] = direction[i];
    std::vector<T> a2(order == 2 ? a1.size() : 0, T(0));

    if (cache) {
        cache->activations.clear();
        cache->pre_jet1.clear();
        cache->pre_jet2.clear();
        cache->activations.push_back(a);
        cache->direction = direction;
        cache->batch = batch;
        cache->order = order;
    }

    for (std::size_t k = 0; k < shapes.size(); ++k) {
        const auto [in, out] = shapes[k];
        const T* w = params_.data() + weight_offsets_[k];
        const T* bias = params_.data() + bias_offsets_[k];
        std::vector<T> z(batch * static_cast<std::size_t>(out));
        std::vector<T> z1(z.size());
        std::vector<T> z2(order == 2 ? z.size() : 0);
        affine(a.data(), batch, in, out, w, bias, z.data());
        affine_nobias(a1.data(), batch, in, out, w, z1.data());
        if (order == 2)
            affine_nobias(a2.data(), batch, in, out, w, z2.data());

        if (k + 1 < shapes.size()) {
            if (cache) {
                cache->pre_jet1.push_back(z1);
                cache->pre_jet2.push_back(order == 2 ? z2 : std::vector<T>());
            }
            for (std::size_t i = 0; i < z.size(); ++i) {
                const T t = std::tanh(z[i]);
                const T s = T(1) - t * t;
                z[i] = t;
                if (order == 2)
                    z2[i] = s * z2[i] - T(2) * t * s * z1[i] * z1[i];
                z1[i] = s * z1[i];
            }
            if (cache) cache->activations.push_back(z);
        }
        a = std::move(z);
        a1 = std::move(z1);
        if (order == 2) a2 = std::move(z2);
    }

    JetResult<T> out;
    out.value = std::move(a);
    out.first = std::move(a1);
    if (order == 2) out.second = std::move(a2);
    return out;
}

template <typename T>
void Mlp<T>::backward_through_jets(const JetCache<T>& cache,
                                   const std::vector<T>& cot_value,
                                   const std::vector<T>& cot_first,
                                   const std::vector<T>& cot_second,
                                   std::vector<T>& grad) const {
    const auto shapes = spec_.layer_shapes();
    const std::size_t batch = cache.batch;
    const int order = cache.order;
    const std::size_t out_n = batch * static_cast<std::size_t>(spec_.out_dim);
    if (grad.size() != params_.size()) grad.resize(params_.size(), T(0));

    auto expand = [&](const std::vector<T>& cot) {
        if (cot.empty()) return std::vector<T>(out_n, T(0));
        if (cot.size() != out_n)
            throw InvalidArgument(
                "Mlp::backward_through_jets: cotangent size mismatch");
        return cot;
    };
    std::vector<T> zbar = expand(cot_value);
    std::vector<T> z1bar = expand(cot_first);
    std::vector<T> z2bar = order == 2 ? expand(cot_second)
                                      : std::vector<T>(out_n, T(0));

    for (std::size_t k = shapes.size(); k-- > 0;) {
        const auto [in, out] = shapes[k];
        const T* w = params_.data() + weight_offsets_[k];
        const std::size_t in_n = batch * static_cast<std::size_t>(in);

        // Forward inputs of this affine layer on each jet channel.
        std::vector<T> a1_in, a2_in;
        const T* a = cache.activations[k].data();
        if (k == 0) {
            a1_in.resize(in_n);
            for (std::size_t b = 0; b < batch; ++b)
                for (int i = 0; i < in; ++i)
                    a1_in[b * in + i] = cache.direction[i];
            a2_in.assign(in_n, T(0));
        } else {
            // Reconstruct post-tanh jets of the previous hidden layer from
            // the cached pre-activation jets.
            const std::vector<T>& z1p = cache.pre_jet1[k - 1];
            a1_in.resize(in_n);
            a2_in.assign(in_n, T(0));
            for (std::size_t i = 0; i < in_n; ++i) {
                const T t = a[i];
                const T s = T(1) - t * t;
                a1_in[i] = s * z1p[i];
                if (order == 2) {
                    const T z2p = cache.pre_jet2[k - 1][i];
                    a2_in[i] = s * z2p - T(2) * t * s * z1p[i] * z1p[i];
                }
            }
        }

        accumulate_param_grad(a, zbar.data(), batch, in, out,
                              grad.data() + weight_offsets_[k],
                              grad.data() + bias_offsets_[k]);
        accumulate_param_grad(a1_in.data(), z1bar.data(), batch, in, out,
                              grad.data() + weight_offsets_[k],
                              static_cast<T*>(nullptr));
        if (order == 2)
            accumulate_param_grad(a2_in.data(), z2bar.data(), batch, in, out,
                                  grad.data() + weight_offsets_[k],
                              static_cast<T*>(nullptr));

        if (k == 0) break;

        const auto wt = transpose_weights(w, in, out);
        std::vector<T> abar(in_n, T(0)), a1bar(in_n, T(0)), a2bar(in_n, T(0));
        backprop_input(zbar.data(), batch, in, out, wt, abar.data());
        backprop_input(z1bar.data(), batch, in, out, wt, a1bar.data());
        if (order == 2)
            backprop_input(z2bar.data(), batch, in, out, wt, a2bar.data());

        // Reverse the tanh jet rule of hidden layer k-1:
        //   t = tanh(z), s = 1 - t^2
        //   t' = s z', t'' = s z'' - 2 t s z'^2
        const std::vector<T>& z1p = cache.pre_jet1[k - 1];
        std::vector<T> nzbar(in_n), nz1bar(in_n), nz2bar(in_n, T(0));
        for (std::size_t i = 0; i < in_n; ++i) {
            const T t = a[i];
            const T s = T(1) - t * t;
            const T z1 = z1p[i];
            const T tbar = abar[i];
            const T t1bar = a1bar[i];
            if (order == 2) {
                const T z2 = cache.pre_jet2[k - 1][i];
                const T t2bar = a2bar[i];
                nzbar[i] = tbar * s - t1bar * T(2) * t * s * z1 +
                           t2bar * (-T(2) * t * s * z2 -
                                    T(2) * s * (s - T(2) * t * t) * z1 * z1);
                nz1bar[i] = t1bar * s - t2bar * T(4) * t * s * z1;
                nz2bar[i] = t2bar * s;
            } else {
                nzbar[i] = tbar * s - t1bar * T(2) * t * s * z1;
                nz1bar[i] = t1bar * s;
            }
        }
        zbar = std::move(nzbar);
        z1bar = std::move(nz1bar);
        z2bar = std::move(nz2bar);
    }
}

template <typename T>
typename Mlp<T>::Laplacian Mlp<T>::laplacian_jets(const std::vector<T>& input,
                                                  std::size_t batch) const {
    Laplacian out;
    out.laplacian.assign(batch, T(0));
    std::vector<T> dir(spec_.in_dim, T(0));
    for (int i = 0; i < spec_.in_dim; ++i) {
        dir.assign(spec_.in_dim, T(0));
        dir[i] = T(1);
        JetResult<T> jet = jet_forward(input, batch, dir, 2);
        if (i == 0) out.value = std::move(jet.value);
        for (std::size_t b = 0; b < batch; ++b)
            out.laplacian[b] += jet.second[b];
    }
    return out;
}

template <typename T>
std::vector<T> Mlp<T>::time_derivative_jets(const std::vector<T>& input,
                                            std::size_t batch) const {
    std::vector<T> dir(spec_.in_dim, T(0));
    dir.back() = T(1);
    return jet_forward(input, batch, dir, 1).first;
}

template <typename T>
bool Mlp<T>::finite() const {
    for (T v : params_)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Checkpoints

template <typename T>
void write_checkpoint(const Mlp<T>& net, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_checkpoint: cannot open " + path);
    const MlpSpec& s = net.spec();
    os << "mlp " << s.in_dim << ' ' << s.hidden_width << ' ' << s.hidden_layers
       << ' ' << s.out_dim << ' '
       << (sizeof(T) == 4 ? "fp32" : "fp64") << '\n';
    char buf[40];
    for (T v : net.params()) {
        std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(v));
        os << buf << '\n';
    }
    if (!os) throw IoError("write_checkpoint: write failed for " + path);
}

template <typename T>
Mlp<T> read_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("read_checkpoint: cannot open " + path);
    std::string magic, prec;
    MlpSpec s;
    if (!(is >> magic >> s.in_dim >> s.hidden_width >> s.hidden_layers >>
          s.out_dim >> prec) ||
        magic != "mlp")
        throw IoError("read_checkpoint: malformed header in " + path);
    std::vector<T> params;
    params.reserve(s.n_params());
    double v;
    while (is >> v) params.push_back(static_cast<T>(v));
    if (params.size() != s.n_params())
        throw IoError("read_checkpoint: parameter count mismatch in " + path);
    return Mlp<T>(s, std::move(params));
}

template class Mlp<float>;
template class Mlp<double>;
template void write_checkpoint<float>(const Mlp<float>&, const std::string&);
template void write_checkpoint<double>(const Mlp<double>&, const std::string&);
template Mlp<float> read_checkpoint<float>(const std::string&);
template Mlp<double> read_checkpoint<double>(const std::string&);

}  // namespace dtpinn
