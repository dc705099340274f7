#ifndef DTPINN_NET_HPP
#define DTPINN_NET_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtpinn/common.hpp"

namespace dtpinn {

enum class Precision { Fp32, Fp64 };

const char* precision_name(Precision p);
Precision parse_precision(const std::string& name);

// Feedforward tanh network: `hidden_layers` hidden layers of fixed width,
// identity output layer.
struct MlpSpec {
    int in_dim = 2;
    int hidden_width = 50;
    int hidden_layers = 4;
    int out_dim = 1;

    // (fan_in, fan_out) of each affine layer, input to output.
    std::vector<std::pair<int, int>> layer_shapes() const;
    std::size_t n_params() const;
};

template <typename T>
struct ForwardCache {
    // activations[0] is the input batch; activations[k>0] is the tanh output
    // of hidden layer k, each batch-major (batch x width).
    std::vector<std::vector<T>> activations;
    std::size_t batch = 0;
};

// State of one directional-jet pass: per hidden layer the tanh outputs and
// the pre-activation first/second jets needed for the reverse sweep.
template <typename T>
struct JetCache {
    std::vector<std::vector<T>> activations;  // as in ForwardCache
    std::vector<std::vector<T>> pre_jet1;     // z' per hidden layer
    std::vector<std::vector<T>> pre_jet2;     // z'' per hidden layer
    std::vector<T> direction;                 // input-space jet seed
    std::size_t batch = 0;
    int order = 2;
};

template <typename T>
struct JetResult {
    std::vector<T> value;
    std::vector<T> first;
    std::vector<T> second;  // empty for order-1 passes
};

template <typename T>
class Mlp {
public:
    Mlp() = default;
    Mlp(MlpSpec spec, std::vector<T> params);

    // Glorot-uniform weights, zero biases. Draws are made in fp64 and
    // narrowed, so fp32 and fp64 nets from one seed agree after narrowing.
    static Mlp glorot(const MlpSpec& spec, std::uint64_t seed);

    const MlpSpec& spec() const { return spec_; }
    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    std::size_t n_params() const { return params_.size(); }

    // Batch-major input (batch x in_dim); returns batch output values.
    std::vector<T> forward(const std::vector<T>& input, std::size_t batch,
                           ForwardCache<T>* cache = nullptr) const;

    // Gradient of cotangent . output with respect to all parameters,
    // accumulated into grad (flat, same layout as params).
    void backward_weights(const ForwardCache<T>& cache,
                          const std::vector<T>& cotangent,
                          std::vector<T>& grad) const;

    // Propagates (value, first, second) directional derivatives along a fixed
    // input direction through the network.
    JetResult<T> jet_forward(const std::vector<T>& input, std::size_t batch,
                             const std::vector<T>& direction, int order,
                             JetCache<T>* cache = nullptr) const;

    // Reverse sweep over a jet pass. Cotangent vectors may be empty (treated
    // as zero); cot_second is ignored for order-1 caches.
    void backward_through_jets(const JetCache<T>& cache,
                               const std::vector<T>& cot_value,
                               const std::vector<T>& cot_first,
                               const std::vector<T>& cot_second,
                               std::vector<T>& grad) const;

    // Laplacian via one order-2 jet pass per input coordinate. Also returns
    // the primal values (identical to forward()).
    struct Laplacian {
        std::vector<T> value;
        std::vector<T> laplacian;
    };
    Laplacian laplacian_jets(const std::vector<T>& input,
                             std::size_t batch) const;

    // d(output)/dt for space-time input (x1..xd, t): order-1 jet along the
    // last coordinate.
    std::vector<T> time_derivative_jets(const std::vector<T>& input,
                                        std::size_t batch) const;

    bool finite() const;

private:
    MlpSpec spec_;
    std::vector<T> params_;
    std::vector<std::size_t> weight_offsets_;
    std::vector<std::size_t> bias_offsets_;

    void init_offsets();
};

template <typename T>
void write_checkpoint(const Mlp<T>& net, const std::string& path);

// Reads a checkpoint written at either precision, narrowing or widening the
// stored values to T.
template <typename T>
Mlp<T> read_checkpoint(const std::string& path);

}  // namespace dtpinn

#endif
