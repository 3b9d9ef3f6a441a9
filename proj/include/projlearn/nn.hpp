#pragma once

#include "projlearn/types.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace projlearn::nn {

/// y = x W^T + b, with W stored out x in.
struct Affine {
    Matrix weights;
    Vector bias;

    Index in() const { return weights.cols(); }
    Index out() const { return weights.rows(); }
};

struct BatchNorm {
    Vector gamma;
    Vector beta;
    Vector running_mean;
    Vector running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    Index width() const { return gamma.size(); }
};

struct Relu {};

/// Inverted dropout: survivors are scaled by 1 / (1 - rate) in training.
struct Dropout {
    double rate = 0.0;
};

using Layer = std::variant<Affine, BatchNorm, Relu, Dropout>;
using Network = std::vector<Layer>;

enum class Mode { train, inference };

struct LayerCache {
    Matrix input;
    Matrix mask;         // relu / dropout multipliers
    Matrix normalized;   // batchnorm x-hat
    Vector inv_std;      // batchnorm 1/sqrt(var + eps)
};

struct ForwardTape {
    Mode mode = Mode::inference;
    std::vector<LayerCache> layers;
};

struct ForwardPass {
    Matrix output;
    ForwardTape tape;
};

/// Train mode uses batch statistics and updates the batchnorm running
/// estimates in `net`; dropout masks are drawn from `rng`.
ForwardPass forward(Network& net, const Matrix& batch, Mode mode, Rng& rng);

/// Deterministic inference-mode pass; does not touch `net`.
Matrix infer(const Network& net, const Matrix& batch);

/// One gradient tensor per trainable tensor, in parameter_views order.
using ParameterGradients = std::vector<Vector>;

struct BackwardPass {
    Matrix input_gradient;
    ParameterGradients parameter_gradients;
};

BackwardPass backward(const Network& net, const ForwardTape& tape, const Matrix& output_gradient);

/// Mutable view of one trainable tensor (affine weights/bias, batchnorm gamma/beta).
struct ParameterView {
    std::span<double> values;
    std::string name;
};

std::vector<ParameterView> parameter_views(Network& net);
std::size_t parameter_count(const Network& net);
Index input_width(const Network& net);
Index output_width(const Network& net);

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Vector> first_moment;
    std::vector<Vector> second_moment;
};

AdamState make_adam(Network& net, double learning_rate);

/// Bias-corrected Adam update. Throws NumericalError naming the tensor when a
/// gradient is not finite (parameters are left untouched in that case).
void adam_step(AdamState& state, std::span<const ParameterView> params, const ParameterGradients& grads);

/// Hidden blocks are affine -> batchnorm -> relu -> dropout; the last layer
/// is a plain affine head.
struct MlpSpec {
    Index input = 0;
    std::vector<Index> hidden;
    Index output = 0;
    double dropout_rate = 0.25;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;
};

/// He-uniform weights (bound sqrt(6 / fan_in)) for affine layers feeding a
/// relu, Glorot-uniform (bound sqrt(6 / (fan_in + fan_out))) for the head.
/// Biases and beta start at 0, gamma at 1.
Network init_network(const MlpSpec& spec, std::uint64_t seed);

}  // namespace projlearn::nn
