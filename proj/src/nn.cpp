#include "projlearn/nn.hpp"

#include "projlearn/errors.hpp"

#include <cmath>

namespace projlearn::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void shape_error(std::size_t layer, Index expected, Index got) {
    throw DataError("layer " + std::to_string(layer) + " expects width " + std::to_string(expected) +
                    ", got " + std::to_string(got));
}

Matrix affine_apply(const Affine& a, const Matrix& x) {
    Matrix y = x * a.weights.transpose();
    y.rowwise() += a.bias.transpose();
    return y;
}

}  // namespace

Index input_width(const Network& net) {
    for (const auto& layer : net) {
        if (auto* a = std::get_if<Affine>(&layer)) return a->in();
        if (auto* b = std::get_if<BatchNorm>(&layer)) return b->width();
    }
    return -1;
}

Index output_width(const Network& net) {
    for (auto it = net.rbegin(); it != net.rend(); ++it) {
        if (auto* a = std::get_if<Affine>(&*it)) return a->out();
        if (auto* b = std::get_if<BatchNorm>(&*it)) return b->width();
    }
    return -1;
}

ForwardPass forward(Network& net, const Matrix& batch, Mode mode, Rng& rng) {
    ForwardPass pass;
    pass.tape.mode = mode;
    pass.tape.layers.resize(net.size());
    Matrix x = batch;
    for (std::size_t l = 0; l < net.size(); ++l) {
        LayerCache& cache = pass.tape.layers[l];
        cache.input = x;
        std::visit(
            Overloaded{
                [&](Affine& a) {
                    if (x.cols() != a.in()) shape_error(l, a.in(), x.cols());
                    x = affine_apply(a, x);
                },
                [&](BatchNorm& bn) {
                    if (x.cols() != bn.width()) shape_error(l, bn.width(), x.cols());
                    if (mode == Mode::train) {
                        if (x.rows() < 2)
                            throw DataError("batchnorm in train mode needs a batch of at least 2");
                        const Eigen::RowVectorXd mean = x.colwise().mean();
                        const Matrix centered = x.rowwise() - mean;
                        const Eigen::RowVectorXd var = centered.array().square().colwise().mean();
                        cache.inv_std = (var.array() + bn.eps).rsqrt().transpose();
                        cache.normalized = centered.array().rowwise() * cache.inv_std.transpose().array();
                        bn.running_mean = (1.0 - bn.momentum) * bn.running_mean + bn.momentum * mean.transpose();
                        bn.running_var = (1.0 - bn.momentum) * bn.running_var + bn.momentum * var.transpose();
                    } else {
                        cache.inv_std = (bn.running_var.array() + bn.eps).rsqrt();
                        cache.normalized = (x.rowwise() - bn.running_mean.transpose()).array().rowwise() *
                                           cache.inv_std.transpose().array();
                    }
                    x = (cache.normalized.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
                        bn.beta.transpose().array();
                },
                [&](Relu&) {
                    cache.mask = (x.array() > 0.0).cast<double>();
                    x = x.cwiseProduct(cache.mask);
                },
                [&](Dropout& d) {
                    if (mode != Mode::train || d.rate == 0.0) return;
                    std::uniform_real_distribution<double> u(0.0, 1.0);
                    const double keep_scale = 1.0 / (1.0 - d.rate);
                    cache.mask.resize(x.rows(), x.cols());
                    for (Index i = 0; i < x.rows(); ++i)
                        for (Index j = 0; j < x.cols(); ++j)
                            cache.mask(i, j) = u(rng) < d.rate ? 0.0 : keep_scale;
                    x = x.cwiseProduct(cache.mask);
                },
            },
            net[l]);
    }
    pass.output = std::move(x);
    return pass;
}

Matrix infer(const Network& net, const Matrix& batch) {
    Matrix x = batch;
    for (std::size_t l = 0; l < net.size(); ++l) {
        std::visit(Overloaded{
                       [&](const Affine& a) {
                           if (x.cols() != a.in()) shape_error(l, a.in(), x.cols());
                           x = affine_apply(a, x);
                       },
                       [&](const BatchNorm& bn) {
                           if (x.cols() != bn.width()) shape_error(l, bn.width(), x.cols());
                           const Eigen::ArrayXd scale = bn.gamma.array() * (bn.running_var.array() + bn.eps).rsqrt();
                           const Eigen::ArrayXd shift = bn.beta.array() - bn.running_mean.array() * scale;
                           x = ((x.array().rowwise() * scale.transpose()).rowwise() + shift.transpose()).matrix();
                       },
                       [&](const Relu&) { x = x.cwiseMax(0.0); },
                       [&](const Dropout&) {},
                   },
                   net[l]);
    }
    return x;
}

BackwardPass backward(const Network& net, const ForwardTape& tape, const Matrix& output_gradient) {
    if (tape.layers.size() != net.size())
        throw DataError("tape has " + std::to_string(tape.layers.size()) + " layers, network has " +
                        std::to_string(net.size()));

    // Gradients are produced back to front, then reordered to match parameter_views.
    std::vector<std::vector<Vector>> per_layer(net.size());
    Matrix g = output_gradient;
    for (std::size_t k = net.size(); k-- > 0;) {
        const LayerCache& cache = tape.layers[k];
        if (g.rows() != cache.input.rows()) throw DataError("gradient batch size does not match tape");
        std::visit(
            Overloaded{
                [&](const Affine& a) {
                    if (g.cols() != a.out()) shape_error(k, a.out(), g.cols());
                    Matrix dw = g.transpose() * cache.input;
                    Vector db = g.colwise().sum().transpose();
                    per_layer[k].push_back(Eigen::Map<const Vector>(dw.data(), dw.size()));
                    per_layer[k].push_back(std::move(db));
                    g = g * a.weights;
                },
                [&](const BatchNorm& bn) {
                    const Matrix& xhat = cache.normalized;
                    Vector dgamma = (g.array() * xhat.array()).colwise().sum().transpose();
                    Vector dbeta = g.colwise().sum().transpose();
                    const Matrix dxhat = g.array().rowwise() * bn.gamma.transpose().array();
                    if (tape.mode == Mode::train) {
                        const double m = static_cast<double>(g.rows());
                        const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
                        const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum();
                        Matrix dx = (m * dxhat.array()).matrix();
                        dx.rowwise() -= sum_dxhat;
                        dx -= (xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
                        g = (dx.array().rowwise() * (cache.inv_std.transpose().array() / m)).matrix();
                    } else {
                        g = (dxhat.array().rowwise() * cache.inv_std.transpose().array()).matrix();
                    }
                    per_layer[k].push_back(std::move(dgamma));
                    per_layer[k].push_back(std::move(dbeta));
                },
                [&](const Relu&) { g = g.cwiseProduct(cache.mask); },
                [&](const Dropout&) {
                    if (cache.mask.size() != 0) g = g.cwiseProduct(cache.mask);
                },
            },
            net[k]);
    }

    BackwardPass out;
    out.input_gradient = std::move(g);
    for (auto& grads : per_layer)
        for (auto& t : grads) out.parameter_gradients.push_back(std::move(t));
    return out;
}

std::vector<ParameterView> parameter_views(Network& net) {
    std::vector<ParameterView> views;
    for (std::size_t l = 0; l < net.size(); ++l) {
        const std::string prefix = "layer " + std::to_string(l);
        std::visit(Overloaded{
                       [&](Affine& a) {
                           views.push_back({{a.weights.data(), static_cast<std::size_t>(a.weights.size())},
                                            prefix + " weights"});
                           views.push_back({{a.bias.data(), static_cast<std::size_t>(a.bias.size())},
                                            prefix + " bias"});
                       },
                       [&](BatchNorm& bn) {
                           views.push_back({{bn.gamma.data(), static_cast<std::size_t>(bn.gamma.size())},
                                            prefix + " gamma"});
                           views.push_back({{bn.beta.data(), static_cast<std::size_t>(bn.beta.size())},
                                            prefix + " beta"});
                       },
                       [](auto&) {},
                   },
                   net[l]);
    }
    return views;
}

std::size_t parameter_count(const Network& net) {
    std::size_t n = 0;
    for (const auto& layer : net) {
        if (auto* a = std::get_if<Affine>(&layer)) n += a->weights.size() + a->bias.size();
        if (auto* b = std::get_if<BatchNorm>(&layer)) n += 2 * b->gamma.size();
    }
    return n;
}

AdamState make_adam(Network& net, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    for (const auto& v : parameter_views(net)) {
        s.first_moment.push_back(Vector::Zero(static_cast<Index>(v.values.size())));
        s.second_moment.push_back(Vector::Zero(static_cast<Index>(v.values.size())));
    }
    return s;
}

void adam_step(AdamState& state, std::span<const ParameterView> params, const ParameterGradients& grads) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw DataError("adam: " + std::to_string(params.size()) + " tensors, " + std::to_string(grads.size()) +
                        " gradients, " + std::to_string(state.first_moment.size()) + " moment slots");
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (static_cast<Index>(params[t].values.size()) != grads[t].size() ||
            grads[t].size() != state.first_moment[t].size())
            throw DataError("adam: shape mismatch for " + params[t].name);
        if (!grads[t].allFinite()) throw NumericalError("non-finite gradient in " + params[t].name);
    }

    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        Vector& m = state.first_moment[t];
        Vector& v = state.second_moment[t];
        m = state.beta1 * m + (1.0 - state.beta1) * grads[t];
        v = state.beta2 * v + (1.0 - state.beta2) * grads[t].cwiseProduct(grads[t]);
        Eigen::Map<Vector> theta(params[t].values.data(), m.size());
        theta.array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
    }
}

namespace {

Affine make_affine(Index in, Index out, double bound, Rng& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Affine a;
    a.weights.resize(out, in);
    for (Index i = 0; i < a.weights.size(); ++i) a.weights.data()[i] = u(rng);
    a.bias = Vector::Zero(out);
    return a;
}

}  // namespace

Network init_network(const MlpSpec& spec, std::uint64_t seed) {
    if (spec.input < 1 || spec.output < 1) throw UsageError("network widths must be at least 1");
    if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0))
        throw UsageError("dropout rate must lie in [0, 1)");
    Rng rng(seed);
    Network net;
    Index in = spec.input;
    for (Index width : spec.hidden) {
        if (width < 1) throw UsageError("network widths must be at least 1");
        net.emplace_back(make_affine(in, width, std::sqrt(6.0 / static_cast<double>(in)), rng));
        BatchNorm bn;
        bn.gamma = Vector::Ones(width);
        bn.beta = Vector::Zero(width);
        bn.running_mean = Vector::Zero(width);
        bn.running_var = Vector::Ones(width);
        bn.momentum = spec.bn_momentum;
        bn.eps = spec.bn_eps;
        net.emplace_back(std::move(bn));
        net.emplace_back(Relu{});
        net.emplace_back(Dropout{spec.dropout_rate});
        in = width;
    }
    net.emplace_back(make_affine(in, spec.output, std::sqrt(6.0 / static_cast<double>(in + spec.output)), rng));
    return net;
}

}  // namespace projlearn::nn
