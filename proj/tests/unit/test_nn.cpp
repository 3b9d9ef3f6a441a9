#include "projlearn/errors.hpp"
#include "projlearn/nn.hpp"
#include "support/gradcheck.hpp"

#include <doctest.h>

#include <random>

using namespace projlearn;
using namespace projlearn::nn;

namespace {

Matrix random_matrix(Rng& rng, Index rows, Index cols, double sd = 1.0) {
    std::normal_distribution<double> g(0.0, sd);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

Affine random_affine(Rng& rng, Index in, Index out) {
    return Affine{random_matrix(rng, out, in, 0.7), random_matrix(rng, out, 1, 0.3)};
}

BatchNorm random_batchnorm(Rng& rng, Index width) {
    BatchNorm bn;
    bn.gamma = (random_matrix(rng, width, 1, 0.3).array() + 1.0).matrix();
    bn.beta = random_matrix(rng, width, 1, 0.3);
    bn.running_mean = Vector::Zero(width);
    bn.running_var = Vector::Ones(width);
    return bn;
}

// Random composition of 1..5 layers over all layer kinds, widths <= 8.
Network random_network(Rng& rng, Index& in_width) {
    std::uniform_int_distribution<int> depth(1, 5), kind(0, 3);
    std::uniform_int_distribution<Index> width(1, 8);
    in_width = width(rng);
    Index w = in_width;
    Network net;
    const int n = depth(rng);
    for (int l = 0; l < n; ++l) {
        switch (kind(rng)) {
            case 0: {
                const Index out = width(rng);
                net.emplace_back(random_affine(rng, w, out));
                w = out;
                break;
            }
            case 1: net.emplace_back(random_batchnorm(rng, w)); break;
            case 2: net.emplace_back(Relu{}); break;
            default: net.emplace_back(Dropout{0.3}); break;
        }
    }
    return net;
}

}  // namespace

TEST_CASE("forward: identity affine and zero-rate dropout") {
    Rng rng(1);
    const Matrix x = random_matrix(rng, 4, 3);
    Network affine{Affine{Matrix::Identity(3, 3), Vector::Zero(3)}};
    CHECK(forward(affine, x, Mode::train, rng).output == x);
    CHECK(infer(affine, x) == x);
    Network drop{Dropout{0.0}};
    CHECK(forward(drop, x, Mode::train, rng).output == x);
    CHECK(infer(drop, x) == x);
}

TEST_CASE("forward: relu clamps negatives") {
    Matrix x(1, 3);
    x << -1, 0, 2;
    Network net{Relu{}};
    Matrix expected(1, 3);
    expected << 0, 0, 2;
    CHECK(infer(net, x) == expected);
}

TEST_CASE("forward: batchnorm normalizes and tracks running statistics") {
    Rng rng(2);
    Matrix x = random_matrix(rng, 32, 5, 2.0);
    x.array() += 3.0;
    BatchNorm bn = random_batchnorm(rng, 5);
    bn.gamma.setOnes();
    bn.beta.setZero();
    Network net{bn};
    const Matrix y = forward(net, x, Mode::train, rng).output;
    for (Index j = 0; j < 5; ++j) {
        const double mean = y.col(j).mean();
        const double var = (y.col(j).array() - mean).square().mean();
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-5);
    }
    const auto& after = std::get<BatchNorm>(net[0]);
    const Eigen::RowVectorXd mu = x.colwise().mean();
    const Eigen::RowVectorXd var = (x.rowwise() - mu).array().square().colwise().mean();
    CHECK((after.running_mean - 0.1 * mu.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((after.running_var - (0.9 * Vector::Ones(5) + 0.1 * var.transpose())).cwiseAbs().maxCoeff() < 1e-12);

    // inference uses the running statistics
    const Matrix z = infer(net, x);
    const Matrix manual = ((x.rowwise() - after.running_mean.transpose()).array().rowwise() /
                           (after.running_var.array() + after.eps).sqrt().transpose())
                              .matrix();
    CHECK((z - manual).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward: shape and batch-size errors") {
    Rng rng(3);
    Network net{Affine{Matrix::Zero(2, 3), Vector::Zero(2)}, random_batchnorm(rng, 2)};
    CHECK_THROWS_AS(forward(net, Matrix::Zero(4, 2), Mode::train, rng), DataError);
    CHECK_THROWS_AS(forward(net, Matrix::Zero(1, 3), Mode::train, rng), DataError);
    CHECK_NOTHROW(infer(net, Matrix::Zero(1, 3)));
}

TEST_CASE("inference is a pure function of parameters and input") {
    Rng rng(4);
    MlpSpec spec{.input = 3, .hidden = {8, 8}, .output = 2};
    Network net = init_network(spec, 9);
    const Matrix x = random_matrix(rng, 10, 3);
    const Matrix a = infer(net, x);
    CHECK(infer(net, x) == a);
    CHECK(forward(net, x, Mode::inference, rng).output == a);
}

TEST_CASE("dropout preserves the expected activation") {
    Rng rng(5);
    Network net{Dropout{0.25}};
    const Matrix x = Matrix::Constant(1, 1, 3.0);
    double sum = 0.0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) sum += forward(net, x, Mode::train, rng).output(0, 0);
    CHECK(std::abs(sum / trials - 3.0) < 0.02 * 3.0);
}

TEST_CASE("backward: matches finite differences on random compositions") {
    Rng rng(6);
    testing::GradCheck total;
    for (int trial = 0; trial < 200; ++trial) {
        Index in = 0;
        Network net = random_network(rng, in);
        Matrix x = random_matrix(rng, 4, in);
        const std::uint64_t mask_seed = rng();
        Rng r0(mask_seed);
        auto pass = forward(net, x, Mode::train, r0);
        const Matrix weights = random_matrix(rng, pass.output.rows(), pass.output.cols());
        auto loss = [&] {
            Rng r(mask_seed);
            return (forward(net, x, Mode::train, r).output.array() * weights.array()).sum();
        };
        const auto back = backward(net, pass.tape, weights);
        auto views = parameter_views(net);
        testing::GradCheck g;
        testing::check_parameters(g, views, back.parameter_gradients, loss);
        testing::check_matrix(g, x, back.input_gradient, loss, "input");
        testing::merge(total, g);
    }
    INFO("worst: " << total.worst << ", skipped " << total.skipped);
    CHECK(total.max_rel_error < 1e-4);
    CHECK(total.skipped * 100 < total.checked);
}

TEST_CASE("backward: zero output gradient gives zero gradients") {
    Rng rng(7);
    Network net = init_network({.input = 3, .hidden = {5, 4}, .output = 2}, 1);
    auto pass = forward(net, random_matrix(rng, 6, 3), Mode::train, rng);
    const auto back = backward(net, pass.tape, Matrix::Zero(6, 2));
    CHECK(back.input_gradient.isZero());
    for (const auto& g : back.parameter_gradients) CHECK(g.isZero());
}

TEST_CASE("backward: single affine layer with half squared norm") {
    Rng rng(8);
    Network net{random_affine(rng, 3, 2)};
    const Matrix x = random_matrix(rng, 5, 3);
    auto pass = forward(net, x, Mode::train, rng);
    const Matrix y = pass.output;
    const auto back = backward(net, pass.tape, y / 5.0);
    const Matrix expected = y.transpose() * x / 5.0;
    const Eigen::Map<const Matrix> dw(back.parameter_gradients[0].data(), 2, 3);
    CHECK((dw - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward: tape mismatch is rejected") {
    Rng rng(9);
    Network a{Relu{}}, b{Relu{}, Relu{}};
    auto pass = forward(a, Matrix::Ones(2, 2), Mode::train, rng);
    CHECK_THROWS_AS(backward(b, pass.tape, Matrix::Ones(2, 2)), DataError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Network net{Affine{Matrix::Constant(2, 2, 0.5), Vector::Ones(2)}};
    auto state = make_adam(net, 1e-3);
    auto views = parameter_views(net);
    adam_step(state, views, {Vector::Zero(4), Vector::Zero(2)});
    CHECK(state.step == 1);
    CHECK(std::get<Affine>(net[0]).weights == Matrix::Constant(2, 2, 0.5));
    CHECK(std::get<Affine>(net[0]).bias == Vector::Ones(2));
}

TEST_CASE("adam: first step moves by about lr against the gradient sign") {
    Network net{Affine{Matrix::Zero(1, 3), Vector::Zero(1)}};
    auto state = make_adam(net, 1e-3);
    auto views = parameter_views(net);
    Vector g(3);
    g << 0.5, -2.0, 1e-3;
    adam_step(state, views, {g, Vector::Zero(1)});
    const auto& w = std::get<Affine>(net[0]).weights;
    for (Index k = 0; k < 3; ++k) {
        const double expected = -1e-3 * g(k) / (std::abs(g(k)) + 1e-8);
        CHECK(w(0, k) == doctest::Approx(expected).epsilon(1e-9));
        CHECK(std::abs(std::abs(w(0, k)) - 1e-3) < 1e-7);
    }
}

TEST_CASE("adam: minimizes a quadratic") {
    Network net{Affine{Matrix::Ones(1, 1), Vector::Zero(1)}};
    auto state = make_adam(net, 0.1);
    auto views = parameter_views(net);
    for (int t = 0; t < 200; ++t) {
        const double theta = std::get<Affine>(net[0]).weights(0, 0);
        adam_step(state, views, {Vector::Constant(1, 2.0 * theta), Vector::Zero(1)});
    }
    CHECK(std::abs(std::get<Affine>(net[0]).weights(0, 0)) < 1e-2);
}

TEST_CASE("adam: non-finite gradient names the tensor and changes nothing") {
    Network net{Affine{Matrix::Ones(1, 2), Vector::Zero(1)}};
    auto state = make_adam(net, 0.1);
    auto views = parameter_views(net);
    Vector bad(1);
    bad << std::nan("");
    CHECK_THROWS_WITH_AS(adam_step(state, views, {Vector::Ones(2), bad}), doctest::Contains("layer 0 bias"),
                         NumericalError);
    CHECK(std::get<Affine>(net[0]).weights == Matrix::Ones(1, 2));
    CHECK(state.step == 0);
}

TEST_CASE("init: deterministic, bounded, biases zero") {
    const MlpSpec spec{.input = 10, .hidden = {16, 8}, .output = 2};
    const Network a = init_network(spec, 42);
    const Network b = init_network(spec, 42);
    REQUIRE(a.size() == 9);
    Index fan_in = 10;
    for (std::size_t l = 0; l < a.size(); ++l) {
        if (const auto* aff = std::get_if<Affine>(&a[l])) {
            CHECK(aff->weights == std::get<Affine>(b[l]).weights);
            CHECK(aff->bias.isZero());
            const bool head = l + 1 == a.size();
            const double bound = head ? std::sqrt(6.0 / static_cast<double>(fan_in + aff->out()))
                                      : std::sqrt(6.0 / static_cast<double>(fan_in));
            CHECK(aff->weights.cwiseAbs().maxCoeff() <= bound);
            fan_in = aff->out();
        } else if (const auto* bn = std::get_if<BatchNorm>(&a[l])) {
            CHECK((bn->gamma.array() == 1.0).all());
            CHECK(bn->beta.isZero());
        }
    }
    CHECK(std::get<Affine>(init_network(spec, 43)[0]).weights != std::get<Affine>(a[0]).weights);
    CHECK(parameter_count(a) == 10 * 16 + 16 + 32 + 16 * 8 + 8 + 16 + 8 * 2 + 2);
    CHECK(input_width(a) == 10);
    CHECK(output_width(a) == 2);
    CHECK_THROWS_AS(init_network({.input = 3, .hidden = {0}, .output = 2}, 1), UsageError);
}
