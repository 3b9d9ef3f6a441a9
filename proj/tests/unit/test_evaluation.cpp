#include "projlearn/errors.hpp"
#include "projlearn/evaluation.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace projlearn;

namespace {

Matrix random_matrix(Rng& rng, Index rows, Index cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

// Projection equal to the data; hand-built affine encoder/decoder.
struct Fixture {
    ProjectionPair pair;
    TrainedModel model;
};

Fixture linear_fixture(const Matrix& encoder_w, const Matrix& decoder_w) {
    Rng rng(1);
    Fixture f;
    f.pair.data.values = random_matrix(rng, 40, 2) * 3.0;
    f.pair.data.values.col(1).array() += 5.0;
    f.pair.coords = f.pair.data.values;
    f.model.architecture.input_dim = 2;
    f.model.encoder = {nn::Affine{encoder_w, Vector::Zero(2)}};
    f.model.decoder = {nn::Affine{decoder_w, Vector::Zero(2)}};
    f.model.data_standardizer = fit_standardizer(f.pair.data.values);
    f.model.projection_standardizer = fit_standardizer(f.pair.coords);
    return f;
}

std::vector<Index> all_rows(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

GridBounds unit_bounds(int w, int h) { return {0.0, static_cast<double>(w), 0.0, static_cast<double>(h)}; }

}  // namespace

TEST_CASE("mse metrics: perfect and mean-predicting models") {
    auto perfect = linear_fixture(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    const auto rows = all_rows(40);
    CHECK(parametric_mse(perfect.model, perfect.pair, rows) < 1e-24);
    CHECK(inverse_mse(perfect.model, perfect.pair, rows) < 1e-24);

    auto mean = linear_fixture(Matrix::Zero(2, 2), Matrix::Zero(2, 2));
    CHECK(parametric_mse(mean.model, mean.pair, rows) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(inverse_mse(mean.model, mean.pair, rows) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(parametric_mse(mean.model, mean.pair, std::vector<Index>{}), DataError);
    CHECK_THROWS_AS(inverse_mse(mean.model, mean.pair, std::vector<Index>{}), DataError);
}

TEST_CASE("reconstruction mse goes through the model's own latent") {
    const auto rows = all_rows(40);
    auto perfect = linear_fixture(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    CHECK(reconstruction_mse(perfect.model, perfect.pair, rows) < 1e-24);

    // decoder is exact on the reference projection, encoder doubles it
    auto doubled = linear_fixture(2.0 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    CHECK(inverse_mse(doubled.model, doubled.pair, rows) < 1e-24);
    CHECK(reconstruction_mse(doubled.model, doubled.pair, rows) == doctest::Approx(2.0).epsilon(1e-12));

    auto collapsed = linear_fixture(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
    CHECK(reconstruction_mse(collapsed.model, collapsed.pair, rows) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(reconstruction_mse(collapsed.model, collapsed.pair, std::vector<Index>{}), DataError);
}

TEST_CASE("mse metrics do not depend on test row order") {
    Matrix w(2, 2);
    w << 0.5, 0.2, -0.3, 0.9;
    auto f = linear_fixture(w, w.transpose());
    std::vector<Index> rows{3, 17, 5, 29, 0, 11};
    const double p = parametric_mse(f.model, f.pair, rows), q = inverse_mse(f.model, f.pair, rows);
    std::reverse(rows.begin(), rows.end());
    CHECK(parametric_mse(f.model, f.pair, rows) == doctest::Approx(p).epsilon(1e-14));
    CHECK(inverse_mse(f.model, f.pair, rows) == doctest::Approx(q).epsilon(1e-14));
}

TEST_CASE("gradient map: constant decoder") {
    const auto map = gradient_map([](const Matrix& y) { return Matrix::Constant(y.rows(), 4, 1.5); },
                                  unit_bounds(8, 6), 8, 6);
    CHECK(map.values.rows() == 6);
    CHECK(map.values.cols() == 8);
    CHECK(map.values.isZero());
    CHECK(map.max_gradient == 0.0);
    CHECK(map.avg_gradient == 0.0);
}

TEST_CASE("gradient map: identity decoder on a unit grid") {
    const auto map = gradient_map([](const Matrix& y) { return y; }, unit_bounds(10, 7), 10, 7);
    for (int r = 1; r < 6; ++r)
        for (int c = 1; c < 9; ++c) CHECK(std::abs(map.values(r, c) - 2.0 * std::sqrt(2.0)) < 1e-12);
    // corners see one-sided differences in both directions
    CHECK(std::abs(map.values(0, 0) - std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(map.values(0, 4) - std::sqrt(5.0)) < 1e-12);
}

TEST_CASE("gradient map: linear decoder matches the closed form") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(rng, 5, 2);
        const GridBounds b{-3.0 * (trial + 1), 2.0, -1.0, 4.5 + trial};
        const int w = 12 + trial, h = 9;
        const auto map = gradient_map([&](const Matrix& y) { return Matrix(y * a.transpose()); }, b, w, h);
        const double hx = (b.x_max - b.x_min) / w, hy = (b.y_max - b.y_min) / h;
        const double expected = std::sqrt((a * Eigen::Vector2d(2 * hx, 0)).squaredNorm() +
                                          (a * Eigen::Vector2d(0, 2 * hy)).squaredNorm());
        for (int r = 1; r + 1 < h; ++r)
            for (int c = 1; c + 1 < w; ++c) CHECK(std::abs(map.values(r, c) - expected) <= 1e-9);
    }
}

TEST_CASE("gradient map: statistics and homogeneity") {
    auto f = [](const Matrix& y) {
        Matrix out(y.rows(), 3);
        out.col(0) = y.col(0).array().sin();
        out.col(1) = (y.col(0).array() * y.col(1).array()).matrix();
        out.col(2) = y.col(1).array().square();
        return out;
    };
    const GridBounds b{-2, 2, -1, 3};
    const auto map = gradient_map(f, b, 20, 15);
    CHECK(map.max_gradient == map.values.maxCoeff());
    CHECK(std::abs(map.avg_gradient - map.values.mean()) <= 1e-12);
    CHECK(map.avg_gradient <= map.max_gradient);
    CHECK(map.values.minCoeff() >= 0.0);
    const auto scaled = gradient_map([&](const Matrix& y) { return Matrix(3.0 * f(y)); }, b, 20, 15);
    CHECK((scaled.values - 3.0 * map.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient map: geometry and errors") {
    GradientMap m;
    m.width = 4;
    m.height = 2;
    m.bounds = {0, 4, 0, 2};
    CHECK(m.pixel_center(0, 0) == Eigen::Vector2d(0.5, 1.5));
    CHECK(m.pixel_center(1, 3) == Eigen::Vector2d(3.5, 0.5));
    auto id = [](const Matrix& y) { return y; };
    CHECK_THROWS_AS(gradient_map(id, {0, 0, 0, 1}, 5, 5), DataError);
    CHECK_THROWS_AS(gradient_map(id, {0, 1, 0, 1}, 2, 5), UsageError);

    Matrix coords(3, 2);
    coords << 0, 0, 10, 2, 5, 1;
    const auto b = projection_bounds(coords, 0.05);
    CHECK(b.x_min == doctest::Approx(-0.5));
    CHECK(b.x_max == doctest::Approx(10.5));
    CHECK(b.y_min == doctest::Approx(-0.1));
    CHECK(b.y_max == doctest::Approx(2.1));
}

TEST_CASE("gradient map from a model uses the projection bounds") {
    auto f = linear_fixture(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    const auto map = gradient_map(f.model, f.pair, 16, 16, 0.05);
    const auto expected = projection_bounds(f.pair.coords, 0.05);
    CHECK(map.bounds.x_min == expected.x_min);
    CHECK(map.bounds.y_max == expected.y_max);
    // identity in original units
    const double hx = (expected.x_max - expected.x_min) / 16, hy = (expected.y_max - expected.y_min) / 16;
    CHECK(map.values(5, 5) == doctest::Approx(2.0 * std::hypot(hx, hy)).epsilon(1e-9));
}

TEST_CASE("interpolation strip") {
    auto f = linear_fixture(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    const Matrix s = interpolation_strip(f.model, {0, 0}, {9, 0}, 10);
    REQUIRE(s.rows() == 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(s(i, 0) == doctest::Approx(i).epsilon(1e-12));
        CHECK(std::abs(s(i, 1)) < 1e-12);
    }
    const Matrix two = interpolation_strip(f.model, {1, 2}, {3, 4}, 2);
    Matrix ends(2, 2);
    ends << 1, 2, 3, 4;
    CHECK(two == decode(f.model, ends));
    const Matrix same = interpolation_strip(f.model, {1, 2}, {1, 2}, 4);
    for (int i = 1; i < 4; ++i) CHECK(same.row(i) == same.row(0));
    CHECK_THROWS_AS(interpolation_strip(f.model, {0, 0}, {1, 1}, 1), UsageError);
}

TEST_CASE("aggregate: mean and population deviation") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto a = aggregate(v);
    CHECK(a.mean == 2.5);
    CHECK(a.sd == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
    const std::vector<double> same(10, 0.7);
    CHECK(aggregate(same).sd == 0.0);
}

TEST_CASE("ensemble report") {
    TsneConfig tc;
    tc.seed = 1;
    tc.iterations = 300;
    tc.perplexity = 10.0;
    const auto pair = tsne_embed(generate_rings(20, 3), tc);
    TrainingConfig cfg;
    cfg.architecture.input_dim = 3;
    cfg.architecture.encoder_hidden = {8};
    cfg.architecture.decoder_hidden = {8};
    cfg.epochs = 2;
    auto members = train_ensemble(pair, cfg, 3);
    auto report = evaluate_ensemble(members, pair);
    report.dataset = "rings";
    REQUIRE(report.runs.size() == 3);
    std::vector<double> p;
    for (const auto& r : report.runs) {
        p.push_back(r.parametric_mse);
        CHECK(r.train_seconds > 0.0);
        CHECK(r.infer_seconds > 0.0);
    }
    CHECK(std::abs(report.parametric(Arch::ael).mean - (p[0] + p[1] + p[2]) / 3.0) <= 1e-12);

    std::vector<EnsembleMember> clones(4, members[0]);
    CHECK(evaluate_ensemble(clones, pair).inverse(Arch::ael).sd == 0.0);

    const std::string csv = report_to_csv(report, false);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "run,arch,dataset,parametric_mse,inverse_mse,train_s,infer_s");
    std::getline(in, line);
    CHECK(line.rfind("0,ael,rings,", 0) == 0);
    CHECK(line.substr(line.size() - 2) == ",,");
    CHECK(report_to_csv(report, true).find(",,") == std::string::npos);

    const auto j = report_to_json(report);
    CHECK(j.at("runs").size() == 3);
    CHECK_THROWS_AS(evaluate_ensemble(std::vector<EnsembleMember>{}, pair), UsageError);
}

TEST_CASE("parameter scan: shape and ordering") {
    TsneConfig tc;
    tc.seed = 1;
    tc.iterations = 300;
    tc.perplexity = 10.0;
    const auto pair = tsne_embed(generate_rings(20, 3), tc);
    TrainingConfig cfg;
    cfg.architecture.input_dim = 3;
    cfg.architecture.encoder_hidden = {8};
    cfg.architecture.decoder_hidden = {8};
    cfg.epochs = 1;
    const std::vector<WeightSetting> omegas{{5.0, {}, {}}, {0.1, {}, {}}, {1.0, {}, {}}, {0.5, {}, {}}};
    const auto rows = parameter_scan(pair, cfg, omegas, 1);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].omega == 0.1);
    CHECK(rows[3].omega == 5.0);
    const auto csv = scan_to_csv(rows, Arch::ael);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv.rfind("arch,omega,alpha,beta,parametric_mse_mean,parametric_mse_sd,inverse_mse_mean,inverse_mse_sd,"
                    "reconstruction_mse_mean,reconstruction_mse_sd\n",
                    0) == 0);
    for (const auto& r : rows) CHECK(r.reconstruction.mean > 0.0);

    cfg.architecture.tag = Arch::vael;
    const std::vector<WeightSetting> vael{{{}, 1.0, 0.1}, {{}, 0.5, 0.0}};
    const auto vrows = parameter_scan(pair, cfg, vael, 1);
    REQUIRE(vrows.size() == 2);
    CHECK(vrows[1].alpha == 1.0);
    CHECK(vrows[1].beta == 0.1);
    CHECK_THROWS_AS(parameter_scan(pair, cfg, std::vector<WeightSetting>{}, 1), UsageError);
}
