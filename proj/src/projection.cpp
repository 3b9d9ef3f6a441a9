#include "projlearn/projection.hpp"

#include "projlearn/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace projlearn {

void ProjectionPair::validate() const {
    data.validate();
    if (coords.cols() != 2)
        throw DataError("projection must have 2 columns, got " + std::to_string(coords.cols()));
    if (coords.rows() != data.rows())
        throw DataError("projection has " + std::to_string(coords.rows()) + " rows but dataset has " +
                        std::to_string(data.rows()));
    if (!coords.allFinite()) throw DataError("projection contains non-finite coordinates");
}

Matrix squared_distances(const Matrix& x) {
    const Vector norms = x.rowwise().squaredNorm();
    Matrix d = -2.0 * x * x.transpose();
    d.colwise() += norms;
    d.rowwise() += norms.transpose();
    d = d.cwiseMax(0.0);
    d.diagonal().setZero();
    return d;
}

RowCalibration calibrate_row(const Matrix& sq_dist, Index i, double perplexity) {
    const Index n = sq_dist.rows();
    if (n < 2) throw DataError("need at least 2 points for affinities");

    double d_min = std::numeric_limits<double>::infinity();
    double d_max = 0.0;
    for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        d_min = std::min(d_min, sq_dist(i, j));
        d_max = std::max(d_max, sq_dist(i, j));
    }

    RowCalibration out;
    out.conditional = Vector::Zero(n);
    if (d_max - d_min <= 1e-12 * std::max(1.0, d_max)) {
        out.conditional.setConstant(1.0 / static_cast<double>(n - 1));
        out.conditional(i) = 0.0;
        out.perplexity = static_cast<double>(n - 1);
        return out;
    }

    const double target = std::log(perplexity);
    constexpr double tol = 1e-7;
    double beta = 1.0 / std::max(d_max - d_min, 1e-300);
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        // Distances are shifted by d_min so the nearest neighbour has weight 1.
        double sum = 0.0;
        double weighted = 0.0;
        for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double shifted = sq_dist(i, j) - d_min;
            const double w = std::exp(-beta * shifted);
            out.conditional(j) = w;
            sum += w;
            weighted += w * shifted;
        }
        const double entropy = std::log(sum) + beta * weighted / sum;  // nats
        const double diff = entropy - target;
        if (std::abs(diff) < tol) {
            out.conditional /= sum;
            out.beta = beta;
            out.perplexity = std::exp(entropy);
            return out;
        }
        if (diff > 0) {
            lo = beta;
            beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    throw NumericalError("perplexity search did not converge for row " + std::to_string(i));
}

Matrix tsne_affinities(const Matrix& x, double perplexity) {
    const Index n = x.rows();
    if (!(perplexity > 0.0) || static_cast<double>(n) < 3.0 * perplexity)
        throw UsageError("perplexity " + std::to_string(perplexity) + " too large for " +
                         std::to_string(n) + " points (need n >= 3 * perplexity)");
    const Matrix d = squared_distances(x);
    Matrix p(n, n);
    for (Index i = 0; i < n; ++i) p.row(i) = calibrate_row(d, i, perplexity).conditional.transpose();
    Matrix joint = (p + p.transpose()) / (2.0 * static_cast<double>(n));
    return joint;
}

namespace {

// Student-t kernel numerators with zero diagonal; returns their sum.
double student_kernel(const Matrix& y, Matrix& num) {
    num = squared_distances(y);
    num = (1.0 + num.array()).inverse().matrix();
    num.diagonal().setZero();
    return num.sum();
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

double tsne_kl(const Matrix& p, const Matrix& y) {
    Matrix num;
    const double z = student_kernel(y, num);
    double kl = 0.0;
    for (Index i = 0; i < p.rows(); ++i)
        for (Index j = 0; j < p.cols(); ++j) {
            if (i == j || p(i, j) <= 0.0) continue;
            const double q = std::max(num(i, j) / z, std::numeric_limits<double>::min());
            kl += p(i, j) * std::log(p(i, j) / q);
        }
    return kl;
}

ProjectionPair tsne_embed(const Dataset& data, const TsneConfig& cfg, std::vector<KlSample>* trace) {
    data.validate();
    const Index n = data.rows();
    if (cfg.iterations < 1) throw UsageError("t-SNE needs at least one iteration");
    if (cfg.perplexity < 2.0 || cfg.perplexity >= static_cast<double>(n) / 3.0)
        throw UsageError("perplexity must satisfy 2 <= perplexity < n/3 (n = " + std::to_string(n) + ")");

    // relative to the first row, so an exactly representable translation of
    // the input leaves every subsequent value bit-identical
    const Matrix rel = data.values.rowwise() - data.values.row(0);
    const Matrix x = apply_standardizer(fit_standardizer(rel), rel);
    const Matrix p = tsne_affinities(x, cfg.perplexity);

    Rng rng(cfg.seed);
    std::normal_distribution<double> init(0.0, std::sqrt(cfg.init_variance));
    Matrix y(n, 2);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < 2; ++k) y(i, k) = init(rng);

    Matrix update = Matrix::Zero(n, 2);
    Matrix gains = Matrix::Ones(n, 2);
    Matrix grad(n, 2);
    Matrix num;
    double momentum = cfg.momentum_initial;
    double exaggeration = cfg.early_exaggeration;

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        if (iter == cfg.exaggeration_iters) exaggeration = 1.0;
        if (iter == cfg.momentum_switch_iter) momentum = cfg.momentum_final;

        const double z = student_kernel(y, num);
        // sum_j (p_ij - q_ij) num_ij (y_i - y_j), i.e. dC/dy_i without its constant factor 4
        const Matrix w = ((exaggeration * p).array() - num.array() / z).matrix().cwiseProduct(num);
        grad = w.rowwise().sum().asDiagonal() * y - w * y;

        for (Index i = 0; i < n; ++i)
            for (Index k = 0; k < 2; ++k) {
                const bool flipped = sign(grad(i, k)) != sign(update(i, k));
                gains(i, k) = flipped ? gains(i, k) + 0.2 : gains(i, k) * 0.8;
                gains(i, k) = std::max(gains(i, k), 0.01);
            }
        update = momentum * update - cfg.learning_rate * gains.cwiseProduct(grad);
        y += update;
        y.rowwise() -= y.colwise().mean();

        if (!y.allFinite())
            throw NumericalError("t-SNE diverged at iteration " + std::to_string(iter + 1));
        if (trace && ((iter + 1) % 50 == 0 || iter + 1 == cfg.iterations))
            trace->push_back({iter + 1, tsne_kl(p, y)});
    }

    ProjectionPair out{data, std::move(y), "tsne"};
    out.validate();
    return out;
}

ProjectionPair load_projection(const Dataset& data, const std::filesystem::path& path) {
    auto table = load_csv(path);
    if (table.cols() != 2)
        throw DataError(path.string() + ": projection must have 2 columns, got " +
                        std::to_string(table.cols()));
    if (table.rows() != data.rows())
        throw DataError(path.string() + ": projection has " + std::to_string(table.rows()) +
                        " rows but dataset has " + std::to_string(data.rows()));
    ProjectionPair out{data, std::move(table.values), "file:" + path.filename().string()};
    out.validate();
    return out;
}

}  // namespace projlearn
