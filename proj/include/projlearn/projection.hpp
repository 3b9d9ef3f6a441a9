#pragma once

#include "projlearn/data.hpp"
#include "projlearn/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace projlearn {

/// A dataset together with its reference 2D projection, row-aligned.
struct ProjectionPair {
    Dataset data;
    Matrix coords;  // n x 2
    std::string method_tag;

    void validate() const;
};

/// Defaults are the reference t-SNE implementation's standard settings. As in
/// that implementation, the step is learning_rate times the KL gradient with
/// its constant factor 4 dropped, combined with momentum and adaptive gains.
struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    int momentum_switch_iter = 250;
    double init_variance = 1e-4;
    std::uint64_t seed = 0;
};

struct KlSample {
    int iteration;  // 1-based count of completed iterations
    double kl;
};

/// Pairwise squared Euclidean distances between rows.
Matrix squared_distances(const Matrix& x);

struct RowCalibration {
    Vector conditional;  // p_{j|i}; entry i is zero
    double beta = 0.0;   // precision 1 / (2 sigma^2)
    double perplexity = 0.0;  // achieved 2^H
};

/// Binary search on the Gaussian precision of row `i` so the conditional
/// distribution reaches the target perplexity. Rows whose neighbor distances
/// are all equal are uniform for every bandwidth and are returned as such.
RowCalibration calibrate_row(const Matrix& sq_dist, Index i, double perplexity);

/// Symmetric joint affinities p_ij = (p_{j|i} + p_{i|j}) / 2n.
Matrix tsne_affinities(const Matrix& x, double perplexity);

/// KL(P || Q) with the Student-t kernel on `y`.
double tsne_kl(const Matrix& p, const Matrix& y);

/// Exact O(n^2) t-SNE on the standardized data. `trace` receives the KL
/// divergence every 50 iterations and after the last one.
ProjectionPair tsne_embed(const Dataset& data, const TsneConfig& cfg,
                          std::vector<KlSample>* trace = nullptr);

/// Two-column CSV, row i aligned with data row i.
ProjectionPair load_projection(const Dataset& data, const std::filesystem::path& path);

}  // namespace projlearn
