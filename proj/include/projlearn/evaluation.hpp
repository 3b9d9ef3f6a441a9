#pragma once

#include "projlearn/training.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace projlearn {

/// Mean squared norm of encode(x) - P(x) over the test rows, in the model's
/// standardized projection units.
double parametric_mse(const TrainedModel& model, const ProjectionPair& pair, std::span<const Index> test);
/// Mean squared norm of decode(P(x)) - x over the test rows, in the model's
/// standardized data units.
double inverse_mse(const TrainedModel& model, const ProjectionPair& pair, std::span<const Index> test);

/// Mean squared norm of decode(encode(x)) - x over the test rows, in the
/// model's standardized data units. Unlike inverse_mse this goes through the
/// model's own latent instead of the reference projection.
double reconstruction_mse(const TrainedModel& model, const ProjectionPair& pair, std::span<const Index> test);

struct GridBounds {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
};

/// Bounding box of `coords` grown by `margin_fraction` of its extent on every side.
GridBounds projection_bounds(const Matrix& coords, double margin_fraction);

/// values(r, c) holds G at the pixel in row r (top row = largest y) and column c.
struct GradientMap {
    int width = 0;
    int height = 0;
    Matrix values;
    GridBounds bounds;
    double max_gradient = 0.0;
    double avg_gradient = 0.0;

    /// Center of pixel (row, col) in projection units.
    Eigen::Vector2d pixel_center(int row, int col) const;
};

using DecodeFn = std::function<Matrix(const Matrix&)>;

/// G = sqrt(|f(left) - f(right)|^2 + |f(up) - f(down)|^2) with neighbours
/// at adjacent pixel centers. On the border the missing neighbour is
/// replaced by the pixel itself (one-sided difference).
GradientMap gradient_map(const DecodeFn& decoder, const GridBounds& bounds, int width, int height);
GradientMap gradient_map(const TrainedModel& model, const ProjectionPair& pair, int width = 256,
                         int height = 256, double margin_fraction = 0.05);

/// Decodes k equally spaced points on the segment a -> b (k x d).
Matrix interpolation_strip(const TrainedModel& model, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                           int k = 10);

struct RunMetrics {
    int run = 0;
    Arch arch = Arch::ael;
    double parametric_mse = 0.0;
    double inverse_mse = 0.0;
    double train_seconds = 0.0;
    double infer_seconds = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;  // population
};

Aggregate aggregate(std::span<const double> values);

struct MetricsReport {
    std::string dataset;
    std::vector<RunMetrics> runs;

    /// Aggregates over the runs of one architecture.
    Aggregate parametric(Arch a) const;
    Aggregate inverse(Arch a) const;
    Aggregate train_time(Arch a) const;
    Aggregate infer_time(Arch a) const;
    std::vector<Arch> architectures() const;
};

MetricsReport evaluate_ensemble(std::span<const EnsembleMember> members, const ProjectionPair& pair);

nlohmann::json report_to_json(const MetricsReport& report, bool include_timing = true);
/// `run,arch,dataset,parametric_mse,inverse_mse,train_s,infer_s`; without
/// timing the two time columns are left empty.
std::string report_to_csv(const MetricsReport& report, bool include_timing = true);

/// One grid point of a loss-weight scan; unset weights keep the base value.
struct WeightSetting {
    std::optional<double> omega;
    std::optional<double> alpha;
    std::optional<double> beta;
};

struct ScanRow {
    double omega = 0.0, alpha = 0.0, beta = 0.0;
    Aggregate parametric;
    Aggregate inverse;
    Aggregate reconstruction;
};

/// Trains `runs_per_point` models per weight setting; rows are sorted by the
/// architecture's scanned weights (omega for AEL, alpha then beta for VAEL).
std::vector<ScanRow> parameter_scan(const ProjectionPair& pair, const TrainingConfig& base,
                                    std::span<const WeightSetting> grid, int runs_per_point);

std::string scan_to_csv(const std::vector<ScanRow>& rows, Arch arch);

}  // namespace projlearn
