#include "projlearn/evaluation.hpp"

#include "projlearn/errors.hpp"
#include "projlearn/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace projlearn {

using nlohmann::json;

double parametric_mse(const TrainedModel& model, const ProjectionPair& pair, std::span<const Index> test) {
    if (test.empty()) throw DataError("parametric MSE needs a non-empty test set");
    const Matrix x = apply_standardizer(model.data_standardizer, select_rows(pair.data.values, test));
    const Matrix y = apply_standardizer(model.projection_standardizer, select_rows(pair.coords, test));
    return mse(model.encode_standardized(x), y);
}

double inverse_mse(const TrainedModel& model, const ProjectionPair& pair, std::span<const Index> test) {
    if (test.empty()) throw DataError("inverse MSE needs a non-empty test set");
    const Matrix x = apply_standardizer(model.data_standardizer, select_rows(pair.data.values, test));
    const Matrix y = apply_standardizer(model.projection_standardizer, select_rows(pair.coords, test));
    return mse(model.decode_standardized(y), x);
}

double reconstruction_mse(const TrainedModel& model, const ProjectionPair& pair, std::span<const Index> test) {
    if (test.empty()) throw DataError("reconstruction MSE needs a non-empty test set");
    const Matrix x = apply_standardizer(model.data_standardizer, select_rows(pair.data.values, test));
    return mse(model.decode_standardized(model.encode_standardized(x)), x);
}

GridBounds projection_bounds(const Matrix& coords, double margin_fraction) {
    if (coords.rows() == 0 || coords.cols() != 2) throw DataError("projection bounds need n x 2 coordinates");
    GridBounds b{coords.col(0).minCoeff(), coords.col(0).maxCoeff(), coords.col(1).minCoeff(),
                 coords.col(1).maxCoeff()};
    const double mx = margin_fraction * (b.x_max - b.x_min);
    const double my = margin_fraction * (b.y_max - b.y_min);
    b.x_min -= mx;
    b.x_max += mx;
    b.y_min -= my;
    b.y_max += my;
    return b;
}

Eigen::Vector2d GradientMap::pixel_center(int row, int col) const {
    const double hx = (bounds.x_max - bounds.x_min) / width;
    const double hy = (bounds.y_max - bounds.y_min) / height;
    return {bounds.x_min + (col + 0.5) * hx, bounds.y_max - (row + 0.5) * hy};
}

GradientMap gradient_map(const DecodeFn& decoder, const GridBounds& bounds, int width, int height) {
    if (width < 3 || height < 3) throw UsageError("gradient map needs at least 3x3 pixels");
    if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min))
        throw DataError("gradient map bounding box has zero extent");

    GradientMap map;
    map.width = width;
    map.height = height;
    map.bounds = bounds;
    map.values.resize(height, width);

    auto decode_row = [&](int row) {
        Matrix pts(width, 2);
        for (int c = 0; c < width; ++c) pts.row(c) = map.pixel_center(row, c).transpose();
        return decoder(pts);
    };

    // Sliding window of three decoded pixel rows.
    Matrix above;
    Matrix current = decode_row(0);
    Matrix below = height > 1 ? decode_row(1) : current;
    for (int r = 0; r < height; ++r) {
        const Matrix& up = r > 0 ? above : current;
        const Matrix& down = r + 1 < height ? below : current;
        for (int c = 0; c < width; ++c) {
            const int left = std::max(c - 1, 0);
            const int right = std::min(c + 1, width - 1);
            const double horizontal = (current.row(left) - current.row(right)).squaredNorm();
            const double vertical = (up.row(c) - down.row(c)).squaredNorm();
            map.values(r, c) = std::sqrt(horizontal + vertical);
        }
        if (r + 1 < height) {
            above = std::move(current);
            current = std::move(below);
            if (r + 2 < height) below = decode_row(r + 2);
        }
    }
    map.max_gradient = map.values.maxCoeff();
    map.avg_gradient = map.values.mean();
    return map;
}

GradientMap gradient_map(const TrainedModel& model, const ProjectionPair& pair, int width, int height,
                         double margin_fraction) {
    return gradient_map([&](const Matrix& y) { return decode(model, y); },
                        projection_bounds(pair.coords, margin_fraction), width, height);
}

Matrix interpolation_strip(const TrainedModel& model, const Eigen::Vector2d& a, const Eigen::Vector2d& b, int k) {
    if (k < 2) throw UsageError("interpolation needs at least 2 samples");
    Matrix pts(k, 2);
    for (int i = 0; i < k; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(k - 1);
        pts.row(i) = (a + t * (b - a)).transpose();
    }
    return decode(model, pts);
}

Aggregate aggregate(std::span<const double> values) {
    Aggregate a;
    if (values.empty()) return a;
    // shifted by the first value so identical runs give exactly sd 0
    const double n = static_cast<double>(values.size());
    const double k = values.front();
    double sum = 0.0, sq = 0.0;
    for (double v : values) {
        sum += v - k;
        sq += (v - k) * (v - k);
    }
    a.mean = k + sum / n;
    a.sd = std::sqrt(std::max(0.0, sq / n - (sum / n) * (sum / n)));
    return a;
}

namespace {
template <class Field>
Aggregate aggregate_field(const MetricsReport& r, Arch a, Field field) {
    std::vector<double> v;
    for (const auto& run : r.runs)
        if (run.arch == a) v.push_back(run.*field);
    return aggregate(v);
}
}  // namespace

Aggregate MetricsReport::parametric(Arch a) const { return aggregate_field(*this, a, &RunMetrics::parametric_mse); }
Aggregate MetricsReport::inverse(Arch a) const { return aggregate_field(*this, a, &RunMetrics::inverse_mse); }
Aggregate MetricsReport::train_time(Arch a) const { return aggregate_field(*this, a, &RunMetrics::train_seconds); }
Aggregate MetricsReport::infer_time(Arch a) const { return aggregate_field(*this, a, &RunMetrics::infer_seconds); }

std::vector<Arch> MetricsReport::architectures() const {
    std::vector<Arch> out;
    for (const auto& r : runs)
        if (std::find(out.begin(), out.end(), r.arch) == out.end()) out.push_back(r.arch);
    return out;
}

MetricsReport evaluate_ensemble(std::span<const EnsembleMember> members, const ProjectionPair& pair) {
    if (members.empty()) throw UsageError("evaluation needs at least one run");
    MetricsReport report;
    report.dataset = pair.data.name;
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& m = members[k];
        RunMetrics r;
        r.run = static_cast<int>(k);
        r.arch = m.model.architecture.tag;
        r.train_seconds = m.train_seconds;
        const auto start = std::chrono::steady_clock::now();
        r.parametric_mse = parametric_mse(m.model, pair, m.split.test);
        r.inverse_mse = inverse_mse(m.model, pair, m.split.test);
        r.infer_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.runs.push_back(r);
    }
    return report;
}

json report_to_json(const MetricsReport& report, bool include_timing) {
    json runs = json::array();
    for (const auto& r : report.runs) {
        json j = {{"run", r.run},
                  {"arch", to_string(r.arch)},
                  {"parametric_mse", r.parametric_mse},
                  {"inverse_mse", r.inverse_mse}};
        if (include_timing) {
            j["train_s"] = r.train_seconds;
            j["infer_s"] = r.infer_seconds;
        }
        runs.push_back(std::move(j));
    }
    json summary = json::object();
    for (Arch a : report.architectures()) {
        const auto p = report.parametric(a);
        const auto i = report.inverse(a);
        json s = {{"parametric_mse_mean", p.mean},
                  {"parametric_mse_sd", p.sd},
                  {"inverse_mse_mean", i.mean},
                  {"inverse_mse_sd", i.sd}};
        if (include_timing) {
            s["train_s_mean"] = report.train_time(a).mean;
            s["infer_s_mean"] = report.infer_time(a).mean;
        }
        summary[std::string(to_string(a))] = std::move(s);
    }
    return {{"dataset", report.dataset},
            {"mse_units", "standardized, per-sample squared L2 norm"},
            {"sd", "population"},
            {"runs", runs},
            {"summary", summary}};
}

std::string report_to_csv(const MetricsReport& report, bool include_timing) {
    std::ostringstream out;
    out << "run,arch,dataset,parametric_mse,inverse_mse,train_s,infer_s\n";
    for (const auto& r : report.runs) {
        out << r.run << ',' << to_string(r.arch) << ',' << report.dataset << ',' << format_double(r.parametric_mse)
            << ',' << format_double(r.inverse_mse) << ',';
        if (include_timing) out << format_double(r.train_seconds) << ',' << format_double(r.infer_seconds);
        else out << ',';
        out << '\n';
    }
    return out.str();
}

std::vector<ScanRow> parameter_scan(const ProjectionPair& pair, const TrainingConfig& base,
                                    std::span<const WeightSetting> grid, int runs_per_point) {
    if (grid.empty()) throw UsageError("parameter scan needs a non-empty grid");
    if (runs_per_point < 1) throw UsageError("parameter scan needs at least one run per point");
    std::vector<ScanRow> rows;
    for (const auto& w : grid) {
        TrainingConfig cfg = base;
        auto& a = cfg.architecture;
        a.omega = w.omega.value_or(a.omega);
        a.alpha = w.alpha.value_or(a.alpha);
        a.beta = w.beta.value_or(a.beta);
        const auto members = train_ensemble(pair, cfg, runs_per_point);
        const auto report = evaluate_ensemble(members, pair);
        std::vector<double> rec;
        for (const auto& m : members) rec.push_back(reconstruction_mse(m.model, pair, m.split.test));
        rows.push_back({a.omega, a.alpha, a.beta, report.parametric(a.tag), report.inverse(a.tag), aggregate(rec)});
    }
    const Arch tag = base.architecture.tag;
    std::stable_sort(rows.begin(), rows.end(), [tag](const ScanRow& l, const ScanRow& r) {
        if (tag == Arch::ael) return l.omega < r.omega;
        return std::tie(l.alpha, l.beta) < std::tie(r.alpha, r.beta);
    });
    return rows;
}

std::string scan_to_csv(const std::vector<ScanRow>& rows, Arch arch) {
    std::ostringstream out;
    out << "arch,omega,alpha,beta,parametric_mse_mean,parametric_mse_sd,inverse_mse_mean,inverse_mse_sd,"
           "reconstruction_mse_mean,reconstruction_mse_sd\n";
    for (const auto& r : rows)
        out << to_string(arch) << ',' << format_double(r.omega) << ',' << format_double(r.alpha) << ','
            << format_double(r.beta) << ',' << format_double(r.parametric.mean) << ','
            << format_double(r.parametric.sd) << ',' << format_double(r.inverse.mean) << ','
            << format_double(r.inverse.sd) << ',' << format_double(r.reconstruction.mean) << ','
            << format_double(r.reconstruction.sd) << '\n';
    return out.str();
}

}  // namespace projlearn
