#include "projlearn/cli.hpp"
#include "projlearn/errors.hpp"
#include "projlearn/evaluation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace projlearn;

namespace {

ProjectionPair make_pair(const Matrix& values, const Matrix& coords, std::optional<std::vector<int>> labels) {
    ProjectionPair p{Dataset{values, std::move(labels), "array"}, coords, "array"};
    p.validate();
    return p;
}

std::vector<Index> all_rows(Index n) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Learned forward and inverse projections";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<UsageError>(m, "UsageError", error.ptr());
    auto data_error = py::register_exception<DataError>(m, "DataError", error.ptr());
    py::register_exception<ModelFormatError>(m, "ModelFormatError", data_error.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", error.ptr());

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("values", &Dataset::values)
        .def_readonly("labels", &Dataset::labels)
        .def_readonly("name", &Dataset::name)
        .def("__len__", &Dataset::rows);

    m.def("generate_rings", &generate_rings, py::arg("points_per_ring") = 60, py::arg("seed") = 0);
    m.def("load_idx", &load_idx, py::arg("images"), py::arg("labels"));
    m.def(
        "load_csv",
        [](const std::filesystem::path& path, bool has_labels, bool skip_header) {
            return load_csv(path, CsvOptions{has_labels, skip_header});
        },
        py::arg("path"), py::arg("has_labels") = false, py::arg("skip_header") = false);
    m.def(
        "split",
        [](Index n, double fraction_test, std::uint64_t seed) {
            auto s = split(n, fraction_test, seed);
            return py::make_tuple(s.train, s.test);
        },
        py::arg("n"), py::arg("fraction_test") = 0.2, py::arg("seed") = 0);

    m.def(
        "tsne",
        [](const Matrix& values, double perplexity, int iterations, std::uint64_t seed) {
            TsneConfig cfg;
            cfg.perplexity = perplexity;
            cfg.iterations = iterations;
            cfg.seed = seed;
            py::gil_scoped_release release;
            return tsne_embed(Dataset{values, std::nullopt, "array"}, cfg).coords;
        },
        py::arg("values"), py::arg("perplexity") = 30.0, py::arg("iterations") = 1000, py::arg("seed") = 0);

    py::class_<TrainedModel>(m, "Model")
        .def_property_readonly("arch", [](const TrainedModel& t) { return std::string(to_string(t.architecture.tag)); })
        .def_property_readonly("input_dim", [](const TrainedModel& t) { return t.architecture.input_dim; })
        .def_property_readonly("loss_history",
                               [](const TrainedModel& t) {
                                   std::vector<double> out;
                                   for (const auto& e : t.loss_history) out.push_back(e.total);
                                   return out;
                               })
        .def("encode", [](const TrainedModel& t, const Matrix& x) { return encode(t, x); }, py::arg("x"))
        .def("decode", [](const TrainedModel& t, const Matrix& y) { return decode(t, y); }, py::arg("y"))
        .def("save", [](const TrainedModel& t, const std::filesystem::path& p) { save_model(t, p); }, py::arg("path"))
        .def_static("load", &load_model, py::arg("path"));

    m.def(
        "train",
        [](const Matrix& values, const Matrix& coords, const std::string& arch, int epochs, int batch_size,
           double learning_rate, double omega, double alpha, double beta, double test_fraction,
           std::uint64_t seed) {
            TrainingConfig cfg;
            cfg.architecture.tag = parse_arch(arch);
            cfg.architecture.input_dim = values.cols();
            cfg.architecture.omega = omega;
            cfg.architecture.alpha = alpha;
            cfg.architecture.beta = beta;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = learning_rate;
            cfg.seed = seed;
            cfg.validate();
            const auto pair = make_pair(values, coords, std::nullopt);
            const auto s = split(values.rows(), test_fraction, seed);
            TrainedModel model;
            {
                py::gil_scoped_release release;
                model = train(pair, s, cfg);
            }
            return py::make_tuple(std::move(model), s.test);
        },
        py::arg("values"), py::arg("coords"), py::arg("arch") = "ael", py::arg("epochs") = 50,
        py::arg("batch_size") = 32, py::arg("learning_rate") = 1e-3, py::arg("omega") = 0.5, py::arg("alpha") = 1.0,
        py::arg("beta") = 0.1, py::arg("test_fraction") = 0.2, py::arg("seed") = 0,
        "Returns (model, test_rows).");

    m.def(
        "parametric_mse",
        [](const TrainedModel& t, const Matrix& values, const Matrix& coords, std::optional<std::vector<Index>> rows) {
            const auto pair = make_pair(values, coords, std::nullopt);
            return parametric_mse(t, pair, rows ? *rows : all_rows(values.rows()));
        },
        py::arg("model"), py::arg("values"), py::arg("coords"), py::arg("rows") = py::none());
    m.def(
        "inverse_mse",
        [](const TrainedModel& t, const Matrix& values, const Matrix& coords, std::optional<std::vector<Index>> rows) {
            const auto pair = make_pair(values, coords, std::nullopt);
            return inverse_mse(t, pair, rows ? *rows : all_rows(values.rows()));
        },
        py::arg("model"), py::arg("values"), py::arg("coords"), py::arg("rows") = py::none());

    m.def(
        "reconstruction_mse",
        [](const TrainedModel& t, const Matrix& values, const Matrix& coords, std::optional<std::vector<Index>> rows) {
            const auto pair = make_pair(values, coords, std::nullopt);
            return reconstruction_mse(t, pair, rows ? *rows : all_rows(values.rows()));
        },
        py::arg("model"), py::arg("values"), py::arg("coords"), py::arg("rows") = py::none());

    py::class_<GradientMap>(m, "GradientMap")
        .def_readonly("values", &GradientMap::values)
        .def_readonly("max_gradient", &GradientMap::max_gradient)
        .def_readonly("avg_gradient", &GradientMap::avg_gradient)
        .def_property_readonly("bounds", [](const GradientMap& g) {
            return py::make_tuple(g.bounds.x_min, g.bounds.x_max, g.bounds.y_min, g.bounds.y_max);
        });

    m.def(
        "gradient_map",
        [](const TrainedModel& t, const Matrix& values, const Matrix& coords, int width, int height, double margin) {
            const auto pair = make_pair(values, coords, std::nullopt);
            return gradient_map(t, pair, width, height, margin);
        },
        py::arg("model"), py::arg("values"), py::arg("coords"), py::arg("width") = 256, py::arg("height") = 256,
        py::arg("margin") = 0.05);
    m.def(
        "gradient_map_fn",
        [](const DecodeFn& f, std::tuple<double, double, double, double> b, int width, int height) {
            const auto [x0, x1, y0, y1] = b;
            return gradient_map(f, GridBounds{x0, x1, y0, y1}, width, height);
        },
        py::arg("decode"), py::arg("bounds"), py::arg("width"), py::arg("height"),
        "Gradient map of an arbitrary callable mapping (n, 2) points to (n, d).");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
