#include "projlearn/cli.hpp"

#include "projlearn/errors.hpp"
#include "projlearn/evaluation.hpp"
#include "projlearn/io.hpp"
#include "projlearn/raster.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace projlearn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;
constexpr double kTestFraction = 0.2;

fs::path manifest_path(const fs::path& dir) { return dir / "manifest.json"; }

json read_manifest(const fs::path& dir) {
    std::ifstream in(manifest_path(dir));
    if (!in) throw DataError("no manifest in " + dir.string() + " (run `projlearn prepare` first)");
    try {
        json m = json::parse(in);
        if (m.at("version").get<int>() != kManifestVersion)
            throw DataError("unsupported manifest version in " + dir.string());
        return m;
    } catch (const json::exception& e) {
        throw DataError("corrupt manifest in " + dir.string() + ": " + e.what());
    }
}

void write_manifest(const fs::path& dir, const json& m) { write_file_atomic(manifest_path(dir), m.dump(2) + "\n"); }

ProjectionPair load_pair(const fs::path& dir, const json& m) {
    Dataset data = load_csv(dir / m.at("dataset").get<std::string>());
    data.name = m.at("name").get<std::string>();
    if (!m.at("labels").is_null()) {
        data.labels = load_labels_csv(dir / m.at("labels").get<std::string>());
        data.validate();
    }
    auto pair = load_projection(data, dir / m.at("projection").get<std::string>());
    pair.method_tag = m.at("projection_source").get<std::string>();
    return pair;
}

std::vector<Index> parse_widths(const std::string& s) {
    std::vector<Index> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            out.push_back(std::stol(tok));
        } catch (const std::exception&) {
            throw UsageError("bad layer width list '" + s + "'");
        }
    }
    return out;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError("bad number list '" + s + "'");
        }
    }
    return out;
}

Eigen::Vector2d parse_point(const std::string& s) {
    auto v = parse_list(s);
    if (v.size() != 2) throw UsageError("expected a point 'x,y', got '" + s + "'");
    return {v[0], v[1]};
}

std::pair<int, int> parse_size(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    } catch (const std::exception&) {
        throw UsageError("expected WxH, got '" + s + "'");
    }
}

std::vector<Arch> parse_arch_list(const std::string& s) {
    if (s == "all") return {Arch::pr, Arch::ael, Arch::vael};
    return {parse_arch(s)};
}

struct PrepareOptions {
    fs::path out;
    bool rings = false;
    int points_per_ring = 60;
    std::string csv;
    bool has_labels = false;
    bool skip_header = false;
    std::string labels;
    std::vector<std::string> idx;
    long limit = 0;
    std::string projection;
    std::uint64_t seed = 0;
    TsneConfig tsne;
};

struct TrainOverrides {
    std::string arch = "ael";
    int runs = 10;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs, batch;
    std::optional<double> lr, omega, alpha, beta, dropout;
    std::string encoder_hidden, decoder_hidden;
};

TrainingConfig make_config(const TrainOverrides& o, Arch arch, Index input_dim, std::uint64_t manifest_seed) {
    TrainingConfig cfg;
    cfg.architecture.tag = arch;
    cfg.architecture.input_dim = input_dim;
    if (o.epochs) cfg.epochs = *o.epochs;
    if (o.batch) cfg.batch_size = *o.batch;
    if (o.lr) cfg.learning_rate = *o.lr;
    if (o.dropout) cfg.dropout_rate = *o.dropout;
    if (o.omega) cfg.architecture.omega = *o.omega;
    if (o.alpha) cfg.architecture.alpha = *o.alpha;
    if (o.beta) cfg.architecture.beta = *o.beta;
    if (!o.encoder_hidden.empty()) cfg.architecture.encoder_hidden = parse_widths(o.encoder_hidden);
    if (!o.decoder_hidden.empty()) cfg.architecture.decoder_hidden = parse_widths(o.decoder_hidden);
    cfg.seed = o.seed.value_or(manifest_seed);
    cfg.validate();
    return cfg;
}

void add_train_flags(CLI::App* cmd, TrainOverrides& o) {
    cmd->add_option("--arch", o.arch, "pr | ael | vael | all");
    cmd->add_option("--runs", o.runs, "Runs per architecture");
    cmd->add_option("--seed", o.seed, "Base seed (default: manifest seed)");
    cmd->add_option("--epochs", o.epochs);
    cmd->add_option("--batch", o.batch);
    cmd->add_option("--lr", o.lr);
    cmd->add_option("--omega", o.omega, "AEL latent weight");
    cmd->add_option("--alpha", o.alpha, "VAEL latent weight");
    cmd->add_option("--beta", o.beta, "VAEL KL weight");
    cmd->add_option("--dropout", o.dropout);
    cmd->add_option("--encoder-hidden", o.encoder_hidden, "Comma separated widths");
    cmd->add_option("--decoder-hidden", o.decoder_hidden, "Comma separated widths");
}

void cmd_prepare(const PrepareOptions& o, std::ostream& out) {
    const int sources = int(o.rings) + int(!o.csv.empty()) + int(!o.idx.empty());
    if (sources != 1) throw UsageError("prepare needs exactly one of --rings, --csv/--dataset, --idx");

    Dataset data;
    json image_shape = nullptr;
    if (o.rings) {
        data = generate_rings(o.points_per_ring, o.seed);
    } else if (!o.csv.empty()) {
        data = load_csv(o.csv, {o.has_labels, o.skip_header});
        if (!o.labels.empty()) {
            data.labels = load_labels_csv(o.labels);
            data.validate();
        }
    } else {
        data = load_idx(o.idx.at(0), o.idx.at(1));
        const auto shape = read_idx_shape(o.idx.at(0));
        image_shape = {shape.rows, shape.cols};
    }
    if (o.limit > 0 && o.limit < data.rows()) {
        data.values.conservativeResize(o.limit, Eigen::NoChange);
        if (data.labels) data.labels->resize(static_cast<std::size_t>(o.limit));
    }

    ProjectionPair pair;
    json tsne_json = nullptr;
    if (!o.projection.empty()) {
        pair = load_projection(data, o.projection);
    } else {
        TsneConfig cfg = o.tsne;
        cfg.seed = o.seed;
        std::vector<KlSample> trace;
        pair = tsne_embed(data, cfg, &trace);
        tsne_json = {{"perplexity", cfg.perplexity}, {"iterations", cfg.iterations},
                     {"learning_rate", cfg.learning_rate}, {"final_kl", trace.back().kl}};
    }

    write_matrix_csv(o.out / "dataset.csv", pair.data.values);
    if (pair.data.labels) write_labels_csv(o.out / "labels.csv", *pair.data.labels);
    write_matrix_csv(o.out / "projection.csv", pair.coords);
    json m = {{"version", kManifestVersion},
              {"name", pair.data.name},
              {"dataset", "dataset.csv"},
              {"labels", pair.data.labels ? json("labels.csv") : json(nullptr)},
              {"projection", "projection.csv"},
              {"projection_source", pair.method_tag},
              {"image_shape", image_shape},
              {"seed", o.seed},
              {"tsne", tsne_json},
              {"runs", json::array()}};
    write_manifest(o.out, m);
    out << "prepared " << pair.data.rows() << " x " << pair.data.cols() << " dataset '" << pair.data.name
        << "' with " << pair.method_tag << " projection in " << o.out.string() << "\n";
}

std::string run_stem(Arch a, int run) { return std::string(to_string(a)) + "-run" + std::to_string(run); }

void cmd_train(const fs::path& dir, const TrainOverrides& o, std::ostream& out) {
    if (o.runs < 1) throw UsageError("--runs must be at least 1");
    json m = read_manifest(dir);
    const auto archs = parse_arch_list(o.arch);
    const auto pair = load_pair(dir, m);
    const auto manifest_seed = m.at("seed").get<std::uint64_t>();

    // Validate every configuration before spending time on training.
    std::vector<TrainingConfig> configs;
    for (Arch a : archs) configs.push_back(make_config(o, a, pair.data.cols(), manifest_seed));

    json runs = json::array();
    for (const auto& r : m.at("runs"))
        if (std::find(archs.begin(), archs.end(), parse_arch(r.at("arch").get<std::string>())) == archs.end())
            runs.push_back(r);

    for (const auto& cfg : configs) {
        const Arch a = cfg.architecture.tag;
        const auto members = train_ensemble(pair, cfg, o.runs, kTestFraction);
        for (std::size_t k = 0; k < members.size(); ++k) {
            const auto stem = run_stem(a, static_cast<int>(k));
            save_model(members[k].model, dir / "models" / (stem + ".json"));
            write_training_log(members[k].model, dir / "logs" / (stem + ".csv"));
            runs.push_back({{"arch", to_string(a)},
                            {"run", k},
                            {"model", "models/" + stem + ".json"},
                            {"log", "logs/" + stem + ".csv"},
                            {"split_seed", members[k].split.seed},
                            {"test_fraction", kTestFraction},
                            {"train_s", members[k].train_seconds}});
        }
        out << "trained " << members.size() << " " << to_string(a) << " model(s)\n";
    }
    m["runs"] = runs;
    write_manifest(dir, m);
}

struct EvaluateOptions {
    std::string arch = "all";
    bool no_timing = false;
    std::string gradient_map;
    std::vector<std::string> interpolate;
    int samples = 10;
    int scatter_size = 512;
};

void write_gradient_sidecar(const fs::path& path, const GradientMap& map, Arch a) {
    json j = {{"arch", to_string(a)},
              {"width", map.width},
              {"height", map.height},
              {"x_range", {map.bounds.x_min, map.bounds.x_max}},
              {"y_range", {map.bounds.y_min, map.bounds.y_max}},
              {"max_gradient", map.max_gradient},
              {"avg_gradient", map.avg_gradient},
              {"row_order", "top row = largest y"},
              {"gray_levels", "linear min-max of raw values"}};
    write_file_atomic(path, j.dump(2) + "\n");
}

void cmd_evaluate(const fs::path& dir, const EvaluateOptions& o, std::ostream& out) {
    const json m = read_manifest(dir);
    const auto pair = load_pair(dir, m);
    const auto archs = parse_arch_list(o.arch);

    MetricsReport report;
    report.dataset = pair.data.name;
    std::vector<std::pair<Arch, TrainedModel>> first_models;
    for (Arch a : archs) {
        std::vector<EnsembleMember> members;
        for (const auto& r : m.at("runs")) {
            if (parse_arch(r.at("arch").get<std::string>()) != a) continue;
            EnsembleMember member;
            member.model = load_model(dir / r.at("model").get<std::string>());
            member.split = split(pair.data.rows(), r.at("test_fraction").get<double>(),
                                 r.at("split_seed").get<std::uint64_t>());
            member.train_seconds = r.at("train_s").get<double>();
            members.push_back(std::move(member));
        }
        if (members.empty()) continue;
        auto part = evaluate_ensemble(members, pair);
        report.runs.insert(report.runs.end(), part.runs.begin(), part.runs.end());

        const auto& model = members.front().model;
        const auto& test = members.front().split.test;
        const Matrix test_coords = encode(model, select_rows(pair.data.values, test));
        std::optional<std::vector<int>> test_labels;
        if (pair.data.labels) {
            test_labels.emplace();
            for (Index i : test) test_labels->push_back((*pair.data.labels)[static_cast<std::size_t>(i)]);
        }
        write_ppm(dir / ("scatter_" + std::string(to_string(a)) + ".ppm"),
                  render_scatter(test_coords, test_labels, {o.scatter_size}));

        if (!o.gradient_map.empty()) {
            const auto [w, h] = parse_size(o.gradient_map);
            const auto map = gradient_map(model, pair, w, h);
            const auto stem = "gradient_" + std::string(to_string(a));
            write_pgm(dir / (stem + ".pgm"), render_gradient_map(map));
            write_gradient_sidecar(dir / (stem + ".json"), map, a);
            out << to_string(a) << " gradient map: max " << map.max_gradient << ", avg " << map.avg_gradient << "\n";
        }
        if (!o.interpolate.empty()) {
            const Matrix strip = interpolation_strip(model, parse_point(o.interpolate.at(0)),
                                                     parse_point(o.interpolate.at(1)), o.samples);
            const auto stem = "interpolation_" + std::string(to_string(a));
            write_matrix_csv(dir / (stem + ".csv"), strip);
            if (!m.at("image_shape").is_null()) {
                const auto shape = m.at("image_shape").get<std::vector<Index>>();
                write_pgm(dir / (stem + ".pgm"), tile_images(strip, shape.at(0), shape.at(1)));
            }
        }
        first_models.emplace_back(a, model);
    }
    if (report.runs.empty()) throw DataError("no trained models in " + dir.string() + " for --arch " + o.arch);

    write_ppm(dir / "scatter_truth.ppm", render_scatter(pair.coords, pair.data.labels, {o.scatter_size}));
    write_file_atomic(dir / "metrics.json", report_to_json(report, !o.no_timing).dump(2) + "\n");
    write_file_atomic(dir / "metrics.csv", report_to_csv(report, !o.no_timing));
    for (Arch a : report.architectures()) {
        const auto p = report.parametric(a);
        const auto i = report.inverse(a);
        out << to_string(a) << ": parametric MSE " << p.mean << " (" << p.sd << "), inverse MSE " << i.mean << " ("
            << i.sd << ")\n";
    }
}

struct ScanOptions {
    TrainOverrides train;
    std::string omega_grid, alpha_grid, beta_grid;
};

void cmd_scan(const fs::path& dir, ScanOptions o, std::ostream& out) {
    if (o.train.arch == "all" || o.train.arch == "pr") throw UsageError("scan needs --arch ael or --arch vael");
    const Arch arch = parse_arch(o.train.arch);
    const json m = read_manifest(dir);
    const auto pair = load_pair(dir, m);
    const auto cfg = make_config(o.train, arch, pair.data.cols(), m.at("seed").get<std::uint64_t>());

    auto grid_of = [](const std::string& s) { return s.empty() ? std::vector<double>{} : parse_list(s); };
    const auto omegas = grid_of(o.omega_grid);
    const auto alphas = grid_of(o.alpha_grid);
    const auto betas = grid_of(o.beta_grid);
    std::vector<WeightSetting> grid;
    if (arch == Arch::ael) {
        for (double w : omegas) {
            if (w < 0) throw UsageError("omega must be non-negative");
            grid.push_back({w, std::nullopt, std::nullopt});
        }
    } else {
        const std::vector<std::optional<double>> as =
            alphas.empty() ? std::vector<std::optional<double>>{std::nullopt}
                           : std::vector<std::optional<double>>(alphas.begin(), alphas.end());
        const std::vector<std::optional<double>> bs =
            betas.empty() ? std::vector<std::optional<double>>{std::nullopt}
                          : std::vector<std::optional<double>>(betas.begin(), betas.end());
        for (const auto& a : as)
            for (const auto& b : bs) {
                if ((a && *a < 0) || (b && *b < 0)) throw UsageError("alpha and beta must be non-negative");
                grid.push_back({std::nullopt, a, b});
            }
    }
    if (grid.empty()) throw UsageError("scan needs a non-empty grid (--omega-grid for AEL)");
    const auto rows = parameter_scan(pair, cfg, grid, o.train.runs);
    const auto path = dir / ("scan_" + std::string(to_string(arch)) + ".csv");
    write_file_atomic(path, scan_to_csv(rows, arch));
    out << "wrote " << rows.size() << " scan rows to " << path.string() << "\n";
}

struct RenderOptions {
    std::string coords;
    std::string labels;
    std::string output = "scatter.ppm";
    int size = 512;
};

void cmd_render(const fs::path& dir, const RenderOptions& o, std::ostream& out) {
    Matrix coords;
    std::optional<std::vector<int>> labels;
    if (!o.coords.empty()) {
        coords = load_csv(o.coords).values;
        if (!o.labels.empty()) labels = load_labels_csv(o.labels);
    } else {
        const json m = read_manifest(dir);
        const auto pair = load_pair(dir, m);
        coords = pair.coords;
        labels = pair.data.labels;
    }
    const auto path = dir / o.output;
    write_ppm(path, render_scatter(coords, labels, {o.size}));
    out << "wrote " << path.string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learn parametric and invertible 2D projections with autoencoders"};
    app.require_subcommand(1);
    fs::path dir = ".";

    PrepareOptions prep;
    auto* prepare = app.add_subcommand("prepare", "Build dataset + reference projection files");
    prepare->add_option("--out", prep.out, "Output directory")->required();
    prepare->add_flag("--rings", prep.rings, "Synthetic three-ring dataset");
    prepare->add_option("--points-per-ring", prep.points_per_ring);
    prepare->add_option("--csv,--dataset", prep.csv, "Numeric CSV dataset");
    prepare->add_flag("--has-labels", prep.has_labels, "Last CSV column is an integer label");
    prepare->add_flag("--skip-header", prep.skip_header);
    prepare->add_option("--labels", prep.labels, "Labels CSV (one integer per line)");
    prepare->add_option("--idx", prep.idx, "IDX images and labels files")->expected(2);
    prepare->add_option("--limit", prep.limit, "Keep only the first N rows");
    prepare->add_option("--projection", prep.projection, "Precomputed n x 2 projection CSV (default: t-SNE)");
    prepare->add_option("--seed", prep.seed);
    prepare->add_option("--perplexity", prep.tsne.perplexity);
    prepare->add_option("--tsne-iters", prep.tsne.iterations);

    TrainOverrides train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train model ensembles");
    train_cmd->add_option("--out", dir, "Prepared directory")->required();
    add_train_flags(train_cmd, train_opts);

    EvaluateOptions eval_opts;
    auto* evaluate = app.add_subcommand("evaluate", "Metrics, gradient maps, renderings");
    evaluate->add_option("--out", dir, "Prepared directory")->required();
    evaluate->add_option("--arch", eval_opts.arch);
    evaluate->add_flag("--no-timing", eval_opts.no_timing, "Leave timing fields out of the metrics");
    evaluate->add_option("--gradient-map", eval_opts.gradient_map, "WxH");
    evaluate->add_option("--interpolate", eval_opts.interpolate, "x0,y0 x1,y1")->expected(2);
    evaluate->add_option("--samples", eval_opts.samples);
    evaluate->add_option("--scatter-size", eval_opts.scatter_size);

    ScanOptions scan_opts;
    scan_opts.train.runs = 3;
    auto* scan = app.add_subcommand("scan", "Loss-weight parameter scan");
    scan->add_option("--out", dir, "Prepared directory")->required();
    add_train_flags(scan, scan_opts.train);
    scan->add_option("--omega-grid", scan_opts.omega_grid, "Comma separated omega values (AEL)");
    scan->add_option("--alpha-grid", scan_opts.alpha_grid, "Comma separated alpha values (VAEL)");
    scan->add_option("--beta-grid", scan_opts.beta_grid, "Comma separated beta values (VAEL)");

    RenderOptions render_opts;
    auto* render = app.add_subcommand("render", "Scatter plot of a projection");
    render->add_option("--out", dir, "Prepared directory")->required();
    render->add_option("--coords", render_opts.coords, "n x 2 CSV (default: manifest projection)");
    render->add_option("--labels", render_opts.labels);
    render->add_option("--output", render_opts.output, "File name inside --out");
    render->add_option("--size", render_opts.size);

    std::vector<const char*> argv{"projlearn"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kSuccess : kUsageError;
    }

    try {
        if (*prepare) cmd_prepare(prep, out);
        else if (*train_cmd) cmd_train(dir, train_opts, out);
        else if (*evaluate) cmd_evaluate(dir, eval_opts, out);
        else if (*scan) cmd_scan(dir, scan_opts, out);
        else if (*render) cmd_render(dir, render_opts, out);
        return kSuccess;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsageError;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
}

}  // namespace projlearn::cli
