#include "projlearn/training.hpp"

#include "projlearn/errors.hpp"
#include "projlearn/io.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace projlearn {

using nlohmann::json;

namespace {

struct Batches {
    std::vector<std::vector<Index>> rows;
};

// Last partial batch is kept unless it has a single row (batchnorm needs two).
Batches make_batches(std::vector<Index> order, int batch_size) {
    Batches b;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        if (end - start < 2) break;
        b.rows.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                            order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return b;
}

void shuffle_in_place(std::vector<Index>& v, Rng& rng) {
    for (std::size_t i = v.size(); i-- > 1;) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(v[i], v[pick(rng)]);
    }
}

void check_finite(double loss, int epoch, std::size_t batch) {
    if (!std::isfinite(loss))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                             std::to_string(batch + 1));
}

}  // namespace

TrainedModel train(const ProjectionPair& pair, const SplitIndices& indices, const TrainingConfig& cfg) {
    cfg.validate();
    pair.validate();
    if (indices.train.size() < 2) throw UsageError("training split needs at least 2 rows");
    if (cfg.architecture.input_dim != pair.data.cols())
        throw UsageError("architecture input dimension " + std::to_string(cfg.architecture.input_dim) +
                         " does not match data dimension " + std::to_string(pair.data.cols()));

    TrainedModel model;
    model.architecture = cfg.architecture;
    model.config = cfg;
    model.seed = cfg.seed;

    const Matrix x_train = select_rows(pair.data.values, indices.train);
    const Matrix y_train = select_rows(pair.coords, indices.train);
    model.data_standardizer = fit_standardizer(x_train);
    model.projection_standardizer = fit_standardizer(y_train);
    const Matrix xs = apply_standardizer(model.data_standardizer, x_train);
    const Matrix ys = apply_standardizer(model.projection_standardizer, y_train);

    Rng seeds(cfg.seed);
    const auto encoder_seed = seeds();
    const auto decoder_seed = seeds();
    Rng shuffle_rng(seeds());
    Rng encoder_rng(seeds());
    Rng decoder_rng(seeds());

    const Arch tag = cfg.architecture.tag;
    model.encoder = nn::init_network(encoder_spec(cfg.architecture, cfg.dropout_rate), encoder_seed);
    model.decoder = nn::init_network(decoder_spec(cfg.architecture, cfg.dropout_rate), decoder_seed);
    for (auto* net : {&model.encoder, &model.decoder})
        for (auto& layer : *net)
            if (auto* bn = std::get_if<nn::BatchNorm>(&layer)) {
                bn->momentum = cfg.bn_momentum;
                bn->eps = cfg.bn_eps;
            }

    auto encoder_adam = nn::make_adam(model.encoder, cfg.learning_rate);
    auto decoder_adam = nn::make_adam(model.decoder, cfg.learning_rate);
    const auto encoder_params = nn::parameter_views(model.encoder);
    const auto decoder_params = nn::parameter_views(model.decoder);
    const std::size_t n_components = component_names(tag).size();

    std::vector<Index> order(static_cast<std::size_t>(xs.rows()));
    std::iota(order.begin(), order.end(), Index{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_in_place(order, shuffle_rng);
        const auto batches = make_batches(order, cfg.batch_size);
        EpochLoss epoch_loss;
        epoch_loss.components.assign(n_components, 0.0);
        double seen = 0.0;
        for (std::size_t b = 0; b < batches.rows.size(); ++b) {
            const Matrix xb = select_rows(xs, batches.rows[b]);
            const Matrix yb = select_rows(ys, batches.rows[b]);
            StepResult step;
            switch (tag) {
                case Arch::pr: {
                    auto pro = projector_step(model.encoder, xb, yb, encoder_rng);
                    auto rec = reconstructor_step(model.decoder, yb, xb, decoder_rng);
                    step.loss = pro.loss + rec.loss;
                    step.components = {pro.loss, rec.loss};
                    step.encoder_gradients = std::move(pro.encoder_gradients);
                    step.decoder_gradients = std::move(rec.decoder_gradients);
                    break;
                }
                case Arch::ael:
                    step = ael_step(model.encoder, model.decoder, xb, yb, cfg.architecture.omega, encoder_rng);
                    break;
                case Arch::vael:
                    step = vael_step(model.encoder, model.decoder, xb, yb, cfg.architecture.alpha,
                                     cfg.architecture.beta, encoder_rng);
                    break;
            }
            check_finite(step.loss, epoch, b);
            nn::adam_step(encoder_adam, encoder_params, step.encoder_gradients);
            nn::adam_step(decoder_adam, decoder_params, step.decoder_gradients);

            const double w = static_cast<double>(xb.rows());
            seen += w;
            epoch_loss.total += w * step.loss;
            for (std::size_t c = 0; c < n_components; ++c) epoch_loss.components[c] += w * step.components[c];
        }
        epoch_loss.total /= seen;
        for (double& c : epoch_loss.components) c /= seen;
        model.loss_history.push_back(std::move(epoch_loss));
    }
    return model;
}

namespace {

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j, Index expected, const char* what) {
    auto values = j.get<std::vector<double>>();
    if (expected >= 0 && static_cast<Index>(values.size()) != expected)
        throw ModelFormatError(std::string("model file: ") + what + " has " + std::to_string(values.size()) +
                               " entries, expected " + std::to_string(expected));
    return Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
}

json network_json(const nn::Network& net) {
    json layers = json::array();
    for (const auto& layer : net) {
        if (auto* a = std::get_if<nn::Affine>(&layer)) {
            layers.push_back({{"kind", "affine"},
                              {"in", a->in()},
                              {"out", a->out()},
                              {"weights", std::vector<double>(a->weights.data(), a->weights.data() + a->weights.size())},
                              {"bias", vector_json(a->bias)}});
        } else if (auto* bn = std::get_if<nn::BatchNorm>(&layer)) {
            layers.push_back({{"kind", "batchnorm"},
                              {"width", bn->width()},
                              {"gamma", vector_json(bn->gamma)},
                              {"beta", vector_json(bn->beta)},
                              {"running_mean", vector_json(bn->running_mean)},
                              {"running_var", vector_json(bn->running_var)},
                              {"momentum", bn->momentum},
                              {"eps", bn->eps}});
        } else if (std::holds_alternative<nn::Relu>(layer)) {
            layers.push_back({{"kind", "relu"}});
        } else if (auto* d = std::get_if<nn::Dropout>(&layer)) {
            layers.push_back({{"kind", "dropout"}, {"rate", d->rate}});
        }
    }
    return layers;
}

nn::Network network_from(const json& layers) {
    nn::Network net;
    for (const auto& l : layers) {
        const auto kind = l.at("kind").get<std::string>();
        if (kind == "affine") {
            nn::Affine a;
            const Index in = l.at("in").get<Index>();
            const Index out = l.at("out").get<Index>();
            Vector w = vector_from(l.at("weights"), in * out, "affine weights");
            a.weights = Eigen::Map<Matrix>(w.data(), out, in);
            a.bias = vector_from(l.at("bias"), out, "affine bias");
            net.emplace_back(std::move(a));
        } else if (kind == "batchnorm") {
            nn::BatchNorm bn;
            const Index width = l.at("width").get<Index>();
            bn.gamma = vector_from(l.at("gamma"), width, "gamma");
            bn.beta = vector_from(l.at("beta"), width, "beta");
            bn.running_mean = vector_from(l.at("running_mean"), width, "running_mean");
            bn.running_var = vector_from(l.at("running_var"), width, "running_var");
            bn.momentum = l.at("momentum").get<double>();
            bn.eps = l.at("eps").get<double>();
            net.emplace_back(std::move(bn));
        } else if (kind == "relu") {
            net.emplace_back(nn::Relu{});
        } else if (kind == "dropout") {
            net.emplace_back(nn::Dropout{l.at("rate").get<double>()});
        } else {
            throw ModelFormatError("model file: unknown layer kind '" + kind + "'");
        }
    }
    return net;
}

json standardizer_json(const Standardizer& s) {
    return {{"mean", vector_json(s.mean)}, {"scale", vector_json(s.scale)}};
}

Standardizer standardizer_from(const json& j) {
    Standardizer s;
    s.mean = vector_from(j.at("mean"), -1, "standardizer mean");
    s.scale = vector_from(j.at("scale"), s.mean.size(), "standardizer scale");
    return s;
}

json architecture_json(const ArchitectureSpec& a) {
    return {{"tag", to_string(a.tag)},     {"encoder_hidden", a.encoder_hidden},
            {"decoder_hidden", a.decoder_hidden}, {"input_dim", a.input_dim},
            {"latent_dim", a.latent_dim},  {"omega", a.omega},
            {"alpha", a.alpha},            {"beta", a.beta}};
}

ArchitectureSpec architecture_from(const json& j) {
    ArchitectureSpec a;
    a.tag = parse_arch(j.at("tag").get<std::string>());
    a.encoder_hidden = j.at("encoder_hidden").get<std::vector<Index>>();
    a.decoder_hidden = j.at("decoder_hidden").get<std::vector<Index>>();
    a.input_dim = j.at("input_dim").get<Index>();
    a.latent_dim = j.at("latent_dim").get<Index>();
    a.omega = j.at("omega").get<double>();
    a.alpha = j.at("alpha").get<double>();
    a.beta = j.at("beta").get<double>();
    return a;
}

}  // namespace

json model_to_json(const TrainedModel& m) {
    json history = json::array();
    for (const auto& e : m.loss_history) history.push_back({{"total", e.total}, {"components", e.components}});
    return {{"format", "projlearn-model"},
            {"version", kModelFormatVersion},
            {"architecture", architecture_json(m.architecture)},
            {"config",
             {{"epochs", m.config.epochs},
              {"batch_size", m.config.batch_size},
              {"learning_rate", m.config.learning_rate},
              {"dropout_rate", m.config.dropout_rate},
              {"bn_momentum", m.config.bn_momentum},
              {"bn_eps", m.config.bn_eps},
              {"seed", m.config.seed}}},
            {"seed", m.seed},
            {"standardizers",
             {{"data", standardizer_json(m.data_standardizer)},
              {"projection", standardizer_json(m.projection_standardizer)}}},
            {"encoder", network_json(m.encoder)},
            {"decoder", network_json(m.decoder)},
            {"loss_history", history}};
}

TrainedModel model_from_json(const json& j) {
    try {
        if (!j.is_object() || j.value("format", "") != "projlearn-model")
            throw ModelFormatError("not a projlearn model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion)
            throw ModelFormatError("model format version " + std::to_string(version) + " is not supported (expected " +
                                   std::to_string(kModelFormatVersion) + ")");
        TrainedModel m;
        m.architecture = architecture_from(j.at("architecture"));
        const auto& c = j.at("config");
        m.config.epochs = c.at("epochs").get<int>();
        m.config.batch_size = c.at("batch_size").get<int>();
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.dropout_rate = c.at("dropout_rate").get<double>();
        m.config.bn_momentum = c.at("bn_momentum").get<double>();
        m.config.bn_eps = c.at("bn_eps").get<double>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.architecture = m.architecture;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.data_standardizer = standardizer_from(j.at("standardizers").at("data"));
        m.projection_standardizer = standardizer_from(j.at("standardizers").at("projection"));
        m.encoder = network_from(j.at("encoder"));
        m.decoder = network_from(j.at("decoder"));
        for (const auto& e : j.at("loss_history"))
            m.loss_history.push_back({e.at("total").get<double>(), e.at("components").get<std::vector<double>>()});
        return m;
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("corrupt model file: ") + e.what());
    }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, model_to_json(model).dump() + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ModelFormatError("corrupt model file " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

void write_training_log(const TrainedModel& model, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "epoch,loss";
    for (const auto& name : component_names(model.architecture.tag)) out << ',' << name;
    out << '\n';
    for (std::size_t e = 0; e < model.loss_history.size(); ++e) {
        out << e + 1 << ',' << format_double(model.loss_history[e].total);
        for (double c : model.loss_history[e].components) out << ',' << format_double(c);
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

std::vector<EnsembleMember> train_ensemble(const ProjectionPair& pair, const TrainingConfig& cfg, int runs,
                                           double test_fraction) {
    if (runs < 1) throw UsageError("ensemble needs at least one run");
    cfg.validate();
    std::vector<EnsembleMember> members(static_cast<std::size_t>(runs));
    parallel_for(members.size(), [&](std::size_t k) {
        TrainingConfig run_cfg = cfg;
        run_cfg.seed = cfg.seed + k;
        auto& member = members[k];
        member.split = split(pair.data.rows(), test_fraction, run_cfg.seed);
        const auto start = std::chrono::steady_clock::now();
        member.model = train(pair, member.split, run_cfg);
        member.train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    return members;
}

}  // namespace projlearn
