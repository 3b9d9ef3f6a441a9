#include "projlearn/architectures.hpp"

#include "projlearn/errors.hpp"

#include <cmath>

namespace projlearn {

std::string_view to_string(Arch a) {
    switch (a) {
        case Arch::pr: return "pr";
        case Arch::ael: return "ael";
        case Arch::vael: return "vael";
    }
    return "?";
}

Arch parse_arch(std::string_view s) {
    if (s == "pr") return Arch::pr;
    if (s == "ael") return Arch::ael;
    if (s == "vael") return Arch::vael;
    throw UsageError("unknown architecture '" + std::string(s) + "' (expected pr, ael or vael)");
}

void ArchitectureSpec::validate() const {
    if (latent_dim != 2) throw UsageError("latent dimension must be 2");
    if (input_dim < 1) throw UsageError("input dimension must be at least 1");
    if (!(omega >= 0.0)) throw UsageError("omega must be non-negative");
    if (!(alpha >= 0.0)) throw UsageError("alpha must be non-negative");
    if (!(beta >= 0.0)) throw UsageError("beta must be non-negative");
    for (Index w : encoder_hidden)
        if (w < 1) throw UsageError("encoder widths must be at least 1");
    for (Index w : decoder_hidden)
        if (w < 1) throw UsageError("decoder widths must be at least 1");
}

void TrainingConfig::validate() const {
    if (epochs < 1) throw UsageError("epochs must be at least 1");
    if (batch_size < 2) throw UsageError("batch size must be at least 2");
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw UsageError("dropout rate must lie in [0, 1)");
    architecture.validate();
}

namespace {
void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DataError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
}
}  // namespace

double mse(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "mse");
    if (a.rows() == 0) throw DataError("mse of an empty batch");
    return (a - b).squaredNorm() / static_cast<double>(a.rows());
}

Matrix mse_gradient(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "mse");
    return (2.0 / static_cast<double>(a.rows())) * (a - b);
}

double kl_diag_gaussian(const Vector& mu, const Vector& log_var) {
    if (mu.size() != log_var.size()) throw DataError("kl: mu and log_var differ in length");
    return 0.5 * (mu.array().square() + log_var.array().exp() - 1.0 - log_var.array()).sum();
}

double kl_diag_gaussian(const VaelHead& head) {
    check_same_shape(head.mu, head.log_var, "kl");
    if (head.mu.rows() == 0) throw DataError("kl of an empty batch");
    return 0.5 * (head.mu.array().square() + head.log_var.array().exp() - 1.0 - head.log_var.array()).sum() /
           static_cast<double>(head.mu.rows());
}

Matrix reparameterize(const VaelHead& head, const Matrix& eps) {
    check_same_shape(head.mu, head.log_var, "reparameterize");
    check_same_shape(head.mu, eps, "reparameterize");
    return head.mu + ((0.5 * head.log_var.array()).exp() * eps.array()).matrix();
}

AelLoss loss_ael(const Matrix& x, const Matrix& x_hat, const Matrix& y_ref, const Matrix& y_hat, double omega) {
    AelLoss l;
    l.reconstruction = mse(x, x_hat);
    l.latent = mse(y_ref, y_hat);
    l.total = l.reconstruction + omega * l.latent;
    return l;
}

VaelLoss loss_vael(const Matrix& x, const Matrix& x_hat, const Matrix& y_ref, const Matrix& y_sampled,
                   const VaelHead& head, double alpha, double beta) {
    VaelLoss l;
    l.reconstruction = mse(x, x_hat);
    l.latent = mse(y_ref, y_sampled);
    l.kl = kl_diag_gaussian(head);
    l.total = l.reconstruction + alpha * l.latent + beta * l.kl;
    return l;
}

double loss_pr_projector(const Matrix& x, const Matrix& y_ref, const nn::Network& projector) {
    return mse(y_ref, nn::infer(projector, x));
}

double loss_pr_reconstructor(const Matrix& y_ref, const Matrix& x, const nn::Network& reconstructor) {
    return mse(x, nn::infer(reconstructor, y_ref));
}

VaelHead split_vael_head(const Matrix& encoder_output) {
    if (encoder_output.cols() % 2 != 0) throw DataError("VAEL encoder output must have even width");
    const Index q = encoder_output.cols() / 2;
    VaelHead head;
    head.mu = encoder_output.leftCols(q);
    head.log_var = encoder_output.rightCols(q).cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
    return head;
}

nn::MlpSpec encoder_spec(const ArchitectureSpec& arch, double dropout_rate) {
    nn::MlpSpec spec;
    spec.input = arch.input_dim;
    spec.hidden = arch.encoder_hidden;
    spec.output = arch.tag == Arch::vael ? 2 * arch.latent_dim : arch.latent_dim;
    spec.dropout_rate = dropout_rate;
    return spec;
}

nn::MlpSpec decoder_spec(const ArchitectureSpec& arch, double dropout_rate) {
    nn::MlpSpec spec;
    spec.input = arch.latent_dim;
    spec.hidden = arch.decoder_hidden;
    spec.output = arch.input_dim;
    spec.dropout_rate = dropout_rate;
    return spec;
}

std::vector<std::string> component_names(Arch a) {
    switch (a) {
        case Arch::pr: return {"projector", "reconstructor"};
        case Arch::ael: return {"reconstruction", "latent"};
        case Arch::vael: return {"reconstruction", "latent", "kl"};
    }
    return {};
}

StepResult projector_step(nn::Network& projector, const Matrix& x, const Matrix& y_ref, Rng& rng) {
    auto pass = nn::forward(projector, x, nn::Mode::train, rng);
    StepResult r;
    r.loss = mse(pass.output, y_ref);
    r.components = {r.loss};
    r.encoder_gradients = nn::backward(projector, pass.tape, mse_gradient(pass.output, y_ref)).parameter_gradients;
    return r;
}

StepResult reconstructor_step(nn::Network& reconstructor, const Matrix& y_ref, const Matrix& x, Rng& rng) {
    auto pass = nn::forward(reconstructor, y_ref, nn::Mode::train, rng);
    StepResult r;
    r.loss = mse(pass.output, x);
    r.components = {r.loss};
    r.decoder_gradients = nn::backward(reconstructor, pass.tape, mse_gradient(pass.output, x)).parameter_gradients;
    return r;
}

StepResult ael_step(nn::Network& encoder, nn::Network& decoder, const Matrix& x, const Matrix& y_ref,
                    double omega, Rng& rng) {
    auto enc = nn::forward(encoder, x, nn::Mode::train, rng);
    auto dec = nn::forward(decoder, enc.output, nn::Mode::train, rng);
    const auto l = loss_ael(x, dec.output, y_ref, enc.output, omega);

    StepResult r;
    r.loss = l.total;
    r.components = {l.reconstruction, l.latent};
    auto dec_back = nn::backward(decoder, dec.tape, mse_gradient(dec.output, x));
    Matrix d_latent = dec_back.input_gradient + omega * mse_gradient(enc.output, y_ref);
    r.decoder_gradients = std::move(dec_back.parameter_gradients);
    r.encoder_gradients = nn::backward(encoder, enc.tape, d_latent).parameter_gradients;
    return r;
}

StepResult vael_step(nn::Network& encoder, nn::Network& decoder, const Matrix& x, const Matrix& y_ref,
                     double alpha, double beta, Rng& rng, const Matrix* eps) {
    auto enc = nn::forward(encoder, x, nn::Mode::train, rng);
    const Index q = enc.output.cols() / 2;
    const VaelHead head = split_vael_head(enc.output);

    Matrix noise;
    if (eps) {
        noise = *eps;
    } else {
        std::normal_distribution<double> normal(0.0, 1.0);
        noise.resize(head.mu.rows(), q);
        for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(rng);
    }
    const Matrix y_sampled = reparameterize(head, noise);
    auto dec = nn::forward(decoder, y_sampled, nn::Mode::train, rng);
    const auto l = loss_vael(x, dec.output, y_ref, y_sampled, head, alpha, beta);

    StepResult r;
    r.loss = l.total;
    r.components = {l.reconstruction, l.latent, l.kl};

    auto dec_back = nn::backward(decoder, dec.tape, mse_gradient(dec.output, x));
    const Matrix d_sample = dec_back.input_gradient + alpha * mse_gradient(y_sampled, y_ref);
    r.decoder_gradients = std::move(dec_back.parameter_gradients);

    const double inv_b = 1.0 / static_cast<double>(head.mu.rows());
    const Eigen::ArrayXXd sigma = (0.5 * head.log_var.array()).exp();
    Matrix d_out(enc.output.rows(), enc.output.cols());
    d_out.leftCols(q) = d_sample + beta * inv_b * head.mu;
    Matrix d_log_var = (d_sample.array() * noise.array() * 0.5 * sigma +
                        beta * inv_b * 0.5 * (head.log_var.array().exp() - 1.0))
                           .matrix();
    const auto raw = enc.output.rightCols(q);
    for (Index i = 0; i < raw.rows(); ++i)
        for (Index j = 0; j < q; ++j)
            if (raw(i, j) < kLogVarMin || raw(i, j) > kLogVarMax) d_log_var(i, j) = 0.0;
    d_out.rightCols(q) = d_log_var;
    r.encoder_gradients = nn::backward(encoder, enc.tape, d_out).parameter_gradients;
    return r;
}

Matrix TrainedModel::encode_standardized(const Matrix& x_std) const {
    Matrix out = nn::infer(encoder, x_std);
    if (architecture.tag == Arch::vael) return out.leftCols(architecture.latent_dim);
    return out;
}

Matrix TrainedModel::decode_standardized(const Matrix& y_std) const {
    return nn::infer(decoder, y_std);
}

Matrix encode(const TrainedModel& model, const Matrix& x) {
    if (x.cols() != model.architecture.input_dim)
        throw DataError("encode expects " + std::to_string(model.architecture.input_dim) + " columns, got " +
                        std::to_string(x.cols()));
    return invert_standardizer(model.projection_standardizer,
                               model.encode_standardized(apply_standardizer(model.data_standardizer, x)));
}

Matrix decode(const TrainedModel& model, const Matrix& y) {
    if (y.cols() != model.architecture.latent_dim)
        throw DataError("decode expects " + std::to_string(model.architecture.latent_dim) + " columns, got " +
                        std::to_string(y.cols()));
    return invert_standardizer(model.data_standardizer,
                               model.decode_standardized(apply_standardizer(model.projection_standardizer, y)));
}

}  // namespace projlearn
