#pragma once

#include "projlearn/data.hpp"
#include "projlearn/nn.hpp"
#include "projlearn/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace projlearn {

enum class Arch { pr, ael, vael };

std::string_view to_string(Arch a);
Arch parse_arch(std::string_view s);

struct ArchitectureSpec {
    Arch tag = Arch::ael;
    std::vector<Index> encoder_hidden{256, 128, 64};
    std::vector<Index> decoder_hidden{64, 128, 256};
    Index input_dim = 0;
    Index latent_dim = 2;
    double omega = 0.5;  // AEL latent weight
    double alpha = 1.0;  // VAEL latent weight
    double beta = 0.1;   // VAEL KL weight

    void validate() const;
};

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// Batched diagonal Gaussian parameters, one row per sample.
struct VaelHead {
    Matrix mu;
    Matrix log_var;
};

/// Mean over rows of the squared L2 norm of the row difference.
double mse(const Matrix& a, const Matrix& b);
/// d mse(a, b) / d a.
Matrix mse_gradient(const Matrix& a, const Matrix& b);

/// 0.5 * sum_j (mu_j^2 + sigma_j^2 - 1 - log sigma_j^2) for one sample.
double kl_diag_gaussian(const Vector& mu, const Vector& log_var);
/// Batch mean of the per-sample KL divergence.
double kl_diag_gaussian(const VaelHead& head);

/// y = mu + exp(log_var / 2) * eps, elementwise.
Matrix reparameterize(const VaelHead& head, const Matrix& eps);

struct AelLoss {
    double total = 0.0;
    double reconstruction = 0.0;
    double latent = 0.0;
};

struct VaelLoss {
    double total = 0.0;
    double reconstruction = 0.0;
    double latent = 0.0;
    double kl = 0.0;
};

AelLoss loss_ael(const Matrix& x, const Matrix& x_hat, const Matrix& y_ref, const Matrix& y_hat, double omega);
VaelLoss loss_vael(const Matrix& x, const Matrix& x_hat, const Matrix& y_ref, const Matrix& y_sampled,
                   const VaelHead& head, double alpha, double beta);

/// mse(y_ref, Enc(x)) with the projector in inference mode.
double loss_pr_projector(const Matrix& x, const Matrix& y_ref, const nn::Network& projector);
/// mse(x, Dec(y_ref)) with the reconstructor in inference mode.
double loss_pr_reconstructor(const Matrix& y_ref, const Matrix& x, const nn::Network& reconstructor);

/// Splits a 4-wide VAEL encoder output into (mu, clamped log_var).
VaelHead split_vael_head(const Matrix& encoder_output);

/// Network shapes for an architecture. The VAEL encoder ends in a single
/// affine layer of width 2q holding the mu head (first q outputs) and the
/// log-variance head (last q outputs), both reading the last hidden layer.
nn::MlpSpec encoder_spec(const ArchitectureSpec& arch, double dropout_rate);
nn::MlpSpec decoder_spec(const ArchitectureSpec& arch, double dropout_rate);

/// One training-mode pass with analytic gradients. `loss` is the total;
/// `components` lists the individual terms (see component_names).
struct StepResult {
    double loss = 0.0;
    std::vector<double> components;
    nn::ParameterGradients encoder_gradients;
    nn::ParameterGradients decoder_gradients;
};

std::vector<std::string> component_names(Arch a);

StepResult projector_step(nn::Network& projector, const Matrix& x, const Matrix& y_ref, Rng& rng);
StepResult reconstructor_step(nn::Network& reconstructor, const Matrix& y_ref, const Matrix& x, Rng& rng);
StepResult ael_step(nn::Network& encoder, nn::Network& decoder, const Matrix& x, const Matrix& y_ref,
                    double omega, Rng& rng);
/// `eps` overrides the standard-normal draws (same shape as the latent batch).
StepResult vael_step(nn::Network& encoder, nn::Network& decoder, const Matrix& x, const Matrix& y_ref,
                     double alpha, double beta, Rng& rng, const Matrix* eps = nullptr);

struct EpochLoss {
    double total = 0.0;
    std::vector<double> components;
};

struct TrainingConfig {
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double dropout_rate = 0.25;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;
    std::uint64_t seed = 0;
    ArchitectureSpec architecture;

    void validate() const;
};

/// Encoder/decoder pair plus the standardizers of both spaces. For P&R the
/// encoder is the projector and the decoder the reconstructor.
struct TrainedModel {
    ArchitectureSpec architecture;
    nn::Network encoder;
    nn::Network decoder;
    Standardizer data_standardizer;
    Standardizer projection_standardizer;
    std::vector<EpochLoss> loss_history;
    TrainingConfig config;
    std::uint64_t seed = 0;

    /// Standardized-space inference (VAEL returns mu).
    Matrix encode_standardized(const Matrix& x_std) const;
    Matrix decode_standardized(const Matrix& y_std) const;
};

/// Data units in, projection units out.
Matrix encode(const TrainedModel& model, const Matrix& x);
/// Projection units in, data units out.
Matrix decode(const TrainedModel& model, const Matrix& y);

}  // namespace projlearn
