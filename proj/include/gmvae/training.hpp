#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmvae/data.hpp"
#include "gmvae/model.hpp"

namespace gmvae {

// ---- KL weight schedule ------------------------------------------------------

enum class ScheduleKind {
    paper_literal,  // min(1, exp(-t/T)): decays 1 -> 0
    ramp_exp,       // min(1, exp((t - 5T)/T)): rises ~0 -> 1, reaching 1 at t = 5T
    ramp_linear,    // min(1, t/T)
    constant,       // c
};

struct KLSchedule {
    ScheduleKind kind = ScheduleKind::ramp_exp;
    double scale = 2000.0;  // T
    double value = 1.0;     // c, for kind == constant

    void validate() const;
};

std::string schedule_kind_name(ScheduleKind k);
ScheduleKind schedule_kind_from_name(const std::string& name);

// w_t in [0, 1]; t counts optimizer steps starting at 0.
double kl_weight(const KLSchedule& schedule, std::uint64_t t);

// ---- configs -------------------------------------------------------------------

enum class Estimator { marginal, concrete };
std::string estimator_name(Estimator e);
Estimator estimator_from_name(const std::string& name);

struct TrainConfig {
    Estimator estimator = Estimator::concrete;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    double tau = 0.3;
    KLSchedule schedule;
    std::size_t eval_z_samples = 1;
    // draw one shared z-noise tensor for all mixture components of the
    // marginal estimator (variance-reduction experiment option)
    bool shared_marginal_noise = false;

    void validate() const;
};

// ---- Adam ----------------------------------------------------------------------

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t t = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    explicit AdamState(const std::vector<Parameter>& params);
};

// bias-corrected update; zeroes the gradients afterwards
void adam_step(std::vector<Parameter>& params, AdamState& state, double learning_rate);

// ---- objectives -----------------------------------------------------------------
// Both return the negative weighted ELBO estimate, batch-meaned, plus the
// batch-mean categorical KL as a plain diagnostic.
//
// Noise draw order (fixed contract, relied on by common-random-number
// comparisons):
//   marginal: component k = 0..K-1 in turn, one normal [B x z_dim] tensor
//             each (one draw total when shared_noise is set)
//   concrete: one gumbel [B x K] tensor, then one normal [B x z_dim] tensor

struct ObjectiveResult {
    Tensor loss;
    double kl_y = 0.0;
};

ObjectiveResult elbo_marginal(const GMVAE& model, const GMVAE::View& view, const Tensor& x,
                              NoiseSource& noise, double w, bool shared_noise = false);

ObjectiveResult elbo_concrete(const GMVAE& model, const GMVAE::View& view, const Tensor& x,
                              NoiseSource& noise, double tau, double w);

// ---- training loop ----------------------------------------------------------------

struct EpochRecord {
    std::size_t epoch = 0;       // 1-based
    std::uint64_t step = 0;      // optimizer steps completed so far
    double train_loss = 0.0;     // mean over the epoch's steps
    double val_loss = 0.0;       // w = 1, configured estimator
    double w_t = 0.0;            // weight used by the epoch's last step
    double kl_y = 0.0;           // mean categorical KL over the epoch's steps
    double wall_seconds = 0.0;
};

struct EvalMetrics {
    double recon_log_likelihood = 0.0;  // mean over examples and z samples
    double kl_y = 0.0;
    double usage_entropy = 0.0;
    std::optional<double> purity;
    std::size_t n = 0;
    std::size_t z_samples = 1;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t stopped_epoch = 0;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    double total_wall_seconds = 0.0;
    EvalMetrics final_metrics;  // on the validation set, best parameters
};

// Runs minibatch training with early stopping on the validation loss and
// restores the best-validation parameters before returning. Logs one line
// per epoch to stdout when verbose.
TrainReport train(GMVAE& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  bool verbose = false);

// Test-time metrics: discretized y*, S z-samples per example.
EvalMetrics evaluate(const GMVAE& model, const Dataset& data, std::size_t z_samples, NoiseSource& noise);

// validation/evaluation loss at w = 1 over a whole dataset (no gradients)
double dataset_loss(const GMVAE& model, const Dataset& data, const TrainConfig& config, NoiseSource& noise);

// sub-stream salts for deriving per-purpose RNG seeds from the run seed
namespace seed_salt {
constexpr std::uint64_t model_init = 0;
constexpr std::uint64_t shuffle = 1;
constexpr std::uint64_t train_noise = 2;
constexpr std::uint64_t eval_noise = 3;
constexpr std::uint64_t validation_base = 100;  // + epoch index
}  // namespace seed_salt

}  // namespace gmvae
