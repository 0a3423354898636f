#include "gmvae/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "gmvae/metrics.hpp"

namespace gmvae {

void KLSchedule::validate() const {
    if (!(scale > 0.0)) throw ConfigError("schedule.scale must be positive");
    if (kind == ScheduleKind::constant && (value < 0.0 || value > 1.0)) {
        throw ConfigError("schedule.value must lie in [0, 1]");
    }
}

std::string schedule_kind_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::paper_literal: return "paper-literal";
        case ScheduleKind::ramp_exp: return "ramp-exp";
        case ScheduleKind::ramp_linear: return "ramp-linear";
        case ScheduleKind::constant: return "constant";
    }
    return "?";
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "paper-literal") return ScheduleKind::paper_literal;
    if (name == "ramp-exp") return ScheduleKind::ramp_exp;
    if (name == "ramp-linear") return ScheduleKind::ramp_linear;
    if (name == "constant") return ScheduleKind::constant;
    throw ConfigError("unknown schedule kind '" + name + "'");
}

double kl_weight(const KLSchedule& schedule, std::uint64_t t) {
    const double td = static_cast<double>(t);
    switch (schedule.kind) {
        case ScheduleKind::paper_literal: return std::min(1.0, std::exp(-td / schedule.scale));
        case ScheduleKind::ramp_exp: return std::min(1.0, std::exp((td - 5.0 * schedule.scale) / schedule.scale));
        case ScheduleKind::ramp_linear: return std::min(1.0, td / schedule.scale);
        case ScheduleKind::constant: return schedule.value;
    }
    return 1.0;
}

std::string estimator_name(Estimator e) { return e == Estimator::marginal ? "marginal" : "concrete"; }

Estimator estimator_from_name(const std::string& name) {
    if (name == "marginal") return Estimator::marginal;
    if (name == "concrete") return Estimator::concrete;
    throw ConfigError("unknown estimator '" + name + "' (expected marginal or concrete)");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
    if (max_epochs == 0) throw ConfigError("train.max_epochs must be >= 1");
    if (patience == 0) throw ConfigError("train.patience must be >= 1");
    if (!(tau > 0.0)) throw ConfigError("train.tau must be positive");
    if (eval_z_samples == 0) throw ConfigError("train.eval_z_samples must be >= 1");
    schedule.validate();
}

// ---- Adam ------------------------------------------------------------------

AdamState::AdamState(const std::vector<Parameter>& params) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& p : params) {
        m.push_back(Tensor::zeros(p.value.shape()));
        v.push_back(Tensor::zeros(p.value.shape()));
    }
}

void adam_step(std::vector<Parameter>& params, AdamState& state, double learning_rate) {
    if (state.m.size() != params.size()) throw ContractError("adam_step: state does not match parameters");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& value = params[p].value.data();
        auto& grad = params[p].grad.data();
        auto& m = state.m[p].data();
        auto& v = state.v[p].data();
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            value[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.eps);
            grad[i] = 0.0;
        }
    }
}

// ---- objectives --------------------------------------------------------------

namespace {

// mean of a detached per-row tensor
double mean_of(const Tensor& rows) {
    double s = 0.0;
    for (double v : rows.data()) s += v;
    return s / static_cast<double>(rows.numel());
}

}  // namespace

ObjectiveResult elbo_marginal(const GMVAE& model, const GMVAE::View& view, const Tensor& x,
                              NoiseSource& noise, double w, bool shared_noise) {
    const auto& cfg = model.config();
    const std::size_t b = x.shape()[0];

    Tensor h = model.encode_shared(view, x);
    CategoricalParams qy = model.posterior_y(view, h);
    Tensor log_q = log_softmax(qy.logits, 1);
    Tensor q = exp(log_q);
    Tensor kl_rows = categorical_kl_uniform(qy.logits);

    Tensor shared_eps;
    if (shared_noise) shared_eps = noise.normal(Shape{b, cfg.z_dim});

    Tensor mix;  // sum_k q_k * [ln p(z_k|y_k) - ln q(z_k|x,y_k) + ln p(x|z_k)]
    for (std::size_t k = 0; k < cfg.k; ++k) {
        Tensor y_k = tile_rows(one_hot(k, cfg.k), b);
        DiagGaussianParams qz = model.posterior_z(view, h, y_k);
        Tensor eps = shared_noise ? shared_eps : noise.normal(Shape{b, cfg.z_dim});
        Tensor z = reparam_gaussian(qz, eps);
        DiagGaussianParams pz = model.prior_z(view, y_k);
        Tensor path = add(sub(gaussian_log_density(z, pz), gaussian_log_density(z, qz)),
                          model.recon_log_likelihood(x, model.decode(view, z, &y_k)));
        Tensor q_k = reshape(matmul(q, reshape(one_hot(k, cfg.k), Shape{cfg.k, 1})), Shape{b});
        Tensor weighted = mul(q_k, path);
        mix = mix.defined() ? add(mix, weighted) : weighted;
    }

    Tensor loss = reduce_mean(sub(scale(kl_rows, w), mix));
    return ObjectiveResult{loss, mean_of(kl_rows)};
}

ObjectiveResult elbo_concrete(const GMVAE& model, const GMVAE::View& view, const Tensor& x,
                              NoiseSource& noise, double tau, double w) {
    if (!(tau > 0.0)) throw DomainError("elbo_concrete: temperature must be positive");
    const auto& cfg = model.config();
    const std::size_t b = x.shape()[0];

    Tensor h = model.encode_shared(view, x);
    CategoricalParams qy = model.posterior_y(view, h);
    Tensor kl_rows = categorical_kl_uniform(qy.logits);

    ConcreteSample y = relax_concrete(qy.logits, noise.gumbel(Shape{b, cfg.k}), tau);
    DiagGaussianParams qz = model.posterior_z(view, h, y.value);
    Tensor z = reparam_gaussian(qz, noise.normal(Shape{b, cfg.z_dim}));
    DiagGaussianParams pz = model.prior_z(view, y.value);
    Tensor path = add(sub(gaussian_log_density(z, pz), gaussian_log_density(z, qz)),
                      model.recon_log_likelihood(x, model.decode(view, z, &y.value)));

    Tensor loss = reduce_mean(sub(scale(kl_rows, w), path));
    return ObjectiveResult{loss, mean_of(kl_rows)};
}

// ---- evaluation ----------------------------------------------------------------

namespace {

ObjectiveResult run_objective(const GMVAE& model, const GMVAE::View& view, const Tensor& x,
                              NoiseSource& noise, const TrainConfig& config, double w) {
    if (config.estimator == Estimator::marginal) {
        return elbo_marginal(model, view, x, noise, w, config.shared_marginal_noise);
    }
    return elbo_concrete(model, view, x, noise, config.tau, w);
}

}  // namespace

double dataset_loss(const GMVAE& model, const Dataset& data, const TrainConfig& config, NoiseSource& noise) {
    if (data.n == 0) throw ConfigError("dataset_loss: empty dataset");
    GMVAE::View view = model.values();
    RngStream block_rng(0);  // unused: shuffle off
    double total = 0.0;
    for (const auto& block : batches(data.n, config.batch_size, false, block_rng)) {
        Tensor x = gather_rows(data, block);
        ObjectiveResult r = run_objective(model, view, x, noise, config, 1.0);
        total += r.loss.item() * static_cast<double>(block.size());
    }
    return total / static_cast<double>(data.n);
}

EvalMetrics evaluate(const GMVAE& model, const Dataset& data, std::size_t z_samples, NoiseSource& noise) {
    if (z_samples == 0) throw ConfigError("evaluate: z_samples must be >= 1");
    if (data.n == 0) throw ConfigError("evaluate: empty dataset");
    const auto& cfg = model.config();
    GMVAE::View view = model.values();

    EvalMetrics out;
    out.n = data.n;
    out.z_samples = z_samples;

    std::vector<std::size_t> assignments;
    assignments.reserve(data.n);
    double recon_sum = 0.0;
    double kl_sum = 0.0;

    RngStream block_rng(0);
    for (const auto& block : batches(data.n, 256, false, block_rng)) {
        Tensor x = gather_rows(data, block);
        Tensor h = model.encode_shared(view, x);
        CategoricalParams qy = model.posterior_y(view, h);
        Tensor y_star = discretize_y(qy);
        DiagGaussianParams qz = model.posterior_z(view, h, y_star);

        for (std::size_t s = 0; s < z_samples; ++s) {
            Tensor z = reparam_gaussian(qz, noise.normal(Shape{block.size(), cfg.z_dim}));
            Tensor ll = model.recon_log_likelihood(x, model.decode(view, z, &y_star));
            for (double v : ll.data()) recon_sum += v;
        }
        for (double v : categorical_kl_uniform(qy.logits).data()) kl_sum += v;
        for (auto a : argmax_rows(qy.logits)) assignments.push_back(a);
    }

    out.recon_log_likelihood = recon_sum / static_cast<double>(data.n * z_samples);
    out.kl_y = kl_sum / static_cast<double>(data.n);
    out.usage_entropy = usage_entropy(assignments, cfg.k);
    if (data.has_labels()) out.purity = purity(assignments, data.labels);
    return out;
}

// ---- training loop ----------------------------------------------------------------

TrainReport train(GMVAE& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  bool verbose) {
    config.validate();
    if (train_set.n == 0 || val_set.n == 0) throw ConfigError("train: empty train or validation split");
    if (train_set.d != model.config().x_dim || val_set.d != model.config().x_dim) {
        throw ConfigError("train: dataset dimensionality does not match model.x_dim");
    }

    const auto t0 = std::chrono::steady_clock::now();
    RngStream shuffle_rng(mix_seed(config.seed, seed_salt::shuffle));
    RngStream train_noise_rng(mix_seed(config.seed, seed_salt::train_noise));
    RngNoise train_noise(train_noise_rng);

    AdamState adam(model.parameters());
    for (auto& p : model.parameters()) p.zero_grad();

    TrainReport report;
    std::uint64_t step = 0;
    double best_val = 0.0;
    std::size_t no_improve = 0;
    std::vector<std::vector<double>> best_values;

    auto snapshot = [&]() {
        best_values.clear();
        for (const auto& p : model.parameters()) best_values.push_back(p.value.data());
    };

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto e0 = std::chrono::steady_clock::now();
        double loss_sum = 0.0;
        double kl_sum = 0.0;
        double last_w = kl_weight(config.schedule, step);
        std::size_t n_steps = 0;

        for (const auto& block : batches(train_set.n, config.batch_size, true, shuffle_rng)) {
            Tensor x = gather_rows(train_set, block);
            const double w = kl_weight(config.schedule, step);
            Tape tape;
            GMVAE::View view = model.watch(tape);
            ObjectiveResult r = run_objective(model, view, x, train_noise, config, w);
            tape.backward(r.loss);
            adam_step(model.parameters(), adam, config.learning_rate);
            loss_sum += r.loss.item();
            kl_sum += r.kl_y;
            last_w = w;
            ++step;
            ++n_steps;
        }

        RngStream val_rng(mix_seed(config.seed, seed_salt::validation_base + epoch));
        RngNoise val_noise(val_rng);
        const double val_loss = dataset_loss(model, val_set, config, val_noise);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.step = step;
        rec.train_loss = loss_sum / static_cast<double>(n_steps);
        rec.val_loss = val_loss;
        rec.w_t = last_w;
        rec.kl_y = kl_sum / static_cast<double>(n_steps);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
        report.epochs.push_back(rec);
        report.stopped_epoch = epoch;

        if (epoch == 1 || val_loss < best_val) {
            best_val = val_loss;
            report.best_epoch = epoch;
            no_improve = 0;
            snapshot();
        } else {
            ++no_improve;
        }

        if (verbose) {
            std::printf("epoch %3zu  step %6llu  train %.4f  val %.4f  w %.4f  kl_y %.4f  (%.2fs)\n", epoch,
                        static_cast<unsigned long long>(step), rec.train_loss, rec.val_loss, rec.w_t, rec.kl_y,
                        rec.wall_seconds);
            std::fflush(stdout);
        }

        if (no_improve >= config.patience) break;
    }

    if (!best_values.empty()) {
        auto& params = model.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) params[i].value.data() = best_values[i];
    }
    report.best_val_loss = best_val;

    RngStream eval_rng(mix_seed(config.seed, seed_salt::eval_noise));
    RngNoise eval_noise(eval_rng);
    report.final_metrics = evaluate(model, val_set, config.eval_z_samples, eval_noise);
    report.total_wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace gmvae
