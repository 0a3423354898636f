#include "gmvae/bench.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "gmvae/data.hpp"
#include "gmvae/io.hpp"

namespace gmvae {

void BenchConfig::validate() const {
    if (k_values.size() < 2) throw ConfigError("bench.k_values: need at least 2 cluster counts");
    for (auto k : k_values) {
        if (k < 2) throw ConfigError("bench.k_values: cluster counts must be >= 2");
    }
    if (estimators.empty()) throw ConfigError("bench.estimators: none given");
    if (measure_steps < 30) throw ConfigError("bench.measure_steps: need >= 30 measured steps");
    if (batch_size == 0 || x_dim == 0 || z_dim == 0) throw ConfigError("bench: sizes must be positive");
}

namespace {

double percentile(std::vector<double> sorted, double p) {
    const double idx = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& config) {
    config.validate();

    // timing decoupled from I/O: one in-memory synthetic dataset reused by
    // every cell, real-valued so the Gaussian likelihood path is exercised
    Dataset data = synth_gmm(4, (config.batch_size * 4 + 3) / 4, config.x_dim, 10.0, 1.0,
                             mix_seed(config.seed, 7001));

    std::vector<BenchRow> rows;
    for (Estimator est : config.estimators) {
        for (std::size_t k : config.k_values) {
            GMVAEConfig mc;
            mc.k = k;
            mc.x_dim = config.x_dim;
            mc.z_dim = config.z_dim;
            mc.hidden_shared = config.hidden_shared;
            mc.hidden_y = config.hidden_y;
            mc.hidden_z = config.hidden_z;
            mc.hidden_decoder = config.hidden_decoder;
            mc.likelihood = Likelihood::diag_gaussian;
            mc.temperature = config.tau;
            GMVAE model(mc, mix_seed(config.seed, 7100 + k));

            TrainConfig tc;
            tc.estimator = est;
            tc.batch_size = config.batch_size;
            tc.tau = config.tau;
            tc.seed = config.seed;

            AdamState adam(model.parameters());
            RngStream noise_rng(mix_seed(config.seed, 7200 + k));
            RngNoise noise(noise_rng);
            RngStream batch_rng(mix_seed(config.seed, 7300 + k));

            auto blocks = batches(data.n, config.batch_size, false, batch_rng);
            std::size_t cursor = 0;
            auto next_batch = [&]() {
                Tensor x = gather_rows(data, blocks[cursor]);
                cursor = (cursor + 1) % blocks.size();
                return x;
            };

            auto one_step = [&](const Tensor& x) {
                Tape tape;
                GMVAE::View view = model.watch(tape);
                ObjectiveResult r = est == Estimator::marginal
                                        ? elbo_marginal(model, view, x, noise, 1.0)
                                        : elbo_concrete(model, view, x, noise, tc.tau, 1.0);
                tape.backward(r.loss);
                adam_step(model.parameters(), adam, tc.learning_rate);
            };

            for (std::size_t i = 0; i < config.warmup_steps; ++i) one_step(next_batch());

            std::vector<double> ms;
            ms.reserve(config.measure_steps);
            for (std::size_t i = 0; i < config.measure_steps; ++i) {
                Tensor x = next_batch();
                const auto t0 = std::chrono::steady_clock::now();
                one_step(x);
                const auto t1 = std::chrono::steady_clock::now();
                ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            }
            std::sort(ms.begin(), ms.end());

            BenchRow row;
            row.estimator = est;
            row.k = k;
            row.median_ms = percentile(ms, 0.5);
            row.p10_ms = percentile(ms, 0.1);
            row.p90_ms = percentile(ms, 0.9);
            row.steps = config.measure_steps;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "estimator,K,median_ms,p10_ms,p90_ms,steps\n";
    for (const auto& r : rows) {
        os << estimator_name(r.estimator) << "," << r.k << "," << format_double(r.median_ms) << ","
           << format_double(r.p10_ms) << "," << format_double(r.p90_ms) << "," << r.steps << "\n";
    }
    return os.str();
}

}  // namespace gmvae
