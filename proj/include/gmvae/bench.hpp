#pragma once

#include <cstdint>
#include <vector>

#include "gmvae/model.hpp"
#include "gmvae/training.hpp"

namespace gmvae {

// Per-optimizer-step wall-time measurement across cluster counts, the
// desk-scale probe of the estimators' cost scaling in K. Cells run
// sequentially in one thread.
struct BenchConfig {
    std::vector<std::size_t> k_values{2, 5, 10, 20, 40};
    std::vector<Estimator> estimators{Estimator::marginal, Estimator::concrete};
    std::size_t warmup_steps = 10;
    std::size_t measure_steps = 30;
    std::size_t batch_size = 64;
    std::size_t x_dim = 64;
    std::size_t z_dim = 16;
    std::size_t hidden_shared = 512;
    std::array<std::size_t, 2> hidden_y{512, 256};
    std::array<std::size_t, 2> hidden_z{512, 256};
    std::vector<std::size_t> hidden_decoder{256, 512};
    double tau = 0.3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BenchRow {
    Estimator estimator;
    std::size_t k = 0;
    double median_ms = 0.0;
    double p10_ms = 0.0;
    double p90_ms = 0.0;
    std::size_t steps = 0;
};

std::vector<BenchRow> run_bench(const BenchConfig& config);

// columns: estimator,K,median_ms,p10_ms,p90_ms,steps
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace gmvae
