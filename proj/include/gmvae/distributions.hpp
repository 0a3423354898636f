#pragma once

#include "gmvae/rng.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

// Unnormalized categorical over K classes. Rank-1 logits hold one
// distribution; rank-2 logits hold one distribution per row.
struct CategoricalParams {
    Tensor logits;
    std::size_t k() const { return logits.shape().back(); }
    Tensor probabilities() const;  // softmax of logits, detached from any tape
};

// Point on the open simplex drawn from the Concrete (Gumbel-Softmax)
// relaxation at the given temperature.
struct ConcreteSample {
    Tensor value;
    double temperature = 0.0;
};

// Diagonal Gaussian; same row convention as CategoricalParams.
struct DiagGaussianParams {
    Tensor mean;
    Tensor log_variance;
};

// Abstract noise feed so objectives can run with pinned noise in tests and
// with an RngStream in training. Tensors are filled in row-major order.
struct NoiseSource {
    virtual ~NoiseSource() = default;
    virtual Tensor normal(const Shape& shape) = 0;
    virtual Tensor gumbel(const Shape& shape) = 0;
};

class RngNoise final : public NoiseSource {
public:
    explicit RngNoise(RngStream& rng) : rng_(&rng) {}
    Tensor normal(const Shape& shape) override;
    Tensor gumbel(const Shape& shape) override;

private:
    RngStream* rng_;
};

struct ZeroNoise final : NoiseSource {
    Tensor normal(const Shape& shape) override { return Tensor::zeros(shape); }
    Tensor gumbel(const Shape& shape) override { return Tensor::zeros(shape); }
};

// ---- sampling --------------------------------------------------------------

Tensor sample_gumbel(const Shape& shape, RngStream& rng);

// softmax((logits + noise) / tau); differentiable w.r.t. logits.
ConcreteSample relax_concrete(const Tensor& logits, const Tensor& gumbel_noise, double tau);
ConcreteSample sample_concrete(const Tensor& logits, double tau, RngStream& rng);

// z = mean + exp(log_variance / 2) * eps; differentiable w.r.t. both params.
Tensor reparam_gaussian(const DiagGaussianParams& p, const Tensor& eps);
Tensor sample_diag_gaussian(const DiagGaussianParams& p, RngStream& rng);

// ---- densities and divergences ----------------------------------------------
// Rank-1 inputs give a rank-0 scalar; rank-2 inputs give one value per row.

// D_KL(q || Cat(1/K)) = ln K + sum_k q_k ln q_k, on softmax(logits).
Tensor categorical_kl_uniform(const Tensor& logits);
inline Tensor categorical_kl_uniform(const CategoricalParams& q) { return categorical_kl_uniform(q.logits); }

Tensor gaussian_log_density(const Tensor& z, const DiagGaussianParams& p);

// closed form KL between diagonal Gaussians
Tensor diag_gaussian_kl(const DiagGaussianParams& q, const DiagGaussianParams& p);

// sum_d x ln sigmoid(l) + (1-x) ln(1-sigmoid(l)), in stable logit form
// x l - softplus(l). x must be {0,1}-valued.
Tensor bernoulli_log_likelihood(const Tensor& x, const Tensor& mean_logits);

// Gaussian likelihood with a smooth variance floor:
// variance = floor + exp(raw_log_variance).
Tensor gaussian_log_likelihood(const Tensor& x, const Tensor& mean, const Tensor& raw_log_variance,
                               double variance_floor);

}  // namespace gmvae
