#include "gmvae/distributions.hpp"

#include <cmath>

namespace gmvae {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // ln(2*pi)/2

// reduce over the last axis: rank-1 -> scalar, rank-2 -> per-row vector
Tensor row_sum(const Tensor& t) {
    if (t.rank() == 1) return reduce_sum(t);
    return reduce_sum(t, 1);
}

void check_pair(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    if (a.rank() < 1 || a.rank() > 2) {
        throw DimensionError(std::string(op) + ": expects rank 1 or 2, got " + shape_str(a.shape()));
    }
}

}  // namespace

Tensor CategoricalParams::probabilities() const {
    Tensor detached(logits.shape(), logits.data());  // drop tape binding
    return exp(log_softmax(detached, detached.rank() == 1 ? 0 : 1));
}

Tensor RngNoise::normal(const Shape& shape) {
    Tensor t(shape, 0.0);
    for (auto& v : t.data()) v = rng_->normal();
    return t;
}

Tensor RngNoise::gumbel(const Shape& shape) {
    Tensor t(shape, 0.0);
    for (auto& v : t.data()) v = rng_->gumbel();
    return t;
}

Tensor sample_gumbel(const Shape& shape, RngStream& rng) {
    Tensor t(shape, 0.0);
    for (auto& v : t.data()) v = rng.gumbel();
    return t;
}

ConcreteSample relax_concrete(const Tensor& logits, const Tensor& gumbel_noise, double tau) {
    if (tau <= 0.0) throw DomainError("relax_concrete: temperature must be positive, got " + std::to_string(tau));
    check_pair("relax_concrete", logits, gumbel_noise);
    Tensor shifted = scale(add(logits, gumbel_noise), 1.0 / tau);
    Tensor value = exp(log_softmax(shifted, shifted.rank() == 1 ? 0 : 1));
    return ConcreteSample{value, tau};
}

ConcreteSample sample_concrete(const Tensor& logits, double tau, RngStream& rng) {
    if (tau <= 0.0) throw DomainError("sample_concrete: temperature must be positive, got " + std::to_string(tau));
    return relax_concrete(logits, sample_gumbel(logits.shape(), rng), tau);
}

Tensor reparam_gaussian(const DiagGaussianParams& p, const Tensor& eps) {
    check_pair("reparam_gaussian", p.mean, p.log_variance);
    if (eps.shape() != p.mean.shape()) {
        throw DimensionError("reparam_gaussian: noise shape " + shape_str(eps.shape()) +
                             " does not match parameters " + shape_str(p.mean.shape()));
    }
    return add(p.mean, mul(exp(scale(p.log_variance, 0.5)), eps));
}

Tensor sample_diag_gaussian(const DiagGaussianParams& p, RngStream& rng) {
    Tensor eps(p.mean.shape(), 0.0);
    for (auto& v : eps.data()) v = rng.normal();
    return reparam_gaussian(p, eps);
}

Tensor categorical_kl_uniform(const Tensor& logits) {
    if (logits.rank() < 1 || logits.rank() > 2) {
        throw DimensionError("categorical_kl_uniform: expects rank 1 or 2, got " + shape_str(logits.shape()));
    }
    const std::size_t k = logits.shape().back();
    if (k < 2) throw DimensionError("categorical_kl_uniform: needs K >= 2");
    // ln K + sum q ln q with q = exp(log_softmax); q ln q underflows to 0
    // exactly where it should, so no probability clamp is needed here.
    Tensor ls = log_softmax(logits, logits.rank() == 1 ? 0 : 1);
    Tensor q_log_q = mul(exp(ls), ls);
    return add_scalar(row_sum(q_log_q), std::log(static_cast<double>(k)));
}

Tensor gaussian_log_density(const Tensor& z, const DiagGaussianParams& p) {
    check_pair("gaussian_log_density", p.mean, p.log_variance);
    if (z.shape() != p.mean.shape()) {
        throw DimensionError("gaussian_log_density: shape mismatch " + shape_str(z.shape()) + " vs " +
                             shape_str(p.mean.shape()));
    }
    // sum_d [ -ln(2pi)/2 - lv/2 - (z - mu)^2 / (2 exp(lv)) ]
    Tensor diff = sub(z, p.mean);
    Tensor quad = div(mul(diff, diff), scale(exp(p.log_variance), 2.0));
    Tensor terms = sub(neg(scale(p.log_variance, 0.5)), quad);
    const double d = static_cast<double>(z.shape().back());
    return add_scalar(row_sum(terms), -kHalfLog2Pi * d);
}

Tensor diag_gaussian_kl(const DiagGaussianParams& q, const DiagGaussianParams& p) {
    check_pair("diag_gaussian_kl", q.mean, q.log_variance);
    check_pair("diag_gaussian_kl", p.mean, p.log_variance);
    if (q.mean.shape() != p.mean.shape()) {
        throw DimensionError("diag_gaussian_kl: shape mismatch " + shape_str(q.mean.shape()) + " vs " +
                             shape_str(p.mean.shape()));
    }
    // 1/2 sum_d [ exp(lq - lp) + (mq - mp)^2 / exp(lp) - 1 + lp - lq ]
    Tensor ratio = exp(sub(q.log_variance, p.log_variance));
    Tensor diff = sub(q.mean, p.mean);
    Tensor quad = div(mul(diff, diff), exp(p.log_variance));
    Tensor terms = add(add_scalar(add(ratio, quad), -1.0), sub(p.log_variance, q.log_variance));
    return scale(row_sum(terms), 0.5);
}

Tensor bernoulli_log_likelihood(const Tensor& x, const Tensor& mean_logits) {
    check_pair("bernoulli_log_likelihood", x, mean_logits);
    for (double v : x.data()) {
        if (v != 0.0 && v != 1.0) {
            throw ContractError("bernoulli_log_likelihood: x must be binary, got " + std::to_string(v));
        }
    }
    // x ln s(l) + (1 - x) ln(1 - s(l)) == x l - softplus(l)
    return row_sum(sub(mul(x, mean_logits), softplus(mean_logits)));
}

Tensor gaussian_log_likelihood(const Tensor& x, const Tensor& mean, const Tensor& raw_log_variance,
                               double variance_floor) {
    if (variance_floor < 0.0) throw DomainError("gaussian_log_likelihood: variance floor must be >= 0");
    Tensor variance = add_scalar(exp(raw_log_variance), variance_floor);
    return gaussian_log_density(x, DiagGaussianParams{mean, log(variance)});
}

}  // namespace gmvae
