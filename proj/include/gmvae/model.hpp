#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gmvae/distributions.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

enum class Likelihood { bernoulli, diag_gaussian };

std::string likelihood_name(Likelihood l);
Likelihood likelihood_from_name(const std::string& name);

struct GMVAEConfig {
    std::size_t k = 10;
    std::size_t x_dim = 0;
    std::size_t z_dim = 16;
    std::size_t hidden_shared = 512;
    std::array<std::size_t, 2> hidden_y{512, 256};
    std::array<std::size_t, 2> hidden_z{512, 256};
    std::vector<std::size_t> hidden_decoder{256, 512};
    Likelihood likelihood = Likelihood::bernoulli;
    double temperature = 0.3;
    // If set, the decoder input is [z ; y]. Off by default: the generative
    // factorization routes all y influence on x through z.
    bool decoder_concat_y = false;

    void validate() const;
    // width of the raw decoder output head
    std::size_t decoder_out_dim() const { return likelihood == Likelihood::bernoulli ? x_dim : 2 * x_dim; }
};

constexpr double kGaussianVarianceFloor = 1e-4;

// The five fully-connected networks of the model:
//   shared encoder h(x); y head q(y|x); z head q(z|x,y);
//   prior net p(z|y); decoder p(x|z).
// Construction performs uniform +-sqrt(6/(fan_in+fan_out)) weight init with
// zero biases, drawn from the given seed.
class GMVAE {
public:
    struct LayerView {
        Tensor w;
        Tensor b;
    };
    // Tape-bound (training) or detached (evaluation) handles onto the
    // parameters, grouped per network.
    struct View {
        std::vector<LayerView> shared, y_head, z_head, prior, decoder;
    };

    GMVAE(GMVAEConfig config, std::uint64_t init_seed);

    const GMVAEConfig& config() const { return cfg_; }
    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    Parameter* find_parameter(const std::string& name);

    View watch(Tape& tape);
    View values() const;

    // x: [B x x_dim] with entries in [0, 1] -> relu features [B x hidden_shared]
    Tensor encode_shared(const View& v, const Tensor& x) const;

    // q(y|x) logits from shared features
    CategoricalParams posterior_y(const View& v, const Tensor& h) const;

    // q(z|x,y); y rows must lie on the simplex (one-hot or relaxed)
    DiagGaussianParams posterior_z(const View& v, const Tensor& h, const Tensor& y) const;

    // p(z|y), a single linear layer from y
    DiagGaussianParams prior_z(const View& v, const Tensor& y) const;

    // p(x|z) head output: [B x x_dim] Bernoulli logits, or [B x 2 x_dim]
    // (mean ; raw log variance) for the Gaussian likelihood.
    Tensor decode(const View& v, const Tensor& z, const Tensor* y = nullptr) const;

    // per-row reconstruction log-likelihood ln p(x|z) from a decode() output
    Tensor recon_log_likelihood(const Tensor& x, const Tensor& decoder_out) const;

private:
    GMVAEConfig cfg_;
    std::vector<Parameter> params_;
    // index ranges into params_, one (weight, bias) pair per layer
    std::vector<std::size_t> shared_idx_, y_idx_, z_idx_, prior_idx_, decoder_idx_;

    std::vector<LayerView> view_of(const std::vector<std::size_t>& idx, Tape* tape) const;
};

// One-hot at the argmax of the logits; ties break to the lowest index.
// Accepts [K] or [B x K].
Tensor discretize_y(const CategoricalParams& q);

// throws ContractError unless every row is on the simplex within tol
void check_simplex_rows(const Tensor& y, double tol = 1e-6);

}  // namespace gmvae
