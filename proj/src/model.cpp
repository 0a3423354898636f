#include "gmvae/model.hpp"

#include <cmath>

#include "gmvae/rng.hpp"

namespace gmvae {

std::string likelihood_name(Likelihood l) {
    return l == Likelihood::bernoulli ? "bernoulli" : "diag_gaussian";
}

Likelihood likelihood_from_name(const std::string& name) {
    if (name == "bernoulli") return Likelihood::bernoulli;
    if (name == "diag_gaussian") return Likelihood::diag_gaussian;
    throw ConfigError("unknown likelihood '" + name + "' (expected bernoulli or diag_gaussian)");
}

void GMVAEConfig::validate() const {
    if (k < 2) throw ConfigError("model.k: cluster count must be >= 2, got " + std::to_string(k));
    if (x_dim == 0) throw ConfigError("model.x_dim: input dimensionality must be >= 1");
    if (z_dim == 0) throw ConfigError("model.z_dim: latent dimensionality must be >= 1");
    if (hidden_shared == 0 || hidden_y[0] == 0 || hidden_y[1] == 0 || hidden_z[0] == 0 || hidden_z[1] == 0) {
        throw ConfigError("model hidden widths must be >= 1");
    }
    for (auto w : hidden_decoder) {
        if (w == 0) throw ConfigError("model.hidden_decoder widths must be >= 1");
    }
    if (!(temperature > 0.0)) throw ConfigError("model.temperature must be positive");
}

namespace {

Tensor init_weight(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w(Shape{fan_in, fan_out}, 0.0);
    for (auto& v : w.data()) v = (2.0 * rng.uniform01() - 1.0) * a;
    return w;
}

}  // namespace

GMVAE::GMVAE(GMVAEConfig config, std::uint64_t init_seed) : cfg_(std::move(config)) {
    cfg_.validate();
    RngStream rng(init_seed);

    auto make_chain = [&](const std::string& head, std::vector<std::size_t>& idx,
                          const std::vector<std::size_t>& widths) {
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            idx.push_back(params_.size());
            params_.emplace_back(head + "." + std::to_string(l) + ".weight",
                                 init_weight(widths[l], widths[l + 1], rng));
            params_.emplace_back(head + "." + std::to_string(l) + ".bias",
                                 Tensor::zeros(Shape{widths[l + 1]}));
        }
    };

    make_chain("shared", shared_idx_, {cfg_.x_dim, cfg_.hidden_shared});
    make_chain("y_head", y_idx_, {cfg_.hidden_shared, cfg_.hidden_y[0], cfg_.hidden_y[1], cfg_.k});
    make_chain("z_head", z_idx_,
               {cfg_.hidden_shared + cfg_.k, cfg_.hidden_z[0], cfg_.hidden_z[1], 2 * cfg_.z_dim});
    make_chain("prior", prior_idx_, {cfg_.k, 2 * cfg_.z_dim});

    std::vector<std::size_t> dec_widths;
    dec_widths.push_back(cfg_.z_dim + (cfg_.decoder_concat_y ? cfg_.k : 0));
    dec_widths.insert(dec_widths.end(), cfg_.hidden_decoder.begin(), cfg_.hidden_decoder.end());
    dec_widths.push_back(cfg_.decoder_out_dim());
    make_chain("decoder", decoder_idx_, dec_widths);
}

Parameter* GMVAE::find_parameter(const std::string& name) {
    for (auto& p : params_) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::vector<GMVAE::LayerView> GMVAE::view_of(const std::vector<std::size_t>& idx, Tape* tape) const {
    std::vector<LayerView> out;
    out.reserve(idx.size());
    auto& params = const_cast<std::vector<Parameter>&>(params_);
    for (std::size_t i : idx) {
        if (tape) {
            out.push_back({tape->watch(params[i]), tape->watch(params[i + 1])});
        } else {
            out.push_back({params[i].value, params[i + 1].value});
        }
    }
    return out;
}

GMVAE::View GMVAE::watch(Tape& tape) {
    return View{view_of(shared_idx_, &tape), view_of(y_idx_, &tape), view_of(z_idx_, &tape),
                view_of(prior_idx_, &tape), view_of(decoder_idx_, &tape)};
}

GMVAE::View GMVAE::values() const {
    return View{view_of(shared_idx_, nullptr), view_of(y_idx_, nullptr), view_of(z_idx_, nullptr),
                view_of(prior_idx_, nullptr), view_of(decoder_idx_, nullptr)};
}

namespace {

// linear chain with relu between layers, none after the last
Tensor run_chain(const std::vector<GMVAE::LayerView>& layers, Tensor x) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        x = add_bias(matmul(x, layers[l].w), layers[l].b);
        if (l + 1 < layers.size()) x = relu(x);
    }
    return x;
}

DiagGaussianParams split_gaussian(const Tensor& packed) {
    const std::size_t d = packed.shape()[1] / 2;
    return DiagGaussianParams{slice_cols(packed, 0, d), slice_cols(packed, d, 2 * d)};
}

}  // namespace

void check_simplex_rows(const Tensor& y, double tol) {
    if (y.rank() != 2) throw ContractError("check_simplex_rows: expects rank 2, got " + shape_str(y.shape()));
    const std::size_t rows = y.shape()[0], cols = y.shape()[1];
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = y.at2(i, j);
            if (v < -tol) throw ContractError("y row " + std::to_string(i) + " has negative component");
            s += v;
        }
        if (std::abs(s - 1.0) > tol) {
            throw ContractError("y row " + std::to_string(i) + " does not sum to 1 (sum=" + std::to_string(s) + ")");
        }
    }
}

Tensor GMVAE::encode_shared(const View& v, const Tensor& x) const {
    if (x.rank() != 2 || x.shape()[1] != cfg_.x_dim) {
        throw DimensionError("encode_shared: expected [B x " + std::to_string(cfg_.x_dim) + "], got " +
                             shape_str(x.shape()));
    }
    for (double e : x.data()) {
        if (e < 0.0 || e > 1.0) throw ContractError("encode_shared: inputs must lie in [0, 1]");
    }
    return relu(add_bias(matmul(x, v.shared[0].w), v.shared[0].b));
}

CategoricalParams GMVAE::posterior_y(const View& v, const Tensor& h) const {
    return CategoricalParams{run_chain(v.y_head, h)};
}

DiagGaussianParams GMVAE::posterior_z(const View& v, const Tensor& h, const Tensor& y) const {
    if (y.rank() != 2 || y.shape()[1] != cfg_.k || y.shape()[0] != h.shape()[0]) {
        throw DimensionError("posterior_z: y must be [B x K], got " + shape_str(y.shape()));
    }
    check_simplex_rows(y);
    return split_gaussian(run_chain(v.z_head, concat(h, y, 1)));
}

DiagGaussianParams GMVAE::prior_z(const View& v, const Tensor& y) const {
    if (y.rank() != 2 || y.shape()[1] != cfg_.k) {
        throw DimensionError("prior_z: y must be [B x K], got " + shape_str(y.shape()));
    }
    check_simplex_rows(y);
    return split_gaussian(run_chain(v.prior, y));
}

Tensor GMVAE::decode(const View& v, const Tensor& z, const Tensor* y) const {
    if (z.rank() != 2 || z.shape()[1] != cfg_.z_dim) {
        throw DimensionError("decode: z must be [B x " + std::to_string(cfg_.z_dim) + "], got " +
                             shape_str(z.shape()));
    }
    Tensor in = z;
    if (cfg_.decoder_concat_y) {
        if (!y) throw ContractError("decode: decoder_concat_y is set but no y was supplied");
        in = concat(z, *y, 1);
    }
    return run_chain(v.decoder, in);
}

Tensor GMVAE::recon_log_likelihood(const Tensor& x, const Tensor& decoder_out) const {
    if (cfg_.likelihood == Likelihood::bernoulli) {
        return bernoulli_log_likelihood(x, decoder_out);
    }
    const std::size_t d = cfg_.x_dim;
    return gaussian_log_likelihood(x, slice_cols(decoder_out, 0, d), slice_cols(decoder_out, d, 2 * d),
                                   kGaussianVarianceFloor);
}

Tensor discretize_y(const CategoricalParams& q) {
    const auto arg = argmax_rows(q.logits);
    const std::size_t k = q.k();
    if (q.logits.rank() == 1) return one_hot(arg[0], k);
    Tensor out(Shape{arg.size(), k}, 0.0);
    for (std::size_t i = 0; i < arg.size(); ++i) out[i * k + arg[i]] = 1.0;
    return out;
}

}  // namespace gmvae
