#pragma once

#include <functional>
#include <vector>

#include "gmvae/tensor.hpp"

namespace gmvae {

// Central-difference gradient of f with respect to each parameter
// coordinate: (f(th + h e_i) - f(th - h e_i)) / 2h. f must be deterministic
// (fix any RNG stream before each call). Only forward evaluation is used, so
// this is an independent check of backward().
inline std::vector<std::vector<double>> finite_diff_gradient(const std::function<double()>& f,
                                                             const std::vector<Parameter*>& params,
                                                             double h = 1e-5) {
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (Parameter* p : params) {
        std::vector<double> g(p->value.numel());
        auto& v = p->value.data();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double saved = v[i];
            v[i] = saved + h;
            const double up = f();
            v[i] = saved - h;
            const double down = f();
            v[i] = saved;
            g[i] = (up - down) / (2.0 * h);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

// Worst coordinatewise relative error between analytic gradients already
// accumulated in params and a finite-difference result.
inline double max_grad_rel_error(const std::vector<Parameter*>& params,
                                 const std::vector<std::vector<double>>& numeric) {
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const auto& a = params[p]->grad.data();
        const auto& n = numeric[p];
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double denom = std::max({std::abs(a[i]), std::abs(n[i]), 1e-8});
            worst = std::max(worst, std::abs(a[i] - n[i]) / denom);
        }
    }
    return worst;
}

}  // namespace gmvae
