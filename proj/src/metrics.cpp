#include "gmvae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gmvae {

double purity(const std::vector<std::size_t>& assignments, const std::vector<int>& labels) {
    if (assignments.size() != labels.size()) {
        throw ContractError("purity: " + std::to_string(assignments.size()) + " assignments vs " +
                            std::to_string(labels.size()) + " labels");
    }
    if (assignments.empty()) throw ContractError("purity: empty input");
    std::map<std::size_t, std::map<int, std::size_t>> counts;
    for (std::size_t i = 0; i < assignments.size(); ++i) counts[assignments[i]][labels[i]] += 1;
    std::size_t covered = 0;
    for (const auto& [cluster, by_label] : counts) {
        std::size_t best = 0;
        for (const auto& [label, c] : by_label) best = std::max(best, c);
        covered += best;
    }
    return static_cast<double>(covered) / static_cast<double>(assignments.size());
}

double usage_entropy(const std::vector<std::size_t>& assignments, std::size_t k) {
    if (assignments.empty()) throw ContractError("usage_entropy: empty input");
    std::vector<std::size_t> hist(k, 0);
    for (auto a : assignments) hist.at(a) += 1;
    const double n = static_cast<double>(assignments.size());
    double h = 0.0;
    for (auto c : hist) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace gmvae
