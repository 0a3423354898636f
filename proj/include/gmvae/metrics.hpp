#pragma once

#include <cstddef>
#include <vector>

#include "gmvae/error.hpp"

namespace gmvae {

// Fraction of examples covered by their cluster's majority label:
// sum over clusters of max_label count(cluster, label), divided by n.
double purity(const std::vector<std::size_t>& assignments, const std::vector<int>& labels);

// Natural-log entropy of the empirical distribution of cluster ids over k
// clusters; empty clusters contribute 0.
double usage_entropy(const std::vector<std::size_t>& assignments, std::size_t k);

}  // namespace gmvae
