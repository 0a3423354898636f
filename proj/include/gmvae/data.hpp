#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmvae/rng.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

// Feature matrix in [0,1]^(n x d) with optional integer labels. Labels are
// for external evaluation only and are never shown to training.
struct Dataset {
    std::string name;
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> features;  // row-major
    std::vector<int> labels;       // empty when absent
    // affine rescale applied by synth_gmm: raw = offset + scale * value
    double rescale_offset = 0.0;
    double rescale_scale = 1.0;

    bool has_labels() const { return !labels.empty(); }
    double at(std::size_t row, std::size_t col) const { return features[row * d + col]; }
};

// ---- IDX (MNIST distribution format) ----------------------------------------
// Big-endian 32-bit header words; magic third byte 0x08 (unsigned byte data),
// fourth byte the rank; payload of unsigned bytes.

Dataset load_idx_images(const std::string& path);       // magic 0x00000803, [n, rows, cols]
std::vector<int> load_idx_labels(const std::string& path);  // magic 0x00000801, [n]

void write_idx_images(const std::string& path, const Dataset& ds, std::size_t rows, std::size_t cols);

enum class BinarizeMode { threshold, stochastic };

// threshold mode: v >= threshold -> 1 (boundary inclusive); stochastic mode:
// Bernoulli(v) per entry. Threshold binarization is idempotent.
void binarize(Dataset& ds, BinarizeMode mode, double threshold = 0.5, RngStream* rng = nullptr);

// ---- synthetic Gaussian mixture ----------------------------------------------
// Cluster means on a deterministic grid: s * e_{k mod d} * (1 + floor(k/d)).
// n_per_cluster points per cluster, N(mean_k, sigma^2 I). Rows are then
// shuffled (seeded) and features affinely rescaled into [0,1]; the rescale is
// recorded on the dataset. Labels carry the generating component.
Dataset synth_gmm(std::size_t k, std::size_t n_per_cluster, std::size_t d, double separation, double sigma,
                  std::uint64_t seed);

// ---- batching -----------------------------------------------------------------

// Index blocks covering {0..n-1} exactly once; the final short block is kept.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, bool shuffle,
                                              RngStream& rng);

Tensor gather_rows(const Dataset& ds, const std::vector<std::size_t>& rows);
std::vector<int> gather_labels(const Dataset& ds, const std::vector<std::size_t>& rows);

// head = [0, n - ceil(fraction*n)), tail = the rest; split precedes any
// shuffling so it is reproducible from the dataset alone.
std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, double val_fraction = 0.1);

// ---- CSV -----------------------------------------------------------------------
// Header f0,...,f{d-1}[,label]; one row per example, label in the last column.

void write_dataset_csv(const std::string& path, const Dataset& ds);
Dataset load_dataset_csv(const std::string& path);

}  // namespace gmvae
