#pragma once

#include <string>

#include "gmvae/model.hpp"

namespace gmvae {

// Flat little-endian binary container; layout documented in
// docs/file_formats.md. Writes to <path>.tmp and renames on success.
void save_checkpoint(const std::string& path, const GMVAE& model);

// Reconstructs the model (config + parameter values) from a checkpoint.
GMVAE load_checkpoint(const std::string& path);

}  // namespace gmvae
