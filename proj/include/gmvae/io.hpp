#pragma once

#include <string>

#include "gmvae/training.hpp"

namespace gmvae {

// All writers go through a temp file + rename so failed commands leave no
// partial outputs.
void atomic_write_text(const std::string& path, const std::string& content);

std::string format_double(double v);  // shortest round-trip decimal

std::string report_to_json(const TrainReport& report, const TrainConfig& config);
std::string eval_metrics_to_json(const EvalMetrics& metrics);

// columns: epoch,step,train_loss,val_loss,w_t,kl_y,wall_seconds
std::string metrics_csv(const TrainReport& report);

}  // namespace gmvae
