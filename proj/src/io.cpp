#include "gmvae/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gmvae {

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write file: " + tmp);
        out << content;
        if (!out) throw DataError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

namespace {

nlohmann::json metrics_json(const EvalMetrics& m) {
    nlohmann::json j{
        {"recon_log_likelihood", m.recon_log_likelihood},
        {"kl_y", m.kl_y},
        {"usage_entropy", m.usage_entropy},
        {"n", m.n},
        {"z_samples", m.z_samples},
    };
    if (m.purity.has_value()) j["purity"] = *m.purity;
    return j;
}

}  // namespace

std::string report_to_json(const TrainReport& report, const TrainConfig& config) {
    nlohmann::json j;
    j["estimator"] = estimator_name(config.estimator);
    j["learning_rate"] = config.learning_rate;
    j["batch_size"] = config.batch_size;
    j["max_epochs"] = config.max_epochs;
    j["patience"] = config.patience;
    j["seed"] = config.seed;
    j["tau"] = config.tau;
    j["eval_z_samples"] = config.eval_z_samples;
    j["schedule"] = {{"kind", schedule_kind_name(config.schedule.kind)},
                     {"scale", config.schedule.scale},
                     {"value", config.schedule.value}};
    // the KL weight multiplies the categorical term of both estimators
    j["kl_weight_applied_to_y_term"] = "both estimators";
    j["stopped_epoch"] = report.stopped_epoch;
    j["best_epoch"] = report.best_epoch;
    j["best_val_loss"] = report.best_val_loss;
    j["total_wall_seconds"] = report.total_wall_seconds;
    j["final_metrics"] = metrics_json(report.final_metrics);
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : report.epochs) {
        j["epochs"].push_back({{"epoch", e.epoch},
                               {"step", e.step},
                               {"train_loss", e.train_loss},
                               {"val_loss", e.val_loss},
                               {"w_t", e.w_t},
                               {"kl_y", e.kl_y},
                               {"wall_seconds", e.wall_seconds}});
    }
    return j.dump(2) + "\n";
}

std::string eval_metrics_to_json(const EvalMetrics& metrics) { return metrics_json(metrics).dump(2) + "\n"; }

std::string metrics_csv(const TrainReport& report) {
    std::ostringstream os;
    os << "epoch,step,train_loss,val_loss,w_t,kl_y,wall_seconds\n";
    for (const auto& e : report.epochs) {
        os << e.epoch << "," << e.step << "," << format_double(e.train_loss) << ","
           << format_double(e.val_loss) << "," << format_double(e.w_t) << "," << format_double(e.kl_y) << ","
           << format_double(e.wall_seconds) << "\n";
    }
    return os.str();
}

}  // namespace gmvae
