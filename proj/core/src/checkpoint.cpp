#include "c2f/checkpoint.hpp"

#include "c2f/image_io.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace c2f {

namespace {

constexpr const char* kMagic = "c2f-checkpoint 1";

std::map<std::string, std::string> expected_keys(const ExperimentConfig& cfg) {
  auto keys = cfg.fingerprint();
  if (cfg.model == "mlp") {
    keys["mlp_hidden"] = std::to_string(cfg.mlp_hidden);
    keys["mlp_time_embed"] = std::to_string(cfg.mlp_time_embed);
  }
  return keys;
}

void write_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                      const Eigen::VectorXd& params) {
  std::ostringstream out;
  out << kMagic << "\n";
  for (const auto& [key, value] : expected_keys(cfg))
    out << key << " = " << value << "\n";
  out << "param_count = " << params.size() << "\n";
  out << "params\n";
  for (Eigen::Index k = 0; k < params.size(); ++k) out << format_double(params[k]) << "\n";
  atomic_write_text(path, out.str());
}

Eigen::VectorXd linear_params(const LinearScoreModel& model) {
  const FieldShape shape = model.shape();
  const int n_steps = model.schedule().n_steps();
  const int block = shape.size();
  Eigen::VectorXd params(2L * n_steps * block);
  Eigen::Index k = 0;
  for (int i = 1; i <= n_steps; ++i) {
    const double* g = model.gain(i).data();
    const double* b = model.bias(i).data();
    for (int j = 0; j < block; ++j) params[k++] = g[j];
    for (int j = 0; j < block; ++j) params[k++] = b[j];
  }
  return params;
}

}  // namespace

void save_checkpoint(const std::string& path, const LinearScoreModel& model,
                     const ExperimentConfig& cfg) {
  write_checkpoint(path, cfg, linear_params(model));
}

void save_checkpoint(const std::string& path, const MlpScoreModel& model,
                     const ExperimentConfig& cfg) {
  write_checkpoint(path, cfg, model.params());
}

std::shared_ptr<ScoreModel> load_checkpoint(const std::string& path,
                                            const ExperimentConfig& cfg,
                                            const DiffusionSchedule& schedule) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw std::runtime_error("checkpoint: bad header in " + path);

  std::map<std::string, std::string> stored;
  long param_count = -1;
  while (std::getline(in, line)) {
    if (line == "params") break;
    auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw std::runtime_error("checkpoint: malformed line in " + path + ": " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 3);
    if (key == "param_count")
      param_count = std::stol(value);
    else
      stored[key] = value;
  }
  if (param_count < 0) throw std::runtime_error("checkpoint: missing param_count in " + path);

  auto expected = expected_keys(cfg);
  std::vector<std::string> diffs;
  for (const auto& [key, value] : expected) {
    auto it = stored.find(key);
    if (it == stored.end())
      diffs.push_back(key + " (missing in checkpoint)");
    else if (it->second != value)
      diffs.push_back(key + " (checkpoint " + it->second + " != config " + value + ")");
  }
  for (const auto& [key, value] : stored)
    if (!expected.count(key)) diffs.push_back(key + " (unexpected in checkpoint)");
  if (!diffs.empty()) {
    std::string msg = "checkpoint: fingerprint mismatch in " + path + ":";
    for (const auto& d : diffs) msg += "\n  " + d;
    throw std::runtime_error(msg);
  }

  Eigen::VectorXd params(param_count);
  for (long k = 0; k < param_count; ++k) {
    if (!(in >> params[k]))
      throw std::runtime_error("checkpoint: truncated parameters in " + path);
  }

  const FieldShape shape = cfg.shape();
  if (cfg.model == "linear") {
    auto model = std::make_shared<LinearScoreModel>(schedule, shape);
    long expected_count = 2L * schedule.n_steps() * shape.size();
    if (param_count != expected_count)
      throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
    Eigen::Index k = 0;
    for (int i = 1; i <= schedule.n_steps(); ++i) {
      double* g = model->gain(i).data();
      double* b = model->bias(i).data();
      for (int j = 0; j < shape.size(); ++j) g[j] = params[k++];
      for (int j = 0; j < shape.size(); ++j) b[j] = params[k++];
    }
    return model;
  }
  if (cfg.model == "mlp") {
    RngStream init(0);
    auto model = std::make_shared<MlpScoreModel>(
        schedule, shape, MlpConfig{cfg.mlp_hidden, cfg.mlp_time_embed}, init);
    if (param_count != model->param_count())
      throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
    model->params() = params;
    return model;
  }
  throw std::invalid_argument("checkpoint: model type has no checkpoint form: " + cfg.model);
}

}  // namespace c2f
