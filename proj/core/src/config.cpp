#include "c2f/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <variant>
#include <vector>

namespace c2f {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

using Member = std::variant<int ExperimentConfig::*, double ExperimentConfig::*,
                            bool ExperimentConfig::*, std::string ExperimentConfig::*,
                            std::uint64_t ExperimentConfig::*>;

struct Key {
  const char* name;
  Member member;
};

// Canonical order; serialization emits exactly this.
const std::vector<Key>& key_table() {
  using EC = ExperimentConfig;
  static const std::vector<Key> table = {
      {"n_steps", &EC::n_steps},
      {"beta_start", &EC::beta_start},
      {"beta_end", &EC::beta_end},
      {"sigma", &EC::sigma},
      {"kernel_support", &EC::kernel_support},
      {"f_type", &EC::f_type},
      {"f_end", &EC::f_end},
      {"fine_to_coarse", &EC::fine_to_coarse},
      {"paper_exponent", &EC::paper_exponent},
      {"rank", &EC::rank},
      {"n", &EC::n},
      {"dataset", &EC::dataset},
      {"data_count", &EC::data_count},
      {"data_mean", &EC::data_mean},
      {"data_scale", &EC::data_scale},
      {"data_shape_power", &EC::data_shape_power},
      {"data_amplitude", &EC::data_amplitude},
      {"data_components", &EC::data_components},
      {"data_cluster_std", &EC::data_cluster_std},
      {"data_path", &EC::data_path},
      {"model", &EC::model},
      {"linear_samples_per_step", &EC::linear_samples_per_step},
      {"mlp_hidden", &EC::mlp_hidden},
      {"mlp_time_embed", &EC::mlp_time_embed},
      {"mlp_steps", &EC::mlp_steps},
      {"mlp_batch", &EC::mlp_batch},
      {"mlp_lr", &EC::mlp_lr},
      {"mlp_lr_final", &EC::mlp_lr_final},
      {"sample_batch", &EC::sample_batch},
      {"sample_stride", &EC::sample_stride},
      {"final_step_noise", &EC::final_step_noise},
      {"literal_indexing", &EC::literal_indexing},
      {"clamp_output", &EC::clamp_output},
      {"eval_bands", &EC::eval_bands},
      {"eval_threshold_frechet", &EC::eval_threshold_frechet},
      {"eval_threshold_cov_rel", &EC::eval_threshold_cov_rel},
      {"seed", &EC::seed},
      {"out_dir", &EC::out_dir},
  };
  return table;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::string get_value(const ExperimentConfig& cfg, const Member& member) {
  return std::visit(
      [&](auto ptr) -> std::string {
        using T = std::remove_cvref_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>)
          return std::to_string(cfg.*ptr);
        else if constexpr (std::is_same_v<T, double>)
          return format_double(cfg.*ptr);
        else if constexpr (std::is_same_v<T, bool>)
          return cfg.*ptr ? "true" : "false";
        else
          return cfg.*ptr;
      },
      member);
}

void set_value(ExperimentConfig& cfg, const std::string& key, const Member& member,
               const std::string& value) {
  std::visit(
      [&](auto ptr) {
        using T = std::remove_cvref_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<T, int>) {
          std::size_t pos = 0;
          cfg.*ptr = std::stoi(value, &pos);
          if (pos != value.size())
            throw std::invalid_argument("config: bad integer for " + key + ": " + value);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          std::size_t pos = 0;
          cfg.*ptr = std::stoull(value, &pos);
          if (pos != value.size())
            throw std::invalid_argument("config: bad integer for " + key + ": " + value);
        } else if constexpr (std::is_same_v<T, double>) {
          std::size_t pos = 0;
          cfg.*ptr = std::stod(value, &pos);
          if (pos != value.size())
            throw std::invalid_argument("config: bad number for " + key + ": " + value);
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true")
            cfg.*ptr = true;
          else if (value == "false")
            cfg.*ptr = false;
          else
            throw std::invalid_argument("config: bad boolean for " + key + ": " + value);
        } else {
          cfg.*ptr = value;
        }
      },
      member);
}

const Member* find_key(const std::string& key) {
  for (const Key& k : key_table())
    if (key == k.name) return &k.member;
  return nullptr;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: missing '=' on line " + std::to_string(line_no));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const Member* member = find_key(key);
    if (!member) throw std::invalid_argument("config: unknown key: " + key);
    set_value(cfg, key, *member, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot read " + path);
  std::ostringstream body;
  body << in.rdbuf();
  return parse(body.str());
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  for (const Key& k : key_table()) out << k.name << " = " << get_value(*this, k.member) << "\n";
  return out.str();
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << serialize();
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const Member* member = find_key(key);
  if (!member) throw std::invalid_argument("config: unknown key: " + key);
  set_value(*this, key, *member, value);
}

void ExperimentConfig::validate() const {
  if (n_steps < 1) throw std::invalid_argument("config: n_steps must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw std::invalid_argument("config: need 0 < beta_start <= beta_end < 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("config: sigma must be > 0");
  if (rank != 1 && rank != 2) throw std::invalid_argument("config: rank must be 1 or 2");
  if (n < 3) throw std::invalid_argument("config: n must be >= 3");
  if (f_end < 0.0) throw std::invalid_argument("config: f_end must be >= 0");
  blur_type_from_string(f_type);
  if (dataset != "gaussian" && dataset != "two-point" && dataset != "gmm" &&
      dataset != "folder")
    throw std::invalid_argument("config: unknown dataset: " + dataset);
  if (dataset == "folder" && data_path.empty())
    throw std::invalid_argument("config: folder dataset needs data_path");
  if (model != "oracle" && model != "linear" && model != "mlp")
    throw std::invalid_argument("config: unknown model: " + model);
  if (final_step_noise != "noise" && final_step_noise != "no-noise-at-last-step")
    throw std::invalid_argument("config: unknown final_step_noise: " + final_step_noise);
  if (eval_bands < 2) throw std::invalid_argument("config: eval_bands must be >= 2");
  if (sample_batch < 1 || sample_stride < 1)
    throw std::invalid_argument("config: sample_batch and sample_stride must be >= 1");
  if (kernel_support != 0 &&
      (kernel_support < 3 || kernel_support % 2 == 0 || kernel_support > n))
    throw std::invalid_argument("config: kernel_support must be odd, >= 3 and <= n");
}

std::shared_ptr<const BlurOperator> ExperimentConfig::make_operator() const {
  return make_blur_operator(sigma, n, kernel_support);
}

DiffusionSchedule ExperimentConfig::make_schedule() const {
  return make_schedule(make_operator());
}

DiffusionSchedule ExperimentConfig::make_schedule(
    std::shared_ptr<const BlurOperator> op) const {
  return DiffusionSchedule(NoiseSchedule::linear(n_steps, beta_start, beta_end),
                           BlurSchedule::make(blur_type_from_string(f_type), f_end, n_steps),
                           std::move(op), fine_to_coarse, paper_exponent);
}

std::map<std::string, std::string> ExperimentConfig::fingerprint() const {
  std::map<std::string, std::string> fp;
  for (const char* name : {"n_steps", "sigma", "f_type", "f_end", "beta_start",
                           "beta_end", "kernel_support", "fine_to_coarse",
                           "paper_exponent", "rank", "n", "model"}) {
    const Member* member = find_key(name);
    fp[name] = get_value(*this, *member);
  }
  return fp;
}

}  // namespace c2f
