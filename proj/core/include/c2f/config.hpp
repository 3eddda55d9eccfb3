#pragma once

#include "c2f/schedule.hpp"
#include "c2f/spectral.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>

namespace c2f {

// Experiment configuration, serialized as a flat `key = value` text file with
// `#` comments. Serialization is canonical (fixed key order, shortest
// round-trip number formatting), so write -> parse -> write is byte-identical.
// Unknown keys are rejected at parse time.
struct ExperimentConfig {
  // schedule
  int n_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double sigma = 0.4;
  int kernel_support = 0;  // 0 selects the widest odd support within 4 sigma
  std::string f_type = "quartic";
  double f_end = 0.14;
  bool fine_to_coarse = false;
  bool paper_exponent = false;
  // field / dataset
  int rank = 1;
  int n = 8;
  std::string dataset = "gaussian";  // gaussian | two-point | gmm | folder
  int data_count = 256;
  double data_mean = 0.0;
  double data_scale = 0.5;
  double data_shape_power = 0.0;
  double data_amplitude = 1.0;
  int data_components = 3;
  double data_cluster_std = 0.1;
  std::string data_path;
  // model
  std::string model = "oracle";  // oracle | linear | mlp
  int linear_samples_per_step = 32;
  int mlp_hidden = 64;
  int mlp_time_embed = 8;
  int mlp_steps = 4000;
  int mlp_batch = 64;
  double mlp_lr = 1e-3;
  double mlp_lr_final = 0.0;  // > 0 enables cosine decay
  // sampling
  int sample_batch = 16;
  int sample_stride = 100;
  std::string final_step_noise = "no-noise-at-last-step";  // or "noise"
  bool literal_indexing = false;
  bool clamp_output = false;
  // evaluation
  int eval_bands = 2;
  double eval_threshold_frechet = -1.0;  // negative disables the gate
  double eval_threshold_cov_rel = -1.0;
  // run
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  std::string serialize() const;
  void save(const std::string& path) const;

  // Applies a single `key=value` override (the CLI --set flag).
  void set(const std::string& key, const std::string& value);

  void validate() const;

  FieldShape shape() const { return FieldShape{rank, n}; }
  std::shared_ptr<const BlurOperator> make_operator() const;
  DiffusionSchedule make_schedule() const;
  DiffusionSchedule make_schedule(std::shared_ptr<const BlurOperator> op) const;

  // Keys a checkpoint must agree on before its parameters may be used.
  std::map<std::string, std::string> fingerprint() const;
};

// Shortest round-trip text for a double (plain serialization helper).
std::string format_double(double v);

}  // namespace c2f
