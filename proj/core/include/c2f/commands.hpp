#pragma once

#include "c2f/config.hpp"

#include <string>

namespace c2f {

// Command entry points behind the CLI; each returns the process exit code.
// All artifacts are written atomically and are byte-identical across runs
// with the same config and seed.

// Emits schedule.csv (i, f, beta, alpha_bar) and abar_quantiles.csv
// (per-frequency Abar quantile curves).
int run_schedule(const ExperimentConfig& cfg, const std::string& out_dir);

// Forward trajectory of one image: forward_strip.pgm plus forward_bands.csv
// with per-band energies and signal retention.
int run_forward(const ExperimentConfig& cfg, const std::string& image_path,
                const std::string& out_dir);

// Fits the configured trainable model and writes checkpoint.txt + loss.csv.
int run_train(const ExperimentConfig& cfg, const std::string& out_dir);

// Batch sampling: grid.pgm/grid.png, per-sample PGMs under samples/,
// strips.pgm filmstrips, reverse_bands.csv, and a cluster sidecar for
// two-point data. checkpoint_path may be empty for the oracle model.
int run_sample(const ExperimentConfig& cfg, const std::string& checkpoint_path,
               const std::string& out_dir);

// Compares a directory of sample images against the config's reference
// dataset: metrics.csv with Gaussian-Frechet distance, moment errors and band
// summaries. Nonzero exit code when a configured threshold is exceeded.
int run_eval(const ExperimentConfig& cfg, const std::string& samples_dir,
             const std::string& out_dir);

// Discretization contract report (check.csv): forward/reverse template
// deviations, the literal-indexing gap and terminal signal leakage. Nonzero
// exit code if a template deviation exceeds 1e-9.
int run_check(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace c2f
