#pragma once

#include "c2f/config.hpp"
#include "c2f/spectral.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

namespace c2f {

// Grayscale training images, all one shape, values in [-1, 1].
struct ImageDataset {
  std::vector<Eigen::MatrixXd> items;
  std::vector<std::string> sources;
  int size = 0;  // square side length
};

// Loads every readable PGM/PNG in the folder (sorted by filename), resized
// bilinearly to target_size x target_size without cropping. Unreadable files
// are skipped with a warning on stderr; an empty result is an error.
ImageDataset load_image_folder(const std::string& path, int target_size);

// Materializes the config's dataset as fields over the given operator basis.
// Synthetic data is derived deterministically from the config seed, so every
// command working from the same config sees the same points.
std::vector<SpectralField> make_dataset(const ExperimentConfig& cfg,
                                        const std::shared_ptr<const BlurOperator>& op);

// Per-coefficient spectral second moments E|x0-bar|^2 of a dataset; weights
// for band retention diagnostics.
Eigen::ArrayXXd dataset_spectral_moment(const std::vector<SpectralField>& dataset);

}  // namespace c2f
