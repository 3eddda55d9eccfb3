#include "c2f/dataset.hpp"

#include "c2f/image_io.hpp"
#include "c2f/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <stdexcept>

namespace c2f {

namespace {

// Stream tag separating dataset draws from everything else under one seed.
constexpr std::uint64_t kDatasetStream = 0xda7a5e7ULL;

}  // namespace

ImageDataset load_image_folder(const std::string& path, int target_size) {
  if (target_size < 1)
    throw std::invalid_argument("load_image_folder: target_size must be >= 1");
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".png" || ext == ".pnm")
      names.push_back(entry.path().string());
  }
  std::sort(names.begin(), names.end());

  ImageDataset ds;
  ds.size = target_size;
  for (const std::string& name : names) {
    try {
      Eigen::MatrixXd img = read_image(name);
      ds.items.push_back(resize_bilinear(img, target_size, target_size));
      ds.sources.push_back(name);
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << name << ": " << e.what() << "\n";
    }
  }
  if (ds.items.empty())
    throw std::invalid_argument("load_image_folder: no readable images in " + path);
  return ds;
}

std::vector<SpectralField> make_dataset(const ExperimentConfig& cfg,
                                        const std::shared_ptr<const BlurOperator>& op) {
  const FieldShape shape = cfg.shape();
  RngStream rng = RngStream::derive(cfg.seed, kDatasetStream);
  std::vector<SpectralField> out;

  if (cfg.dataset == "folder") {
    if (cfg.rank != 2)
      throw std::invalid_argument("make_dataset: folder datasets require rank = 2");
    ImageDataset ds = load_image_folder(cfg.data_path, cfg.n);
    for (auto& img : ds.items)
      out.push_back(SpectralField::from_pixel(op, shape, std::move(img)));
    return out;
  }

  if (cfg.dataset == "two-point") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(shape.rows(), shape.cols(),
                                                  cfg.data_amplitude);
    out.push_back(SpectralField::from_pixel(op, shape, a));
    out.push_back(SpectralField::from_pixel(op, shape, (-a).eval()));
    return out;
  }

  if (cfg.dataset == "gaussian") {
    // x0 = mean + scale * W^p xi: spectral covariance scale^2 d^(2p), diagonal.
    if (cfg.data_count < 1)
      throw std::invalid_argument("make_dataset: data_count must be >= 1");
    Eigen::ArrayXXd root = op->freq_eigenvalues(shape).pow(cfg.data_shape_power);
    for (int k = 0; k < cfg.data_count; ++k) {
      Eigen::MatrixXd xi = rng.gauss_matrix(shape.rows(), shape.cols());
      Eigen::ArrayXXd spec = op->to_spectral(xi, shape).array() * root * cfg.data_scale;
      SpectralField f = SpectralField::from_spectral(op, shape, spec.matrix());
      out.push_back(SpectralField::from_pixel(
          op, shape,
          (f.pixel().array() + cfg.data_mean).matrix()));
    }
    return out;
  }

  if (cfg.dataset == "gmm") {
    if (cfg.data_components < 1 || cfg.data_count < 1)
      throw std::invalid_argument("make_dataset: bad gmm parameters");
    std::vector<Eigen::MatrixXd> centers;
    for (int c = 0; c < cfg.data_components; ++c)
      centers.push_back(cfg.data_amplitude * rng.gauss_matrix(shape.rows(), shape.cols()));
    for (int k = 0; k < cfg.data_count; ++k) {
      int c = rng.uniform_int(0, cfg.data_components - 1);
      Eigen::MatrixXd x =
          centers[c] + cfg.data_cluster_std * rng.gauss_matrix(shape.rows(), shape.cols());
      out.push_back(SpectralField::from_pixel(op, shape, std::move(x)));
    }
    return out;
  }

  throw std::invalid_argument("make_dataset: unknown dataset: " + cfg.dataset);
}

Eigen::ArrayXXd dataset_spectral_moment(const std::vector<SpectralField>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("dataset_spectral_moment: empty dataset");
  Eigen::ArrayXXd acc = dataset.front().spectral().array().square();
  for (std::size_t k = 1; k < dataset.size(); ++k)
    acc += dataset[k].spectral().array().square();
  return acc / static_cast<double>(dataset.size());
}

}  // namespace c2f
