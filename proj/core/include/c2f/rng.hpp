#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace c2f {

// Deterministic random stream built on splitmix64 with Box-Muller gaussians.
// The standard library's normal_distribution is implementation-defined, so the
// full draw sequence is pinned here: fixed seed means bit-identical output.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  // Independent substream for (master seed, stream index), e.g. one per chain.
  static RngStream derive(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();

  // Standard normal via Box-Muller; draws come out in pairs.
  double gauss();

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);

  // Matrix of iid standard normals, filled in a fixed column-major order.
  Eigen::MatrixXd gauss_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace c2f
