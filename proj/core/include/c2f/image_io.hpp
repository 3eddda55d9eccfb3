#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace c2f {

// Grayscale images move through the pipeline as matrices in [-1, 1]:
// sample value v in [0, maxval] maps affinely so 0 -> -1 and maxval -> +1.
// Writers quantize back to 8-bit with clamping.

// Reads PGM (P2 or P5) or PNG, dispatching on the file's magic bytes.
Eigen::MatrixXd read_image(const std::string& path);

Eigen::MatrixXd read_pgm(const std::string& path);
// ASCII P2 by default: trivially diffable and byte-stable. binary writes P5.
void write_pgm(const std::string& path, const Eigen::MatrixXd& img, bool binary = false);

Eigen::MatrixXd read_png(const std::string& path);
void write_png(const std::string& path, const Eigen::MatrixXd& img);

Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& img, int out_rows, int out_cols);

// Lays frames out left to right, top to bottom, `cols` per row, with a 1-pixel
// separator at the given gray value.
Eigen::MatrixXd tile_grid(const std::vector<Eigen::MatrixXd>& frames, int cols,
                          double sep_value = 1.0);

// Writes via a temp file in the same directory and renames into place.
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace c2f
