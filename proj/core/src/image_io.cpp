#include "c2f/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace c2f {

namespace {

std::uint8_t quantize(double v) {
  double scaled = (v + 1.0) * 0.5 * 255.0;
  return static_cast<std::uint8_t>(std::clamp(std::lround(scaled), 0L, 255L));
}

// Skips whitespace and '#' comments in a PNM header stream.
int next_pnm_token(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      in.unget();
      return c;
    }
  }
  return EOF;
}

int read_pnm_int(std::istream& in, const std::string& path) {
  if (next_pnm_token(in) == EOF)
    throw std::runtime_error("pgm: truncated header in " + path);
  int value = 0;
  in >> value;
  if (!in) throw std::runtime_error("pgm: bad header in " + path);
  return value;
}

}  // namespace

Eigen::MatrixXd read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot read " + path);
  char m0 = 0, m1 = 0;
  in.get(m0).get(m1);
  if (m0 != 'P' || (m1 != '2' && m1 != '5'))
    throw std::runtime_error("pgm: not a P2/P5 file: " + path);
  bool binary = m1 == '5';
  int width = read_pnm_int(in, path);
  int height = read_pnm_int(in, path);
  int maxval = read_pnm_int(in, path);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    throw std::runtime_error("pgm: bad dimensions in " + path);

  Eigen::MatrixXd img(height, width);
  if (binary) {
    in.get();  // single whitespace after maxval
    int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error("pgm: truncated pixel data in " + path);
    std::size_t k = 0;
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        int v = bytes == 1 ? raw[k] : (raw[k] << 8) | raw[k + 1];
        k += bytes;
        img(r, c) = 2.0 * v / maxval - 1.0;
      }
  } else {
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        int v = read_pnm_int(in, path);
        img(r, c) = 2.0 * v / maxval - 1.0;
      }
  }
  return img;
}

void write_pgm(const std::string& path, const Eigen::MatrixXd& img, bool binary) {
  std::ostringstream out;
  out << (binary ? "P5" : "P2") << "\n" << img.cols() << " " << img.rows() << "\n255\n";
  if (binary) {
    for (Eigen::Index r = 0; r < img.rows(); ++r)
      for (Eigen::Index c = 0; c < img.cols(); ++c)
        out.put(static_cast<char>(quantize(img(r, c))));
  } else {
    for (Eigen::Index r = 0; r < img.rows(); ++r) {
      for (Eigen::Index c = 0; c < img.cols(); ++c) {
        out << static_cast<int>(quantize(img(r, c)));
        out.put(c + 1 == img.cols() ? '\n' : ' ');
      }
    }
  }
  atomic_write_text(path, out.str());
}

Eigen::MatrixXd read_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw std::runtime_error("png: cannot read " + path + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("png: decode failed for " + path + ": " + msg);
  }
  Eigen::MatrixXd img(image.height, image.width);
  for (png_uint_32 r = 0; r < image.height; ++r)
    for (png_uint_32 c = 0; c < image.width; ++c)
      img(r, c) = 2.0 * buffer[r * image.width + c] / 255.0 - 1.0;
  return img;
}

void write_png(const std::string& path, const Eigen::MatrixXd& img) {
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(img.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) buffer[k++] = quantize(img(r, c));
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.cols());
  image.height = static_cast<png_uint_32>(img.rows());
  image.format = PNG_FORMAT_GRAY;
  std::string tmp = path + ".tmp";
  if (!png_image_write_to_file(&image, tmp.c_str(), 0, buffer.data(), 0, nullptr))
    throw std::runtime_error("png: cannot write " + path + ": " + image.message);
  std::filesystem::rename(tmp, path);
}

Eigen::MatrixXd read_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("image: cannot read " + path);
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5')) return read_pgm(path);
  if (magic[0] == 0x89 && magic[1] == 'P') return read_png(path);
  throw std::runtime_error("image: unsupported format: " + path);
}

Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& img, int out_rows, int out_cols) {
  if (out_rows < 1 || out_cols < 1)
    throw std::invalid_argument("resize: output dimensions must be >= 1");
  const Eigen::Index in_rows = img.rows(), in_cols = img.cols();
  Eigen::MatrixXd out(out_rows, out_cols);
  double sr = static_cast<double>(in_rows) / out_rows;
  double sc = static_cast<double>(in_cols) / out_cols;
  for (int r = 0; r < out_rows; ++r) {
    double fr = std::clamp((r + 0.5) * sr - 0.5, 0.0, static_cast<double>(in_rows - 1));
    Eigen::Index r0 = static_cast<Eigen::Index>(fr);
    Eigen::Index r1 = std::min(r0 + 1, in_rows - 1);
    double wr = fr - r0;
    for (int c = 0; c < out_cols; ++c) {
      double fc = std::clamp((c + 0.5) * sc - 0.5, 0.0, static_cast<double>(in_cols - 1));
      Eigen::Index c0 = static_cast<Eigen::Index>(fc);
      Eigen::Index c1 = std::min(c0 + 1, in_cols - 1);
      double wc = fc - c0;
      out(r, c) = (1 - wr) * ((1 - wc) * img(r0, c0) + wc * img(r0, c1)) +
                  wr * ((1 - wc) * img(r1, c0) + wc * img(r1, c1));
    }
  }
  return out;
}

Eigen::MatrixXd tile_grid(const std::vector<Eigen::MatrixXd>& frames, int cols,
                          double sep_value) {
  if (frames.empty()) throw std::invalid_argument("tile_grid: no frames");
  if (cols < 1) throw std::invalid_argument("tile_grid: cols must be >= 1");
  const Eigen::Index fr = frames.front().rows(), fc = frames.front().cols();
  for (const auto& f : frames)
    if (f.rows() != fr || f.cols() != fc)
      throw std::invalid_argument("tile_grid: mixed frame shapes");
  int count = static_cast<int>(frames.size());
  int rows = (count + cols - 1) / cols;
  Eigen::MatrixXd grid = Eigen::MatrixXd::Constant(rows * (fr + 1) - 1,
                                                   cols * (fc + 1) - 1, sep_value);
  for (int k = 0; k < count; ++k) {
    int r = k / cols, c = k % cols;
    grid.block(r * (fr + 1), c * (fc + 1), fr, fc) = frames[k];
  }
  return grid;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("io: cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("io: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace c2f
