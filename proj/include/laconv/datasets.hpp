#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "laconv/errors.hpp"
#include "laconv/image.hpp"
#include "laconv/io.hpp"
#include "laconv/lie.hpp"
#include "laconv/rng.hpp"

namespace laconv {

/// Labeled image collection, pixels in [0, 1].
struct LabeledImageSet {
  std::vector<Image> images;
  std::vector<int> labels;
  std::string meta;  // "synthetic" or the source file path
  int n_classes = 0;

  std::size_t size() const { return images.size(); }

  void validate() const {
    if (images.size() != labels.size())
      throw ConsistencyError("image set: image and label counts differ");
    for (int l : labels)
      if (l < 0 || l >= n_classes) throw ConsistencyError("image set: label out of range");
  }
};

enum class AngleLaw { uniform, c4 };

namespace detail {

/// Base glyph shapes on centered unit coordinates (u right, v up, both in
/// [-0.5, 0.5]). Chosen so that no two glyphs are congruent under rotation.
inline bool glyph_hit(int which, double u, double v) {
  auto in = [](double a, double lo, double hi) { return a >= lo && a <= hi; };
  switch (which) {
    case 0:  // bar
      return in(v, -0.09, 0.09) && in(u, -0.32, 0.32);
    case 1:  // L-shape
      return (in(u, -0.20, -0.06) && in(v, -0.30, 0.30)) ||
             (in(v, -0.30, -0.16) && in(u, -0.20, 0.30));
    case 2:  // cross
      return (in(v, -0.09, 0.09) && in(u, -0.36, 0.36)) ||
             (in(u, -0.09, 0.09) && in(v, -0.36, 0.36));
    case 3:  // T-shape
      return (in(v, 0.16, 0.30) && in(u, -0.32, 0.32)) ||
             (in(u, -0.07, 0.07) && in(v, -0.30, 0.30));
    case 4:  // hollow square
      return std::max(std::fabs(u), std::fabs(v)) <= 0.32 &&
             std::max(std::fabs(u), std::fabs(v)) >= 0.18;
    case 5:  // disk
      return u * u + v * v <= 0.26 * 0.26;
    case 6:  // diagonal stripe
      return std::fabs(u - v) <= 0.10 && in(u, -0.34, 0.34) && in(v, -0.34, 0.34);
    case 7:  // two corner dots
      return (u - 0.22) * (u - 0.22) + (v - 0.22) * (v - 0.22) <= 0.012 ||
             (u + 0.22) * (u + 0.22) + (v + 0.22) * (v + 0.22) <= 0.012;
    case 8:  // U-shape
      return (in(u, -0.28, -0.14) && in(v, -0.28, 0.28)) ||
             (in(u, 0.14, 0.28) && in(v, -0.28, 0.28)) ||
             (in(v, -0.28, -0.14) && in(u, -0.28, 0.28));
    case 9:  // unequal-arm angle
      return (in(v, -0.09, 0.09) && in(u, -0.36, 0.10)) ||
             (in(u, -0.09, 0.09) && in(v, 0.0, 0.36));
  }
  throw InvalidArgumentError("unknown glyph index");
}

inline Image render_glyph(int which, int size) {
  Image img(size, size, 1);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double u = (c - (size - 1) / 2.0) / size;
      const double v = ((size - 1) / 2.0 - r) / size;
      img.at(r, c) = glyph_hit(which, u, v) ? 1.0 : 0.0;
    }
  return img;
}

}  // namespace detail

/// Synthetic rotated-pattern classification data. Each sample is one of the
/// base glyphs rotated by an angle drawn from angle_law: uniform [0, 2pi) with
/// bilinear resampling, or C4 quarter turns applied as the lossless index
/// permutation. Generation is class-major and fully determined by the seed.
inline LabeledImageSet synthetic_rotated_patterns(int n_per_class, int classes, int size,
                                                  AngleLaw angle_law, std::uint64_t seed) {
  if (classes < 2 || classes > 10)
    throw ConfigError("synthetic_rotated_patterns: classes must be in 2..10");
  if (size < 8) throw ConfigError("synthetic_rotated_patterns: size must be >= 8");
  if (n_per_class < 1) throw ConfigError("synthetic_rotated_patterns: need >= 1 per class");

  LabeledImageSet set;
  set.meta = "synthetic";
  set.n_classes = classes;
  Rng rng(derive_seed(seed, 0x9A77E54));
  const double kPi = std::numbers::pi;
  for (int cls = 0; cls < classes; ++cls) {
    const Image base = detail::render_glyph(cls, size);
    for (int k = 0; k < n_per_class; ++k) {
      if (angle_law == AngleLaw::c4) {
        const int q = static_cast<int>(rng.uniform_int(4));
        set.images.push_back(act_image(rotation2(q * kPi / 2), base, ResampleMethod::exact_c4));
      } else {
        const double angle = rng.uniform(0.0, 2 * kPi);
        set.images.push_back(act_image(rotation2(angle), base, ResampleMethod::bilinear));
      }
      set.labels.push_back(cls);
    }
  }
  return set;
}

/// Reads the big-endian IDX image/label pair: image magic 0x00000803
/// (count, rows, cols, u8 pixels) and label magic 0x00000801 (count, u8
/// labels). Pixels are scaled to [0, 1] by /255.
inline LabeledImageSet load_idx_images(const std::string& images_path,
                                       const std::string& labels_path) {
  const std::string ibytes = read_file_bytes(images_path);
  const std::string lbytes = read_file_bytes(labels_path);
  if (ibytes.size() < 16) throw LengthError("idx images: file shorter than header");
  if (lbytes.size() < 8) throw LengthError("idx labels: file shorter than header");

  std::istringstream is(ibytes, std::ios::binary);
  if (read_u32be(is) != 0x00000803u) throw FormatError("idx images: bad magic");
  const std::uint32_t count = read_u32be(is);
  const std::uint32_t rows = read_u32be(is);
  const std::uint32_t cols = read_u32be(is);
  const std::size_t need = 16 + static_cast<std::size_t>(count) * rows * cols;
  if (ibytes.size() < need) throw LengthError("idx images: truncated pixel block");

  std::istringstream ls(lbytes, std::ios::binary);
  if (read_u32be(ls) != 0x00000801u) throw FormatError("idx labels: bad magic");
  const std::uint32_t lcount = read_u32be(ls);
  if (lcount != count) throw ConsistencyError("idx: image and label counts differ");
  if (lbytes.size() < 8 + static_cast<std::size_t>(lcount))
    throw LengthError("idx labels: truncated label block");

  LabeledImageSet set;
  set.meta = images_path;
  int max_label = 0;
  std::size_t off = 16;
  for (std::uint32_t k = 0; k < count; ++k) {
    Image img(static_cast<int>(rows), static_cast<int>(cols), 1);
    for (std::size_t p = 0; p < static_cast<std::size_t>(rows) * cols; ++p)
      img.data[p] = static_cast<unsigned char>(ibytes[off + p]) / 255.0;
    off += static_cast<std::size_t>(rows) * cols;
    set.images.push_back(std::move(img));
    const int label = static_cast<unsigned char>(lbytes[8 + k]);
    set.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  set.n_classes = max_label + 1;
  set.validate();
  return set;
}

/// Binary container for labeled image sets, mirroring the checkpoint layout:
///   magic "LADS1" | u64 json length | meta JSON | f64 pixel block | u32 labels.
inline void save_image_set(const LabeledImageSet& set, const std::string& path) {
  set.validate();
  std::ostringstream os(std::ios::binary);
  os.write("LADS1", 5);
  const int h = set.images.empty() ? 0 : set.images[0].h;
  const int w = set.images.empty() ? 0 : set.images[0].w;
  const int c = set.images.empty() ? 1 : set.images[0].c;
  nlohmann::json meta = {{"format_version", 1}, {"count", set.size()},  {"height", h},
                         {"width", w},          {"channels", c},        {"n_classes", set.n_classes},
                         {"source", set.meta}};
  const std::string js = meta.dump();
  write_u64le(os, js.size());
  os.write(js.data(), static_cast<std::streamsize>(js.size()));
  write_u64le(os, static_cast<std::uint64_t>(set.size()) * h * w * c);
  for (const auto& img : set.images)
    for (double v : img.data) write_f64le(os, v);
  for (int l : set.labels) write_u32le(os, static_cast<std::uint32_t>(l));
  write_file_bytes(path, os.str());
}

inline LabeledImageSet load_image_set(const std::string& path) {
  std::istringstream is(read_file_bytes(path), std::ios::binary);
  char magic[5];
  is.read(magic, 5);
  if (!is || std::string(magic, 5) != "LADS1")
    throw FormatError("image set: bad magic (expected LADS1)");
  const std::uint64_t jlen = read_u64le(is);
  std::string js(jlen, '\0');
  is.read(js.data(), static_cast<std::streamsize>(jlen));
  if (!is) throw LengthError("image set: truncated meta block");
  const auto meta = nlohmann::json::parse(js);
  const std::uint64_t count = meta.at("count").get<std::uint64_t>();
  const int h = meta.at("height").get<int>();
  const int w = meta.at("width").get<int>();
  const int c = meta.at("channels").get<int>();

  LabeledImageSet set;
  set.meta = meta.at("source").get<std::string>();
  set.n_classes = meta.at("n_classes").get<int>();
  const std::uint64_t pixels = read_u64le(is);
  if (pixels != count * static_cast<std::uint64_t>(h) * w * c)
    throw ConsistencyError("image set: pixel count does not match meta");
  for (std::uint64_t k = 0; k < count; ++k) {
    Image img(h, w, c);
    for (double& v : img.data) v = read_f64le(is);
    set.images.push_back(std::move(img));
  }
  for (std::uint64_t k = 0; k < count; ++k)
    set.labels.push_back(static_cast<int>(read_u32le(is)));
  set.validate();
  return set;
}

}  // namespace laconv
