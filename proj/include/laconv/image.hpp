#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "laconv/errors.hpp"
#include "laconv/lie.hpp"

namespace laconv {

/// H x W x C grid of doubles, row-major with channels innermost. Pixel (r, c)
/// is identified with the centered point (x, y) = (c - (W-1)/2, (H-1)/2 - r),
/// i.e. columns grow along +x and rows grow along -y.
struct Image {
  int h = 0;
  int w = 0;
  int c = 1;
  std::vector<double> data;

  Image() = default;
  Image(int h_, int w_, int c_ = 1)
      : h(h_), w(w_), c(c_), data(static_cast<std::size_t>(h_) * w_ * c_, 0.0) {}

  double& at(int r, int col, int ch = 0) {
    return data[(static_cast<std::size_t>(r) * w + col) * c + ch];
  }
  double at(int r, int col, int ch = 0) const {
    return data[(static_cast<std::size_t>(r) * w + col) * c + ch];
  }
};

enum class ResampleMethod { bilinear, exact_c4 };

namespace detail {

/// Quarter-turn count of a group element, or -1 if it is not an exact
/// multiple of 90 degrees (tolerance 1e-9, translation must vanish).
inline int quarter_turn_count(const GroupElement& g) {
  const double kPi = std::numbers::pi;
  const Mat& m = g.matrix;
  if (g.group.matrix_dim == 3 &&
      (std::fabs(m(0, 2)) > 1e-9 || std::fabs(m(1, 2)) > 1e-9))
    return -1;
  const double angle = std::atan2(m(1, 0), m(0, 0));
  const double steps = angle / (kPi / 2);
  int k = static_cast<int>(std::lround(steps));
  const double c = std::cos(k * kPi / 2), s = std::sin(k * kPi / 2);
  if (std::fabs(m(0, 0) - c) > 1e-9 || std::fabs(m(0, 1) + s) > 1e-9 ||
      std::fabs(m(1, 0) - s) > 1e-9 || std::fabs(m(1, 1) - c) > 1e-9)
    return -1;
  return ((k % 4) + 4) % 4;
}

inline double bilinear_sample(const Image& img, double r, double c, int ch) {
  const int r0 = static_cast<int>(std::floor(r));
  const int c0 = static_cast<int>(std::floor(c));
  const double fr = r - r0, fc = c - c0;
  double acc = 0.0;
  for (int dr = 0; dr <= 1; ++dr)
    for (int dc = 0; dc <= 1; ++dc) {
      const int rr = r0 + dr, cc = c0 + dc;
      if (rr < 0 || rr >= img.h || cc < 0 || cc >= img.w) continue;  // outside reads as 0
      const double wgt = (dr ? fr : 1.0 - fr) * (dc ? fc : 1.0 - fc);
      acc += wgt * img.at(rr, cc, ch);
    }
  return acc;
}

}  // namespace detail

/// Applies a group element to an image about the image center.
///
/// Each output pixel is sampled at the g^-1-transformed position of its
/// center; samples outside the grid read as 0. exact_c4 is a pure index
/// permutation (lossless) and requires a square image and a quarter-turn g.
inline Image act_image(const GroupElement& g, const Image& img, ResampleMethod method) {
  if (method == ResampleMethod::exact_c4) {
    const int k = detail::quarter_turn_count(g);
    if (k < 0)
      throw InvalidArgumentError("act_image: exact_c4 requires a quarter-turn rotation");
    if (img.h != img.w)
      throw InvalidArgumentError("act_image: exact_c4 requires a square image");
    const int n = img.h;
    Image out(img.h, img.w, img.c);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        int sr = r, sc = c;
        switch (k) {
          case 0: break;
          case 1: sr = c; sc = n - 1 - r; break;
          case 2: sr = n - 1 - r; sc = n - 1 - c; break;
          case 3: sr = n - 1 - c; sc = r; break;
        }
        for (int ch = 0; ch < img.c; ++ch) out.at(r, c, ch) = img.at(sr, sc, ch);
      }
    return out;
  }

  const GroupElement ginv = group_inverse(g);
  const double r0 = (img.h - 1) / 2.0, c0 = (img.w - 1) / 2.0;
  Image out(img.h, img.w, img.c);
  for (int r = 0; r < img.h; ++r)
    for (int c = 0; c < img.w; ++c) {
      const Vec2 p{c - c0, r0 - r};
      const Vec2 q = act_point(ginv, p);
      const double sr = r0 - q.y, sc = q.x + c0;
      for (int ch = 0; ch < img.c; ++ch)
        out.at(r, c, ch) = detail::bilinear_sample(img, sr, sc, ch);
    }
  return out;
}

}  // namespace laconv
