#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "laconv/errors.hpp"
#include "laconv/mat.hpp"
#include "laconv/rng.hpp"

namespace laconv {

enum class GroupId { SO2, SE2, T2 };

/// Static description of one of the supported matrix Lie groups.
///
/// SE2 and T2 use the 3x3 homogeneous representation so that the exponential
/// map and the point/image actions are uniform matrix code across groups.
struct GroupDescriptor {
  GroupId id = GroupId::SO2;
  int matrix_dim = 2;
  int algebra_dim = 1;
  bool compact = true;

  static GroupDescriptor of(GroupId id) {
    switch (id) {
      case GroupId::SO2: return {GroupId::SO2, 2, 1, true};
      case GroupId::SE2: return {GroupId::SE2, 3, 3, false};
      case GroupId::T2: return {GroupId::T2, 3, 2, false};
    }
    throw InvalidArgumentError("unknown group id");
  }

  friend bool operator==(const GroupDescriptor& a, const GroupDescriptor& b) {
    return a.id == b.id;
  }
};

inline std::string group_name(GroupId id) {
  switch (id) {
    case GroupId::SO2: return "SO2";
    case GroupId::SE2: return "SE2";
    case GroupId::T2: return "T2";
  }
  return "?";
}

inline GroupId group_from_name(const std::string& s) {
  if (s == "SO2") return GroupId::SO2;
  if (s == "SE2") return GroupId::SE2;
  if (s == "T2") return GroupId::T2;
  throw InvalidArgumentError("unknown group name: " + s);
}

/// Generator basis, in a fixed documented order:
///   SO2: J = [[0,-1],[1,0]]
///   SE2: rotation generator, then x-translation, then y-translation (3x3)
///   T2:  x-translation, then y-translation (3x3)
inline std::vector<Mat> generators(const GroupDescriptor& group) {
  switch (group.id) {
    case GroupId::SO2:
      return {Mat(2, 2, {0, -1, 1, 0})};
    case GroupId::SE2:
      return {Mat(3, 3, {0, -1, 0, 1, 0, 0, 0, 0, 0}),
              Mat(3, 3, {0, 0, 1, 0, 0, 0, 0, 0, 0}),
              Mat(3, 3, {0, 0, 0, 0, 0, 1, 0, 0, 0})};
    case GroupId::T2:
      return {Mat(3, 3, {0, 0, 1, 0, 0, 0, 0, 0, 0}),
              Mat(3, 3, {0, 0, 0, 0, 0, 1, 0, 0, 0})};
  }
  throw InvalidArgumentError("unknown group id");
}

/// Element of the Lie algebra: coefficients over the generator basis together
/// with the realized matrix (always the exact linear combination).
struct AlgebraElement {
  GroupDescriptor group;
  std::vector<double> coeffs;
  Mat matrix;

  static AlgebraElement from_coeffs(const GroupDescriptor& group,
                                    const std::vector<double>& coeffs) {
    if (static_cast<int>(coeffs.size()) != group.algebra_dim)
      throw InvalidArgumentError("algebra coefficient count does not match group");
    const auto basis = generators(group);
    Mat m(group.matrix_dim, group.matrix_dim);
    for (std::size_t i = 0; i < coeffs.size(); ++i) m = m + coeffs[i] * basis[i];
    return {group, coeffs, m};
  }
};

/// Group element as an explicit matrix.
struct GroupElement {
  GroupDescriptor group;
  Mat matrix;
};

/// Matrix exponential (see expm for the algorithm and accuracy contract).
inline Mat exp_matrix(const Mat& a) { return expm(a); }

inline GroupElement exp_group(const AlgebraElement& a) {
  return {a.group, exp_matrix(a.matrix)};
}

inline GroupElement group_identity(const GroupDescriptor& g) {
  return {g, Mat::identity(g.matrix_dim)};
}

inline GroupElement group_inverse(const GroupElement& g) {
  return {g.group, inverse(g.matrix)};
}

inline GroupElement group_compose(const GroupElement& a, const GroupElement& b) {
  return {a.group, a.matrix * b.matrix};
}

/// Closed-form logarithm, the test-oracle inverse of exp_group.
///
/// SO2 reads the angle off atan2; SE2 additionally solves V(theta) rho = t for
/// the translation coordinates; T2 reads the translation column directly.
/// Throws BranchCutError when the rotation angle sits at +-pi.
inline AlgebraElement log_closed_form(const GroupElement& g) {
  const double kPi = std::numbers::pi;
  switch (g.group.id) {
    case GroupId::SO2: {
      const double theta = std::atan2(g.matrix(1, 0), g.matrix(0, 0));
      if (kPi - std::fabs(theta) < 1e-12)
        throw BranchCutError("log: rotation angle at the +-pi branch cut");
      return AlgebraElement::from_coeffs(g.group, {theta});
    }
    case GroupId::SE2: {
      const double theta = std::atan2(g.matrix(1, 0), g.matrix(0, 0));
      if (kPi - std::fabs(theta) < 1e-12)
        throw BranchCutError("log: rotation angle at the +-pi branch cut");
      const double tx = g.matrix(0, 2), ty = g.matrix(1, 2);
      // translation block of exp is V(theta) * rho with
      // V = [[sin t / t, -(1-cos t)/t], [(1-cos t)/t, sin t / t]]
      double a, b;
      if (std::fabs(theta) < 1e-9) {
        a = 1.0 - theta * theta / 6.0;
        b = theta / 2.0 - theta * theta * theta / 24.0;
      } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta;
      }
      const double det = a * a + b * b;
      const double rx = (a * tx + b * ty) / det;
      const double ry = (-b * tx + a * ty) / det;
      return AlgebraElement::from_coeffs(g.group, {theta, rx, ry});
    }
    case GroupId::T2:
      return AlgebraElement::from_coeffs(g.group, {g.matrix(0, 2), g.matrix(1, 2)});
  }
  throw InvalidArgumentError("unknown group id");
}

/// Closed interval for one algebra coordinate.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Default sampling bounds: [-pi, pi] for rotation coordinates, [-1, 1] for
/// translation coordinates.
inline std::vector<Interval> default_bounds(const GroupDescriptor& group) {
  const double kPi = std::numbers::pi;
  switch (group.id) {
    case GroupId::SO2: return {{-kPi, kPi}};
    case GroupId::SE2: return {{-kPi, kPi}, {-1, 1}, {-1, 1}};
    case GroupId::T2: return {{-1, 1}, {-1, 1}};
  }
  throw InvalidArgumentError("unknown group id");
}

/// Seeded i.i.d. sample set from the algebra, uniform per coordinate.
struct AlgebraSampleSet {
  GroupDescriptor group;
  std::vector<Interval> bounds;
  std::vector<AlgebraElement> samples;
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(samples.size()); }
};

inline AlgebraSampleSet sample_algebra(const GroupDescriptor& group,
                                       const std::vector<Interval>& bounds,
                                       int count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgumentError("sample_algebra: count must be >= 1");
  if (static_cast<int>(bounds.size()) != group.algebra_dim)
    throw InvalidArgumentError("sample_algebra: bounds count does not match algebra dim");
  for (const auto& b : bounds)
    if (!(b.lo < b.hi))
      throw InvalidArgumentError("sample_algebra: empty or inverted bounds");

  Rng rng(seed);
  AlgebraSampleSet set{group, bounds, {}, seed};
  set.samples.reserve(count);
  for (int k = 0; k < count; ++k) {
    std::vector<double> c(group.algebra_dim);
    for (int i = 0; i < group.algebra_dim; ++i) c[i] = rng.uniform(bounds[i].lo, bounds[i].hi);
    set.samples.push_back(AlgebraElement::from_coeffs(group, c));
  }
  return set;
}

/// Fixed sample set from explicit coefficient rows (used for exact grids).
inline AlgebraSampleSet fixed_samples(const GroupDescriptor& group,
                                      const std::vector<std::vector<double>>& coeff_rows) {
  if (coeff_rows.empty()) throw InvalidArgumentError("fixed_samples: empty sample list");
  AlgebraSampleSet set{group, default_bounds(group), {}, 0};
  for (const auto& c : coeff_rows) set.samples.push_back(AlgebraElement::from_coeffs(group, c));
  // widen bounds so the containment invariant holds for arbitrary grids
  for (const auto& s : set.samples)
    for (int i = 0; i < group.algebra_dim; ++i) {
      set.bounds[i].lo = std::min(set.bounds[i].lo, s.coeffs[i]);
      set.bounds[i].hi = std::max(set.bounds[i].hi, s.coeffs[i]);
    }
  return set;
}

/// The C4 grid {0, pi/2, pi, 3pi/2} J on so(2); exponentiates to the four
/// quarter-turn rotations.
inline AlgebraSampleSet c4_grid() {
  const double kPi = std::numbers::pi;
  return fixed_samples(GroupDescriptor::of(GroupId::SO2),
                       {{0.0}, {kPi / 2}, {kPi}, {3 * kPi / 2}});
}

/// Left action on a point of the plane. SO2 acts by the 2x2 matrix, SE2/T2 by
/// the homogeneous 3x3 action (append 1, apply, drop last coordinate).
inline Vec2 act_point(const GroupElement& g, Vec2 p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y))
    throw InvalidArgumentError("act_point: non-finite point");
  const Mat& m = g.matrix;
  if (g.group.matrix_dim == 2)
    return {m(0, 0) * p.x + m(0, 1) * p.y, m(1, 0) * p.x + m(1, 1) * p.y};
  return {m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2),
          m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)};
}

/// Rotation by theta as an SO2 group element (closed form, used by tests and
/// the metrics harnesses).
inline GroupElement rotation2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {GroupDescriptor::of(GroupId::SO2), Mat(2, 2, {c, -s, s, c})};
}

}  // namespace laconv
