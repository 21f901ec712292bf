#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "laconv/errors.hpp"
#include "laconv/gconv.hpp"
#include "laconv/image.hpp"
#include "laconv/lie.hpp"
#include "laconv/mat.hpp"
#include "laconv/rng.hpp"

namespace laconv {

// ---------------------------------------------------------------------------
// Equivariance defect
// ---------------------------------------------------------------------------

/// Measured equivariance defect statistics over sampled group elements.
struct EquivarianceReport {
  GroupDescriptor group;
  int n_group_samples = 0;
  double max_defect = 0.0;
  double mean_defect = 0.0;
  std::vector<std::pair<std::vector<double>, double>> per_element;  // (algebra coeffs, defect)
};

namespace detail {

inline double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("defect distance: output sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace detail

/// Core defect meter: for every sampled group element g (given through its
/// algebra coordinates) and every input x, measures the Euclidean distance
/// between f(g.x) and g.f(x). Both actions are supplied by the caller.
template <class In, class MapFn, class ActIn, class ActOut>
EquivarianceReport equivariance_error(MapFn&& f, ActIn&& act_in, ActOut&& act_out,
                                      const std::vector<AlgebraElement>& group_samples,
                                      const std::vector<In>& inputs) {
  EquivarianceReport rep;
  if (group_samples.empty()) throw InvalidArgumentError("equivariance_error: no group samples");
  rep.group = group_samples.front().group;
  rep.n_group_samples = static_cast<int>(group_samples.size());
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& a : group_samples) {
    const GroupElement g = exp_group(a);
    double worst = 0.0;
    for (const auto& x : inputs) {
      const std::vector<double> lhs = f(act_in(g, x));
      const std::vector<double> rhs = act_out(g, f(x));
      const double d = detail::l2_distance(lhs, rhs);
      worst = std::max(worst, d);
      total += d;
      ++count;
    }
    rep.per_element.emplace_back(a.coeffs, worst);
    rep.max_defect = std::max(rep.max_defect, worst);
  }
  rep.mean_defect = count ? total / static_cast<double>(count) : 0.0;
  return rep;
}

/// Defect of a plane map under rotations/translations with act_point on both
/// sides.
inline EquivarianceReport equivariance_error_point_map(
    const std::function<Vec2(Vec2)>& f, const std::vector<AlgebraElement>& group_samples,
    const std::vector<Vec2>& points) {
  auto fv = [&f](const Vec2& p) {
    Vec2 q = f(p);
    return std::vector<double>{q.x, q.y};
  };
  auto ain = [](const GroupElement& g, const Vec2& p) { return act_point(g, p); };
  auto aout = [](const GroupElement& g, const std::vector<double>& v) {
    Vec2 q = act_point(g, {v[0], v[1]});
    return std::vector<double>{q.x, q.y};
  };
  return equivariance_error<Vec2>(fv, ain, aout, group_samples, points);
}

/// Defect of an image classifier: the input action transforms the image, the
/// logit output carries the trivial action (the meter reads invariance).
inline EquivarianceReport equivariance_error_classifier(
    const Model& model, const std::vector<AlgebraElement>& group_samples,
    const std::vector<Image>& images, ResampleMethod method) {
  auto fv = [&model](const Image& img) { return model.predict_logits(img); };
  auto ain = [method](const GroupElement& g, const Image& img) {
    return act_image(g, img, method);
  };
  auto aout = [](const GroupElement&, const std::vector<double>& v) { return v; };
  return equivariance_error<Image>(fv, ain, aout, group_samples, images);
}

/// Seeded meter entry point matching the CLI: draws n group samples from the
/// algebra under the group's default bounds. Only image-input models carry a
/// defined input action; anything else is an unsupported-action error.
inline EquivarianceReport equivariance_error_model(const Model& model,
                                                   const GroupDescriptor& group,
                                                   const std::vector<Image>& inputs,
                                                   int n_group_samples, std::uint64_t seed) {
  if (model.arch.task != TaskKind::classify)
    throw UnsupportedActionError(
        "equivariance_error: no group action is defined on the scalar input space of this head");
  auto set = sample_algebra(group, default_bounds(group), n_group_samples, seed);
  std::vector<AlgebraElement> gs(set.samples.begin(), set.samples.end());
  return equivariance_error_classifier(model, gs, inputs, ResampleMethod::bilinear);
}

// ---------------------------------------------------------------------------
// Almost-isometry defect
// ---------------------------------------------------------------------------

enum class Domain2D { unit_circle, disk };

/// Local and integrated metric-distortion measurements of a plane map.
struct IsometryDefectReport {
  double local_max = 0.0;       // sup over sampled points and unit tangent pairs
  double global_integral = 0.0; // Riemann sum of the pointwise sup defect
  double volume = 0.0;          // Riemannian volume estimate of the domain
  int grid_resolution = 0;
};

using PlaneMap = std::function<Vec2(Vec2)>;

namespace detail {

/// Jacobian by central differences.
inline Mat jacobian2(const PlaneMap& f, Vec2 p, double h) {
  const Vec2 fx1 = f({p.x + h, p.y}), fx0 = f({p.x - h, p.y});
  const Vec2 fy1 = f({p.x, p.y + h}), fy0 = f({p.x, p.y - h});
  Mat j(2, 2,
        {(fx1.x - fx0.x) / (2 * h), (fy1.x - fy0.x) / (2 * h),
         (fx1.y - fx0.y) / (2 * h), (fy1.y - fy0.y) / (2 * h)});
  if (!j.finite()) throw NumericalError("almost_isometry_defect: non-finite Jacobian");
  return j;
}

inline Vec2 apply2(const Mat& j, Vec2 v) {
  return {j(0, 0) * v.x + j(0, 1) * v.y, j(1, 0) * v.x + j(1, 1) * v.y};
}

}  // namespace detail

/// Pointwise metric pullback defect |g(v,w) - (Jv).(Jw)| maximized over unit
/// tangent pairs; the circle has a one-dimensional tangent space, the disk is
/// probed over n_directions unit directions.
inline IsometryDefectReport almost_isometry_defect(const PlaneMap& f, Domain2D domain,
                                                   int n_points, int n_directions,
                                                   double fd_h = 1e-6) {
  const double kPi = std::numbers::pi;
  if (n_points < 2) throw InvalidArgumentError("almost_isometry_defect: need >= 2 points");
  IsometryDefectReport rep;
  rep.grid_resolution = n_points;

  if (domain == Domain2D::unit_circle) {
    const double ds = 2 * kPi / n_points;
    for (int k = 0; k < n_points; ++k) {
      const double th = 2 * kPi * k / n_points;
      const Vec2 p{std::cos(th), std::sin(th)};
      const Vec2 t{-std::sin(th), std::cos(th)};
      const Mat j = detail::jacobian2(f, p, fd_h);
      const Vec2 jt = detail::apply2(j, t);
      const double defect = std::fabs(1.0 - jt.dot(jt));
      rep.local_max = std::max(rep.local_max, defect);
      rep.global_integral += defect * ds;
      rep.volume += ds;
    }
    return rep;
  }

  // unit disk: polar cells, midpoint radii
  if (n_directions < 1) throw InvalidArgumentError("almost_isometry_defect: need >= 1 direction");
  const int n_r = std::max(2, static_cast<int>(std::lround(std::sqrt(n_points / 4.0))));
  const int n_th = std::max(4, (n_points + n_r - 1) / n_r);
  const double dr = 1.0 / n_r, dth = 2 * kPi / n_th;
  std::vector<Vec2> dirs;
  for (int a = 0; a < n_directions; ++a) {
    const double phi = kPi * a / n_directions;
    dirs.push_back({std::cos(phi), std::sin(phi)});
  }
  for (int ir = 0; ir < n_r; ++ir) {
    const double r = (ir + 0.5) * dr;
    for (int it = 0; it < n_th; ++it) {
      const double th = it * dth;
      const Vec2 p{r * std::cos(th), r * std::sin(th)};
      const Mat j = detail::jacobian2(f, p, fd_h);
      double defect = 0.0;
      for (const Vec2& v : dirs) {
        const Vec2 jv = detail::apply2(j, v);
        for (const Vec2& w : dirs) {
          const Vec2 jw = detail::apply2(j, w);
          defect = std::max(defect, std::fabs(v.dot(w) - jv.dot(jw)));
        }
      }
      const double cell = r * dr * dth;
      rep.local_max = std::max(rep.local_max, defect);
      rep.global_integral += defect * cell;
      rep.volume += cell;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Perturbed-isometry equivariance experiment
// ---------------------------------------------------------------------------

/// One batch of trials verifying that a rotation of the circle composed with a
/// sup-norm-<eps perturbation stays 2*eps-almost equivariant under SO2.
struct PerturbedIsometryReport {
  double eps = 0.0;
  int n_trials = 0;
  int pass_count = 0;
  double max_ratio = 0.0;  // measured defect / (2 eps)
};

inline PerturbedIsometryReport perturbed_isometry_experiment(double eps, int n_trials,
                                                             std::uint64_t seed,
                                                             int n_group_grid = 100,
                                                             int n_point_grid = 100) {
  if (!(eps > 0)) throw InvalidArgumentError("perturbed_isometry_experiment: eps must be > 0");
  const double kPi = std::numbers::pi;
  PerturbedIsometryReport rep;
  rep.eps = eps;
  rep.n_trials = n_trials;
  for (int trial = 0; trial < n_trials; ++trial) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
    const double alpha = rng.uniform(-kPi, kPi);
    const double amp = rng.uniform(0.0, eps / 2);  // chord distance <= angle gap
    const int freq = 1 + static_cast<int>(rng.uniform_int(5));
    const double phase = rng.uniform(0.0, 2 * kPi);
    auto f_eps = [&](double theta) {  // angle-level map of the circle
      return theta + alpha + amp * std::sin(freq * theta + phase);
    };
    double worst = 0.0;
    for (int gi = 0; gi < n_group_grid; ++gi) {
      const double gtheta = 2 * kPi * gi / n_group_grid;
      for (int xi = 0; xi < n_point_grid; ++xi) {
        const double xtheta = 2 * kPi * xi / n_point_grid;
        const double a1 = f_eps(xtheta) + gtheta;  // g . f_eps(x)
        const double a2 = f_eps(xtheta + gtheta);  // f_eps(g . x)
        const Vec2 p1{std::cos(a1), std::sin(a1)}, p2{std::cos(a2), std::sin(a2)};
        worst = std::max(worst, (p1 - p2).norm());
      }
    }
    if (worst < 2 * eps) ++rep.pass_count;
    rep.max_ratio = std::max(rep.max_ratio, worst / (2 * eps));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hyers-Ulam recovery
// ---------------------------------------------------------------------------

using VecN = std::vector<double>;
using VecMap = std::function<VecN(const VecN&)>;

/// Result of the doubling-limit recovery I(x) = lim T(2^k x)/2^k.
struct UlamResult {
  int n_iters = 0;        // doublings until successive iterates agree
  double max_gap = 0.0;   // sup_grid ||T(x) - I(x)||
  double eps_in = 0.0;    // measured isometry defect of T on the grid
  bool bound_ok = false;  // max_gap < 10 * eps_in
  double recovered_defect = 0.0;  // pairwise-distance defect of I on the grid
  bool recovered_is_isometry = false;
  VecMap recovered;
};

namespace detail {

inline double vec_dist(const VecN& a, const VecN& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double pairwise_defect(const std::vector<VecN>& pts, const std::vector<VecN>& imgs) {
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      worst = std::max(worst,
                       std::fabs(vec_dist(imgs[i], imgs[j]) - vec_dist(pts[i], pts[j])));
  return worst;
}

}  // namespace detail

/// Recovers the nearby isometry of an eps-isometry T with T(0)=0 by the
/// doubling limit, stopping at the first k where successive grid iterates
/// agree within tol. Surjectivity of T is a hypothesis of the underlying
/// theorem that is assumed, not verified, for the synthetic maps probed here.
inline UlamResult ulam_recover(const VecMap& t_map, const std::vector<VecN>& grid, double tol,
                               int max_doublings) {
  if (grid.empty()) throw InvalidArgumentError("ulam_recover: empty grid");
  const std::size_t dim = grid.front().size();
  {
    const VecN zero(dim, 0.0);
    const VecN t0 = t_map(zero);
    double n0 = 0.0;
    for (double v : t0) n0 = std::max(n0, std::fabs(v));
    if (n0 > 1e-12)
      throw InvalidArgumentError("ulam_recover: T(0) must vanish (precondition)");
  }

  UlamResult res;
  std::vector<VecN> t_of_grid;
  t_of_grid.reserve(grid.size());
  for (const auto& x : grid) t_of_grid.push_back(t_map(x));
  res.eps_in = detail::pairwise_defect(grid, t_of_grid);

  auto iterate = [&t_map, dim](const VecN& x, int k) {
    const double scale = std::pow(2.0, k);
    VecN xs(dim);
    for (std::size_t i = 0; i < dim; ++i) xs[i] = scale * x[i];
    VecN y = t_map(xs);
    for (double& v : y) v /= scale;
    return y;
  };

  std::vector<VecN> prev = t_of_grid;  // k = 0
  int k_conv = -1;
  std::vector<VecN> cur;
  double gap = 0.0;
  for (int k = 1; k <= max_doublings; ++k) {
    cur.clear();
    for (const auto& x : grid) cur.push_back(iterate(x, k));
    gap = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      gap = std::max(gap, detail::vec_dist(cur[i], prev[i]));
    if (gap < tol) {
      k_conv = k;
      break;
    }
    prev = cur;
  }
  if (k_conv < 0)
    throw ConvergenceError("ulam_recover: doubling iterates did not converge", gap);

  res.n_iters = k_conv;
  res.recovered = [iterate, k_conv](const VecN& x) { return iterate(x, k_conv); };
  for (std::size_t i = 0; i < grid.size(); ++i)
    res.max_gap = std::max(res.max_gap, detail::vec_dist(t_of_grid[i], cur[i]));
  res.bound_ok = res.max_gap < 10.0 * res.eps_in;
  res.recovered_defect = detail::pairwise_defect(grid, cur);
  res.recovered_is_isometry = res.recovered_defect < 1e-6;
  return res;
}

/// Default evaluation grid: n points uniform in the radius-r ball plus the
/// origin, so the doubling argument is exercised across scales.
inline std::vector<VecN> ulam_default_grid(int n = 64, double radius = 4.0,
                                           std::uint64_t seed = 0) {
  Rng rng(derive_seed(seed, 0x75A6));
  std::vector<VecN> grid;
  grid.push_back({0.0, 0.0});
  for (int i = 0; i < n; ++i) {
    const double r = radius * std::sqrt(rng.uniform01());
    const double th = rng.uniform(0.0, 2 * std::numbers::pi);
    grid.push_back({r * std::cos(th), r * std::sin(th)});
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Fickett's bound
// ---------------------------------------------------------------------------

/// Distance bound 27 * eps^(1/2^n) between an eps-isometry of a bounded
/// subset of R^n and a true isometry.
inline double fickett_bound(double eps, int n) {
  if (n < 2) throw InvalidArgumentError("fickett_bound: n must be >= 2");
  if (!(eps > 0)) throw InvalidArgumentError("fickett_bound: eps must be > 0");
  return 27.0 * std::pow(eps, 1.0 / std::pow(2.0, n));
}

// ---------------------------------------------------------------------------
// Convolution deviation bound report
// ---------------------------------------------------------------------------

enum class MatrixNorm { spectral, frobenius };

/// Comparison of the measured strict-vs-learned output deviation of a layer
/// against the bound K_hat * N * |delta_x| * max_j ||exp(u_j)||.
///
/// delta_x is reported raw (it may be negative as literally defined); the
/// bound uses its absolute value. K_hat is the empirical max of
/// ||kernel(A)|| / ||A|| over the matrices the kernel is evaluated at in both
/// modes plus seeded random probes spanning the same norm range.
struct DeviationBoundReport {
  int n_samples = 0;
  double delta_x_raw = 0.0;
  double delta_x_abs = 0.0;
  double k_hat = 0.0;
  double max_exp_u_norm = 0.0;
  double bound = 0.0;               // K_hat * N * |delta_x| * max_exp_u_norm
  double scaled_bound = 0.0;        // vol_scale * N * (K_hat * |delta_x| * max_exp_u_norm)
  double measured_deviation = 0.0;  // sup_j || out_learned[j] - out_strict[j] ||_2
  double ratio = 0.0;               // measured / bound (0 when bound is 0)
};

namespace detail {

inline double mat_norm(const Mat& m, MatrixNorm which) {
  return which == MatrixNorm::spectral ? spectral_norm(m) : m.norm_fro();
}

/// Numeric (graph-free) mapping-net output with the regularizer applied.
inline Mat mapping_value(const LieConvLayer& layer, const std::vector<double>& coeffs) {
  const int n = layer.in_samples.group.matrix_dim;
  const Tensor& w = layer.mapping.weight->value;  // [adim x n^2]
  const Tensor& b = layer.mapping.bias->value;    // [n^2]
  Mat out(n, n);
  for (int e = 0; e < n * n; ++e) {
    double z = b.data[e];
    for (std::size_t a = 0; a < coeffs.size(); ++a) z += coeffs[a] * w.at(static_cast<int>(a), e);
    double v = layer.mapping.activation == Activation::relu ? (z > 0 ? z : 0.0)
                                                            : 1.0 / (1.0 + std::exp(-z));
    out(e / n, e % n) = v;
  }
  return out + layer.lambda_reg * Mat::identity(n);
}

/// Numeric kernel evaluation k: R^{n x n} -> R^{c_out x c_in}.
inline Mat kernel_value(const KernelNet& k, const Mat& arg) {
  const Tensor& w1 = k.w1->value;
  const Tensor& b1 = k.b1->value;
  const Tensor& w2 = k.w2->value;
  const Tensor& b2 = k.b2->value;
  const int n2 = w1.shape[0], h = w1.shape[1], out_dim = w2.shape[1];
  std::vector<double> hidden(h);
  for (int j = 0; j < h; ++j) {
    double z = b1.data[j];
    for (int i = 0; i < n2; ++i) z += arg.data()[i] * w1.at(i, j);
    hidden[j] = z > 0 ? z : 0.0;
  }
  Mat out(k.c_out, k.c_in);
  for (int e = 0; e < out_dim; ++e) {
    double z = b2.data[e];
    for (int j = 0; j < h; ++j) z += hidden[j] * w2.at(j, e);
    out(e / k.c_in, e % k.c_in) = z;
  }
  return out;
}

}  // namespace detail

inline DeviationBoundReport deviation_bound_report(const LieConvLayer& layer,
                                                   const Tensor& probe_f, std::uint64_t seed,
                                                   MatrixNorm norm = MatrixNorm::spectral) {
  const int n_in = layer.in_samples.count();
  const int n_out = layer.out_points.count();
  const int n = layer.in_samples.group.matrix_dim;
  if (probe_f.ndim() != 2 || probe_f.shape[0] != n_in || probe_f.shape[1] != layer.kernel.c_in)
    throw ShapeError("deviation_bound_report: probe f must be [N x c_in]");

  DeviationBoundReport rep;
  rep.n_samples = n_in;

  std::vector<Mat> g_inv, m_inv, exp_u;
  for (int i = 0; i < n_in; ++i) {
    const auto& x = layer.in_samples.samples[i];
    g_inv.push_back(expm(-1.0 * x.matrix));
    if (layer.strict_mode) {
      m_inv.push_back(g_inv.back());
    } else {
      double cond = 0.0;
      Mat m = detail::mapping_value(layer, x.coeffs);
      Mat inv_m;
      try {
        inv_m = inverse(m, &cond);
      } catch (const SingularityError& e) {
        throw SingularityError("deviation_bound_report: mapping output singular at sample " +
                                   std::to_string(i),
                               e.condition(), i);
      }
      if (cond > 1e8)
        throw SingularityError("deviation_bound_report: mapping condition above 1e8", cond, i);
      m_inv.push_back(inv_m);
    }
  }
  for (const auto& u : layer.out_points.samples) exp_u.push_back(expm(u.matrix));

  rep.delta_x_raw = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_in; ++i)
    rep.delta_x_raw = std::max(rep.delta_x_raw, detail::mat_norm(g_inv[i], norm) -
                                                    detail::mat_norm(m_inv[i], norm));
  rep.delta_x_abs = std::fabs(rep.delta_x_raw);

  for (const auto& e : exp_u)
    rep.max_exp_u_norm = std::max(rep.max_exp_u_norm, detail::mat_norm(e, norm));

  // kernel evaluations in both modes, recording K_hat probes along the way
  double min_arg_norm = std::numeric_limits<double>::infinity(), max_arg_norm = 0.0;
  auto probe = [&](const Mat& arg) {
    const double an = detail::mat_norm(arg, norm);
    if (an > 0.0) {
      rep.k_hat = std::max(rep.k_hat, detail::mat_norm(detail::kernel_value(layer.kernel, arg), norm) / an);
      min_arg_norm = std::min(min_arg_norm, an);
      max_arg_norm = std::max(max_arg_norm, an);
    }
  };

  const int c_out = layer.kernel.c_out, c_in = layer.kernel.c_in;
  double measured = 0.0;
  for (int j = 0; j < n_out; ++j) {
    std::vector<double> diff(c_out, 0.0);
    for (int i = 0; i < n_in; ++i) {
      const Mat a = m_inv[i] * exp_u[j];
      const Mat b = g_inv[i] * exp_u[j];
      probe(a);
      probe(b);
      const Mat ka = detail::kernel_value(layer.kernel, a);
      const Mat kb = detail::kernel_value(layer.kernel, b);
      for (int r = 0; r < c_out; ++r)
        for (int ccol = 0; ccol < c_in; ++ccol)
          diff[r] += (ka(r, ccol) - kb(r, ccol)) * probe_f.at(i, ccol);
    }
    double d = 0.0;
    for (double v : diff) d += v * v;
    measured = std::max(measured, layer.vol_scale() * std::sqrt(d));
  }
  rep.measured_deviation = measured;

  // seeded random probes across the encountered norm range
  Rng rng(derive_seed(seed, 0xDB));
  for (int p = 0; p < 16; ++p) {
    Mat m(n, n);
    for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
    const double cur = detail::mat_norm(m, norm);
    if (cur == 0.0) continue;
    const double lo = std::max(min_arg_norm / 4.0, 1e-6);
    const double target = lo * std::pow(std::max(max_arg_norm, lo) / lo, rng.uniform01());
    probe((target / cur) * m);
  }

  rep.bound = rep.k_hat * n_in * rep.delta_x_abs * rep.max_exp_u_norm;
  rep.scaled_bound = layer.vol_scale() * n_in * rep.k_hat * rep.delta_x_abs * rep.max_exp_u_norm;
  rep.ratio = rep.bound > 0.0 ? rep.measured_deviation / rep.bound : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// JSON report serialization (stable field names, report_version 1)
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EquivarianceReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [coeffs, d] : r.per_element) per.push_back({{"coeffs", coeffs}, {"defect", d}});
  return {{"report_version", 1},
          {"kind", "equivariance"},
          {"group", group_name(r.group.id)},
          {"n_group_samples", r.n_group_samples},
          {"max_defect", r.max_defect},
          {"mean_defect", r.mean_defect},
          {"per_element", per}};
}

inline nlohmann::json to_json(const IsometryDefectReport& r) {
  return {{"report_version", 1},
          {"kind", "isometry_defect"},
          {"local_max", r.local_max},
          {"global_integral", r.global_integral},
          {"volume", r.volume},
          {"grid_resolution", r.grid_resolution}};
}

inline nlohmann::json to_json(const PerturbedIsometryReport& r) {
  return {{"report_version", 1},
          {"kind", "perturbed_isometry"},
          {"eps", r.eps},
          {"n_trials", r.n_trials},
          {"pass_count", r.pass_count},
          {"max_ratio", r.max_ratio}};
}

inline nlohmann::json to_json(const UlamResult& r) {
  return {{"report_version", 1},
          {"kind", "ulam_recovery"},
          {"n_iters", r.n_iters},
          {"max_gap", r.max_gap},
          {"eps_in", r.eps_in},
          {"bound_ok", r.bound_ok},
          {"recovered_defect", r.recovered_defect},
          {"recovered_is_isometry", r.recovered_is_isometry}};
}

inline nlohmann::json to_json(const DeviationBoundReport& r) {
  return {{"report_version", 1},
          {"kind", "deviation_bound"},
          {"n_samples", r.n_samples},
          {"delta_x_raw", r.delta_x_raw},
          {"delta_x_abs", r.delta_x_abs},
          {"k_hat", r.k_hat},
          {"max_exp_u_norm", r.max_exp_u_norm},
          {"bound", r.bound},
          {"scaled_bound", r.scaled_bound},
          {"measured_deviation", r.measured_deviation},
          {"ratio", r.ratio}};
}

}  // namespace laconv
