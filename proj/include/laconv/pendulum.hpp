#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "laconv/errors.hpp"
#include "laconv/io.hpp"
#include "laconv/mat.hpp"

namespace laconv {

/// Damped-pendulum simulation parameters. g stores the gravity magnitude; the
/// ODE uses the restoring coefficient +g/L so the linearized oscillator is
/// stable (sign convention documented in the README).
struct PendulumParams {
  double m = 1.0;        // mass (kg)
  double L = 1.0;        // rod length (m)
  double g = 9.8;        // gravity magnitude (m/s^2)
  double lambda = 0.2;   // friction coefficient
  double theta0 = std::acos(-1.0) / 3;  // initial angle (rad)
  double omega0 = 0.0;   // initial angular velocity (rad/s)
  double dt = 0.01;      // step (s)
  int n_steps = 6000;

  void validate() const {
    if (!(m > 0) || !(L > 0) || !(dt > 0))
      throw InvalidArgumentError("pendulum: m, L, dt must be positive");
    if (n_steps < 1) throw InvalidArgumentError("pendulum: n_steps must be >= 1");
  }
};

/// Simulated trajectory sampled at t = dt, 2dt, ..., n dt (open at 0).
/// xy[i] = (L sin theta_i, -L cos theta_i): pivot at the origin, rest at (0,-L).
struct Trajectory {
  std::vector<double> t;
  std::vector<double> theta;
  std::vector<double> omega;
  std::vector<Vec2> xy;

  std::size_t size() const { return t.size(); }
};

/// Classic fourth-order Runge-Kutta on the first-order system
/// theta' = omega, omega' = -(lambda/m) omega - (g/L) theta
/// (the linearized restoring term, not sin theta).
inline Trajectory simulate_pendulum(const PendulumParams& p) {
  p.validate();
  const double a = p.lambda / p.m;
  const double b = p.g / p.L;
  auto f_theta = [](double /*th*/, double om) { return om; };
  auto f_omega = [a, b](double th, double om) { return -a * om - b * th; };

  Trajectory traj;
  traj.t.reserve(p.n_steps);
  traj.theta.reserve(p.n_steps);
  traj.omega.reserve(p.n_steps);
  traj.xy.reserve(p.n_steps);

  double th = p.theta0, om = p.omega0;
  const double h = p.dt;
  for (int k = 1; k <= p.n_steps; ++k) {
    const double k1t = f_theta(th, om), k1o = f_omega(th, om);
    const double k2t = f_theta(th + h / 2 * k1t, om + h / 2 * k1o),
                 k2o = f_omega(th + h / 2 * k1t, om + h / 2 * k1o);
    const double k3t = f_theta(th + h / 2 * k2t, om + h / 2 * k2o),
                 k3o = f_omega(th + h / 2 * k2t, om + h / 2 * k2o);
    const double k4t = f_theta(th + h * k3t, om + h * k3o),
                 k4o = f_omega(th + h * k3t, om + h * k3o);
    th += h / 6 * (k1t + 2 * k2t + 2 * k3t + k4t);
    om += h / 6 * (k1o + 2 * k2o + 2 * k3o + k4o);
    traj.t.push_back(k * h);
    traj.theta.push_back(th);
    traj.omega.push_back(om);
    traj.xy.push_back({p.L * std::sin(th), -p.L * std::cos(th)});
  }
  return traj;
}

using TimePoint = std::pair<double, Vec2>;

struct PendulumSplit {
  std::vector<TimePoint> train;
  std::vector<TimePoint> test;
};

/// Chronological split without shuffling: train takes the first
/// floor(split * n) samples.
inline PendulumSplit pendulum_dataset(const Trajectory& traj, double split) {
  if (!(split > 0.0) || !(split < 1.0))
    throw ConfigError("pendulum_dataset: split must lie in (0, 1)");
  const std::size_t n = traj.size();
  const std::size_t n_train = static_cast<std::size_t>(split * n);
  if (n_train == 0 || n_train == n)
    throw ConfigError("pendulum_dataset: degenerate split sizes");
  PendulumSplit out;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? out.train : out.test).push_back({traj.t[i], traj.xy[i]});
  }
  return out;
}

/// CSV serialization: header row then one (t, x, y) row per sample, values
/// printed with 17 significant digits.
inline std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << "t,x,y\n";
  for (std::size_t i = 0; i < traj.size(); ++i)
    os << format_g17(traj.t[i]) << ',' << format_g17(traj.xy[i].x) << ','
       << format_g17(traj.xy[i].y) << '\n';
  return os.str();
}

inline std::vector<TimePoint> parse_pendulum_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "t,x,y")
    throw FormatError("pendulum csv: missing t,x,y header");
  std::vector<TimePoint> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
      throw FormatError("pendulum csv: malformed row");
    rows.push_back({std::stod(a), {std::stod(b), std::stod(c)}});
  }
  return rows;
}

}  // namespace laconv
