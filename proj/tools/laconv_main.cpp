// Command-line interface for the Lie algebra convolution library.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error. Every randomized
// subcommand takes --seed and is reproducible byte-for-byte.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "laconv/laconv.hpp"

namespace {

using namespace laconv;

void write_json_report(const nlohmann::json& j, const std::string& path) {
  write_file_bytes(path, j.dump(2) + "\n");
}

int cmd_simulate_pendulum(const PendulumParams& params, const std::string& out) {
  const Trajectory traj = simulate_pendulum(params);
  write_file_bytes(out, trajectory_to_csv(traj));
  std::cout << "wrote " << traj.size() << " samples to " << out << "\n";
  return 0;
}

int cmd_gen_synthetic(int classes, int per_class, int size, const std::string& law,
                      std::uint64_t seed, const std::string& out) {
  const AngleLaw angle_law = law == "c4" ? AngleLaw::c4 : AngleLaw::uniform;
  const auto set = synthetic_rotated_patterns(per_class, classes, size, angle_law, seed);
  save_image_set(set, out);
  std::cout << "wrote " << set.size() << " images (" << classes << " classes) to " << out
            << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out,
              const std::string& checkpoint, std::int64_t seed_override) {
  auto j = nlohmann::json::parse(read_file_bytes(config_path));
  TrainConfig cfg = train_config_from_json(j);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  const TrainOutcome outcome = train(cfg);
  std::cout << "final metric: " << format_g17(outcome.record.final_metric) << "  ("
            << outcome.record.wall_time << " s)\n";
  if (!out.empty()) write_json_report(run_record_to_json(outcome.record), out);
  if (!checkpoint.empty()) save_checkpoint(outcome.model, checkpoint);
  return 0;
}

int cmd_grid_search(const std::string& grid_path, int n_seeds, const std::string& out_dir) {
  const auto spec = grid_spec_from_json(nlohmann::json::parse(read_file_bytes(grid_path)));
  const auto ranking = grid_search(spec, n_seeds, out_dir);
  write_json_report(ranking_to_json(ranking), out_dir + "/ranking.json");
  std::cout << "ranked " << ranking.size() << " configurations into " << out_dir
            << "/ranking.json\n";
  if (!ranking.empty() && !ranking.front().failed)
    std::cout << "best mean metric: " << format_g17(ranking.front().mean) << "\n";
  return 0;
}

int cmd_eval_equivariance(const std::string& checkpoint, const std::string& data,
                          const std::string& group, int n_samples, std::uint64_t seed,
                          const std::string& out) {
  const Model model = load_checkpoint(checkpoint);
  const LabeledImageSet set = load_image_set(data);
  const auto g = GroupDescriptor::of(group_from_name(group));
  const auto rep = equivariance_error_model(model, g, set.images, n_samples, seed);
  write_json_report(to_json(rep), out);
  std::cout << "max defect " << format_g17(rep.max_defect) << ", mean defect "
            << format_g17(rep.mean_defect) << "\n";
  return 0;
}

VecMap make_named_map(const std::string& name, double eps, const std::string& table_path) {
  if (name == "rotation") {
    return [](const VecN& x) {
      const double c = std::cos(0.7), s = std::sin(0.7);
      return VecN{c * x[0] - s * x[1], s * x[0] + c * x[1]};
    };
  }
  if (name == "perturbed-identity") {
    return [eps](const VecN& x) {
      double r = 0.0;
      for (double v : x) r += v * v;
      r = std::sqrt(r);
      VecN y = x;
      y[0] += eps * std::sin(r);
      return y;
    };
  }
  if (name == "custom-table") {
    // Table rows sample a bounded perturbation of the identity; the residual
    // is extended off the sampled points by nearest neighbor.
    const auto j = nlohmann::json::parse(read_file_bytes(table_path));
    auto points = j.at("points").get<std::vector<VecN>>();
    auto values = j.at("values").get<std::vector<VecN>>();
    if (points.size() != values.size() || points.empty())
      throw ConsistencyError("custom-table: points/values size mismatch");
    return [points, values](const VecN& x) {
      double best = -1.0;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
          const double t = x[k] - points[i][k];
          d += t * t;
        }
        if (best < 0 || d < best) {
          best = d;
          arg = i;
        }
      }
      VecN y = x;
      for (std::size_t k = 0; k < x.size(); ++k) y[k] += values[arg][k] - points[arg][k];
      return y;
    };
  }
  throw InvalidArgumentError("unknown map name: " + name);
}

int cmd_ulam_recover(const std::string& map_name, double eps, double grid_radius, double tol,
                     int max_doublings, std::uint64_t seed, const std::string& table,
                     const std::string& out) {
  VecMap t_map = make_named_map(map_name, eps, table);
  if (map_name == "custom-table") {
    // keep T(0) = 0 by subtracting the residual at the origin
    VecMap raw = t_map;
    const VecN r0 = raw(VecN{0.0, 0.0});
    t_map = [raw, r0](const VecN& x) {
      VecN y = raw(x);
      for (std::size_t k = 0; k < y.size(); ++k) y[k] -= r0[k];
      return y;
    };
  }
  const auto grid = ulam_default_grid(64, grid_radius, seed);
  const UlamResult res = ulam_recover(t_map, grid, tol, max_doublings);
  write_json_report(to_json(res), out);
  std::cout << "converged at k=" << res.n_iters << ", max gap " << format_g17(res.max_gap)
            << ", eps_in " << format_g17(res.eps_in) << ", bound "
            << (res.bound_ok ? "ok" : "violated") << ", recovered "
            << (res.recovered_is_isometry ? "isometric" : "non-isometric") << "\n";
  return 0;
}

int cmd_fickett(double eps, int n) {
  std::cout << format_g17(fickett_bound(eps, n)) << "\n";
  return 0;
}

int cmd_bound_report(const std::string& checkpoint, std::uint64_t seed, const std::string& out) {
  const Model model = load_checkpoint(checkpoint);
  nlohmann::json layers = nlohmann::json::array();
  Rng rng(derive_seed(seed, 0xB0));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    Tensor probe({layer.in_samples.count(), layer.kernel.c_in});
    for (double& v : probe.data) v = rng.uniform(-1.0, 1.0);
    auto rep = deviation_bound_report(layer, probe, derive_seed(seed, l));
    auto j = to_json(rep);
    j["layer"] = l;
    layers.push_back(j);
    std::cout << "layer " << l << ": measured " << format_g17(rep.measured_deviation)
              << "  bound " << format_g17(rep.bound) << "\n";
  }
  write_json_report(nlohmann::json{{"report_version", 1},
                                   {"kind", "deviation_bound_layers"},
                                   {"layers", layers}},
                    out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Almost-equivariant Lie algebra convolutions: simulation, training, and "
               "equivariance/isometry measurement"};
  app.require_subcommand(1);

  // simulate-pendulum
  PendulumParams pp;
  std::string sim_out = "pendulum.csv";
  auto* sim = app.add_subcommand("simulate-pendulum", "Integrate the damped pendulum (RK4)");
  sim->add_option("--m", pp.m, "mass (kg)");
  sim->add_option("--L", pp.L, "rod length (m)");
  sim->add_option("--g", pp.g, "gravity magnitude (m/s^2)");
  sim->add_option("--lambda", pp.lambda, "friction coefficient");
  sim->add_option("--theta0", pp.theta0, "initial angle (rad)");
  sim->add_option("--omega0", pp.omega0, "initial angular velocity (rad/s)");
  sim->add_option("--dt", pp.dt, "time step (s)");
  sim->add_option("--steps", pp.n_steps, "number of steps");
  sim->add_option("--out", sim_out, "output CSV path");

  // gen-synthetic
  int gs_classes = 4, gs_per_class = 128, gs_size = 16;
  std::string gs_law = "uniform", gs_out = "patterns.lads";
  std::uint64_t gs_seed = 0;
  auto* gen = app.add_subcommand("gen-synthetic", "Generate rotated-pattern image data");
  gen->add_option("--classes", gs_classes, "number of classes (2..10)");
  gen->add_option("--per-class", gs_per_class, "samples per class");
  gen->add_option("--size", gs_size, "image side length (>= 8)");
  gen->add_option("--angle-law", gs_law, "rotation law: uniform | c4")
      ->check(CLI::IsMember({"uniform", "c4"}));
  gen->add_option("--seed", gs_seed, "random seed");
  gen->add_option("--out", gs_out, "output .lads path");

  // train
  std::string tr_config, tr_out, tr_checkpoint;
  std::int64_t tr_seed = -1;
  auto* tr = app.add_subcommand("train", "Train a model from a JSON config");
  tr->add_option("--config", tr_config, "config JSON path")->required();
  tr->add_option("--out", tr_out, "run report JSON path");
  tr->add_option("--checkpoint", tr_checkpoint, "checkpoint output path");
  tr->add_option("--seed", tr_seed, "seed override (>= 0)");

  // grid-search
  std::string gd_grid, gd_out = "grid_out";
  int gd_seeds = 4;
  auto* gd = app.add_subcommand("grid-search", "Train a hyperparameter grid");
  gd->add_option("--grid", gd_grid, "grid spec JSON path")->required();
  gd->add_option("--seeds", gd_seeds, "seeds per configuration");
  gd->add_option("--out", gd_out, "output directory");

  // eval-equivariance
  std::string ee_checkpoint, ee_data, ee_group = "SO2", ee_out = "equivariance.json";
  int ee_samples = 64;
  std::uint64_t ee_seed = 0;
  auto* ee = app.add_subcommand("eval-equivariance", "Measure the equivariance defect");
  ee->add_option("--checkpoint", ee_checkpoint, "model checkpoint")->required();
  ee->add_option("--data", ee_data, "image set (.lads)")->required();
  ee->add_option("--group", ee_group, "group: SO2 | SE2 | T2")
      ->check(CLI::IsMember({"SO2", "SE2", "T2"}));
  ee->add_option("--samples", ee_samples, "number of group samples");
  ee->add_option("--seed", ee_seed, "random seed");
  ee->add_option("--out", ee_out, "report JSON path");

  // ulam-recover
  std::string ur_map = "perturbed-identity", ur_table, ur_out = "ulam.json";
  double ur_eps = 0.05, ur_radius = 4.0, ur_tol = 1e-12;
  int ur_max = 52;
  std::uint64_t ur_seed = 0;
  auto* ur = app.add_subcommand("ulam-recover", "Recover an isometry from an eps-isometry");
  ur->add_option("--map", ur_map, "rotation | perturbed-identity | custom-table")
      ->check(CLI::IsMember({"rotation", "perturbed-identity", "custom-table"}));
  ur->add_option("--table", ur_table, "table JSON path (custom-table)");
  ur->add_option("--eps", ur_eps, "perturbation amplitude");
  ur->add_option("--grid-radius", ur_radius, "evaluation grid radius");
  ur->add_option("--tol", ur_tol, "convergence tolerance");
  ur->add_option("--max-doublings", ur_max, "doubling limit");
  ur->add_option("--seed", ur_seed, "grid seed");
  ur->add_option("--out", ur_out, "report JSON path");

  // fickett
  double fk_eps = 1.0;
  int fk_n = 2;
  auto* fk = app.add_subcommand("fickett", "Print the isometry-distance bound 27 eps^(1/2^n)");
  fk->add_option("--eps", fk_eps, "isometry defect")->required();
  fk->add_option("--n", fk_n, "dimension (>= 2)")->required();

  // bound-report
  std::string br_checkpoint, br_out = "bound.json";
  std::uint64_t br_seed = 0;
  auto* br = app.add_subcommand("bound-report",
                                "Measured layer deviation vs. the kernel-norm bound");
  br->add_option("--checkpoint", br_checkpoint, "model checkpoint")->required();
  br->add_option("--seed", br_seed, "probe seed");
  br->add_option("--out", br_out, "report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help exits 0, any parse failure is a usage error
  }

  try {
    if (sim->parsed()) return cmd_simulate_pendulum(pp, sim_out);
    if (gen->parsed())
      return cmd_gen_synthetic(gs_classes, gs_per_class, gs_size, gs_law, gs_seed, gs_out);
    if (tr->parsed()) return cmd_train(tr_config, tr_out, tr_checkpoint, tr_seed);
    if (gd->parsed()) return cmd_grid_search(gd_grid, gd_seeds, gd_out);
    if (ee->parsed())
      return cmd_eval_equivariance(ee_checkpoint, ee_data, ee_group, ee_samples, ee_seed, ee_out);
    if (ur->parsed())
      return cmd_ulam_recover(ur_map, ur_eps, ur_radius, ur_tol, ur_max, ur_seed, ur_table,
                              ur_out);
    if (fk->parsed()) return cmd_fickett(fk_eps, fk_n);
    if (br->parsed()) return cmd_bound_report(br_checkpoint, br_seed, br_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
