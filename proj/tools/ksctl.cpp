// ksctl: batch front end wiring JSON run configurations to the library and
// emitting summary JSON plus CSV artifacts.
//
// exit codes: 0 success, 1 usage, 2 configuration/validation error,
//             3 solver or convergence error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <string>

#include "kscontrol/audit.hpp"
#include "kscontrol/cole_hopf.hpp"
#include "kscontrol/hum.hpp"
#include "kscontrol/io.hpp"
#include "kscontrol/linear_pde.hpp"
#include "kscontrol/mesh.hpp"
#include "kscontrol/nonlinear.hpp"
#include "kscontrol/trajectory.hpp"
#include "kscontrol/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& path, const std::string& why)
      : std::runtime_error("config error at '" + path + "': " + why) {}
};

const json& walk(const json& root, const std::string& path) {
  const json* cur = &root;
  size_t pos = 0;
  while (pos < path.size()) {
    const size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (!cur->is_object() || !cur->contains(key)) throw ConfigError(path, "missing key");
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return *cur;
}

template <typename T>
T jget(const json& root, const std::string& path) {
  const json& v = walk(root, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path, "wrong type");
  }
}

template <typename T>
T jget_or(const json& root, const std::string& path, T fallback) {
  try {
    walk(root, path);
  } catch (const ConfigError&) {
    return fallback;
  }
  return jget<T>(root, path);
}

bool walk_has(const json& root, const std::string& path) {
  try {
    walk(root, path);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

ks::Interval jinterval(const json& root, const std::string& path) {
  const json& v = walk(root, path);
  if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected [lo, hi]");
  ks::Interval iv{v[0].get<double>(), v[1].get<double>()};
  if (!(iv.lo < iv.hi)) throw ConfigError(path, "needs lo < hi");
  return iv;
}

ks::Field profile_field(const json& root, const std::string& path, const ks::Mesh1D& mesh) {
  const std::string family = jget<std::string>(root, path + ".family");
  const double amp = jget_or<double>(root, path + ".amplitude", 0.0);
  const int mode = jget_or<int>(root, path + ".mode", 1);
  ks::Field f(mesh.nx, 0.0);
  const double L = mesh.length;
  if (family == "zero") {
    // all zeros
  } else if (family == "constant") {
    std::fill(f.begin(), f.end(), amp);
  } else if (family == "sine") {
    f = ks::sine_field(mesh, amp, mode);
  } else if (family == "sine2") {
    for (int i = 0; i < mesh.nx; ++i) {
      const double sv = std::sin(mode * M_PI * mesh.x(i) / L);
      f[i] = amp * sv * sv;
    }
    f[0] = f[mesh.nx - 1] = 0.0;
  } else if (family == "bump") {
    for (int i = 0; i < mesh.nx; ++i)
      f[i] = amp * 4.0 * mesh.x(i) * (L - mesh.x(i)) / (L * L);
    f[0] = f[mesh.nx - 1] = 0.0;
  } else if (family == "exp_sine2") {
    for (int i = 0; i < mesh.nx; ++i) {
      const double sv = std::sin(mode * M_PI * mesh.x(i) / L);
      f[i] = std::exp(amp * sv * sv);
    }
  } else {
    throw ConfigError(path + ".family", "unknown family '" + family + "'");
  }
  return f;
}

ks::Mesh1D make_mesh(const json& cfg) {
  return ks::Mesh1D(jget<int>(cfg, "mesh.nx"), jget<int>(cfg, "mesh.nt"),
                    jget<double>(cfg, "mesh.length"), jget<double>(cfg, "mesh.horizon"));
}

ks::TrajectoryResult run_trajectory(const json& cfg, const ks::Mesh1D& mesh) {
  ks::TrajectoryParams p;
  p.p_bar = jget<double>(cfg, "trajectory.p_bar");
  p.initial_w = profile_field(cfg, "trajectory.initial_w", mesh);
  p.initial_v = profile_field(cfg, "trajectory.initial_v", mesh);
  p.smallness = jget_or<double>(cfg, "trajectory.smallness", 1e-2);
  return ks::solve_free_trajectory(p, mesh);
}

struct WeightBundle {
  ks::RhoProfile rho;
  ks::CutoffProfile cutoff;
  ks::WeightSet set;
  ks::Interval omega;
  bool swept = false;
};

WeightBundle make_weights(const json& cfg, const ks::Mesh1D& mesh) {
  WeightBundle wb;
  wb.omega = jinterval(cfg, "weights.omega");
  const ks::Interval omega1 = jinterval(cfg, "weights.omega1");
  const ks::Interval omega0 = jinterval(cfg, "weights.omega0");
  if (!(omega0.inside(omega1) && omega1.inside(wb.omega)))
    throw ConfigError("weights", "intervals must nest: omega0 in omega1 in omega");
  if (!(wb.omega.lo > 0.0 && wb.omega.hi < mesh.length))
    throw ConfigError("weights.omega", "must be strictly inside (0, L)");
  const int m = jget_or<int>(cfg, "weights.m", 4);
  const double k = jget_or<double>(cfg, "weights.k", 5.0);
  const int max_exp = jget_or<int>(cfg, "weights.max_exponent", 4);
  wb.rho = ks::build_rho(mesh, omega0, max_exp);
  wb.cutoff = ks::build_cutoff(mesh, wb.omega, omega1);
  if (jget_or<bool>(cfg, "weights.auto_sweep", false)) {
    const ks::SweepChoice c = ks::sweep_weight_params(mesh, wb.rho, m, k);
    wb.set = ks::build_weight_set(mesh, wb.rho, c.s, c.lambda, m, k);
    wb.swept = true;
  } else {
    wb.set = ks::build_weight_set(mesh, wb.rho, jget<double>(cfg, "weights.s"),
                                  jget<double>(cfg, "weights.lambda"), m, k);
  }
  return wb;
}

json weight_params_json(const WeightBundle& wb, double applied_scale) {
  return json{{"m", wb.set.m},
              {"k", wb.set.k},
              {"s", wb.set.s},
              {"lambda", wb.set.lambda},
              {"rho_p", wb.rho.p},
              {"rho_q", wb.rho.q},
              {"rho_grad_lower_bound", wb.rho.grad_lower_bound},
              {"max_log_W", wb.set.max_log_W},
              {"underflow_count", wb.set.underflow_count},
              {"auto_sweep", wb.swept},
              {"weight_scale", applied_scale}};
}

ks::CoefficientSet trajectory_coefficients(const ks::TrajectoryResult& traj,
                                           ks::Actuation act) {
  ks::CoefficientSet c;
  c.actuation = act;
  c.a = traj.v_bar;
  c.b = traj.v_bar;
  for (ks::Field& s : c.b.snaps)
    for (double& v : s) v *= 2.0;
  c.B = traj.u_bar;
  return c;
}

ks::Actuation parse_actuation(const json& cfg) {
  const std::string a = jget_or<std::string>(cfg, "control.actuation", "chemical");
  if (a == "chemical") return ks::Actuation::chemical;
  if (a == "density") return ks::Actuation::density;
  throw ConfigError("control.actuation", "must be 'chemical' or 'density'");
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

json audit_report_json(const ks::AuditReport& rep) {
  return json{{"samples", rep.samples},
              {"max_ratio", rep.max_ratio},
              {"median_ratio", rep.median_ratio},
              {"max_log10_ratio", rep.max_log10_ratio},
              {"median_log10_ratio", rep.median_log10_ratio},
              {"counterexample_evidence", rep.counterexample_evidence},
              {"verdict", rep.verdict},
              {"seed", rep.seed},
              {"s", rep.s},
              {"lambda", rep.lambda},
              {"k", rep.k},
              {"m", rep.m}};
}

// ---------------------------------------------------------------- commands

json cmd_trajectory(const json& cfg, const fs::path& out) {
  const ks::Mesh1D mesh = make_mesh(cfg);
  const ks::TrajectoryResult tr = run_trajectory(cfg, mesh);
  ks::write_fields_csv((out / "trajectory.csv").string(), mesh,
                       {{"u_bar", &tr.u_bar}, {"v_bar", &tr.v_bar}});
  ks::write_series_csv((out / "energy.csv").string(), "E", mesh, tr.energy);
  double max_increase = 0.0;
  for (size_t n = 1; n < tr.energy.size(); ++n)
    max_increase = std::max(max_increase, tr.energy[n] - tr.energy[n - 1]);
  return json{{"energy_initial", tr.energy.front()},
              {"energy_final", tr.energy.back()},
              {"energy_max_step_increase", max_increase},
              {"min_u_minus_pbar", tr.min_u_minus_pbar},
              {"min_v", tr.min_v},
              {"smallness_ok", tr.smallness_ok},
              {"initial_h1", tr.initial_h1}};
}

json cmd_hum(const json& cfg, const fs::path& out) {
  const ks::Mesh1D mesh = make_mesh(cfg);
  const ks::TrajectoryResult tr = run_trajectory(cfg, mesh);
  WeightBundle wb = make_weights(cfg, mesh);
  const ks::Actuation act = parse_actuation(cfg);
  const ks::CoefficientSet coeffs = trajectory_coefficients(tr, act);
  const ks::StepOperators ops(coeffs, wb.cutoff, mesh);

  ks::Field y0 = profile_field(cfg, "control.initial_y", mesh);
  ks::Field z0 = profile_field(cfg, "control.initial_z", mesh);
  const double cg_tol = jget_or<double>(cfg, "control.cg_tol", 1e-10);
  const int max_iter = jget_or<int>(cfg, "control.max_iter", 500);

  double scale = 0.0;
  if (walk_has(cfg, "control.weight_scale")) {
    const json& wsv = walk(cfg, "control.weight_scale");
    if (wsv.is_number()) scale = wsv.get<double>();
  }
  if (scale <= 0.0) scale = ks::auto_weight_scale(ops, wb.set, y0, z0);

  std::vector<double> eps_list;
  if (walk_has(cfg, "control.eps_sweep"))
    eps_list = jget<std::vector<double>>(cfg, "control.eps_sweep");
  else
    eps_list = {jget<double>(cfg, "control.eps")};

  json runs = json::array();
  std::vector<double> log_eps, log_term, ratios;
  ks::ControlSolution last;
  for (double eps : eps_list) {
    ks::PenalizedProblem prob;
    prob.eps = eps;
    prob.weights = &wb.set;
    prob.ops = &ops;
    prob.y0 = y0;
    prob.z0 = z0;
    prob.weight_scale = scale;
    ks::ControlSolution sol = ks::solve_penalized(prob, cg_tol, max_iter);
    runs.push_back(json{{"eps", eps},
                        {"cg_iterations", sol.cg_iterations},
                        {"cg_residual", sol.cg_residual},
                        {"terminal_norm", sol.terminal_norm},
                        {"cost_terms",
                         json{{"control_energy", sol.control_energy},
                              {"penalty", sol.penalty_term},
                              {"cost_ratio", sol.cost_ratio}}},
                        {"optimality_defect", sol.optimality_defect}});
    if (sol.terminal_norm > 0.0) {
      log_eps.push_back(std::log10(eps));
      log_term.push_back(std::log10(sol.terminal_norm));
      ratios.push_back(sol.cost_ratio);
    }
    last = std::move(sol);
  }
  ks::write_fields_csv((out / "control.csv").string(), mesh, {{"h", &last.h}});
  ks::write_weights_csv((out / "weights.csv").string(), mesh, wb.set);

  json summary{{"runs", runs},
               {"weight_params", weight_params_json(wb, scale)},
               {"initial_norm", last.initial_norm}};
  if (log_eps.size() >= 2) {
    summary["sweep_slope"] = fit_slope(log_eps, log_term);
    const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
    summary["cost_ratio_variation"] = *mx / *mn;
  }
  return summary;
}

json cmd_nonlinear(const json& cfg, const fs::path& out) {
  const ks::Mesh1D mesh = make_mesh(cfg);
  const ks::TrajectoryResult tr = run_trajectory(cfg, mesh);
  WeightBundle wb = make_weights(cfg, mesh);

  ks::FixedPointConfig fp;
  fp.damping = jget_or<double>(cfg, "fixed_point.damping", 1.0);
  fp.max_iters = jget_or<int>(cfg, "fixed_point.max_iters", 20);
  fp.rel_tol = jget_or<double>(cfg, "fixed_point.rel_tol", 1e-6);
  fp.eps = jget_or<double>(cfg, "fixed_point.eps", 1e-8);
  fp.smallness_bound = jget_or<double>(cfg, "fixed_point.smallness_bound", 1e-2);
  fp.cg_tol = jget_or<double>(cfg, "control.cg_tol", 1e-10);
  fp.cg_max_iter = jget_or<int>(cfg, "control.max_iter", 500);
  fp.actuation = parse_actuation(cfg);

  ks::Field y0 = profile_field(cfg, "control.initial_y", mesh);
  ks::Field z0 = profile_field(cfg, "control.initial_z", mesh);
  const ks::NonlinearControlResult res =
      ks::fixed_point_control(y0, z0, tr, fp, wb.set, wb.cutoff, mesh);

  {
    std::ofstream os((out / "iterations.csv").string());
    os << std::setprecision(17) << "k,rel_change,inner_terminal_norm\n";
    for (size_t kk = 0; kk < res.history.size(); ++kk)
      os << (kk + 1) << "," << res.history[kk] << "," << res.inner_terminal_history[kk] << "\n";
  }
  ks::write_fields_csv((out / "control.csv").string(), mesh, {{"h", &res.h}});
  return json{{"iterates", res.iterates},
              {"converged", res.converged},
              {"final_rel_change", res.history.empty() ? 0.0 : res.history.back()},
              {"inner_terminal_norm", res.inner_terminal_norm},
              {"closed_loop_terminal_norm", res.closed_loop_terminal_norm},
              {"min_u", res.min_u},
              {"nonneg_ok", res.nonneg_ok},
              {"projections", res.projections},
              {"weight_params", weight_params_json(wb, res.weight_scale)}};
}

json cmd_cole_hopf(const json& cfg, const fs::path& out) {
  const ks::Mesh1D mesh = make_mesh(cfg);
  const ks::TrajectoryResult tr = run_trajectory(cfg, mesh);
  WeightBundle wb = make_weights(cfg, mesh);
  const ks::Actuation act = parse_actuation(cfg);
  const ks::CoefficientSet coeffs = trajectory_coefficients(tr, act);
  const ks::StepOperators ops(coeffs, wb.cutoff, mesh);

  const ks::Field c0 = profile_field(cfg, "cole_hopf.c0", mesh);
  const ks::Field v0 = ks::chemical_to_gradient(c0, mesh);
  ks::Field y0 = profile_field(cfg, "control.initial_y", mesh);
  ks::Field z0(mesh.nx);
  for (int i = 0; i < mesh.nx; ++i) z0[i] = v0[i] - tr.v_bar[0][i];
  z0[0] = z0[mesh.nx - 1] = 0.0;

  ks::PenalizedProblem prob;
  prob.eps = jget<double>(cfg, "control.eps");
  prob.weights = &wb.set;
  prob.ops = &ops;
  prob.y0 = y0;
  prob.z0 = z0;
  ks::ControlSolution sol =
      ks::solve_penalized(prob, jget_or<double>(cfg, "control.cg_tol", 1e-10),
                          jget_or<int>(cfg, "control.max_iter", 500));

  const ks::StatePair st = ops.forward(y0, z0, &sol.h);
  ks::SpaceTimeField u(mesh), v(mesh);
  for (int n = 0; n <= mesh.nt; ++n)
    for (int i = 0; i < mesh.nx; ++i) {
      u[n][i] = st.y[n][i] + tr.u_bar[n][i];
      v[n][i] = st.z[n][i] + tr.v_bar[n][i];
    }
  const ks::ChemicalField chem = ks::reconstruct_chemical(u, v, c0, mesh);

  double consistency = 0.0;
  for (int n = 0; n <= mesh.nt; ++n) {
    ks::Field ln(mesh.nx);
    for (int i = 0; i < mesh.nx; ++i) ln[i] = std::log(chem.c[n][i]);
    const ks::Field g = ks::gradient(ln, mesh);
    for (int i = 0; i < mesh.nx; ++i)
      consistency = std::max(consistency, std::abs(g[i] - v[n][i]));
  }

  // scaling round trip through the physical variables
  ks::PhysicalParams pp;
  pp.diffusivity = jget_or<double>(cfg, "physical.D", 1.0);
  pp.sensitivity = jget_or<double>(cfg, "physical.chi", 1.0);
  pp.degradation = jget_or<double>(cfg, "physical.mu", 1.0);
  const ks::ScaledSystem phys =
      ks::physical_scaling(pp, ks::ScalingDirection::to_physical, mesh, u, v);
  const ks::ScaledSystem back =
      ks::physical_scaling(pp, ks::ScalingDirection::to_normalized, phys.mesh, phys.u, phys.v);
  double roundtrip = std::abs(back.mesh.length - mesh.length) +
                     std::abs(back.mesh.horizon - mesh.horizon);
  for (int n = 0; n <= mesh.nt; ++n)
    for (int i = 0; i < mesh.nx; ++i)
      roundtrip = std::max(roundtrip, std::abs(back.v[n][i] - v[n][i]));

  ks::write_fields_csv((out / "chemical.csv").string(), mesh, {{"c", &chem.c}});
  double min_c = chem.c[0][0];
  for (const ks::Field& s : chem.c.snaps)
    for (double x : s) min_c = std::min(min_c, x);
  return json{{"consistency_max_error", consistency},
              {"min_c", min_c},
              {"strictly_positive", chem.strictly_positive},
              {"overflow_clamps", chem.overflow_clamps},
              {"scaling_roundtrip_error", roundtrip},
              {"terminal_norm", sol.terminal_norm},
              {"weight_params", weight_params_json(wb, sol.weight_scale)}};
}

json cmd_audit(const json& cfg, const fs::path& out, uint64_t seed, bool carleman) {
  const ks::Mesh1D mesh = make_mesh(cfg);
  const ks::TrajectoryResult tr = run_trajectory(cfg, mesh);
  WeightBundle wb = make_weights(cfg, mesh);
  const ks::CoefficientSet coeffs =
      trajectory_coefficients(tr, ks::Actuation::chemical);
  const ks::StepOperators ops(coeffs, wb.cutoff, mesh);
  const int samples = jget_or<int>(cfg, "audit.samples", carleman ? 20 : 50);
  const ks::AuditReport rep =
      carleman ? ks::carleman_ratio(samples, wb.set, ops, wb.omega, mesh, seed)
               : ks::observability_ratio(samples, wb.set, ops, wb.omega, mesh, seed);
  ks::write_audit_csv((out / "samples.csv").string(), rep);
  return audit_report_json(rep);
}

json cmd_demo_neumann(const json& cfg, const fs::path& out) {
  const ks::Mesh1D mesh = make_mesh(cfg);
  const ks::TrajectoryResult tr = run_trajectory(cfg, mesh);
  WeightBundle wb = make_weights(cfg, mesh);
  const ks::CoefficientSet coeffs =
      trajectory_coefficients(tr, ks::Actuation::chemical);
  const ks::AuditReport rep = ks::neumann_counterexample(mesh, wb.set, coeffs, wb.omega);
  ks::write_audit_csv((out / "samples.csv").string(), rep);
  return json{{"lhs", rep.rows[0].lhs},
              {"rhs", rep.rows[0].rhs},
              {"verdict", rep.verdict},
              {"constancy_deviation", rep.constancy_deviation}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kscontrol batch driver"};
  std::string command, config_path, out_dir;
  std::optional<uint64_t> seed_flag;
  app.add_option("command", command,
                 "trajectory | hum | nonlinear | cole-hopf | audit-observability | "
                 "audit-carleman | demo-neumann")
      ->required();
  app.add_option("--config", config_path, "path to the JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (default: config's 'output')");
  app.add_option("--seed", seed_flag, "seed override");
  CLI11_PARSE(app, argc, argv);

  const std::set<std::string> known = {"trajectory",   "hum",      "nonlinear",
                                       "cole-hopf",    "audit-observability",
                                       "audit-carleman", "demo-neumann"};
  if (!known.count(command)) {
    std::cerr << "unknown command '" << command << "'\n";
    return 1;
  }

  json cfg;
  try {
    std::ifstream is(config_path);
    if (!is) {
      std::cerr << "cannot open config " << config_path << "\n";
      return 2;
    }
    cfg = json::parse(is);
  } catch (const json::exception& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return 2;
  }

  try {
    const uint64_t seed = seed_flag ? *seed_flag : jget_or<uint64_t>(cfg, "seed", 0);
    fs::path out = out_dir.empty() ? fs::path(jget_or<std::string>(cfg, "output", "out"))
                                   : fs::path(out_dir);
    fs::create_directories(out);
    json resolved = cfg;
    resolved["output"] = out.string();
    resolved["seed"] = seed;

    json result;
    if (command == "trajectory")
      result = cmd_trajectory(resolved, out);
    else if (command == "hum")
      result = cmd_hum(resolved, out);
    else if (command == "nonlinear")
      result = cmd_nonlinear(resolved, out);
    else if (command == "cole-hopf")
      result = cmd_cole_hopf(resolved, out);
    else if (command == "audit-observability")
      result = cmd_audit(resolved, out, seed, false);
    else if (command == "audit-carleman")
      result = cmd_audit(resolved, out, seed, true);
    else
      result = cmd_demo_neumann(resolved, out);

    json summary{{"command", command}, {"config", resolved}, {"result", result}};
    std::ofstream os((out / "summary.json").string());
    os << summary.dump(2) << "\n";
    std::cout << (out / "summary.json").string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ks::ParameterError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ks::ConstructionError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ks::DimensionError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ks::DomainError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ks::HypothesisError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ks::Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 3;
  }
}
