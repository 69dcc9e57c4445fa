// contarm: command-line front end for the continuum-arm model.
//
// Every command prints one JSON envelope on stdout. Exit codes: 0 success,
// 2 contract error (bad flags, invalid input, ill-posed request), 1 internal.

#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "contarm/contarm.hpp"

namespace {

using nlohmann::json;
using namespace contarm;

template <typename Derived>
json to_json(const Eigen::MatrixBase<Derived>& m) {
  if (m.cols() == 1) {
    json v = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) v.push_back(m(i, 0));
    return v;
  }
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json configuration_json(const Configuration& psi) {
  return {{"theta_rad", psi.theta()}, {"delta_rad", psi.delta()}};
}

struct Context {
  std::string command;
  json inputs = json::object();
  json result = json::object();
  json warnings = json::array();
};

struct CommonFlags {
  std::string params_path;

  ParameterFile load() const {
    return params_path.empty() ? ParameterFile{} : load_parameter_file(params_path);
  }
};

Eigen::Vector4d tau_from(const std::vector<double>& v) {
  if (v.empty()) return Eigen::Vector4d::Zero();
  return Eigen::Vector4d(v[0], v[1], v[2], v[3]);
}

double relative_asymmetry(const Eigen::Matrix2d& k) {
  const double n = k.norm();
  return n > 0.0 ? (k - k.transpose()).norm() / n : 0.0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinematics, stiffness and IMU force estimation for a four-tendon continuum arm"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Context ctx;
  CommonFlags common;
  std::function<void()> run;

  double theta_deg = 0.0, delta_deg = 0.0;
  std::vector<double> tau_values, force_values, wrench_values;

  auto add_params = [&](CLI::App* sub) {
    sub->add_option("--params", common.params_path, "parameter JSON (defaults to the prototype arm)")
        ->check(CLI::ExistingFile);
  };
  auto add_pose = [&](CLI::App* sub, bool theta_required) {
    auto* t = sub->add_option("--theta-deg", theta_deg, "bending angle [deg], 0 <= theta < 180");
    if (theta_required) t->required();
    sub->add_option("--delta-deg", delta_deg, "bending plane angle [deg]")->capture_default_str();
  };
  auto add_tau = [&](CLI::App* sub) {
    sub->add_option("--tau", tau_values, "tendon tensions N,N,N,N (default 0)")
        ->delimiter(',')
        ->expected(4);
  };
  auto echo_pose = [&] {
    ctx.inputs["theta_deg"] = theta_deg;
    ctx.inputs["delta_deg"] = delta_deg;
    if (!common.params_path.empty()) ctx.inputs["params"] = common.params_path;
  };
  auto pose = [&] { return Configuration(theta_deg * kDegToRad, delta_deg * kDegToRad); };

  // fk
  auto* fk = app.add_subcommand("fk", "forward kinematics: end-disk pose in the base frame");
  add_pose(fk, true);
  add_params(fk);
  fk->callback([&] {
    run = [&] {
      echo_pose();
      const ParameterFile pf = common.load();
      const Transform t = forward_kinematics(pf.params, pose());
      ctx.result["rotation"] = to_json(t.rotation);
      ctx.result["position_m"] = to_json(t.position);
    };
  });

  // ik
  auto* ik = app.add_subcommand("ik", "configuration to tendon displacements");
  add_pose(ik, true);
  add_params(ik);
  ik->callback([&] {
    run = [&] {
      echo_pose();
      const ParameterFile pf = common.load();
      const TendonDisplacements q = inverse_kinematics(pf.params, pose());
      ctx.result["tendon_ids"] = {1, 2, 3, 4};
      ctx.result["q_mm"] = to_json(Eigen::Vector4d(q.q * 1e3));
      ctx.result["q_m"] = to_json(q.q);
    };
  });

  // jacobian
  auto* jac = app.add_subcommand("jacobian", "J_q_psi, J_v_psi, J_w_psi and stacked J_x_psi");
  add_pose(jac, true);
  add_params(jac);
  jac->callback([&] {
    run = [&] {
      echo_pose();
      const ParameterFile pf = common.load();
      const JacobianSet j = jacobians(pf.params, pose());
      ctx.result["J_q_psi"] = to_json(j.J_q_psi);
      ctx.result["J_v_psi"] = to_json(j.J_v_psi);
      ctx.result["J_w_psi"] = to_json(j.J_w_psi);
      ctx.result["J_x_psi"] = to_json(j.J_x_psi);
    };
  });

  // statics
  auto* statics = app.add_subcommand("statics", "elastic energy and minimum-norm tendon tensions");
  add_pose(statics, true);
  add_params(statics);
  statics->add_option("--wrench", wrench_values, "external wrench Fx,Fy,Fz,Mx,My,Mz (default 0)")
      ->delimiter(',')
      ->expected(6);
  statics->callback([&] {
    run = [&] {
      echo_pose();
      const ParameterFile pf = common.load();
      const Configuration psi = pose();
      Vector6d w = Vector6d::Zero();
      if (!wrench_values.empty()) {
        for (int i = 0; i < 6; ++i) w(i) = wrench_values[i];
        ctx.inputs["wrench"] = wrench_values;
      }
      const TensionSolution sol = solve_tendon_tensions(pf.params, psi, w);
      ctx.result["elastic_energy_J"] = elastic_energy(pf.params, psi);
      ctx.result["grad_E"] = to_json(grad_elastic_energy(pf.params, psi));
      ctx.result["tau_N"] = to_json(sol.tau);
      ctx.result["residual"] = sol.residual;
      ctx.result["has_slack"] = sol.has_slack;
      if (sol.has_slack) ctx.warnings.push_back("negative (slack) tendon tensions returned unclamped");
    };
  });

  // stiffness
  bool config_only = false;
  auto* stiff = app.add_subcommand("stiffness", "H_psi, K_q, K_psi and task-space K_X");
  add_pose(stiff, true);
  add_params(stiff);
  add_tau(stiff);
  stiff->add_option("--force", force_values, "tip force Fx,Fy,Fz for the K_X tensor term (default 0)")
      ->delimiter(',')
      ->expected(3);
  stiff->add_flag("--config-only", config_only, "skip the task-space K_X");
  stiff->callback([&] {
    run = [&] {
      echo_pose();
      const ParameterFile pf = common.load();
      const Eigen::Vector4d tau = tau_from(tau_values);
      if (!tau_values.empty()) ctx.inputs["tau"] = tau_values;
      Eigen::Vector3d f = Eigen::Vector3d::Zero();
      if (!force_values.empty()) {
        f = Eigen::Vector3d(force_values[0], force_values[1], force_values[2]);
        ctx.inputs["force"] = force_values;
      }
      ctx.inputs["config_only"] = config_only;
      const StiffnessBundle b = stiffness_bundle(pf.params, pose(), tau, !config_only, f, pf.theta_est_min);
      ctx.result["H_psi"] = to_json(b.H_psi);
      ctx.result["K_q"] = to_json(b.K_q);
      ctx.result["K_psi"] = to_json(b.K_psi);
      if (!config_only) ctx.result["K_X"] = to_json(b.K_X);
      const double asym = relative_asymmetry(b.K_psi);
      ctx.result["K_psi_asymmetry"] = asym;
      if (asym > 1e-10) ctx.warnings.push_back("K_psi is asymmetric (relative " + std::to_string(asym) + ")");
      if (!(b.K_psi(0, 0) > 0.0 && b.K_psi.determinant() > 0.0)) {
        ctx.warnings.push_back("K_psi is not positive definite: tendon term exceeds backbone bending stiffness");
      }
    };
  });

  // estimate-force
  std::vector<std::string> log_paths;
  std::string calib_path;
  std::optional<std::size_t> window;
  double ref_theta_deg = 0.0, ref_delta_deg = 0.0;
  auto* est = app.add_subcommand("estimate-force", "estimate the tip force from IMU orientation logs");
  est->add_option("--log", log_paths, "imu-log,v1 CSV; repeat to average several runs")
      ->required()
      ->check(CLI::ExistingFile);
  est->add_option("--ref-theta-deg", ref_theta_deg, "commanded bending angle [deg]")->required();
  est->add_option("--ref-delta-deg", ref_delta_deg, "commanded bending plane angle [deg]")
      ->capture_default_str();
  est->add_option("--window", window, "number of trailing samples to average (default: all)")
      ->check(CLI::PositiveNumber);
  est->add_option("--calib", calib_path, "calibration JSON with R_offset (world to base)")
      ->check(CLI::ExistingFile);
  add_tau(est);
  add_params(est);
  est->callback([&] {
    run = [&] {
      ctx.inputs["log"] = log_paths;
      ctx.inputs["ref_theta_deg"] = ref_theta_deg;
      ctx.inputs["ref_delta_deg"] = ref_delta_deg;
      if (window) ctx.inputs["window"] = *window;
      if (!calib_path.empty()) ctx.inputs["calib"] = calib_path;
      if (!tau_values.empty()) ctx.inputs["tau"] = tau_values;
      if (!common.params_path.empty()) ctx.inputs["params"] = common.params_path;

      const ParameterFile pf = common.load();
      const Configuration ref(ref_theta_deg * kDegToRad, ref_delta_deg * kDegToRad);
      const Eigen::Vector4d tau = tau_from(tau_values);
      std::optional<Eigen::Matrix3d> offset = pf.r_offset;
      if (!calib_path.empty()) offset = load_calibration(calib_path);

      json runs = json::array();
      Eigen::Vector3d f_sum = Eigen::Vector3d::Zero();
      Eigen::Vector2d fstar_sum = Eigen::Vector2d::Zero(), dpsi_sum = Eigen::Vector2d::Zero();
      ForceEstimate last;
      for (const auto& path : log_paths) {
        std::vector<OrientationMeasurement> samples = parse_imu_log_file(path);
        if (offset) samples = to_base_frame(samples, *offset);
        const std::size_t n = window.value_or(samples.empty() ? 1 : samples.size());
        last = estimate_force(pf.params, ref, tau, samples, n, pf.theta_est_min);
        if (last.window_clamped) {
          ctx.warnings.push_back("window " + std::to_string(n) + " exceeds " +
                                 std::to_string(samples.size()) + " samples in '" + path +
                                 "'; using all samples");
        }
        f_sum += last.F_ext_hat;
        fstar_sum += last.F_star_hat;
        dpsi_sum += last.deformation.delta_psi;
        runs.push_back({{"log", path},
                        {"F_ext_N", to_json(last.F_ext_hat)},
                        {"F_star", to_json(last.F_star_hat)},
                        {"delta_psi", to_json(last.deformation.delta_psi)},
                        {"samples_used", last.samples_used}});
      }
      const double k = static_cast<double>(log_paths.size());
      if (log_paths.size() == 1) {
        ctx.result["F_ext_N"] = to_json(last.F_ext_hat);
        ctx.result["F_star"] = to_json(last.F_star_hat);
        ctx.result["delta_psi"] = to_json(last.deformation.delta_psi);
        ctx.result["psi_bar"] = {{"theta_rad", last.deformation.theta_bar},
                                 {"delta_rad", last.deformation.delta_bar}};
        ctx.result["samples_used"] = last.samples_used;
      } else {
        ctx.result["F_ext_N"] = to_json(Eigen::Vector3d(f_sum / k));
        ctx.result["F_star"] = to_json(Eigen::Vector2d(fstar_sum / k));
        ctx.result["delta_psi"] = to_json(Eigen::Vector2d(dpsi_sum / k));
      }
      ctx.result["condition"] = last.condition_sigma_ratio;
      ctx.result["runs"] = runs;
    };
  });

  // simulate
  double noise_deg = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = 1;
  std::string out_path;
  auto* sim = app.add_subcommand("simulate", "linearized deflection under a tip force, written as an IMU log");
  add_pose(sim, true);
  sim->add_option("--force", force_values, "tip force Fx,Fy,Fz [N]")->delimiter(',')->expected(3)->required();
  sim->add_option("--noise-deg", noise_deg, "per-axis orientation noise std [deg]")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sim->add_option("--seed", seed, "noise seed")->capture_default_str();
  sim->add_option("--samples", samples, "number of samples (100 Hz)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--out", out_path, "output imu-log CSV")->required();
  add_tau(sim);
  add_params(sim);
  sim->callback([&] {
    run = [&] {
      echo_pose();
      ctx.inputs["force"] = force_values;
      ctx.inputs["noise_deg"] = noise_deg;
      ctx.inputs["seed"] = seed;
      ctx.inputs["samples"] = samples;
      ctx.inputs["out"] = out_path;
      if (!tau_values.empty()) ctx.inputs["tau"] = tau_values;
      const ParameterFile pf = common.load();
      LoadCase c;
      c.psi_ref = pose();
      c.force = Eigen::Vector3d(force_values[0], force_values[1], force_values[2]);
      c.tau = tau_from(tau_values);
      c.noise_std = noise_deg * kDegToRad;
      c.seed = seed;
      c.samples = samples;
      const Deflection d = simulate_deflection(pf.params, c, pf.theta_est_min);
      write_imu_log_file(out_path, synthesize_imu_log(pf.params, c, pf.theta_est_min));
      ctx.result["delta_psi"] = to_json(d.delta_psi);
      ctx.result["psi_loaded"] = configuration_json(d.psi_loaded);
      ctx.result["samples"] = samples;
      ctx.result["out"] = out_path;
    };
  });

  // sweep
  std::string spec_path;
  auto* sweep = app.add_subcommand("sweep", "load-deflection and K_X table over a theta x load grid");
  sweep->add_option("--spec", spec_path, "sweep spec JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_path, "output CSV")->required();
  add_params(sweep);
  sweep->callback([&] {
    run = [&] {
      ctx.inputs["spec"] = spec_path;
      ctx.inputs["out"] = out_path;
      if (!common.params_path.empty()) ctx.inputs["params"] = common.params_path;
      const ParameterFile pf = common.load();
      const SweepSpec spec = load_sweep_spec(spec_path);
      const std::vector<SweepRow> rows = stiffness_sweep(pf.params, spec, pf.theta_est_min);
      write_sweep_csv_file(out_path, rows);
      ctx.result["rows"] = rows.size();
      ctx.result["theta_count"] = grid(spec.theta_start, spec.theta_stop, spec.theta_step).size();
      ctx.result["load_count"] = grid(spec.load_start, spec.load_stop, spec.load_step).size();
      ctx.result["out"] = out_path;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (auto* sub : app.get_subcommands()) ctx.command = sub->get_name();
  try {
    run();
  } catch (const contarm::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: InvalidArgument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }

  const json envelope{{"tool_version", kVersion},
                      {"command", ctx.command},
                      {"inputs_echo", ctx.inputs},
                      {"result", ctx.result},
                      {"warnings", ctx.warnings}};
  std::cout << envelope.dump(2) << '\n';
  return 0;
}
