// Runs the contarm binary and compares its JSON output with direct library calls.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "contarm/contarm.hpp"

namespace contarm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
  json envelope;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("contarm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(CONTARM_CLI_PATH) + " " + args + " >" + out.string() + " 2>" +
                            err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    if (r.exit_code == 0 && !r.out.empty() && r.out.front() == '{') r.envelope = json::parse(r.out);
    return r;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  fs::path dir_;
};

template <typename Derived>
json as_json(const Eigen::MatrixBase<Derived>& m) {
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

const ArmParameters kArm = ArmParameters::prototype();

Configuration deg(double t, double d) { return Configuration(t * kDegToRad, d * kDegToRad); }

TEST_F(CliTest, EnvelopeShape) {
  const RunResult r = run("fk --theta-deg 30 --delta-deg 10");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.envelope["tool_version"], kVersion);
  EXPECT_EQ(r.envelope["command"], "fk");
  EXPECT_EQ(r.envelope["inputs_echo"]["theta_deg"], 30.0);
  EXPECT_TRUE(r.envelope["warnings"].is_array());
  EXPECT_TRUE(r.envelope["result"].is_object());
}

TEST_F(CliTest, ForwardKinematics) {
  RunResult r = run("fk --theta-deg 0 --delta-deg 0");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.envelope["result"]["position_m"], json({0.0, 0.0, 0.222}));

  r = run("fk --theta-deg 90 --delta-deg 0");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const Transform t = forward_kinematics(kArm, deg(90, 0));
  EXPECT_EQ(r.envelope["result"]["position_m"], as_json(t.position));
  EXPECT_EQ(r.envelope["result"]["rotation"], as_json(t.rotation));
  EXPECT_NEAR(r.envelope["result"]["position_m"][0].get<double>(), 0.14133, 1e-5);

  r = run("fk --theta-deg 200");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("InvalidArgument"), std::string::npos);
}

TEST_F(CliTest, InverseKinematics) {
  RunResult r = run("ik --theta-deg 45 --delta-deg 0");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto q = r.envelope["result"]["q_mm"];
  EXPECT_NEAR(q[0].get<double>(), 9.4248, 1e-4);
  EXPECT_NEAR(q[1].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(q[2].get<double>(), -9.4248, 1e-4);
  EXPECT_NEAR(q[3].get<double>(), 0.0, 1e-12);
  EXPECT_EQ(r.envelope["result"]["tendon_ids"], json({1, 2, 3, 4}));

  r = run("ik --theta-deg 0");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.envelope["result"]["q_mm"], json({0.0, 0.0, 0.0, 0.0}));

  EXPECT_EQ(run("ik --delta-deg 10").exit_code, 2);
}

TEST_F(CliTest, GoldenJacobianAndStiffnessAtThirtyDegrees) {
  const Configuration psi = deg(30, 0);
  const JacobianSet j = jacobians(kArm, psi);
  const StiffnessBundle b = stiffness_bundle(kArm, psi, Eigen::Vector4d::Zero());
  const json golden = {{"J_q_psi", as_json(j.J_q_psi)}, {"J_v_psi", as_json(j.J_v_psi)},
                       {"J_w_psi", as_json(j.J_w_psi)}, {"J_x_psi", as_json(j.J_x_psi)},
                       {"H_psi", as_json(b.H_psi)},     {"K_q", as_json(b.K_q)},
                       {"K_psi", as_json(b.K_psi)},     {"K_X", as_json(b.K_X)}};
  write("golden.json", golden.dump(2));
  const json stored = json::parse(slurp(path("golden.json")));

  RunResult r = run("jacobian --theta-deg 30 --delta-deg 0");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* key : {"J_q_psi", "J_v_psi", "J_w_psi", "J_x_psi"}) {
    EXPECT_EQ(r.envelope["result"][key], stored[key]) << key;
  }
  r = run("stiffness --theta-deg 30 --delta-deg 0");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* key : {"H_psi", "K_q", "K_psi", "K_X"}) {
    EXPECT_EQ(r.envelope["result"][key], stored[key]) << key;
  }
}

TEST_F(CliTest, StiffnessWarningsAndGuard) {
  RunResult r = run("stiffness --theta-deg 45");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const auto& w : r.envelope["warnings"]) {
    EXPECT_EQ(w.get<std::string>().find("asymmetric"), std::string::npos);
  }
  EXPECT_LE(r.envelope["result"]["K_psi_asymmetry"].get<double>(), 1e-10);

  r = run("stiffness --theta-deg 30 --tau 1,2,3,4 --force 0.1,0,-0.2");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const Eigen::Vector4d tau(1, 2, 3, 4);
  EXPECT_EQ(r.envelope["result"]["K_X"],
            as_json(stiffness_task_with_force(kArm, deg(30, 0), tau, {0.1, 0.0, -0.2})));
  EXPECT_EQ(r.envelope["result"]["K_psi"], as_json(stiffness_config(kArm, deg(30, 0), tau)));

  r = run("stiffness --theta-deg 1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("near-straight configuration"), std::string::npos);
  EXPECT_EQ(run("stiffness --theta-deg 1 --config-only").exit_code, 0);
  EXPECT_EQ(run("stiffness --theta-deg 30 --tau 1,2,3").exit_code, 2);
}

TEST_F(CliTest, Statics) {
  const RunResult r = run("statics --theta-deg 45 --wrench 0.1,0,-0.2,0,0,0");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  Vector6d w;
  w << 0.1, 0, -0.2, 0, 0, 0;
  const TensionSolution s = solve_tendon_tensions(kArm, deg(45, 0), w);
  EXPECT_EQ(r.envelope["result"]["tau_N"], as_json(s.tau));
  EXPECT_EQ(r.envelope["result"]["elastic_energy_J"], elastic_energy(kArm, deg(45, 0)));
}

TEST_F(CliTest, SimulateThenEstimateRoundTrip) {
  const std::string log = path("run.csv").string();
  RunResult r = run("simulate --theta-deg 45 --delta-deg 0 --force 0.503,0,-0.306 --noise-deg 0 --out " + log);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  r = run("estimate-force --log " + log + " --ref-theta-deg 45 --ref-delta-deg 0");
  ASSERT_EQ(r.exit_code, 0) << r.err;

  const Configuration ref = deg(45, 0);
  const Eigen::Vector3d applied(0.503, 0.0, -0.306);
  const ForceEstimate lib =
      estimate_force(kArm, ref, Eigen::Vector4d::Zero(), parse_imu_log_file(log), 1);
  EXPECT_EQ(r.envelope["result"]["F_ext_N"], as_json(lib.F_ext_hat));
  EXPECT_EQ(r.envelope["result"]["F_star"], as_json(lib.F_star_hat));
  EXPECT_EQ(r.envelope["result"]["condition"], lib.condition_sigma_ratio);
  // only the range(J_v) component of the applied force is observable
  const Matrix32 jv = jacobian_v_psi(kArm, ref);
  const Eigen::Vector3d observable = jv * (jv.transpose() * jv).inverse() * jv.transpose() * applied;
  EXPECT_LE((lib.F_ext_hat - observable).norm(), 1e-6);
}

TEST_F(CliTest, EstimateForceContractErrors) {
  write("empty.csv", "");
  RunResult r = run("estimate-force --log " + path("empty.csv").string() + " --ref-theta-deg 45");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("EmptyLog"), std::string::npos);

  write("header_only.csv", "imu-log,v1\n");
  r = run("estimate-force --log " + path("header_only.csv").string() + " --ref-theta-deg 45");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("EmptyLog"), std::string::npos);

  write("bad.csv", "imu-log,v1\n0,1,0,0,0\n0.01,1,0,x,0\n");
  r = run("estimate-force --log " + path("bad.csv").string() + " --ref-theta-deg 45");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos);

  write("version.csv", "imu-log,v9\n");
  r = run("estimate-force --log " + path("version.csv").string() + " --ref-theta-deg 45");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("UnsupportedVersion"), std::string::npos);

  write("ok.csv", "imu-log,v1\n0,1,0,0,0\n");
  r = run("estimate-force --log " + path("ok.csv").string() + " --ref-theta-deg 2");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("near-straight configuration"), std::string::npos);
}

TEST_F(CliTest, WindowLargerThanLogWarns) {
  const std::string log = path("w.csv").string();
  ASSERT_EQ(run("simulate --theta-deg 30 --force 0.2,0,-0.1 --samples 5 --out " + log).exit_code, 0);
  const RunResult r = run("estimate-force --log " + log + " --ref-theta-deg 30 --window 50");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  ASSERT_EQ(r.envelope["warnings"].size(), 1u);
  EXPECT_NE(r.envelope["warnings"][0].get<std::string>().find("using all samples"), std::string::npos);
  EXPECT_EQ(r.envelope["result"]["samples_used"], 5);
}

TEST_F(CliTest, RepeatedLogsAreAveraged) {
  const std::string a = path("a.csv").string(), b = path("b.csv").string();
  ASSERT_EQ(run("simulate --theta-deg 45 --force 0.3,0,-0.2 --noise-deg 0.2 --seed 1 --samples 50 --out " + a).exit_code, 0);
  ASSERT_EQ(run("simulate --theta-deg 45 --force 0.3,0,-0.2 --noise-deg 0.2 --seed 2 --samples 50 --out " + b).exit_code, 0);
  const RunResult r = run("estimate-force --log " + a + " --log " + b + " --ref-theta-deg 45");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const Configuration ref = deg(45, 0);
  const Eigen::Vector3d fa = estimate_force(kArm, ref, Eigen::Vector4d::Zero(), parse_imu_log_file(a), 50).F_ext_hat;
  const Eigen::Vector3d fb = estimate_force(kArm, ref, Eigen::Vector4d::Zero(), parse_imu_log_file(b), 50).F_ext_hat;
  EXPECT_EQ(r.envelope["result"]["F_ext_N"], as_json(Eigen::Vector3d((fa + fb) / 2.0)));
  EXPECT_EQ(r.envelope["result"]["runs"].size(), 2u);
}

TEST_F(CliTest, CalibrationOffsetIsApplied) {
  // Log recorded in a world frame rotated 90° about z from the base.
  const Eigen::Matrix3d offset = rot_z(std::numbers::pi / 2.0);
  LoadCase c;
  c.psi_ref = deg(45, 0);
  c.force = Eigen::Vector3d(0.3, 0.0, -0.2);
  auto samples = synthesize_imu_log(kArm, c);
  for (auto& s : samples) s.rotation = offset * s.rotation;
  write_imu_log_file(path("world.csv").string(), samples);
  write("calib.json", json{{"R_offset", as_json(offset)}}.dump());
  const RunResult r = run("estimate-force --log " + path("world.csv").string() +
                          " --ref-theta-deg 45 --calib " + path("calib.json").string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto base = to_base_frame(parse_imu_log_file(path("world.csv").string()), offset);
  EXPECT_EQ(r.envelope["result"]["F_ext_N"],
            as_json(estimate_force(kArm, c.psi_ref, Eigen::Vector4d::Zero(), base, base.size()).F_ext_hat));
}

TEST_F(CliTest, SimulateIsDeterministic) {
  const std::string a = path("a.csv").string(), b = path("b.csv").string();
  const std::string args = "simulate --theta-deg 30 --delta-deg 180 --force 0.389,0,0.047 --noise-deg 0.2 --seed 42 --samples 300 --out ";
  ASSERT_EQ(run(args + a).exit_code, 0);
  ASSERT_EQ(run(args + b).exit_code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(run(args + "/nonexistent_dir/x.csv").exit_code, 2);
}

TEST_F(CliTest, Sweep) {
  write("spec.json", R"({"theta_deg": {"start": 10, "stop": 60, "step": 10},
                         "delta_deg": 0, "direction": "inward",
                         "load_N": {"start": 0, "stop": 1, "step": 0.1}})");
  const std::string out = path("sweep.csv").string();
  const RunResult r = run("sweep --spec " + path("spec.json").string() + " --out " + out);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.envelope["result"]["rows"], 66);
  const std::string csv = slurp(out);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 67);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSweepCsvHeader);

  write("bad_spec.json", R"({"theta_deg": {"start": 10, "stop": 60}})");
  EXPECT_EQ(run("sweep --spec " + path("bad_spec.json").string() + " --out " + out).exit_code, 2);
  EXPECT_EQ(run("sweep --spec " + path("spec.json").string() + " --out /nonexistent_dir/s.csv").exit_code, 2);
}

TEST_F(CliTest, ParameterFile) {
  write("params.json", R"({"L_mm": 300, "r_mm": 10, "Ep_GPa": 82, "ET_GPa": 2.34, "Ip_mm4": 0.2485, "A_mm2": 0.2642})");
  RunResult r = run("fk --theta-deg 0 --params " + path("params.json").string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NEAR(r.envelope["result"]["position_m"][2].get<double>(), 0.3, 1e-15);

  write("partial.json", R"({"L_mm": 300})");
  r = run("fk --theta-deg 0 --params " + path("partial.json").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("r_mm"), std::string::npos);

  write("junk.json", "{not json");
  EXPECT_EQ(run("fk --theta-deg 0 --params " + path("junk.json").string()).exit_code, 2);
}

TEST_F(CliTest, FlagHandling) {
  EXPECT_EQ(run("--help").exit_code, 0);
  EXPECT_EQ(run("fk --help").exit_code, 0);
  EXPECT_EQ(run("fk --theta-deg 10 --bogus 3").exit_code, 2);
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("nosuchcommand").exit_code, 2);
  EXPECT_EQ(run("fk --theta-deg abc").exit_code, 2);
}

}  // namespace
}  // namespace contarm
