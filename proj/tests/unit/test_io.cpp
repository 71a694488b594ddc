#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "racing/fixtures.hpp"
#include "racing/io.hpp"

using namespace racing;
namespace fs = std::filesystem;

namespace {

const VehicleParams kCar{};

// Fresh scratch directory per test.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("racing_io_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream(file, std::ios::binary) << text;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(-0.0), "0");
  EXPECT_EQ(io::format_number(2.75), "2.75");
  for (double v : {1.0 / 3.0, std::numbers::pi, -1e-300, 6.02e23, std::nextafter(1.0, 2.0)}) {
    EXPECT_EQ(std::stod(io::format_number(v)), v);
  }
}

TEST(TrackCsv, RoundTripIsExact) {
  const fs::path dir = scratch("track");
  for (const std::string name : {"hairpin", "eight_corner"}) {
    const TrackPath path = fixture_by_name(name);
    io::write_track_csv(dir / "t.csv", path);
    const TrackPath back = io::read_track_csv(dir / "t.csv");
    EXPECT_EQ(back.closed, path.closed) << name;
    EXPECT_EQ(back.s, path.s);
    EXPECT_EQ(back.curvature, path.curvature);
    EXPECT_EQ(back.w_in, path.w_in);
    EXPECT_EQ(back.w_out, path.w_out);
    EXPECT_EQ(back.east, path.east);
    EXPECT_EQ(back.north, path.north);
    EXPECT_EQ(back.heading, path.heading);
  }
  EXPECT_EQ(read_text(dir / "t.csv").substr(0, std::string(io::kTrackHeader).size()), io::kTrackHeader);
}

TEST(ProfileCsv, RoundTrip) {
  const fs::path dir = scratch("profile");
  const SpeedProfile prof = compute_speed_profile(chicane_track(), kCar);
  io::write_profile_csv(dir / "p.csv", prof);
  const SpeedProfile back = io::read_profile_csv(dir / "p.csv");
  EXPECT_EQ(back.s, prof.s);
  EXPECT_EQ(back.ux, prof.ux);
  EXPECT_EQ(back.lap_time, prof.lap_time);
}

TEST(SimLogCsv, RoundTrip) {
  const fs::path dir = scratch("sim");
  std::vector<SimLogRow> rows = {{0.0, 0.0, 0.1, -0.01, 20.0, 0.02, -1500.0, -1400.0, 300.0},
                                 {0.005, 0.1, 0.1, -0.01, 20.1, 0.021, -1510.5, -1399.0, 0.0}};
  io::write_sim_log_csv(dir / "log.csv", rows);
  const auto back = io::read_sim_log_csv(dir / "log.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].fyf, -1510.5);
  EXPECT_EQ(back[1].delta, 0.021);
  EXPECT_EQ(read_text(dir / "log.csv").substr(0, 5), "t_s,s");
}

TEST(ReadCsv, ToleratesBlankLinesAndSpaces) {
  std::istringstream in("\n s_m , ux_mps\n0, 10\n\n2.75,11\n");
  const io::CsvTable t = io::read_csv(in, io::kProfileHeader);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], 11.0);
}

TEST(ReadCsv, ErrorsNameFileAndLine) {
  std::istringstream bad_header("s,ux\n0,1\n");
  EXPECT_NE(error_of([&] { io::read_csv(bad_header, io::kProfileHeader, "p.csv"); }).find("header"),
            std::string::npos);

  std::istringstream bad_number("s_m,ux_mps\n0,10\n2.75,fast\n");
  const std::string msg = error_of([&] { io::read_csv(bad_number, io::kProfileHeader, "p.csv"); });
  EXPECT_NE(msg.find("p.csv:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("fast"), std::string::npos);

  std::istringstream short_row("s_m,ux_mps\n0\n");
  EXPECT_NE(error_of([&] { io::read_csv(short_row, io::kProfileHeader, "p.csv"); }).find("p.csv:2"),
            std::string::npos);

  std::istringstream nan_row("s_m,ux_mps\n0,nan\n");
  EXPECT_THROW(io::read_csv(nan_row, io::kProfileHeader), InputError);
}

TEST(ReadCsv, FileErrors) {
  const fs::path dir = scratch("files");
  EXPECT_THROW(io::read_track_csv(dir / "missing.csv"), InputError);
  write_text(dir / "p.csv", "s_m,ux_mps\n0,10\n2.75,0\n");
  EXPECT_THROW(io::read_profile_csv(dir / "p.csv"), InputError);
  write_text(dir / "t.csv", std::string(io::kTrackHeader) + "\n0,0,5,-5,0,0,0\n");
  EXPECT_THROW(io::read_track_csv(dir / "t.csv"), InputError);
}

TEST(PointsCsv, Reads) {
  const fs::path dir = scratch("points");
  write_text(dir / "edge.csv", "east_m,north_m\n0,0\n1,2\n3,4\n");
  const Points p = io::read_points_csv(dir / "edge.csv");
  EXPECT_EQ(p.cols(), 3);
  EXPECT_EQ(p(1, 2), 4.0);
}

TEST(VehicleJson, RoundTripAndDefaults) {
  VehicleParams p;
  p.mu = 0.8;
  p.U_x_max = 50.0;
  const VehicleParams back = io::vehicle_from_json(io::to_json(p));
  EXPECT_EQ(back.mu, 0.8);
  EXPECT_EQ(back.U_x_max, 50.0);
  EXPECT_EQ(back.m, p.m);
  const VehicleParams partial = io::vehicle_from_json(io::Json{{"m", 1500.0}});
  EXPECT_EQ(partial.m, 1500.0);
  EXPECT_EQ(partial.C_f, kCar.C_f);
  for (const char* key : {"m", "I_z", "a", "b", "C_f", "C_r", "mu", "F_engine_max", "g", "U_x_max"}) {
    EXPECT_TRUE(io::to_json(p).contains(key)) << key;
  }
}

TEST(VehicleJson, Rejections) {
  EXPECT_NE(error_of([] { io::vehicle_from_json(io::Json{{"mass", 1500.0}}); }).find("mass"),
            std::string::npos);
  EXPECT_THROW(io::vehicle_from_json(io::Json{{"mu", "high"}}), InputError);
  EXPECT_THROW(io::vehicle_from_json(io::Json{{"mu", -1.0}}), InputError);
  EXPECT_THROW(io::vehicle_from_json(io::Json::array()), InputError);
}

TEST(ConfigJson, RoundTrip) {
  PipelineConfig c;
  c.qp.lambda = 0.5;
  c.qp.ridge = 1e-6;
  c.qp.heading_cost = HeadingCost::kBody;
  c.qp.method = QpMethod::kAdmm;
  c.lookahead = 450.0;
  c.epsilon = 0.05;
  const PipelineConfig back = io::config_from_json(io::to_json(c));
  EXPECT_EQ(back.qp.lambda, 0.5);
  EXPECT_EQ(back.qp.ridge, 1e-6);
  EXPECT_EQ(back.qp.heading_cost, HeadingCost::kBody);
  EXPECT_EQ(back.qp.method, QpMethod::kAdmm);
  EXPECT_EQ(back.lookahead, 450.0);
  EXPECT_EQ(back.epsilon, 0.05);
  EXPECT_EQ(io::to_json(back), io::to_json(c));
  for (const char* key : {"lambda", "qp_tol", "qp_max_iter", "ridge"}) {
    EXPECT_TRUE(io::to_json(c).contains(key)) << key;
  }
}

TEST(ConfigJson, Rejections) {
  EXPECT_THROW(io::config_from_json(io::Json{{"lamda", 1.0}}), InputError);
  EXPECT_THROW(io::config_from_json(io::Json{{"qp_max_iter", 2.5}}), InputError);
  EXPECT_THROW(io::config_from_json(io::Json{{"heading_cost", "yaw"}}), InputError);
  EXPECT_THROW(io::config_from_json(io::Json{{"saturation_clamp", 1.0}}), InputError);
  EXPECT_THROW(io::config_from_json(io::Json{{"epsilon", 0.0}}), InputError);
  const fs::path dir = scratch("config");
  write_text(dir / "c.json", "{\"lambda\": ");
  EXPECT_NE(error_of([&] { io::read_config_json(dir / "c.json"); }).find("c.json"), std::string::npos);
}

TEST(Run, WriteAndScan) {
  const fs::path dir = scratch("run");
  const TrackPath path = eight_corner_track();
  const PipelineResult r = generate_trajectory(path, boundaries_from_path(path), kCar);
  io::write_run(dir, r);
  const io::RunArtifacts run = io::scan_run(dir);
  ASSERT_EQ(run.paths.size(), r.paths.size());
  ASSERT_EQ(run.profiles.size(), r.profiles.size());
  EXPECT_EQ(run.paths.front().filename(), "path_0.csv");
  EXPECT_EQ(io::read_track_csv(run.paths.back()).east, r.path().east);
  EXPECT_EQ(run.records["status"], "converged");
  const auto& iters = run.records["iterations"];
  ASSERT_EQ(iters.size(), r.records.size());
  for (const char* key : {"index", "lap_time_integrated", "curvature_objective", "max_bound_violation"}) {
    EXPECT_TRUE(iters[0].contains(key)) << key;
  }
  EXPECT_FALSE(iters[0].contains("qp_wall_time"));
  ASSERT_TRUE(run.timing.has_value());
  EXPECT_TRUE(run.timing->contains("wall_time"));
  EXPECT_EQ(iters.back()["lap_time_integrated"].get<double>(), r.records.back().lap_time_integrated);
}

TEST(Run, ScanRejectsGaps) {
  const fs::path dir = scratch("gaps");
  EXPECT_THROW(io::scan_run(dir / "nope"), InputError);
  EXPECT_THROW(io::scan_run(dir), InputError);
  const SpeedProfile prof = compute_speed_profile(straight_track(), kCar);
  io::write_track_csv(dir / "path_0.csv", straight_track());
  io::write_profile_csv(dir / "speed_0.csv", prof);
  io::write_track_csv(dir / "path_2.csv", straight_track());
  io::write_profile_csv(dir / "speed_2.csv", prof);
  io::write_json(dir / "records.json", io::Json::object());
  EXPECT_THROW(io::scan_run(dir), InputError);
}
