#include "racing/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <sstream>

namespace racing::io {
namespace {

using Eigen::Index;

std::string trim(std::string text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw InputError(where + ": '" + text + "' is not a finite number");
  }
  return value;
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InputError("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot read " + file.string());
  return in;
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_number(v);
    first = false;
  }
  out << '\n';
}

Vector column(const CsvTable& table, std::size_t c) {
  Vector v(static_cast<Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) v(static_cast<Index>(r)) = table.rows[r][c];
  return v;
}

// Reads the listed keys into their targets and rejects anything else.
template <typename Setter>
void read_keys(const Json& j, const std::string& what, const std::map<std::string, Setter>& keys) {
  if (!j.is_object()) throw InputError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = keys.find(key);
    if (it == keys.end()) throw InputError("unknown " + what + " key '" + key + "'");
    try {
      it->second(value);
    } catch (const Json::exception& e) {
      throw InputError(what + " key '" + key + "': " + e.what());
    }
  }
}

double number(const Json& v) {
  if (!v.is_number()) throw InputError("expected a number, got " + v.dump());
  return v.get<double>();
}

int integer(const Json& v) {
  if (!v.is_number_integer()) throw InputError("expected an integer, got " + v.dump());
  return v.get<int>();
}

bool boolean(const Json& v) {
  if (!v.is_boolean()) throw InputError("expected true or false, got " + v.dump());
  return v.get<bool>();
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buffer, ptr);
}

CsvTable read_csv(std::istream& in, const std::string& expected_header,
                  const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    table.columns = split(trim(line));
    break;
  }
  const std::vector<std::string> expected = split(expected_header);
  if (table.columns != expected) {
    throw InputError(source + ": header must be '" + expected_header + "'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (cells.size() != expected.size()) {
      throw InputError(where + ": expected " + std::to_string(expected.size()) + " fields, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& cell : cells) row.push_back(parse_number(cell, where));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_csv(const fs::path& file, const std::string& expected_header) {
  std::ifstream in = open_in(file);
  return read_csv(in, expected_header, file.string());
}

TrackPath read_track_csv(const fs::path& file) {
  const CsvTable table = read_csv(file, kTrackHeader);
  if (table.rows.size() < 3) throw InputError(file.string() + ": fewer than three stations");
  TrackPath path;
  path.s = column(table, 0);
  path.curvature = column(table, 1);
  path.w_in = column(table, 2);
  path.w_out = column(table, 3);
  path.east = column(table, 4);
  path.north = column(table, 5);
  path.heading = column(table, 6);
  const Index n = path.size();
  const double gap = (path.point(n - 1) - path.point(0)).norm();
  path.closed = gap <= 1e-6 + 1e-9 * path.total_length();
  path.validate();
  return path;
}

void write_track_csv(std::ostream& out, const TrackPath& path) {
  out << kTrackHeader << '\n';
  for (Index k = 0; k < path.size(); ++k) {
    write_row(out, {path.s(k), path.curvature(k), path.w_in(k), path.w_out(k), path.east(k),
                    path.north(k), path.heading(k)});
  }
}

void write_track_csv(const fs::path& file, const TrackPath& path) {
  std::ofstream out = open_out(file);
  write_track_csv(out, path);
}

SpeedProfile read_profile_csv(const fs::path& file) {
  const CsvTable table = read_csv(file, kProfileHeader);
  if (table.rows.size() < 2) throw InputError(file.string() + ": fewer than two stations");
  SpeedProfile profile;
  profile.s = column(table, 0);
  profile.ux = column(table, 1);
  if ((profile.ux.array() <= 0.0).any()) throw InputError(file.string() + ": speeds must be positive");
  profile.lap_time = lap_time(profile.s, profile.ux);
  return profile;
}

void write_profile_csv(std::ostream& out, const SpeedProfile& profile) {
  out << kProfileHeader << '\n';
  for (Index k = 0; k < profile.s.size(); ++k) write_row(out, {profile.s(k), profile.ux(k)});
}

void write_profile_csv(const fs::path& file, const SpeedProfile& profile) {
  std::ofstream out = open_out(file);
  write_profile_csv(out, profile);
}

std::vector<SimLogRow> read_sim_log_csv(const fs::path& file) {
  const CsvTable table = read_csv(file, kSimLogHeader);
  std::vector<SimLogRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) rows.push_back({r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]});
  return rows;
}

void write_sim_log_csv(std::ostream& out, const std::vector<SimLogRow>& rows) {
  out << kSimLogHeader << '\n';
  for (const SimLogRow& r : rows) {
    write_row(out, {r.t, r.s, r.e, r.dpsi, r.ux, r.delta, r.fyf, r.fyr, r.fx});
  }
}

void write_sim_log_csv(const fs::path& file, const std::vector<SimLogRow>& rows) {
  std::ofstream out = open_out(file);
  write_sim_log_csv(out, rows);
}

Points read_points_csv(const fs::path& file) {
  const CsvTable table = read_csv(file, kPointsHeader);
  if (table.rows.size() < 2) throw InputError(file.string() + ": fewer than two points");
  Points points(2, static_cast<Index>(table.rows.size()));
  points.row(0) = column(table, 0).transpose();
  points.row(1) = column(table, 1).transpose();
  return points;
}

VehicleParams vehicle_from_json(const Json& j) {
  VehicleParams p;
  using Setter = std::function<void(const Json&)>;
  const std::map<std::string, Setter> keys = {
      {"m", [&](const Json& v) { p.m = number(v); }},
      {"I_z", [&](const Json& v) { p.I_z = number(v); }},
      {"a", [&](const Json& v) { p.a = number(v); }},
      {"b", [&](const Json& v) { p.b = number(v); }},
      {"C_f", [&](const Json& v) { p.C_f = number(v); }},
      {"C_r", [&](const Json& v) { p.C_r = number(v); }},
      {"mu", [&](const Json& v) { p.mu = number(v); }},
      {"F_engine_max", [&](const Json& v) { p.F_engine_max = number(v); }},
      {"g", [&](const Json& v) { p.g = number(v); }},
      {"U_x_max", [&](const Json& v) { p.U_x_max = number(v); }},
  };
  read_keys(j, "vehicle", keys);
  p.validate();
  return p;
}

Json to_json(const VehicleParams& p) {
  return Json{{"m", p.m},     {"I_z", p.I_z}, {"a", p.a},
              {"b", p.b},     {"C_f", p.C_f}, {"C_r", p.C_r},
              {"mu", p.mu},   {"F_engine_max", p.F_engine_max},
              {"g", p.g},     {"U_x_max", p.U_x_max}};
}

VehicleParams read_vehicle_json(const fs::path& file) {
  try {
    return vehicle_from_json(read_json(file));
  } catch (const InputError& e) {
    throw InputError(file.string() + ": " + e.what());
  }
}

PipelineConfig config_from_json(const Json& j) {
  PipelineConfig c;
  using Setter = std::function<void(const Json&)>;
  auto choice = [](const Json& v, std::initializer_list<const char*> names) {
    if (!v.is_string()) throw InputError("expected a string, got " + v.dump());
    const std::string s = v.get<std::string>();
    int i = 0;
    for (const char* name : names) {
      if (s == name) return i;
      ++i;
    }
    throw InputError("unrecognized value '" + s + "'");
  };
  const std::map<std::string, Setter> keys = {
      {"lambda", [&](const Json& v) { c.qp.lambda = number(v); }},
      {"qp_tol", [&](const Json& v) { c.qp.qp_tol = number(v); }},
      {"qp_max_iter", [&](const Json& v) { c.qp.qp_max_iter = integer(v); }},
      {"ridge", [&](const Json& v) { c.qp.ridge = number(v); }},
      {"saturation_clamp", [&](const Json& v) { c.qp.saturation_clamp = number(v); }},
      {"speed_floor", [&](const Json& v) { c.qp.speed_floor = number(v); }},
      {"discretization",
       [&](const Json& v) {
         c.qp.discretization =
             choice(v, {"zoh", "euler"}) == 0 ? Discretization::kZeroOrderHold : Discretization::kEuler;
       }},
      {"heading_cost",
       [&](const Json& v) {
         c.qp.heading_cost = choice(v, {"course", "body"}) == 0 ? HeadingCost::kCourse : HeadingCost::kBody;
       }},
      {"qp_method",
       [&](const Json& v) {
         c.qp.method = choice(v, {"ipm", "admm"}) == 0 ? QpMethod::kInteriorPoint : QpMethod::kAdmm;
       }},
      {"epsilon", [&](const Json& v) { c.epsilon = number(v); }},
      {"max_iterations", [&](const Json& v) { c.max_iterations = integer(v); }},
      {"ds", [&](const Json& v) { c.ds = number(v); }},
      {"lookahead",
       [&](const Json& v) {
         if (v.is_null()) {
           c.lookahead.reset();
         } else {
           c.lookahead = number(v);
         }
       }},
      {"use_simulated_lap_time", [&](const Json& v) { c.use_simulated_lap_time = boolean(v); }},
      {"simulate", [&](const Json& v) { c.simulate = boolean(v); }},
  };
  read_keys(j, "config", keys);
  if (!(c.qp.saturation_clamp > 0.0 && c.qp.saturation_clamp < 1.0)) {
    throw InputError("saturation_clamp must lie in (0, 1)");
  }
  c.validate();
  return c;
}

Json to_json(const PipelineConfig& c) {
  return Json{
      {"lambda", c.qp.lambda},
      {"qp_tol", c.qp.qp_tol},
      {"qp_max_iter", c.qp.qp_max_iter},
      {"ridge", c.qp.ridge},
      {"saturation_clamp", c.qp.saturation_clamp},
      {"speed_floor", c.qp.speed_floor},
      {"discretization", c.qp.discretization == Discretization::kZeroOrderHold ? "zoh" : "euler"},
      {"heading_cost", to_string(c.qp.heading_cost)},
      {"qp_method", c.qp.method == QpMethod::kInteriorPoint ? "ipm" : "admm"},
      {"epsilon", c.epsilon},
      {"max_iterations", c.max_iterations},
      {"ds", c.ds},
      {"lookahead", optional_number(c.lookahead)},
      {"use_simulated_lap_time", c.use_simulated_lap_time},
      {"simulate", c.simulate},
  };
}

PipelineConfig read_config_json(const fs::path& file) {
  try {
    return config_from_json(read_json(file));
  } catch (const InputError& e) {
    throw InputError(file.string() + ": " + e.what());
  }
}

Json records_json(const PipelineResult& result) {
  Json iterations = Json::array();
  for (const IterationRecord& r : result.records) {
    iterations.push_back({{"index", r.index},
                          {"lap_time_integrated", r.lap_time_integrated},
                          {"lap_time_simulated", optional_number(r.lap_time_simulated)},
                          {"curvature_objective", r.curvature_objective},
                          {"max_bound_violation", r.max_bound_violation},
                          {"qp_iterations", r.qp_iterations},
                          {"kkt_residual", r.kkt_residual},
                          {"stations", r.stations}});
  }
  return Json{{"status", to_string(result.status)},
              {"message", result.message},
              {"iterations", iterations},
              {"clamp_count", result.diagnostics.clamp_count},
              {"warnings", result.diagnostics.warnings}};
}

Json timing_json(const PipelineResult& result) {
  Json iterations = Json::array();
  for (const IterationRecord& r : result.records) {
    iterations.push_back({{"index", r.index}, {"qp_wall_time", r.qp_wall_time}, {"stations", r.stations}});
  }
  return Json{{"wall_time", result.wall_time}, {"iterations", iterations}};
}

void write_run(const fs::path& dir, const PipelineResult& result) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < result.paths.size(); ++i) {
    write_track_csv(dir / ("path_" + std::to_string(i) + ".csv"), result.paths[i]);
    write_profile_csv(dir / ("speed_" + std::to_string(i) + ".csv"), result.profiles[i]);
  }
  write_json(dir / "records.json", records_json(result));
  write_json(dir / "timing.json", timing_json(result));
}

RunArtifacts scan_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  std::map<int, fs::path> paths;
  std::map<int, fs::path> profiles;
  const std::regex pattern(R"((path|speed)_(\d+)\.csv)");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const int i = std::stoi(m[2].str());
    (m[1] == "path" ? paths : profiles)[i] = entry.path();
  }
  RunArtifacts run;
  int expected = 0;
  for (const auto& [i, file] : paths) {
    if (i != expected++) throw InputError(dir.string() + ": path files are not numbered 0, 1, ...");
    const auto it = profiles.find(i);
    if (it == profiles.end()) throw InputError(dir.string() + ": speed_" + std::to_string(i) + ".csv missing");
    run.paths.push_back(file);
    run.profiles.push_back(it->second);
  }
  if (run.paths.empty()) throw InputError(dir.string() + ": no path_<i>.csv files");
  run.records = read_json(dir / "records.json");
  if (fs::exists(dir / "timing.json")) run.timing = read_json(dir / "timing.json");
  return run;
}

Json read_json(const fs::path& file) {
  std::ifstream in = open_in(file);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(file.string() + ": " + e.what());
  }
}

void write_json(const fs::path& file, const Json& j) {
  std::ofstream out = open_out(file);
  out << j.dump(2) << '\n';
}

}  // namespace racing::io
