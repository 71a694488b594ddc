#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "racing/lap_simulator.hpp"
#include "racing/pipeline.hpp"
#include "racing/speed_profiler.hpp"
#include "racing/track_geometry.hpp"
#include "racing/vehicle_model.hpp"

namespace racing::io {

namespace fs = std::filesystem;
using Json = nlohmann::json;

inline constexpr const char* kTrackHeader = "s_m,k_1pm,w_in_m,w_out_m,east_m,north_m,psi_r_rad";
inline constexpr const char* kProfileHeader = "s_m,ux_mps";
inline constexpr const char* kSimLogHeader =
    "t_s,s_m,e_m,dpsi_rad,ux_mps,delta_rad,fyf_n,fyr_n,fx_n";
inline constexpr const char* kPointsHeader = "east_m,north_m";

// Shortest decimal text that reads back to the same double. Platform
// independent, so equal inputs give byte-identical files.
std::string format_number(double value);

// Header-checked numeric table. Blank lines are skipped; anything else that
// does not parse is an InputError naming the file and line.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(std::istream& in, const std::string& expected_header,
                  const std::string& source = "<stream>");
CsvTable read_csv(const fs::path& file, const std::string& expected_header);

// A track is closed when its last row repeats the first point.
TrackPath read_track_csv(const fs::path& file);
void write_track_csv(std::ostream& out, const TrackPath& path);
void write_track_csv(const fs::path& file, const TrackPath& path);

SpeedProfile read_profile_csv(const fs::path& file);
void write_profile_csv(std::ostream& out, const SpeedProfile& profile);
void write_profile_csv(const fs::path& file, const SpeedProfile& profile);

std::vector<SimLogRow> read_sim_log_csv(const fs::path& file);
void write_sim_log_csv(std::ostream& out, const std::vector<SimLogRow>& rows);
void write_sim_log_csv(const fs::path& file, const std::vector<SimLogRow>& rows);

// Boundary polyline for ingest, columns east_m,north_m.
Points read_points_csv(const fs::path& file);

// Missing keys keep their defaults; unknown keys are rejected.
VehicleParams vehicle_from_json(const Json& j);
Json to_json(const VehicleParams& params);
VehicleParams read_vehicle_json(const fs::path& file);

PipelineConfig config_from_json(const Json& j);
Json to_json(const PipelineConfig& config);
PipelineConfig read_config_json(const fs::path& file);

// records.json holds only reproducible numbers; wall times go to timing.json
// so that reruns compare byte for byte.
Json records_json(const PipelineResult& result);
Json timing_json(const PipelineResult& result);

// path_<i>.csv, speed_<i>.csv per iteration plus records.json and timing.json.
void write_run(const fs::path& dir, const PipelineResult& result);

struct RunArtifacts {
  std::vector<fs::path> paths;     // path_<i>.csv in iteration order
  std::vector<fs::path> profiles;  // speed_<i>.csv
  Json records;
  std::optional<Json> timing;
};
RunArtifacts scan_run(const fs::path& dir);

Json read_json(const fs::path& file);
void write_json(const fs::path& file, const Json& j);

}  // namespace racing::io
