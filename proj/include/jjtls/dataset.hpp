#pragma once
// On-disk datasets and analysis outputs. Tables are CSV with a header row,
// numbers at full double precision so that parse(write(x)) == x. Every file
// is written to a temporary name and renamed into place.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "jjtls/config.hpp"
#include "jjtls/density_fit.hpp"

namespace jjtls {

inline constexpr std::string_view software_version = "0.1.0";
inline constexpr std::string_view dataset_format = "jjtls-swap-spectroscopy/1";

struct RunManifest {
  std::string format{dataset_format};
  std::string software_version{jjtls::software_version};
  std::string created_utc;
  std::uint64_t seed = 0;
  std::string qubit_id;
  std::string config_crc32;  // of config_text
  std::string config_text;   // canonical rendering; with seed, fixes a noise-free rerun
  SegmentPlan plan;
  std::vector<std::string> map_files;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

// CRC-32 of the canonical config text, as eight hex digits.
std::string config_crc32(std::string_view config_text);

// ISO 8601 UTC. Honours SOURCE_DATE_EPOCH so that repeated runs can produce
// byte-identical manifests.
std::string current_utc_timestamp();

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view text, std::string_view origin = "<manifest>");

// Row-major: one row per (bias point, frequency).
std::string t1map_to_csv(const T1Map& map);
// segment and swept come from the plan, not the file.
T1Map t1map_from_csv(std::string_view text, int segment, Channel swept,
                     std::string_view origin = "<t1map>");

// Opens with a comment line marking the file as ground truth.
std::string ensemble_to_csv(const Ensemble& ensemble);
Ensemble ensemble_from_csv(std::string_view text, std::string_view origin = "<ground truth>");

// One row per trace.
std::string traces_to_csv(const std::vector<DefectTrace>& traces);
// One row per trace point.
std::string trace_points_to_csv(const std::vector<DefectTrace>& traces);
std::vector<DefectTrace> traces_from_csv(std::string_view traces_text, std::string_view points_text,
                                         std::string_view origin = "<traces>");

std::string densities_to_csv(const RunDensity& density);
std::string run_density_to_json(const RunDensity& density);
RunDensity run_density_from_json(std::string_view text, std::string_view origin = "<densities>");

void write_file_atomic(const std::filesystem::path& path, std::string_view content);

namespace dataset_files {
inline constexpr std::string_view manifest = "manifest.json";
inline constexpr std::string_view ground_truth = "ground_truth.csv";
inline constexpr std::string_view traces = "traces.csv";
inline constexpr std::string_view trace_points = "trace_points.csv";
inline constexpr std::string_view densities = "densities.csv";
inline constexpr std::string_view report = "report.json";
}  // namespace dataset_files

// Creates dir if needed. Writes the manifest, one CSV per segment map, and
// the ground-truth ensemble.
void write_dataset(const std::filesystem::path& dir, const RunManifest& manifest,
                   const std::vector<T1Map>& maps, const Ensemble& truth);

struct Dataset {
  RunManifest manifest;
  SimulationConfig config;
  std::vector<T1Map> maps;
};

// Reads the manifest and maps only; the ground truth stays on disk.
// Throws Error(Io) for missing or malformed files.
Dataset read_dataset(const std::filesystem::path& dir);
Ensemble read_ground_truth(const std::filesystem::path& dir);

}  // namespace jjtls
