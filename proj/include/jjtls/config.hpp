#pragma once
// INI configuration for simulations and field-solver runs. Every key name
// carries its unit. Unknown keys are rejected, so a misspelt unit suffix
// fails loudly instead of silently falling back to a default.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jjtls/field_solver.hpp"
#include "jjtls/geometry.hpp"
#include "jjtls/measured_data.hpp"
#include "jjtls/spectroscopy.hpp"
#include "jjtls/traces.hpp"

namespace jjtls {

struct PlanConfig {
  enum class Kind { Alternating, GateToggle };
  Kind kind = Kind::Alternating;
  double freq_step_mhz = 2.0;
  // Default window is [f01 - 1.05, f01 - 0.05] GHz.
  std::optional<double> window_lo_ghz;
  std::optional<double> window_hi_ghz;
  AlternatingPlanOptions alternating;
  double toggle_piezo_lo_v = 0.0;
  double toggle_piezo_hi_v = 120.0;
  double toggle_piezo_step_v = 1.0;
  std::vector<double> gate_pattern_v{0.0, 10.0};
};

struct SimulationConfig {
  QubitParams qubit;
  JunctionGeometry junction;
  PlantedDensities densities;
  EnsembleOptions ensemble;
  double band_margin_ghz = 1.0;  // sampling band extends this far beyond the window
  // Detectability floor: minimum peak added rate in units of the baseline
  // rate 1/T1. Zero disables the floor.
  double min_contrast = 2.0;
  PlanConfig plan;
  NoiseModel noise;
  TraceAnalysisOptions analysis;
};

// Throws Error(Config) naming the section and key on any malformed,
// out-of-range, or unknown entry.
SimulationConfig parse_simulation_config(std::string_view text, std::string_view origin = "<config>");
SimulationConfig load_simulation_config(const std::filesystem::path& path);

// Canonical text form. parse(render(c)) reproduces c exactly.
std::string render_simulation_config(const SimulationConfig& config);

SegmentPlan build_plan(const SimulationConfig& config);
FreqWindow sampling_band(const SimulationConfig& config, const FreqGrid& grid);
// Ensemble options with the qubit's lever scale and the detectability
// floor applied.
EnsembleOptions effective_ensemble_options(const SimulationConfig& config);

struct FieldConfig {
  enum class Kind { Junction, ParallelPlate };
  Kind kind = Kind::Junction;
  JunctionCrossSection junction;
  double plate_gap_nm = 2.0;
  double plate_width_nm = 40.0;
  double plate_voltage_v = 1.0;
  double plate_step_nm = 0.25;
  double tolerance = 1e-10;
  double dc_threshold = 0.01;
  double ac_threshold = 0.01;
  double profile_outside_nm = 60.0;
};

FieldConfig parse_field_config(std::string_view text, std::string_view origin = "<config>");
FieldConfig load_field_config(const std::filesystem::path& path);

// Device file: one section [qubit <id>] per qubit. A reference qubit omits
// the three stray-junction keys; every chip needs exactly one.
std::vector<MeasuredQubit> parse_device_config(std::string_view text, std::string_view origin = "<device>");
std::vector<MeasuredQubit> load_device_config(const std::filesystem::path& path);
std::string render_device_config(std::span<const MeasuredQubit> qubits);

// Reads a whole file; throws Error(Io) if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace jjtls
