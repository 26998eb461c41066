#pragma once
// End-to-end runs: simulate a qubit, analyze its maps, refit densities on
// the measured table, and the planted-density recovery loop.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jjtls/config.hpp"
#include "jjtls/dataset.hpp"
#include "jjtls/density_fit.hpp"
#include "jjtls/measured_data.hpp"

namespace jjtls {

struct SimulationRun {
  SegmentPlan plan;
  FreqWindow band;
  Ensemble ensemble;
  std::vector<T1Map> maps;
};

// The ensemble is drawn from seed and the measurement noise from a stream
// derived from it, so (config, seed) fixes the run.
SimulationRun simulate(const SimulationConfig& config, std::uint64_t seed);

RunManifest make_manifest(const SimulationConfig& config, std::uint64_t seed, const SegmentPlan& plan);

struct Analysis {
  std::vector<DefectTrace> traces;
  RunDensity density;
};

Analysis analyze(const std::vector<T1Map>& maps, const SegmentPlan& plan, const TraceAnalysisOptions& options);

std::string analysis_report_json(const RunManifest& manifest, const Analysis& analysis,
                                 const std::optional<TruthComparison>& truth);

// Configuration matching one measured qubit: its geometry, f01, T1, and
// Josephson energy, with the given planted densities. The gate lever scale
// cycles through 0.6, 0.9, 1.2, 1.5 by position on the chip.
SimulationConfig measured_qubit_config(const MeasuredQubit& qubit, const PlantedDensities& densities);

// rho_A = 1.5 per (GHz um^2), no edge or small-junction terms, modest
// surface densities.
PlantedDensities recovery_densities();

struct RoundTripOptions {
  int seeds = 20;
  std::uint64_t first_seed = 1;
  PlantedDensities densities = recovery_densities();
  NoiseModel noise;
  unsigned threads = 0;  // 0: hardware concurrency
  std::vector<MeasuredQubit> qubits;  // empty: the embedded table
};

struct RoundTripSeed {
  std::uint64_t seed = 0;
  std::vector<std::string> qubit_ids;
  std::vector<double> rho_jj;  // per qubit, per GHz
  AreaEdgeFit fit;
};

struct RoundTripResult {
  double planted_area = 0.0;
  std::vector<RoundTripSeed> runs;
  // Seed means; sigma is the combined standard error sqrt(sum sigma_i^2) / N.
  Coefficient area;
  Coefficient open_edge;
  Coefficient covered_edge;
  double seconds = 0.0;

  bool area_recovered() const;    // |mean - planted| <= 2 sigma
  bool edges_consistent() const;  // |mean| <= sigma for both edges
};

RoundTripResult run_roundtrip(const RoundTripOptions& options = {});
std::string roundtrip_report_json(const RoundTripResult& result);

struct QubitDensityRow {
  std::string id;
  double rho_sjj = 0.0;       // rho_s minus the chip reference
  double predicted = 0.0;     // from the area/edge fit
  double volume_density = 0.0;
  double errorbar = 0.0;
};

struct MeasuredFitReport {
  std::vector<AreaEdgePoint> points;
  AreaEdgeFit area_edge;
  AreaEdgeFit area_edge_weighted;  // Poisson errors over a 1 GHz window
  TotalEdgeFit total_edge;
  std::map<int, SurfaceFit> surface;  // by chip, for chips with three or more stray-junction qubits
  std::vector<QubitDensityRow> qubits;
};

MeasuredFitReport fit_measured(std::span<const MeasuredQubit> qubits = measured_qubits());
std::string measured_fit_report_json(const MeasuredFitReport& report);
std::string measured_fit_report_text(const MeasuredFitReport& report);

}  // namespace jjtls
