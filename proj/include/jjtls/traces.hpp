#pragma once
// Linking dips into per-defect traces across bias points and segments, and
// sorting traces into junction, surface, and unclassified defects.

#include <string_view>
#include <vector>

#include "jjtls/dips.hpp"

namespace jjtls {

enum class TraceClass { Junction, Surface, Unclassified };

std::string_view trace_class_name(TraceClass c);
TraceClass parse_trace_class(std::string_view name);

struct TracePoint {
  int segment = 0;
  std::size_t bias_index = 0;
  BiasPoint bias;
  double freq_ghz = 0.0;
  double depth_per_us = 0.0;
  double width_mhz = 0.0;

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

// f = sqrt(delta^2 + (eps0 + kappa_gate*Vg + kappa_piezo*Vp)^2), GHz and V.
struct HyperbolaFit {
  double delta_ghz = 0.0;
  double eps0_ghz = 0.0;
  double kappa_gate = 0.0;
  double kappa_piezo = 0.0;
  double rms_mhz = 0.0;
  bool gate_free = false;
  bool piezo_free = false;
  bool ok = false;

  friend bool operator==(const HyperbolaFit&, const HyperbolaFit&) = default;
};

double hyperbola_frequency(const HyperbolaFit& fit, const BiasPoint& bias);

struct DefectTrace {
  int id = 0;
  std::vector<TracePoint> points;  // in execution order
  TraceClass cls = TraceClass::Unclassified;
  HyperbolaFit fit;
  std::vector<int> segments;  // sorted, unique
  double gate_motion_mhz = 0.0;  // largest frequency motion seen under gate sweeps

  friend bool operator==(const DefectTrace&, const DefectTrace&) = default;
};

struct LinkOptions {
  double max_jump_mhz = 25.0;       // from a single-point tracklet
  double max_residual_mhz = 8.0;    // from an extrapolated prediction
  int max_gap = 2;                  // missed rows before a tracklet closes
  double join_bias_tol_v = 2.0;     // across segment boundaries
  double join_freq_tol_mhz = 10.0;
  double toggle_merge_mhz = 3.0;    // gate-toggled sweeps: branches closer than this are one trace
  std::size_t min_points = 3;
};

struct ClassifyOptions {
  double flat_threshold_mhz = 2.0;  // one frequency step over the gate range
  double min_gate_coverage = 0.5;   // flat evidence needs this share of a gate sweep
  double hop_motion_mhz = 10.0;     // a segment moving this much cannot share a trace with a flat one
};

// Links detections (one list per segment, plan order) into traces. Each
// detection ends up in at most one trace; traces shorter than min_points
// are dropped. Classification and hyperbola fits are not filled in.
std::vector<DefectTrace> link_traces(const std::vector<std::vector<DipDetection>>& detections,
                                     const SegmentPlan& plan, const LinkOptions& options = {});

// Frequency motion attributable to the gate and the resulting class. Gate
// segments vote moving or flat weighted by their point counts; ties go to
// surface. A flat stretch too short for a vote still beats no evidence.
TraceClass classify_trace(DefectTrace& trace, const SegmentPlan& plan,
                          const ClassifyOptions& options = {});

// Splits a trace that is clearly moving in some gate-resolved segments and
// flat in others, which happens when linking hops between two defects at a
// crossing. Segments without gate information stay with the preceding
// piece. Returns the trace unchanged otherwise.
std::vector<DefectTrace> split_at_hops(const DefectTrace& trace, const SegmentPlan& plan,
                                       const ClassifyOptions& options = {});

// Joint fit of every point; junction traces are fitted with kappa_gate = 0.
HyperbolaFit fit_hyperbola(const DefectTrace& trace);

struct TraceAnalysisOptions {
  double threshold_sigma = 4.5;
  DipOptions dips;
  LinkOptions link;
  ClassifyOptions classify;
};

// detect_dips on every map, link, split at hops, classify, and fit.
// Unclassified traces keep only their piezo-sweep points.
std::vector<DefectTrace> analyze_maps(const std::vector<T1Map>& maps, const SegmentPlan& plan,
                                      const TraceAnalysisOptions& options = {});

// Precision counts traces, recall counts defects.
struct ClassScore {
  int correct_traces = 0;
  int wrong_traces = 0;
  int found_defects = 0;
  int missed_defects = 0;
  double precision() const;
  double recall() const;
};

struct TruthComparison {
  ClassScore junction;
  ClassScore surface;
  int traces = 0;
  int matched_traces = 0;
  int unclassified_traces = 0;
  int classifiable_defects = 0;
};

// Matches traces to ground-truth defects by frequency agreement at the
// trace's bias points. A defect is classifiable if it lies in the window at
// two or more gate values of some gate-swept segment or gate-toggled piezo
// segment.
TruthComparison compare_with_truth(const std::vector<DefectTrace>& traces,
                                   const EnsembleTimeline& truth, const SegmentPlan& plan,
                                   double tolerance_mhz = 5.0);

}  // namespace jjtls
