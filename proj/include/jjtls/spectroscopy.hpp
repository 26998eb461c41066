#pragma once
// Segmented swap-spectroscopy simulation: T1 versus qubit frequency while
// the defect bias is stepped through alternating gate and piezo sweeps.

#include <cstdint>
#include <string_view>
#include <vector>

#include "jjtls/geometry.hpp"

namespace jjtls {

enum class Channel { Gate, Piezo };

std::string_view channel_name(Channel c);
Channel parse_channel(std::string_view name);

struct FreqGrid {
  double start_ghz = 0.0;
  double step_ghz = 0.002;
  std::size_t count = 0;

  double at(std::size_t i) const { return start_ghz + step_ghz * static_cast<double>(i); }
  double stop_ghz() const { return at(count - 1); }
  double width_ghz() const { return step_ghz * static_cast<double>(count - 1); }
  FreqWindow window() const { return {start_ghz, stop_ghz()}; }
  std::vector<double> values() const;

  friend bool operator==(const FreqGrid&, const FreqGrid&) = default;
};

// Uniform grid covering [lo, hi] with the given step (hi is rounded to the
// nearest whole number of steps).
FreqGrid make_grid(double lo_ghz, double hi_ghz, double step_ghz);

struct Segment {
  Channel swept = Channel::Piezo;
  double start_v = 0.0;
  double stop_v = 0.0;
  double step_v = 1.0;
  double fixed_v = 0.0;  // the other channel
  // Piezo segments only: when non-empty, the gate cycles through these
  // values point by point instead of staying at fixed_v.
  std::vector<double> gate_pattern;
  int repetitions = 1;

  std::size_t size() const;
  std::vector<BiasPoint> biases() const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SegmentPlan {
  FreqGrid freqs;
  std::vector<Segment> segments;

  // Throws InvalidArgument on empty grids, zero steps, or steps whose sign
  // disagrees with the sweep direction.
  void validate() const;
  std::size_t total_points() const;

  friend bool operator==(const SegmentPlan&, const SegmentPlan&) = default;
};

struct AlternatingPlanOptions {
  double gate_lo_v = -10.0;
  double gate_hi_v = 10.0;
  double gate_step_v = 0.25;
  double piezo_start_v = 0.0;
  double piezo_total_v = 120.0;
  double piezo_segment_v = 20.0;
  double piezo_step_v = 1.0;
};

// Gate segment, piezo segment, gate segment, ... starting and ending with a
// gate sweep. Piezo segments run at zero gate; gate segments sit at the
// piezo voltage where the neighbouring piezo segments meet.
SegmentPlan alternating_plan(const FreqGrid& freqs, const AlternatingPlanOptions& opt = {});

// One piezo sweep with the gate toggled between the pattern values at every
// point.
SegmentPlan gate_toggle_plan(const FreqGrid& freqs, double piezo_lo_v, double piezo_hi_v,
                             double piezo_step_v, std::vector<double> gate_pattern = {0.0, 10.0});

// Default measurement window below the qubit's maximum frequency.
FreqGrid default_window(const QubitParams& qubit, double step_ghz = 0.002);

struct T1Map {
  int segment = 0;
  Channel swept = Channel::Piezo;
  std::vector<BiasPoint> biases;
  std::vector<double> freqs_ghz;
  std::vector<double> t1_us;     // row-major: bias index, then frequency index
  std::vector<double> noise_rel;  // per-point relative standard error of T1

  std::size_t rows() const { return biases.size(); }
  std::size_t cols() const { return freqs_ghz.size(); }
  double t1(std::size_t row, std::size_t col) const { return t1_us[row * cols() + col]; }
  double noise(std::size_t row, std::size_t col) const { return noise_rel[row * cols() + col]; }
  // Throws InvalidArgument if dimensions disagree or any T1 is not positive.
  void validate() const;

  friend bool operator==(const T1Map&, const T1Map&) = default;
};

// Defect resonance frequency at a bias point.
double defect_frequency(const Defect& d, const BiasPoint& bias);

// Qubit relaxation rate (1/us) at freq_ghz.
double effective_relaxation(double freq_ghz, const Ensemble& ensemble, const BiasPoint& bias,
                            const QubitParams& qubit);

// Rates at every frequency of a row, through the vectorized Lorentzian kernel.
void relaxation_row(const std::vector<double>& freqs_ghz, const Ensemble& ensemble,
                    const BiasPoint& bias, const QubitParams& qubit, std::vector<double>& rates);

// Ensemble with telegraph jumps. Positions count bias points across the
// whole plan in execution order.
class EnsembleTimeline {
 public:
  EnsembleTimeline() = default;
  explicit EnsembleTimeline(Ensemble base) : base_(std::move(base)) {}

  const Ensemble& base() const { return base_; }
  // Ensemble in effect at a global sweep position.
  Ensemble at(std::size_t position) const;
  bool has_jumps() const { return !jumps_.empty(); }

  struct Jump {
    int defect_id = 0;
    double new_eps0_ghz = 0.0;
    std::size_t position = 0;
  };
  const std::vector<Jump>& jumps() const { return jumps_; }

 private:
  friend EnsembleTimeline inject_telegraph_jump(const EnsembleTimeline&, int, double, std::size_t);
  Ensemble base_;
  std::vector<Jump> jumps_;
};

// From the given position onward the defect's intrinsic asymmetry is
// new_eps0. Throws InvalidArgument if no defect has that id.
EnsembleTimeline inject_telegraph_jump(const EnsembleTimeline& timeline, int defect_id,
                                       double new_eps0_ghz, std::size_t position);

struct NoiseModel {
  enum class Kind { None, LogNormal, Binomial };
  Kind kind = Kind::LogNormal;
  double sigma_rel = 0.10;  // LogNormal
  double delay_us = 10.0;   // Binomial: fixed wait before readout
  int shots = 1000;         // Binomial, per repetition

  void validate() const;
};

std::string_view noise_kind_name(NoiseModel::Kind k);
NoiseModel::Kind parse_noise_kind(std::string_view name);

// One T1Map per segment, in plan order. Each segment draws from its own
// stream derived from noise_seed, so results do not depend on evaluation
// order.
std::vector<T1Map> run_swap_spectroscopy(const SegmentPlan& plan, const EnsembleTimeline& timeline,
                                         const QubitParams& qubit, const NoiseModel& noise,
                                         std::uint64_t noise_seed);

}  // namespace jjtls
