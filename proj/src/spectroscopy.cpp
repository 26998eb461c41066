#include "jjtls/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "jjtls/error.hpp"
#include "jjtls/kernels.hpp"

namespace jjtls {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCategory::InvalidArgument, what);
}

std::mt19937_64 segment_stream(std::uint64_t seed, std::size_t segment) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(segment), 0x7e1au};
  return std::mt19937_64(seq);
}

}  // namespace

std::string_view channel_name(Channel c) { return c == Channel::Gate ? "gate" : "piezo"; }

Channel parse_channel(std::string_view name) {
  if (name == "gate") return Channel::Gate;
  if (name == "piezo") return Channel::Piezo;
  throw Error(ErrorCategory::InvalidArgument, "unknown channel '" + std::string(name) + "'");
}

std::vector<double> FreqGrid::values() const {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = at(i);
  return v;
}

FreqGrid make_grid(double lo_ghz, double hi_ghz, double step_ghz) {
  require(step_ghz > 0.0, "frequency step must be positive");
  require(hi_ghz > lo_ghz, "frequency window must be non-empty");
  const auto steps = static_cast<std::size_t>(std::llround((hi_ghz - lo_ghz) / step_ghz));
  return {lo_ghz, step_ghz, steps + 1};
}

std::size_t Segment::size() const {
  if (step_v == 0.0) return 0;
  const double n = (stop_v - start_v) / step_v;
  if (n < -1e-9) return 0;
  return static_cast<std::size_t>(std::floor(n + 1e-9)) + 1;
}

std::vector<BiasPoint> Segment::biases() const {
  const std::size_t n = size();
  std::vector<BiasPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = start_v + step_v * static_cast<double>(i);
    if (swept == Channel::Gate) {
      out.push_back({v, fixed_v});
    } else {
      const double g = gate_pattern.empty() ? fixed_v : gate_pattern[i % gate_pattern.size()];
      out.push_back({g, v});
    }
  }
  return out;
}

void SegmentPlan::validate() const {
  require(freqs.count >= 2, "frequency grid needs at least two points");
  require(freqs.step_ghz > 0.0, "frequency step must be positive");
  require(freqs.start_ghz > 0.0, "frequency grid must be at positive frequency");
  require(!segments.empty(), "plan has no segments");
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    const std::string where = "segment " + std::to_string(s) + ": ";
    require(seg.step_v != 0.0, where + "bias step must be non-zero");
    require((seg.stop_v - seg.start_v) * seg.step_v >= 0.0,
            where + "bias step points away from the stop value");
    require(seg.repetitions >= 1, where + "repetitions must be at least 1");
    require(seg.gate_pattern.empty() || seg.swept == Channel::Piezo,
            where + "gate pattern only applies to piezo sweeps");
  }
}

std::size_t SegmentPlan::total_points() const {
  std::size_t n = 0;
  for (const Segment& s : segments) n += s.size();
  return n;
}

SegmentPlan alternating_plan(const FreqGrid& freqs, const AlternatingPlanOptions& opt) {
  require(opt.piezo_segment_v > 0.0 && opt.piezo_total_v > 0.0, "piezo range must be positive");
  require(opt.gate_hi_v > opt.gate_lo_v && opt.gate_step_v > 0.0 && opt.piezo_step_v > 0.0,
          "invalid sweep ranges");
  SegmentPlan plan;
  plan.freqs = freqs;
  const auto n_piezo = static_cast<std::size_t>(std::ceil(opt.piezo_total_v / opt.piezo_segment_v - 1e-9));
  double p = opt.piezo_start_v;
  const double p_end = opt.piezo_start_v + opt.piezo_total_v;
  for (std::size_t k = 0; k <= n_piezo; ++k) {
    plan.segments.push_back({Channel::Gate, opt.gate_lo_v, opt.gate_hi_v, opt.gate_step_v, p, {}, 1});
    if (k == n_piezo) break;
    const double next = std::min(p + opt.piezo_segment_v, p_end);
    plan.segments.push_back({Channel::Piezo, p, next, opt.piezo_step_v, 0.0, {}, 1});
    p = next;
  }
  plan.validate();
  return plan;
}

SegmentPlan gate_toggle_plan(const FreqGrid& freqs, double piezo_lo_v, double piezo_hi_v,
                             double piezo_step_v, std::vector<double> gate_pattern) {
  require(!gate_pattern.empty(), "gate pattern must not be empty");
  SegmentPlan plan;
  plan.freqs = freqs;
  plan.segments.push_back(
      {Channel::Piezo, piezo_lo_v, piezo_hi_v, piezo_step_v, gate_pattern.front(), std::move(gate_pattern), 1});
  plan.validate();
  return plan;
}

FreqGrid default_window(const QubitParams& qubit, double step_ghz) {
  return make_grid(qubit.f01_max_ghz - 1.05, qubit.f01_max_ghz - 0.05, step_ghz);
}

void T1Map::validate() const {
  require(!biases.empty() && !freqs_ghz.empty(), "T1 map is empty");
  require(t1_us.size() == rows() * cols(), "T1 map size does not match its axes");
  require(noise_rel.size() == t1_us.size(), "noise table size does not match the T1 map");
  for (double t : t1_us) require(t > 0.0 && std::isfinite(t), "T1 values must be positive");
  for (double s : noise_rel) require(s >= 0.0 && std::isfinite(s), "noise levels must be non-negative");
}

double defect_frequency(const Defect& d, const BiasPoint& bias) {
  return transition_energy(d.tls.delta_ghz, asymmetry(d.tls, d.arms, bias));
}

double effective_relaxation(double freq_ghz, const Ensemble& ensemble, const BiasPoint& bias,
                            const QubitParams& qubit) {
  double rate = 1.0 / qubit.t1_baseline_us;
  for (const Defect& d : ensemble) {
    const double eps = asymmetry(d.tls, d.arms, bias);
    const double fk = transition_energy(d.tls.delta_ghz, eps);
    const double w = d.half_width_mhz;
    const double det = (freq_ghz - fk) * 1e3;
    rate += defect_peak_rate(d, eps, qubit) * w * w / (det * det + w * w);
  }
  return rate;
}

void relaxation_row(const std::vector<double>& freqs_ghz, const Ensemble& ensemble,
                    const BiasPoint& bias, const QubitParams& qubit, std::vector<double>& rates) {
  // Work in MHz so the kernel sees detuning and width in the same unit.
  std::vector<double> f_mhz(freqs_ghz.size());
  for (std::size_t i = 0; i < f_mhz.size(); ++i) f_mhz[i] = freqs_ghz[i] * 1e3;
  std::vector<double> centre, width, amp;
  centre.reserve(ensemble.size());
  width.reserve(ensemble.size());
  amp.reserve(ensemble.size());
  for (const Defect& d : ensemble) {
    const double eps = asymmetry(d.tls, d.arms, bias);
    centre.push_back(transition_energy(d.tls.delta_ghz, eps) * 1e3);
    width.push_back(d.half_width_mhz);
    amp.push_back(defect_peak_rate(d, eps, qubit));
  }
  rates.assign(freqs_ghz.size(), 1.0 / qubit.t1_baseline_us);
  kernels::lorentzian_accumulate(f_mhz, centre, width, amp, rates);
}

Ensemble EnsembleTimeline::at(std::size_t position) const {
  Ensemble e = base_;
  for (const Jump& j : jumps_) {
    if (position < j.position) continue;
    for (Defect& d : e) {
      if (d.id == j.defect_id) d.tls.eps0_ghz = j.new_eps0_ghz;
    }
  }
  return e;
}

EnsembleTimeline inject_telegraph_jump(const EnsembleTimeline& timeline, int defect_id,
                                       double new_eps0_ghz, std::size_t position) {
  const auto& base = timeline.base();
  const bool known = std::any_of(base.begin(), base.end(),
                                 [defect_id](const Defect& d) { return d.id == defect_id; });
  if (!known) {
    throw Error(ErrorCategory::InvalidArgument, "unknown defect id " + std::to_string(defect_id));
  }
  EnsembleTimeline out = timeline;
  out.jumps_.push_back({defect_id, new_eps0_ghz, position});
  std::stable_sort(out.jumps_.begin(), out.jumps_.end(),
                   [](const auto& a, const auto& b) { return a.position < b.position; });
  return out;
}

void NoiseModel::validate() const {
  require(sigma_rel >= 0.0, "noise sigma must be non-negative");
  if (kind == Kind::Binomial) {
    require(delay_us > 0.0, "readout delay must be positive");
    require(shots >= 1, "shot count must be at least 1");
  }
}

std::string_view noise_kind_name(NoiseModel::Kind k) {
  switch (k) {
    case NoiseModel::Kind::None: return "none";
    case NoiseModel::Kind::LogNormal: return "lognormal";
    case NoiseModel::Kind::Binomial: return "binomial";
  }
  return "none";
}

NoiseModel::Kind parse_noise_kind(std::string_view name) {
  if (name == "none") return NoiseModel::Kind::None;
  if (name == "lognormal") return NoiseModel::Kind::LogNormal;
  if (name == "binomial") return NoiseModel::Kind::Binomial;
  throw Error(ErrorCategory::InvalidArgument, "unknown noise model '" + std::string(name) + "'");
}

std::vector<T1Map> run_swap_spectroscopy(const SegmentPlan& plan, const EnsembleTimeline& timeline,
                                         const QubitParams& qubit, const NoiseModel& noise,
                                         std::uint64_t noise_seed) {
  plan.validate();
  qubit.validate();
  noise.validate();
  const std::vector<double> freqs = plan.freqs.values();
  std::vector<T1Map> maps;
  maps.reserve(plan.segments.size());
  std::size_t position = 0;
  std::vector<double> rates;
  Ensemble current = timeline.base();

  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    const Segment& seg = plan.segments[s];
    std::mt19937_64 rng = segment_stream(noise_seed, s);
    std::normal_distribution<double> gauss(0.0, 1.0);
    T1Map m;
    m.segment = static_cast<int>(s);
    m.swept = seg.swept;
    m.biases = seg.biases();
    m.freqs_ghz = freqs;
    m.t1_us.resize(m.rows() * m.cols());
    m.noise_rel.resize(m.t1_us.size());

    for (std::size_t r = 0; r < m.rows(); ++r, ++position) {
      if (timeline.has_jumps()) current = timeline.at(position);
      relaxation_row(freqs, current, m.biases[r], qubit, rates);
      for (std::size_t c = 0; c < freqs.size(); ++c) {
        const double t1 = 1.0 / rates[c];
        double est = t1;
        double rel = 0.0;
        switch (noise.kind) {
          case NoiseModel::Kind::None: break;
          case NoiseModel::Kind::LogNormal: {
            rel = noise.sigma_rel / std::sqrt(static_cast<double>(seg.repetitions));
            est = t1 * std::exp(rel * gauss(rng));
            break;
          }
          case NoiseModel::Kind::Binomial: {
            const int n = noise.shots * seg.repetitions;
            const double p = std::exp(-noise.delay_us / t1);
            std::binomial_distribution<int> draw(n, p);
            // Keep the survival fraction strictly inside (0, 1) so the
            // inversion stays finite.
            const double k = std::clamp(static_cast<double>(draw(rng)), 0.5, n - 0.5);
            const double p_hat = k / n;
            est = -noise.delay_us / std::log(p_hat);
            rel = std::sqrt((1.0 - p_hat) / (n * p_hat)) / std::abs(std::log(p_hat));
            break;
          }
        }
        m.t1_us[r * freqs.size() + c] = est;
        m.noise_rel[r * freqs.size() + c] = rel;
      }
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

}  // namespace jjtls
