// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jjtls/field_solver.hpp"
#include "jjtls/pipeline.hpp"
#include "jjtls/tls.hpp"
#include "jjtls/traces.hpp"
#include "synthetic.hpp"

using namespace jjtls;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within_rel(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

Outcome refit_area_edge() {
  const auto t0 = std::chrono::steady_clock::now();
  const MeasuredFitReport r = fit_measured();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const AreaEdgeFit& f = r.area_edge;
  const bool area_ok = f.area.value >= 1.2 && f.area.value <= 1.8;
  const bool edges_ok =
      std::abs(f.open_edge.value) < f.open_edge.sigma && std::abs(f.covered_edge.value) < f.covered_edge.sigma;
  return {area_ok && edges_ok && secs < 1.0 && r.points.size() == 6,
          fmt("%zu qubits, rho_A %.3f +- %.3f, open %.1f +- %.1f, covered %.1f +- %.1f, %.3f s", r.points.size(),
              f.area.value, f.area.sigma, f.open_edge.value, f.open_edge.sigma, f.covered_edge.value,
              f.covered_edge.sigma, secs)};
}

Outcome refit_total_edge() {
  const auto t0 = std::chrono::steady_clock::now();
  const MeasuredFitReport r = fit_measured();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const TotalEdgeFit& f = r.total_edge;
  const bool ok = f.area.value >= 1.4 && f.area.value <= 1.6 && std::abs(f.total_edge.value) < f.total_edge.sigma;
  return {ok && secs < 1.0, fmt("rho_A %.3f +- %.3f, edge %.1f +- %.1f, %.3f s", f.area.value, f.area.sigma,
                                f.total_edge.value, f.total_edge.sigma, secs)};
}

Outcome surface_two_pass() {
  const auto t0 = std::chrono::steady_clock::now();
  const MeasuredFitReport r = fit_measured();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  struct Target {
    int chip;
    double open, covered;
  };
  bool ok = secs < 1.0;
  std::string detail;
  for (const Target& t : {Target{1, 2.34, -0.25}, Target{2, 3.37, 0.62}}) {
    const auto it = r.surface.find(t.chip);
    if (it == r.surface.end()) {
      ok = false;
      detail += fmt("chip %d missing; ", t.chip);
      continue;
    }
    const SurfaceFit& f = it->second;
    ok = ok && within_rel(f.open_edge.value, t.open, 0.10) && within_rel(f.covered_edge.value, t.covered, 0.10);
    detail += fmt("chip %d (%.3f, %.3f) want (%.2f, %.2f); ", t.chip, f.open_edge.value, f.covered_edge.value,
                  t.open, t.covered);
  }
  return {ok, detail + fmt("%.3f s", secs)};
}

Outcome volume_densities() {
  const MeasuredFitReport r = fit_measured();
  bool ok = !r.qubits.empty();
  std::string detail;
  for (const QubitDensityRow& q : r.qubits) {
    ok = ok && q.volume_density >= 690.0 && q.volume_density <= 840.0;
    detail += fmt("%s %.1f ", q.id.c_str(), q.volume_density);
  }
  return {ok, detail + "per (GHz um^3)"};
}

Outcome errorbar() {
  const double got = junction_density_errorbar(3.5, 18.8, 10.0);
  const double want = 3.5 * 18.8 / 28.8;
  const double rel = std::abs(got - want) / want;
  return {rel <= 1e-12, fmt("%.15g vs %.15g, relative difference %.2e", got, want, rel)};
}

Outcome roundtrip() {
  const RoundTripResult r = run_roundtrip();
  const bool ok = r.runs.size() == 20 && r.area_recovered() && r.edges_consistent() && r.seconds < 300.0;
  return {ok, fmt("%zu seeds, rho_A %.4f +- %.4f (planted %.1f), open %.1f +- %.1f, covered %.1f +- %.1f, %.1f s",
                  r.runs.size(), r.area.value, r.area.sigma, r.planted_area, r.open_edge.value, r.open_edge.sigma,
                  r.covered_edge.value, r.covered_edge.sigma, r.seconds)};
}

Outcome screening() {
  const auto t0 = std::chrono::steady_clock::now();
  const JunctionCrossSection xs;
  const ScreeningSummary coarse = screening_summary(xs, 1.0);
  const ScreeningSummary fine = screening_summary(xs, 2.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double d = xs.barrier_thickness_nm;
  auto rel_change = [](double a, double b) { return std::abs(b - a) / std::abs(a); };
  const bool dc_ok = coarse.dc_midplane_ratio < 1e-3 && fine.dc_midplane_ratio < 1e-3;
  const bool ac_ok = coarse.ac_decay_length_nm >= d / 3.0 && coarse.ac_decay_length_nm <= 3.0 * d &&
                     fine.ac_decay_length_nm >= d / 3.0 && fine.ac_decay_length_nm <= 3.0 * d;
  // The mid-plane ratio sits at round-off level, so DC stability is judged
  // on the far-field reference and the screened width.
  const double far_change = rel_change(coarse.dc_far_vpm, fine.dc_far_vpm);
  const double width_change = rel_change(coarse.dc_screened_nm, fine.dc_screened_nm);
  const double decay_change = rel_change(coarse.ac_decay_length_nm, fine.ac_decay_length_nm);
  const bool stable = far_change < 0.02 && width_change < 0.02 && decay_change < 0.02;
  return {dc_ok && ac_ok && stable && secs < 60.0,
          fmt("DC ratio %.1e / %.1e, decay %.3f / %.3f nm (d = %.0f nm), changes: far field %.2f%%, DC width "
              "%.2f%%, decay %.2f%%, %.1f s",
              coarse.dc_midplane_ratio, fine.dc_midplane_ratio, coarse.ac_decay_length_nm, fine.ac_decay_length_nm, d,
              100.0 * far_change, 100.0 * width_change, 100.0 * decay_change, secs)};
}

Outcome classification() {
  const SegmentPlan alternating = alternating_plan(testing::separated_grid());
  const SegmentPlan toggled = gate_toggle_plan(testing::separated_grid(), 0.0, 120.0, 1.0);
  const QubitParams qubit;
  ClassScore junction, surface;
  int unclassified = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const EnsembleTimeline truth(testing::separated_ensemble(seed, 5));
    for (const SegmentPlan* plan : {&alternating, &toggled}) {
      const auto maps = run_swap_spectroscopy(*plan, truth, qubit, testing::noiseless(), seed);
      const TruthComparison c = compare_with_truth(analyze_maps(maps, *plan), truth, *plan);
      for (auto [acc, part] : {std::pair{&junction, &c.junction}, std::pair{&surface, &c.surface}}) {
        acc->correct_traces += part->correct_traces;
        acc->wrong_traces += part->wrong_traces;
        acc->found_defects += part->found_defects;
        acc->missed_defects += part->missed_defects;
      }
      unclassified += c.unclassified_traces;
    }
  }
  const bool class_ok = junction.precision() == 1.0 && junction.recall() == 1.0 && surface.precision() == 1.0 &&
                        surface.recall() == 1.0 && unclassified == 0;

  // Nested segment widths put every narrower segment boundary on a wider
  // one's boundary, so the widths are comparable on one seed.
  SimulationConfig config = measured_qubit_config(measured_qubit("1.2"), recovery_densities());
  std::vector<double> dead;
  std::string widths;
  for (double w : {10.0, 20.0, 40.0, 120.0}) {
    config.plan.alternating.piezo_segment_v = w;
    const SimulationRun run = simulate(config, 1);
    dead.push_back(analyze(run.maps, run.plan, config.analysis).density.dead_fraction);
    widths += fmt("%.0f V: %.4f, ", w, dead.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < dead.size(); ++i) monotone = monotone && dead[i] >= dead[i - 1];
  return {class_ok && monotone,
          fmt("junction P %.3f R %.3f, surface P %.3f R %.3f, %d unclassified over 40 runs; dead fraction ",
              junction.precision(), junction.recall(), surface.precision(), surface.recall(), unclassified) +
              widths + (monotone ? "monotone" : "NOT monotone")};
}

Outcome tunneling_model() {
  bool ok = transition_energy(3.0, 4.0) == 5.0;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> delta(0.0, 10.0), eps(-20.0, 20.0);
  int odd = 0, below = 0;
  for (int i = 0; i < 100000; ++i) {
    const double dl = delta(rng), e = eps(rng);
    const double energy = transition_energy(dl, e);
    if (energy != transition_energy(dl, -e)) ++odd;
    if (energy < dl) ++below;
  }
  ok = ok && odd == 0 && below == 0;

  // Junction defects: frequency along every gate sweep, from the model and
  // from the extracted traces.
  AlternatingPlanOptions o;
  o.piezo_total_v = 40.0;
  const SegmentPlan plan = alternating_plan(testing::separated_grid(), o);
  Ensemble junctions;
  for (int k = 0; k < 5; ++k) {
    junctions.push_back(testing::make_defect(k, 4.65 + 0.3 * k, 0.3 + 0.15 * k, 0.0, (k % 2 ? 1 : -1) * 4e-4,
                                             Host::StrayJunction));
  }
  double model_dev = 0.0, trace_dev = 0.0;
  for (const Defect& d : junctions) {
    for (const Segment& s : plan.segments) {
      if (s.swept != Channel::Gate) continue;
      const auto biases = s.biases();
      const double f0 = defect_frequency(d, biases.front());
      for (const BiasPoint& b : biases) model_dev = std::max(model_dev, std::abs(defect_frequency(d, b) - f0));
    }
  }
  const QubitParams qubit;
  const auto traces =
      analyze_maps(run_swap_spectroscopy(plan, EnsembleTimeline(junctions), qubit, testing::noiseless(), 1), plan);
  int gate_segments_seen = 0;
  for (const DefectTrace& t : traces) {
    for (int s : t.segments) {
      if (plan.segments[static_cast<std::size_t>(s)].swept != Channel::Gate) continue;
      double lo = 1e9, hi = -1e9;
      for (const TracePoint& p : t.points) {
        if (p.segment != s) continue;
        lo = std::min(lo, p.freq_ghz);
        hi = std::max(hi, p.freq_ghz);
      }
      trace_dev = std::max(trace_dev, hi - lo);
      ++gate_segments_seen;
    }
  }
  const double step = plan.freqs.step_ghz;
  ok = ok && model_dev < step && trace_dev < step && gate_segments_seen > 0;
  return {ok, fmt("E(3,4) = %g, %d odd and %d below delta in 1e5 draws, gate-sweep deviation model %.2e GHz, "
                  "traces %.2e GHz over %d segment crossings (step %.3f GHz)",
                  transition_energy(3.0, 4.0), odd, below, model_dev, trace_dev, gate_segments_seen, step)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"measured-table area/edge refit", refit_area_edge},
      {"measured-table total-edge refit", refit_total_edge},
      {"two-pass surface fit", surface_two_pass},
      {"volume density per stray-junction qubit", volume_densities},
      {"unclassified error bar", errorbar},
      {"planted-density round trip", roundtrip},
      {"field screening and refinement stability", screening},
      {"classification and dead-count monotonicity", classification},
      {"tunneling-model properties", tunneling_model},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s %zu %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
