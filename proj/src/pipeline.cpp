#include "jjtls/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <map>
#include <mutex>
#include <thread>

#include "jjtls/error.hpp"

namespace jjtls {
namespace {

using nlohmann::json;

// splitmix64 finalizer; keeps related seeds from producing related streams.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return mix(seed ^ mix(stream)); }

json coefficient_json(const Coefficient& c) { return {{"value", c.value}, {"sigma", c.sigma}}; }

json score_json(const ClassScore& s) {
  return {{"correct_traces", s.correct_traces}, {"wrong_traces", s.wrong_traces},
          {"found_defects", s.found_defects},   {"missed_defects", s.missed_defects},
          {"precision", s.precision()},         {"recall", s.recall()}};
}

// Qubit position on its chip, from the id "chip.position".
int chip_position(std::string_view id) {
  const auto dot = id.find('.');
  if (dot == std::string_view::npos || dot + 1 >= id.size()) return 1;
  return id[dot + 1] - '0';
}

}  // namespace

SimulationRun simulate(const SimulationConfig& config, std::uint64_t seed) {
  SimulationRun run;
  run.plan = build_plan(config);
  run.band = sampling_band(config, run.plan.freqs);
  run.ensemble = sample_ensemble(config.junction, config.densities, run.band, seed,
                                 effective_ensemble_options(config));
  const EnsembleTimeline timeline(run.ensemble);
  run.maps = run_swap_spectroscopy(run.plan, timeline, config.qubit, config.noise, derive_seed(seed, 1));
  return run;
}

RunManifest make_manifest(const SimulationConfig& config, std::uint64_t seed, const SegmentPlan& plan) {
  RunManifest m;
  m.created_utc = current_utc_timestamp();
  m.seed = seed;
  m.qubit_id = config.qubit.id;
  m.config_text = render_simulation_config(config);
  m.config_crc32 = config_crc32(m.config_text);
  m.plan = plan;
  return m;
}

Analysis analyze(const std::vector<T1Map>& maps, const SegmentPlan& plan, const TraceAnalysisOptions& options) {
  Analysis a;
  a.traces = analyze_maps(maps, plan, options);
  a.density = estimate_segment_densities(a.traces, plan);
  return a;
}

std::string analysis_report_json(const RunManifest& manifest, const Analysis& analysis,
                                 const std::optional<TruthComparison>& truth) {
  int counts[3] = {0, 0, 0};
  for (const DefectTrace& t : analysis.traces) ++counts[static_cast<int>(t.cls)];
  json j = {{"qubit_id", manifest.qubit_id},
            {"seed", manifest.seed},
            {"config_crc32", manifest.config_crc32},
            {"software_version", manifest.software_version},
            {"traces", {{"total", analysis.traces.size()},
                        {"junction", counts[static_cast<int>(TraceClass::Junction)]},
                        {"surface", counts[static_cast<int>(TraceClass::Surface)]},
                        {"unclassified", counts[static_cast<int>(TraceClass::Unclassified)]}}},
            {"density", json::parse(run_density_to_json(analysis.density))}};
  if (truth) {
    j["truth"] = {{"traces", truth->traces},
                  {"matched_traces", truth->matched_traces},
                  {"unclassified_traces", truth->unclassified_traces},
                  {"classifiable_defects", truth->classifiable_defects},
                  {"junction", score_json(truth->junction)},
                  {"surface", score_json(truth->surface)}};
  }
  return j.dump(2) + "\n";
}

SimulationConfig measured_qubit_config(const MeasuredQubit& q, const PlantedDensities& densities) {
  static constexpr double lever_scales[] = {0.6, 0.9, 1.2, 1.5};
  SimulationConfig c;
  c.qubit.id = q.id;
  c.qubit.f01_max_ghz = q.f01_ghz;
  c.qubit.t1_baseline_us = q.t1_us;
  c.qubit.e_charge_ghz = q.e_charge_ghz;
  c.qubit.e_josephson_ghz = q.e_josephson_ghz;
  c.qubit.field_small_junction_vpm = q.field_small_junction_vpm;
  c.qubit.field_stray_junction_vpm = q.field_stray_junction_vpm;
  const int pos = std::clamp(chip_position(q.id), 1, 4);
  c.qubit.gate_lever_scale = lever_scales[pos - 1];
  c.junction.stray = q.stray();
  c.junction.barrier_thickness_nm = measured::barrier_thickness_nm;
  c.densities = densities;
  return c;
}

PlantedDensities recovery_densities() {
  PlantedDensities d;
  d.rho_area = 1.5;
  d.rho_surface_open = 0.5;
  d.rho_surface_covered = 0.2;
  d.rho_surface_background = 5.0;
  return d;
}

bool RoundTripResult::area_recovered() const {
  return std::abs(area.value - planted_area) <= 2.0 * area.sigma;
}

bool RoundTripResult::edges_consistent() const {
  return std::abs(open_edge.value) <= open_edge.sigma && std::abs(covered_edge.value) <= covered_edge.sigma;
}

RoundTripResult run_roundtrip(const RoundTripOptions& options) {
  if (options.seeds < 1) throw Error(ErrorCategory::InvalidArgument, "round trip needs at least one seed");
  const auto start = std::chrono::steady_clock::now();
  const std::span<const MeasuredQubit> qubits =
      options.qubits.empty() ? measured_qubits() : std::span<const MeasuredQubit>(options.qubits);
  const std::size_t nq = qubits.size();
  const std::size_t ns = static_cast<std::size_t>(options.seeds);

  std::vector<double> rho(ns * nq, 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < ns * nq; task = next++) {
      try {
        const std::size_t s = task / nq;
        const std::size_t qi = task % nq;
        SimulationConfig config = measured_qubit_config(qubits[qi], options.densities);
        config.noise = options.noise;
        const std::uint64_t seed = derive_seed(options.first_seed + s, qi + 2);
        const SimulationRun run = simulate(config, seed);
        rho[task] = analyze(run.maps, run.plan, config.analysis).density.rho_jj;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, ns * nq));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  RoundTripResult out;
  out.planted_area = options.densities.rho_area;
  double sa = 0.0, so = 0.0, sc = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    RoundTripSeed run;
    run.seed = options.first_seed + s;
    std::vector<AreaEdgePoint> points;
    for (std::size_t qi = 0; qi < nq; ++qi) {
      run.qubit_ids.emplace_back(qubits[qi].id);
      run.rho_jj.push_back(rho[s * nq + qi]);
    }
    for (std::size_t qi = 0; qi < nq; ++qi) {
      const MeasuredQubit& q = qubits[qi];
      if (!q.has_stray) continue;
      double ref = 0.0;
      for (std::size_t k = 0; k < nq; ++k) {
        if (qubits[k].chip == q.chip && !qubits[k].has_stray) ref = run.rho_jj[k];
      }
      points.push_back({q.id, *q.stray(), stray_junction_density(run.rho_jj[qi], ref), 0.0});
    }
    run.fit = fit_area_edge(points, measured::barrier_thickness_nm);
    out.area.value += run.fit.area.value;
    out.open_edge.value += run.fit.open_edge.value;
    out.covered_edge.value += run.fit.covered_edge.value;
    sa += run.fit.area.sigma * run.fit.area.sigma;
    so += run.fit.open_edge.sigma * run.fit.open_edge.sigma;
    sc += run.fit.covered_edge.sigma * run.fit.covered_edge.sigma;
    out.runs.push_back(std::move(run));
  }
  const double n = static_cast<double>(ns);
  out.area = {out.area.value / n, std::sqrt(sa) / n};
  out.open_edge = {out.open_edge.value / n, std::sqrt(so) / n};
  out.covered_edge = {out.covered_edge.value / n, std::sqrt(sc) / n};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string roundtrip_report_json(const RoundTripResult& r) {
  json runs = json::array();
  for (const RoundTripSeed& s : r.runs) {
    json rho = json::object();
    for (std::size_t i = 0; i < s.qubit_ids.size(); ++i) rho[s.qubit_ids[i]] = s.rho_jj[i];
    runs.push_back({{"seed", s.seed},
                    {"rho_jj_per_ghz", rho},
                    {"rho_area", coefficient_json(s.fit.area)},
                    {"rho_open_edge", coefficient_json(s.fit.open_edge)},
                    {"rho_covered_edge", coefficient_json(s.fit.covered_edge)}});
  }
  json j = {{"planted_rho_area", r.planted_area},
            {"seeds", r.runs.size()},
            {"rho_area", coefficient_json(r.area)},
            {"rho_open_edge", coefficient_json(r.open_edge)},
            {"rho_covered_edge", coefficient_json(r.covered_edge)},
            {"area_recovered", r.area_recovered()},
            {"edges_consistent", r.edges_consistent()},
            {"seconds", r.seconds},
            {"runs", runs}};
  return j.dump(2) + "\n";
}

MeasuredFitReport fit_measured(std::span<const MeasuredQubit> qubits) {
  MeasuredFitReport r;
  std::map<int, std::vector<SurfacePoint>> by_chip;
  for (const MeasuredQubit& q : qubits) {
    if (!q.has_stray) continue;
    const MeasuredQubit& ref = find_reference(qubits, q.chip);
    AreaEdgePoint p{q.id, *q.stray(), stray_junction_density(q.rho_s, ref.rho_s), 0.0};
    // Poisson counting error of the difference over a 1 GHz window.
    p.sigma = std::sqrt(q.rho_s + ref.rho_s);
    r.points.push_back(p);
    by_chip[q.chip].push_back({q.id, q.l_open_um, q.l_covered_um, q.rho_surf});
  }
  r.area_edge = fit_area_edge(r.points, measured::barrier_thickness_nm);
  r.area_edge_weighted = fit_area_edge(r.points, measured::barrier_thickness_nm, Weighting::Weighted);
  r.total_edge = fit_area_total_edge(r.points, measured::barrier_thickness_nm);
  for (const auto& [chip, points] : by_chip) {
    if (points.size() >= 3) r.surface[chip] = fit_surface_two_pass(points);
  }
  const double d_um = measured::barrier_thickness_nm * 1e-3;
  for (const AreaEdgePoint& p : r.points) {
    const MeasuredQubit& q = find_qubit(qubits, p.id);
    QubitDensityRow row;
    row.id = p.id;
    row.rho_sjj = p.rho_sjj;
    row.predicted = r.area_edge.area.value * p.junction.area_um2 +
                    r.area_edge.open_edge.value * p.junction.l_open_um * d_um +
                    r.area_edge.covered_edge.value * p.junction.l_covered_um * d_um;
    row.volume_density = volume_density(p.rho_sjj, p.junction.area_um2, measured::barrier_thickness_nm);
    row.errorbar = junction_density_errorbar(q.rho_nc, p.rho_sjj, q.rho_surf);
    r.qubits.push_back(row);
  }
  return r;
}

std::string measured_fit_report_json(const MeasuredFitReport& r) {
  auto area_edge = [](const AreaEdgeFit& f) {
    return json{{"rho_area", coefficient_json(f.area)},
                {"rho_open_edge", coefficient_json(f.open_edge)},
                {"rho_covered_edge", coefficient_json(f.covered_edge)},
                {"residuals", f.residuals},
                {"rss", f.rss},
                {"dof", f.dof}};
  };
  auto surface = [](const SurfaceFit& f) {
    return json{{"rho_open_surface", coefficient_json(f.open_edge)},
                {"rho_covered_surface", coefficient_json(f.covered_edge)},
                {"offset_per_ghz", f.offset},
                {"residuals", f.residuals}};
  };
  json qubits = json::array();
  for (const QubitDensityRow& q : r.qubits) {
    qubits.push_back({{"id", q.id},
                      {"rho_sjj_per_ghz", q.rho_sjj},
                      {"predicted_per_ghz", q.predicted},
                      {"volume_density_per_ghz_um3", q.volume_density},
                      {"errorbar_per_ghz", q.errorbar}});
  }
  json surfaces = json::object();
  for (const auto& [chip, f] : r.surface) surfaces["chip" + std::to_string(chip)] = surface(f);
  json j = {{"area_edge", area_edge(r.area_edge)},
            {"area_edge_weighted", area_edge(r.area_edge_weighted)},
            {"total_edge",
             {{"rho_area", coefficient_json(r.total_edge.area)},
              {"rho_total_edge", coefficient_json(r.total_edge.total_edge)},
              {"residuals", r.total_edge.residuals}}},
            {"surface", surfaces},
            {"qubits", qubits}};
  return j.dump(2) + "\n";
}

std::string measured_fit_report_text(const MeasuredFitReport& r) {
  std::string out;
  char buf[256];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
  };
  auto coef = [&](const char* name, const Coefficient& c, const char* unit) {
    line("  %-22s %12.4g +- %-10.3g %s\n", name, c.value, c.sigma, unit);
  };
  out += "area/edge fit, unweighted (d = 2 nm)\n";
  coef("rho_area", r.area_edge.area, "1/(GHz um^2)");
  coef("rho_open_edge", r.area_edge.open_edge, "1/(GHz um^2)");
  coef("rho_covered_edge", r.area_edge.covered_edge, "1/(GHz um^2)");
  out += "area/edge fit, Poisson-weighted\n";
  coef("rho_area", r.area_edge_weighted.area, "1/(GHz um^2)");
  coef("rho_open_edge", r.area_edge_weighted.open_edge, "1/(GHz um^2)");
  coef("rho_covered_edge", r.area_edge_weighted.covered_edge, "1/(GHz um^2)");
  out += "area/total-edge fit\n";
  coef("rho_area", r.total_edge.area, "1/(GHz um^2)");
  coef("rho_total_edge", r.total_edge.total_edge, "1/(GHz um^2)");
  for (const auto& [chip, f] : r.surface) {
    line("surface fit, chip %d\n", chip);
    coef("rho_open_surface", f.open_edge, "1/(GHz um)");
    coef("rho_covered_surface", f.covered_edge, "1/(GHz um)");
    line("  %-22s %12.4g %s\n", "offset", f.offset, "1/GHz");
  }
  out += "per qubit\n";
  line("  %-6s %10s %10s %14s %10s\n", "qubit", "rho_sjj", "predicted", "rho/(A d)", "errorbar");
  for (const QubitDensityRow& q : r.qubits) {
    line("  %-6s %10.2f %10.2f %14.1f %10.2f\n", q.id.c_str(), q.rho_sjj, q.predicted, q.volume_density, q.errorbar);
  }
  return out;
}

}  // namespace jjtls
