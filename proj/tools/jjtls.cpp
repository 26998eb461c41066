// jjtls: simulate swap-spectroscopy datasets, analyze them, refit the
// measured-qubit table, solve junction field maps, and run the
// planted-density recovery loop.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "jjtls/config.hpp"
#include "jjtls/dataset.hpp"
#include "jjtls/error.hpp"
#include "jjtls/field_solver.hpp"
#include "jjtls/pipeline.hpp"

namespace fs = std::filesystem;
using namespace jjtls;
using nlohmann::json;

namespace {

struct SimulateArgs {
  std::string config;
  std::string qubit;
  std::uint64_t seed = 1;
  std::string out;
};

struct AnalyzeArgs {
  std::string dataset;
  std::string out;
  bool compare_truth = false;
};

struct FitArgs {
  std::string json_path;
};

struct FieldArgs {
  std::string config;
  std::string out;
  double refine = 1.0;
};

struct RoundTripArgs {
  int seeds = 20;
  std::uint64_t first_seed = 1;
  unsigned threads = 0;
  std::string json_path;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create " + dir.string() + ": " + ec.message());
}

int run_simulate(const SimulateArgs& a, std::span<const MeasuredQubit> device) {
  SimulationConfig config;
  if (!a.config.empty()) {
    config = load_simulation_config(a.config);
  } else {
    config = measured_qubit_config(find_qubit(device, a.qubit), recovery_densities());
  }
  const SimulationRun run = simulate(config, a.seed);
  const RunManifest manifest = make_manifest(config, a.seed, run.plan);
  write_dataset(a.out, manifest, run.maps, run.ensemble);
  std::printf("wrote %s: %zu segments, %zu bias points, %zu frequencies, %zu defects in %.3f-%.3f GHz\n",
              a.out.c_str(), run.maps.size(), run.plan.total_points(), run.plan.freqs.count,
              run.ensemble.size(), run.band.lo_ghz, run.band.hi_ghz);
  return 0;
}

int run_analyze(const AnalyzeArgs& a) {
  const Dataset ds = read_dataset(a.dataset);
  const Analysis result = analyze(ds.maps, ds.manifest.plan, ds.config.analysis);
  std::optional<TruthComparison> truth;
  if (a.compare_truth) {
    const EnsembleTimeline timeline(read_ground_truth(a.dataset));
    truth = compare_with_truth(result.traces, timeline, ds.manifest.plan);
  }
  const fs::path out = a.out.empty() ? fs::path(a.dataset) : fs::path(a.out);
  ensure_dir(out);
  write_file_atomic(out / dataset_files::traces, traces_to_csv(result.traces));
  write_file_atomic(out / dataset_files::trace_points, trace_points_to_csv(result.traces));
  write_file_atomic(out / dataset_files::densities, densities_to_csv(result.density));
  write_file_atomic(out / dataset_files::report, analysis_report_json(ds.manifest, result, truth));

  int counts[3] = {0, 0, 0};
  for (const DefectTrace& t : result.traces) ++counts[static_cast<int>(t.cls)];
  std::printf("qubit %s seed %llu: %zu traces (junction %d, surface %d, unclassified %d)\n",
              ds.manifest.qubit_id.c_str(), static_cast<unsigned long long>(ds.manifest.seed),
              result.traces.size(), counts[0], counts[1], counts[2]);
  std::printf("  %-8s %-6s %10s %10s %10s\n", "segment", "swept", "rho_jj", "rho_surf", "rho_nc");
  for (const SegmentDensity& d : result.density.segments) {
    std::printf("  %-8d %-6s %10.2f %10.2f %10.2f\n", d.segment, std::string(channel_name(d.swept)).c_str(),
                d.rho_jj, d.rho_surf, d.rho_nc);
  }
  std::printf("  %-15s %10.2f %10.2f %10.2f  per GHz\n", "mean", result.density.rho_jj, result.density.rho_surf,
              result.density.rho_nc);
  std::printf("  dead fraction %.3f\n", result.density.dead_fraction);
  if (truth) {
    auto show = [](const char* name, const ClassScore& s) {
      std::printf("  %-9s precision %.3f (%d/%d traces)  recall %.3f (%d/%d defects)\n", name, s.precision(),
                  s.correct_traces, s.correct_traces + s.wrong_traces, s.recall(), s.found_defects,
                  s.found_defects + s.missed_defects);
    };
    std::printf("ground truth: %d of %d traces matched, %d classifiable defects\n", truth->matched_traces,
                truth->traces, truth->classifiable_defects);
    show("junction", truth->junction);
    show("surface", truth->surface);
  }
  return 0;
}

int run_fit(const FitArgs& a, std::span<const MeasuredQubit> device) {
  const MeasuredFitReport report = fit_measured(device);
  std::fputs(measured_fit_report_text(report).c_str(), stdout);
  if (!a.json_path.empty()) write_file_atomic(a.json_path, measured_fit_report_json(report));
  return 0;
}

std::string field_map_csv(const FieldMap& m) {
  std::string out = "x_nm,y_nm,potential_v,ex_vpm,ey_vpm,magnitude_vpm,conductor\n";
  char buf[256];
  for (std::size_t j = 0; j < m.ny(); ++j) {
    for (std::size_t i = 0; i < m.nx(); ++i) {
      const std::size_t k = m.index(i, j);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", m.x_nm[i], m.y_nm[j],
                    m.potential_v[k], m.ex_vpm[k], m.ey_vpm[k], m.magnitude_vpm[k], m.owner[k]);
      out += buf;
    }
  }
  return out;
}

std::string profile_csv(const std::vector<ProfilePoint>& p) {
  std::string out = "distance_nm,field_vpm\n";
  char buf[96];
  for (const ProfilePoint& q : p) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", q.distance_nm, q.field_vpm);
    out += buf;
  }
  return out;
}

json summary_json(const ScreeningSummary& s) {
  return {{"refine", s.refine},
          {"nodes", s.nodes},
          {"dc_midplane_vpm", s.dc_midplane_vpm},
          {"dc_far_vpm", s.dc_far_vpm},
          {"dc_midplane_ratio", s.dc_midplane_ratio},
          {"dc_screened_nm", s.dc_screened_nm},
          {"ac_barrier_vpm", s.ac_barrier_vpm},
          {"ac_decay_length_nm", s.ac_decay_length_nm},
          {"ac_coupled_nm", s.ac_coupled_nm},
          {"ac_at_10d_ratio", s.ac_at_10d_ratio},
          {"dc_iterations", s.dc_iterations},
          {"ac_iterations", s.ac_iterations}};
}

int run_fieldmap(const FieldArgs& a) {
  const FieldConfig config = load_field_config(a.config);
  const fs::path out(a.out);
  ensure_dir(out);
  if (config.kind == FieldConfig::Kind::ParallelPlate) {
    const ParallelPlateCheck c = parallel_plate_check(config.plate_gap_nm, config.plate_width_nm,
                                                      config.plate_voltage_v, config.plate_step_nm, config.tolerance);
    std::printf("parallel plate: analytic %.6e V/m, numeric %.6e V/m, max relative error %.2e (%d iterations)\n",
                c.analytic_vpm, c.numeric_vpm, c.max_relative_error, c.iterations);
    json j = {{"analytic_vpm", c.analytic_vpm},
              {"numeric_vpm", c.numeric_vpm},
              {"max_relative_error", c.max_relative_error},
              {"iterations", c.iterations}};
    write_file_atomic(out / "parallel_plate.json", j.dump(2) + "\n");
    return 0;
  }

  const JunctionCrossSection& xs = config.junction;
  const ScreeningStudy base = screening_study(xs, 1.0, config.tolerance, config.dc_threshold, config.ac_threshold);
  const double inside = xs.overlap_nm;
  write_file_atomic(out / "dc_field.csv", field_map_csv(base.dc));
  write_file_atomic(out / "ac_field.csv", field_map_csv(base.ac.map));
  write_file_atomic(out / "dc_profile.csv",
                    profile_csv(open_edge_profile(base.dc, xs, inside, config.profile_outside_nm)));
  write_file_atomic(out / "ac_profile.csv",
                    profile_csv(open_edge_profile(base.ac.map, xs, inside, config.profile_outside_nm)));

  const ScreeningSummary& s = base.summary;
  std::printf("junction cross-section, d = %g nm, %zu nodes\n", xs.barrier_thickness_nm, s.nodes);
  std::printf("  DC gate field at barrier mid-plane   %.3e V/m (%.2e of far field %.3e V/m)\n", s.dc_midplane_vpm,
              s.dc_midplane_ratio, s.dc_far_vpm);
  std::printf("  DC screened width outside open edge  %.3f nm (below %g of far field)\n", s.dc_screened_nm,
              config.dc_threshold);
  std::printf("  AC field at barrier centre           %.4e V/m per V\n", s.ac_barrier_vpm);
  std::printf("  AC 1/e decay length                  %.3f nm (%.2f d)\n", s.ac_decay_length_nm,
              s.ac_decay_length_nm / xs.barrier_thickness_nm);
  std::printf("  AC coupled width outside open edge   %.3f nm (above %g of barrier field)\n", s.ac_coupled_nm,
              config.ac_threshold);
  std::printf("  AC field at 10 d outside             %.2e of barrier field\n", s.ac_at_10d_ratio);

  json report = {{"levels", json::array({summary_json(s)})}};
  if (a.refine > 1.0) {
    std::printf("convergence\n  %-7s %9s %12s %12s %12s %12s\n", "refine", "nodes", "dc_ratio", "decay_nm",
                "dc_width_nm", "ac_width_nm");
    auto row = [](const ScreeningSummary& r) {
      std::printf("  %-7g %9zu %12.4e %12.5f %12.4f %12.4f\n", r.refine, r.nodes, r.dc_midplane_ratio,
                  r.ac_decay_length_nm, r.dc_screened_nm, r.ac_coupled_nm);
    };
    row(s);
    ScreeningSummary prev = s;
    for (double r = 2.0; r <= a.refine + 1e-9; r *= 2.0) {
      const ScreeningSummary next =
          screening_study(xs, r, config.tolerance, config.dc_threshold, config.ac_threshold).summary;
      row(next);
      std::printf("          change: decay length %+.2f %%, AC width %+.2f %%\n",
                  100.0 * (next.ac_decay_length_nm / prev.ac_decay_length_nm - 1.0),
                  100.0 * (next.ac_coupled_nm / prev.ac_coupled_nm - 1.0));
      report["levels"].push_back(summary_json(next));
      prev = next;
    }
  }
  write_file_atomic(out / "fieldmap.json", report.dump(2) + "\n");
  return 0;
}

int run_roundtrip_cmd(const RoundTripArgs& a, std::span<const MeasuredQubit> device) {
  RoundTripOptions o;
  o.qubits.assign(device.begin(), device.end());
  o.seeds = a.seeds;
  o.first_seed = a.first_seed;
  o.threads = a.threads;
  const RoundTripResult r = run_roundtrip(o);
  std::printf("planted rho_area %.3f per (GHz um^2), %zu seeds, %.1f s\n", r.planted_area, r.runs.size(), r.seconds);
  std::printf("  rho_area          %10.4f +- %.4f  %s\n", r.area.value, r.area.sigma,
              r.area_recovered() ? "recovered" : "NOT recovered");
  std::printf("  rho_open_edge     %10.1f +- %.1f\n", r.open_edge.value, r.open_edge.sigma);
  std::printf("  rho_covered_edge  %10.1f +- %.1f  %s\n", r.covered_edge.value, r.covered_edge.sigma,
              r.edges_consistent() ? "edges consistent with zero" : "edges NOT consistent with zero");
  if (!a.json_path.empty()) write_file_atomic(a.json_path, roundtrip_report_json(r));
  return r.area_recovered() && r.edges_consistent() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Defect spectroscopy simulation and analysis for stray Josephson junctions"};
  app.require_subcommand(1);
  std::string chips_path;
  app.add_option("--chips", chips_path, "Device file with per-qubit parameters (default: built-in table)")
      ->check(CLI::ExistingFile);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a swap-spectroscopy dataset");
  auto* cfg_opt = simulate_cmd->add_option("--config", sim.config, "Simulation config (INI)")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--qubit", sim.qubit, "Measured qubit id (e.g. 1.2) with default planted densities")
      ->excludes(cfg_opt);
  simulate_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate_cmd->add_option("--out", sim.out, "Dataset directory")->required();

  AnalyzeArgs ana;
  auto* analyze_cmd = app.add_subcommand("analyze", "Extract traces and densities from a dataset");
  analyze_cmd->add_option("dataset", ana.dataset, "Dataset directory")->required();
  analyze_cmd->add_option("--out", ana.out, "Output directory (default: the dataset directory)");
  analyze_cmd->add_flag("--compare-truth", ana.compare_truth, "Score against the stored ground truth");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-paper", "Refit the measured-qubit table");
  fit_cmd->add_option("--json", fit.json_path, "Also write the report as JSON");

  FieldArgs field;
  auto* field_cmd = app.add_subcommand("fieldmap", "Solve DC and AC field maps of a junction cross-section");
  field_cmd->add_option("--config", field.config, "Cross-section config (INI)")->required()->check(CLI::ExistingFile);
  field_cmd->add_option("--out", field.out, "Output directory")->required();
  field_cmd->add_option("--refine", field.refine, "Largest grid refinement for the convergence table")
      ->check(CLI::Range(1.0, 16.0));

  RoundTripArgs rt;
  auto* rt_cmd = app.add_subcommand("roundtrip", "Recover a planted area density over many seeds");
  rt_cmd->add_option("--seeds", rt.seeds, "Number of seeds")->capture_default_str()->check(CLI::PositiveNumber);
  rt_cmd->add_option("--first-seed", rt.first_seed, "First seed")->capture_default_str();
  rt_cmd->add_option("--threads", rt.threads, "Worker threads (0: all cores)");
  rt_cmd->add_option("--json", rt.json_path, "Also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::InvalidArgument);
  }

  try {
    std::vector<MeasuredQubit> loaded;
    if (!chips_path.empty()) loaded = load_device_config(chips_path);
    const std::span<const MeasuredQubit> device =
        chips_path.empty() ? measured_qubits() : std::span<const MeasuredQubit>(loaded);
    if (*simulate_cmd) {
      if (sim.config.empty() && sim.qubit.empty()) {
        throw Error(ErrorCategory::InvalidArgument, "simulate needs --config or --qubit");
      }
      return run_simulate(sim, device);
    }
    if (*analyze_cmd) return run_analyze(ana);
    if (*fit_cmd) return run_fit(fit, device);
    if (*field_cmd) return run_fieldmap(field);
    if (*rt_cmd) return run_roundtrip_cmd(rt, device);
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", std::string(category_name(e.category())).c_str(), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 1;
  }
  return 0;
}
