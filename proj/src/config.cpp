#include "jjtls/config.hpp"

#include <algorithm>
#include <boost/algorithm/string.hpp>
#include <charconv>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <fstream>
#include <set>
#include <utility>
#include <sstream>

#include "jjtls/error.hpp"

namespace jjtls {
namespace pt = boost::property_tree;

namespace {

class Reader {
 public:
  Reader(std::string_view text, std::string_view origin) : origin_(origin) {
    std::istringstream in{std::string(text)};
    try {
      pt::ini_parser::read_ini(in, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw Error(ErrorCategory::Config,
                  origin_ + ":" + std::to_string(e.line()) + ": " + e.message());
    }
  }

  bool has_section(const std::string& section) const {
    return tree_.get_child_optional(pt::ptree::path_type(section, '\0')).has_value();
  }

  std::vector<std::string> sections() const {
    std::vector<std::string> out;
    for (const auto& [name, sec] : tree_) out.push_back(name);
    return out;
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!sec) return std::nullopt;
    auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return boost::algorithm::trim_copy(*v);
  }

  void num(const std::string& section, const std::string& key, double& out) {
    if (auto v = raw(section, key)) out = to_double(section, key, *v);
  }

  void num(const std::string& section, const std::string& key, std::optional<double>& out) {
    if (auto v = raw(section, key)) out = to_double(section, key, *v);
  }

  void integer(const std::string& section, const std::string& key, int& out) {
    if (auto v = raw(section, key)) {
      try {
        out = boost::lexical_cast<int>(*v);
      } catch (const boost::bad_lexical_cast&) {
        fail(section, key, "expected an integer, got '" + *v + "'");
      }
    }
  }

  void flag(const std::string& section, const std::string& key, bool& out) {
    if (auto v = raw(section, key)) {
      const std::string s = boost::algorithm::to_lower_copy(*v);
      if (s == "true" || s == "yes" || s == "1") {
        out = true;
      } else if (s == "false" || s == "no" || s == "0") {
        out = false;
      } else {
        fail(section, key, "expected true or false, got '" + *v + "'");
      }
    }
  }

  void text(const std::string& section, const std::string& key, std::string& out) {
    if (auto v = raw(section, key)) out = *v;
  }

  void list(const std::string& section, const std::string& key, std::vector<double>& out) {
    auto v = raw(section, key);
    if (!v) return;
    std::vector<std::string> parts;
    boost::algorithm::split(parts, *v, boost::algorithm::is_any_of(","));
    out.clear();
    for (std::string& p : parts) {
      boost::algorithm::trim(p);
      if (!p.empty()) out.push_back(to_double(section, key, p));
    }
    if (out.empty()) fail(section, key, "expected a comma-separated list of numbers");
  }

  // Rejects keys and sections that were never asked for.
  void finish(const std::set<std::string>& sections) {
    for (const auto& [name, sec] : tree_) {
      if (sec.empty() && !sec.data().empty()) {
        throw Error(ErrorCategory::Config, origin_ + ": key '" + name + "' is outside any section");
      }
      if (!sections.count(name)) {
        throw Error(ErrorCategory::Config, origin_ + ": unknown section [" + name + "]");
      }
      for (const auto& [key, value] : sec) {
        if (!used_.count(name + "." + key)) fail(name, key, "unknown key");
      }
    }
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    throw Error(ErrorCategory::Config, origin_ + ": [" + section + "] " + key + ": " + what);
  }

  const std::string& origin() const { return origin_; }

 private:
  double to_double(const std::string& section, const std::string& key, const std::string& v) const {
    try {
      return boost::lexical_cast<double>(v);
    } catch (const boost::bad_lexical_cast&) {
      fail(section, key, "expected a number, got '" + v + "'");
    }
  }

  pt::ptree tree_;
  std::string origin_;
  std::set<std::string> used_;
};

// Range checks that name the key. Domain-level validate() calls run after
// these as a second line.
void positive(const Reader& r, const char* section, const char* key, double v) {
  if (!(v > 0.0)) r.fail(section, key, "must be positive");
}

void non_negative(const Reader& r, const char* section, const char* key, double v) {
  if (!(v >= 0.0)) r.fail(section, key, "must be non-negative");
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s;
}

template <typename F>
void rethrow_as_config(const std::string& origin, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::Config) throw;
    throw Error(ErrorCategory::Config, origin + ": " + e.what());
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SimulationConfig parse_simulation_config(std::string_view text, std::string_view origin) {
  Reader r(text, origin);
  SimulationConfig c;

  QubitParams& q = c.qubit;
  r.text("qubit", "id", q.id);
  r.num("qubit", "f01_max_ghz", q.f01_max_ghz);
  r.num("qubit", "t1_baseline_us", q.t1_baseline_us);
  r.num("qubit", "e_charge_ghz", q.e_charge_ghz);
  r.num("qubit", "e_josephson_ghz", q.e_josephson_ghz);
  r.num("qubit", "field_small_junction_vpm", q.field_small_junction_vpm);
  r.num("qubit", "field_stray_junction_vpm", q.field_stray_junction_vpm);
  r.num("qubit", "field_surface_vpm", q.field_surface_vpm);
  r.num("qubit", "coupling_gain", q.coupling_gain);
  r.num("qubit", "gate_lever_scale", q.gate_lever_scale);
  positive(r, "qubit", "f01_max_ghz", q.f01_max_ghz);
  positive(r, "qubit", "t1_baseline_us", q.t1_baseline_us);
  positive(r, "qubit", "coupling_gain", q.coupling_gain);
  positive(r, "qubit", "gate_lever_scale", q.gate_lever_scale);

  JunctionGeometry& g = c.junction;
  bool stray = true;
  StrayJunction sj{12.1, 7.1, 10.1};
  r.flag("junction", "stray", stray);
  r.num("junction", "area_um2", sj.area_um2);
  r.num("junction", "l_open_um", sj.l_open_um);
  r.num("junction", "l_covered_um", sj.l_covered_um);
  r.num("junction", "barrier_thickness_nm", g.barrier_thickness_nm);
  r.num("junction", "small_width_nm", g.small_width_nm);
  r.num("junction", "small_height_nm", g.small_height_nm);
  r.integer("junction", "small_junction_count", g.small_junction_count);
  if (stray) {
    positive(r, "junction", "area_um2", sj.area_um2);
    positive(r, "junction", "l_open_um", sj.l_open_um);
    positive(r, "junction", "l_covered_um", sj.l_covered_um);
    g.stray = sj;
  } else {
    g.stray.reset();
  }
  positive(r, "junction", "barrier_thickness_nm", g.barrier_thickness_nm);

  PlantedDensities& d = c.densities;
  r.num("densities", "rho_area_per_ghz_um2", d.rho_area);
  r.num("densities", "rho_open_edge_per_ghz_um2", d.rho_open_edge);
  r.num("densities", "rho_covered_edge_per_ghz_um2", d.rho_covered_edge);
  r.num("densities", "rho_small_junction_per_ghz_um2", d.rho_small_junction);
  r.num("densities", "rho_surface_open_per_ghz_um", d.rho_surface_open);
  r.num("densities", "rho_surface_covered_per_ghz_um", d.rho_surface_covered);
  r.num("densities", "rho_surface_background_per_ghz", d.rho_surface_background);
  non_negative(r, "densities", "rho_area_per_ghz_um2", d.rho_area);
  non_negative(r, "densities", "rho_open_edge_per_ghz_um2", d.rho_open_edge);
  non_negative(r, "densities", "rho_covered_edge_per_ghz_um2", d.rho_covered_edge);
  non_negative(r, "densities", "rho_small_junction_per_ghz_um2", d.rho_small_junction);
  non_negative(r, "densities", "rho_surface_open_per_ghz_um", d.rho_surface_open);
  non_negative(r, "densities", "rho_surface_covered_per_ghz_um", d.rho_surface_covered);
  non_negative(r, "densities", "rho_surface_background_per_ghz", d.rho_surface_background);

  EnsembleOptions& e = c.ensemble;
  r.num("ensemble", "delta_min_ghz", e.delta_ghz.lo);
  r.num("ensemble", "delta_max_ghz", e.delta_ghz.hi);
  r.num("ensemble", "dipole_min_enm", e.dipole_enm.lo);
  r.num("ensemble", "dipole_max_enm", e.dipole_enm.hi);
  r.num("ensemble", "kappa_piezo_min_ghz_per_v", e.kappa_piezo_ghz_per_v.lo);
  r.num("ensemble", "kappa_piezo_max_ghz_per_v", e.kappa_piezo_ghz_per_v.hi);
  r.num("ensemble", "kappa_gate_min_ghz_per_v", e.kappa_gate_ghz_per_v.lo);
  r.num("ensemble", "kappa_gate_max_ghz_per_v", e.kappa_gate_ghz_per_v.hi);
  r.num("ensemble", "strain_per_v", e.strain_per_volt);
  r.num("ensemble", "t2_ns", e.t2_ns);
  r.num("ensemble", "surface_distance_min_nm", e.surface_distance_nm.lo);
  r.num("ensemble", "surface_distance_max_nm", e.surface_distance_nm.hi);
  r.num("ensemble", "background_edge_length_um", e.background_edge_length_um);
  r.num("ensemble", "band_margin_ghz", c.band_margin_ghz);
  r.num("ensemble", "min_contrast", c.min_contrast);
  positive(r, "ensemble", "delta_min_ghz", e.delta_ghz.lo);
  if (!(e.delta_ghz.hi > e.delta_ghz.lo)) r.fail("ensemble", "delta_max_ghz", "must exceed delta_min_ghz");
  if (!(e.dipole_enm.hi >= e.dipole_enm.lo)) r.fail("ensemble", "dipole_max_enm", "must not be below dipole_min_enm");
  non_negative(r, "ensemble", "dipole_min_enm", e.dipole_enm.lo);
  positive(r, "ensemble", "t2_ns", e.t2_ns);
  positive(r, "ensemble", "strain_per_v", e.strain_per_volt);
  non_negative(r, "ensemble", "band_margin_ghz", c.band_margin_ghz);
  non_negative(r, "ensemble", "min_contrast", c.min_contrast);

  PlanConfig& p = c.plan;
  std::string kind = p.kind == PlanConfig::Kind::Alternating ? "alternating" : "gate_toggle";
  r.text("plan", "kind", kind);
  if (kind == "alternating") {
    p.kind = PlanConfig::Kind::Alternating;
  } else if (kind == "gate_toggle") {
    p.kind = PlanConfig::Kind::GateToggle;
  } else {
    r.fail("plan", "kind", "expected alternating or gate_toggle, got '" + kind + "'");
  }
  r.num("plan", "freq_step_mhz", p.freq_step_mhz);
  r.num("plan", "window_lo_ghz", p.window_lo_ghz);
  r.num("plan", "window_hi_ghz", p.window_hi_ghz);
  AlternatingPlanOptions& a = p.alternating;
  r.num("plan", "gate_lo_v", a.gate_lo_v);
  r.num("plan", "gate_hi_v", a.gate_hi_v);
  r.num("plan", "gate_step_v", a.gate_step_v);
  r.num("plan", "piezo_start_v", a.piezo_start_v);
  r.num("plan", "piezo_total_v", a.piezo_total_v);
  r.num("plan", "piezo_segment_v", a.piezo_segment_v);
  r.num("plan", "piezo_step_v", a.piezo_step_v);
  r.num("plan", "toggle_piezo_lo_v", p.toggle_piezo_lo_v);
  r.num("plan", "toggle_piezo_hi_v", p.toggle_piezo_hi_v);
  r.num("plan", "toggle_piezo_step_v", p.toggle_piezo_step_v);
  r.list("plan", "gate_pattern_v", p.gate_pattern_v);
  positive(r, "plan", "freq_step_mhz", p.freq_step_mhz);
  positive(r, "plan", "gate_step_v", a.gate_step_v);
  positive(r, "plan", "piezo_step_v", a.piezo_step_v);
  positive(r, "plan", "piezo_segment_v", a.piezo_segment_v);
  positive(r, "plan", "piezo_total_v", a.piezo_total_v);
  positive(r, "plan", "toggle_piezo_step_v", p.toggle_piezo_step_v);
  if (!(a.gate_hi_v > a.gate_lo_v)) r.fail("plan", "gate_hi_v", "must exceed gate_lo_v");
  if (p.window_lo_ghz.has_value() != p.window_hi_ghz.has_value()) {
    r.fail("plan", p.window_lo_ghz ? "window_hi_ghz" : "window_lo_ghz",
           "window_lo_ghz and window_hi_ghz must be given together");
  }
  if (p.window_lo_ghz && !(*p.window_hi_ghz > *p.window_lo_ghz && *p.window_lo_ghz > 0.0)) {
    r.fail("plan", "window_hi_ghz", "window must be a non-empty range of positive frequencies");
  }

  NoiseModel& n = c.noise;
  std::string model(noise_kind_name(n.kind));
  r.text("noise", "model", model);
  try {
    n.kind = parse_noise_kind(model);
  } catch (const Error&) {
    r.fail("noise", "model", "expected none, lognormal, or binomial, got '" + model + "'");
  }
  r.num("noise", "sigma_rel", n.sigma_rel);
  r.num("noise", "delay_us", n.delay_us);
  r.integer("noise", "shots", n.shots);
  non_negative(r, "noise", "sigma_rel", n.sigma_rel);
  positive(r, "noise", "delay_us", n.delay_us);
  if (n.shots < 1) r.fail("noise", "shots", "must be at least 1");

  TraceAnalysisOptions& t = c.analysis;
  t.classify.flat_threshold_mhz = p.freq_step_mhz;
  r.num("analysis", "threshold_sigma", t.threshold_sigma);
  r.num("analysis", "width_guess_mhz", t.dips.width_guess_mhz);
  r.num("analysis", "min_noise", t.dips.min_noise);
  r.num("analysis", "separation_sigma", t.dips.separation_sigma);
  r.num("analysis", "max_jump_mhz", t.link.max_jump_mhz);
  r.num("analysis", "max_residual_mhz", t.link.max_residual_mhz);
  r.integer("analysis", "max_gap", t.link.max_gap);
  r.num("analysis", "join_bias_tol_v", t.link.join_bias_tol_v);
  r.num("analysis", "join_freq_tol_mhz", t.link.join_freq_tol_mhz);
  r.num("analysis", "toggle_merge_mhz", t.link.toggle_merge_mhz);
  int min_points = static_cast<int>(t.link.min_points);
  r.integer("analysis", "min_points", min_points);
  r.num("analysis", "flat_threshold_mhz", t.classify.flat_threshold_mhz);
  r.num("analysis", "min_gate_coverage", t.classify.min_gate_coverage);
  r.num("analysis", "hop_motion_mhz", t.classify.hop_motion_mhz);
  r.integer("analysis", "deblend_passes", t.dips.deblend_passes);
  r.num("analysis", "deblend_min_gap_mhz", t.dips.deblend_min_gap_mhz);
  positive(r, "analysis", "threshold_sigma", t.threshold_sigma);
  positive(r, "analysis", "width_guess_mhz", t.dips.width_guess_mhz);
  positive(r, "analysis", "flat_threshold_mhz", t.classify.flat_threshold_mhz);
  positive(r, "analysis", "hop_motion_mhz", t.classify.hop_motion_mhz);
  if (t.classify.hop_motion_mhz < t.classify.flat_threshold_mhz) {
    r.fail("analysis", "hop_motion_mhz", "must not be below flat_threshold_mhz");
  }
  if (t.dips.deblend_passes < 0) r.fail("analysis", "deblend_passes", "must be non-negative");
  non_negative(r, "analysis", "deblend_min_gap_mhz", t.dips.deblend_min_gap_mhz);
  if (t.link.max_gap < 0) r.fail("analysis", "max_gap", "must be non-negative");
  if (min_points < 1) r.fail("analysis", "min_points", "must be at least 1");
  t.link.min_points = static_cast<std::size_t>(min_points);

  r.finish({"qubit", "junction", "densities", "ensemble", "plan", "noise", "analysis"});

  const std::string o(origin);
  rethrow_as_config(o, [&] {
    q.validate();
    g.validate();
    d.validate();
    n.validate();
    build_plan(c).validate();
  });
  return c;
}

SimulationConfig load_simulation_config(const std::filesystem::path& path) {
  return parse_simulation_config(read_text_file(path), path.string());
}

std::string render_simulation_config(const SimulationConfig& c) {
  std::ostringstream o;
  const QubitParams& q = c.qubit;
  o << "[qubit]\n"
    << "id = " << q.id << "\n"
    << "f01_max_ghz = " << num(q.f01_max_ghz) << "\n"
    << "t1_baseline_us = " << num(q.t1_baseline_us) << "\n"
    << "e_charge_ghz = " << num(q.e_charge_ghz) << "\n"
    << "e_josephson_ghz = " << num(q.e_josephson_ghz) << "\n"
    << "field_small_junction_vpm = " << num(q.field_small_junction_vpm) << "\n"
    << "field_stray_junction_vpm = " << num(q.field_stray_junction_vpm) << "\n"
    << "field_surface_vpm = " << num(q.field_surface_vpm) << "\n"
    << "coupling_gain = " << num(q.coupling_gain) << "\n"
    << "gate_lever_scale = " << num(q.gate_lever_scale) << "\n\n";
  const JunctionGeometry& g = c.junction;
  o << "[junction]\n"
    << "stray = " << (g.stray ? "true" : "false") << "\n";
  if (g.stray) {
    o << "area_um2 = " << num(g.stray->area_um2) << "\n"
      << "l_open_um = " << num(g.stray->l_open_um) << "\n"
      << "l_covered_um = " << num(g.stray->l_covered_um) << "\n";
  }
  o << "barrier_thickness_nm = " << num(g.barrier_thickness_nm) << "\n"
    << "small_width_nm = " << num(g.small_width_nm) << "\n"
    << "small_height_nm = " << num(g.small_height_nm) << "\n"
    << "small_junction_count = " << g.small_junction_count << "\n\n";
  const PlantedDensities& d = c.densities;
  o << "[densities]\n"
    << "rho_area_per_ghz_um2 = " << num(d.rho_area) << "\n"
    << "rho_open_edge_per_ghz_um2 = " << num(d.rho_open_edge) << "\n"
    << "rho_covered_edge_per_ghz_um2 = " << num(d.rho_covered_edge) << "\n"
    << "rho_small_junction_per_ghz_um2 = " << num(d.rho_small_junction) << "\n"
    << "rho_surface_open_per_ghz_um = " << num(d.rho_surface_open) << "\n"
    << "rho_surface_covered_per_ghz_um = " << num(d.rho_surface_covered) << "\n"
    << "rho_surface_background_per_ghz = " << num(d.rho_surface_background) << "\n\n";
  const EnsembleOptions& e = c.ensemble;
  o << "[ensemble]\n"
    << "delta_min_ghz = " << num(e.delta_ghz.lo) << "\n"
    << "delta_max_ghz = " << num(e.delta_ghz.hi) << "\n"
    << "dipole_min_enm = " << num(e.dipole_enm.lo) << "\n"
    << "dipole_max_enm = " << num(e.dipole_enm.hi) << "\n"
    << "kappa_piezo_min_ghz_per_v = " << num(e.kappa_piezo_ghz_per_v.lo) << "\n"
    << "kappa_piezo_max_ghz_per_v = " << num(e.kappa_piezo_ghz_per_v.hi) << "\n"
    << "kappa_gate_min_ghz_per_v = " << num(e.kappa_gate_ghz_per_v.lo) << "\n"
    << "kappa_gate_max_ghz_per_v = " << num(e.kappa_gate_ghz_per_v.hi) << "\n"
    << "strain_per_v = " << num(e.strain_per_volt) << "\n"
    << "t2_ns = " << num(e.t2_ns) << "\n"
    << "surface_distance_min_nm = " << num(e.surface_distance_nm.lo) << "\n"
    << "surface_distance_max_nm = " << num(e.surface_distance_nm.hi) << "\n"
    << "background_edge_length_um = " << num(e.background_edge_length_um) << "\n"
    << "band_margin_ghz = " << num(c.band_margin_ghz) << "\n"
    << "min_contrast = " << num(c.min_contrast) << "\n\n";
  const PlanConfig& p = c.plan;
  const AlternatingPlanOptions& a = p.alternating;
  o << "[plan]\n"
    << "kind = " << (p.kind == PlanConfig::Kind::Alternating ? "alternating" : "gate_toggle") << "\n"
    << "freq_step_mhz = " << num(p.freq_step_mhz) << "\n";
  if (p.window_lo_ghz && p.window_hi_ghz) {
    o << "window_lo_ghz = " << num(*p.window_lo_ghz) << "\n"
      << "window_hi_ghz = " << num(*p.window_hi_ghz) << "\n";
  }
  o << "gate_lo_v = " << num(a.gate_lo_v) << "\n"
    << "gate_hi_v = " << num(a.gate_hi_v) << "\n"
    << "gate_step_v = " << num(a.gate_step_v) << "\n"
    << "piezo_start_v = " << num(a.piezo_start_v) << "\n"
    << "piezo_total_v = " << num(a.piezo_total_v) << "\n"
    << "piezo_segment_v = " << num(a.piezo_segment_v) << "\n"
    << "piezo_step_v = " << num(a.piezo_step_v) << "\n"
    << "toggle_piezo_lo_v = " << num(p.toggle_piezo_lo_v) << "\n"
    << "toggle_piezo_hi_v = " << num(p.toggle_piezo_hi_v) << "\n"
    << "toggle_piezo_step_v = " << num(p.toggle_piezo_step_v) << "\n"
    << "gate_pattern_v = " << join(p.gate_pattern_v) << "\n\n";
  o << "[noise]\n"
    << "model = " << noise_kind_name(c.noise.kind) << "\n"
    << "sigma_rel = " << num(c.noise.sigma_rel) << "\n"
    << "delay_us = " << num(c.noise.delay_us) << "\n"
    << "shots = " << c.noise.shots << "\n\n";
  const TraceAnalysisOptions& t = c.analysis;
  o << "[analysis]\n"
    << "threshold_sigma = " << num(t.threshold_sigma) << "\n"
    << "width_guess_mhz = " << num(t.dips.width_guess_mhz) << "\n"
    << "min_noise = " << num(t.dips.min_noise) << "\n"
    << "separation_sigma = " << num(t.dips.separation_sigma) << "\n"
    << "max_jump_mhz = " << num(t.link.max_jump_mhz) << "\n"
    << "max_residual_mhz = " << num(t.link.max_residual_mhz) << "\n"
    << "max_gap = " << t.link.max_gap << "\n"
    << "join_bias_tol_v = " << num(t.link.join_bias_tol_v) << "\n"
    << "join_freq_tol_mhz = " << num(t.link.join_freq_tol_mhz) << "\n"
    << "toggle_merge_mhz = " << num(t.link.toggle_merge_mhz) << "\n"
    << "min_points = " << t.link.min_points << "\n"
    << "flat_threshold_mhz = " << num(t.classify.flat_threshold_mhz) << "\n"
    << "min_gate_coverage = " << num(t.classify.min_gate_coverage) << "\n"
    << "hop_motion_mhz = " << num(t.classify.hop_motion_mhz) << "\n"
    << "deblend_passes = " << t.dips.deblend_passes << "\n"
    << "deblend_min_gap_mhz = " << num(t.dips.deblend_min_gap_mhz) << "\n";
  return o.str();
}

SegmentPlan build_plan(const SimulationConfig& c) {
  const double step = c.plan.freq_step_mhz * 1e-3;
  const FreqGrid grid = c.plan.window_lo_ghz
                            ? make_grid(*c.plan.window_lo_ghz, *c.plan.window_hi_ghz, step)
                            : default_window(c.qubit, step);
  if (c.plan.kind == PlanConfig::Kind::GateToggle) {
    return gate_toggle_plan(grid, c.plan.toggle_piezo_lo_v, c.plan.toggle_piezo_hi_v,
                            c.plan.toggle_piezo_step_v, c.plan.gate_pattern_v);
  }
  return alternating_plan(grid, c.plan.alternating);
}

FreqWindow sampling_band(const SimulationConfig& c, const FreqGrid& grid) {
  return {std::max(0.05, grid.start_ghz - c.band_margin_ghz), grid.stop_ghz() + c.band_margin_ghz};
}

EnsembleOptions effective_ensemble_options(const SimulationConfig& c) {
  EnsembleOptions e = c.ensemble;
  e.gate_lever_scale = c.qubit.gate_lever_scale;
  if (c.min_contrast > 0.0) {
    e.floor = DetectabilityFloor{c.min_contrast / c.qubit.t1_baseline_us, c.qubit};
  } else {
    e.floor.reset();
  }
  return e;
}

FieldConfig parse_field_config(std::string_view text, std::string_view origin) {
  Reader r(text, origin);
  FieldConfig c;
  JunctionCrossSection& x = c.junction;
  r.num("cross_section", "barrier_thickness_nm", x.barrier_thickness_nm);
  r.num("cross_section", "bottom_thickness_nm", x.bottom_thickness_nm);
  r.num("cross_section", "top_thickness_nm", x.top_thickness_nm);
  r.num("cross_section", "substrate_thickness_nm", x.substrate_thickness_nm);
  r.num("cross_section", "overlap_nm", x.overlap_nm);
  r.num("cross_section", "bottom_extension_nm", x.bottom_extension_nm);
  r.num("cross_section", "top_extension_nm", x.top_extension_nm);
  r.num("cross_section", "side_margin_nm", x.side_margin_nm);
  r.num("cross_section", "gate_height_nm", x.gate_height_nm);
  r.num("cross_section", "eps_substrate", x.eps_substrate);
  r.num("cross_section", "eps_oxide", x.eps_oxide);
  r.num("cross_section", "eps_vacuum", x.eps_vacuum);
  r.num("cross_section", "h_min_nm", x.h_min_nm);
  r.num("cross_section", "h_max_nm", x.h_max_nm);
  r.num("cross_section", "growth", x.growth);
  const std::pair<const char*, double> dims[] = {
      {"barrier_thickness_nm", x.barrier_thickness_nm}, {"bottom_thickness_nm", x.bottom_thickness_nm},
      {"top_thickness_nm", x.top_thickness_nm},         {"substrate_thickness_nm", x.substrate_thickness_nm},
      {"overlap_nm", x.overlap_nm},                     {"bottom_extension_nm", x.bottom_extension_nm},
      {"top_extension_nm", x.top_extension_nm},         {"side_margin_nm", x.side_margin_nm},
      {"gate_height_nm", x.gate_height_nm},             {"eps_substrate", x.eps_substrate},
      {"eps_oxide", x.eps_oxide},                       {"eps_vacuum", x.eps_vacuum},
      {"h_min_nm", x.h_min_nm},                         {"h_max_nm", x.h_max_nm}};
  for (const auto& [key, value] : dims) positive(r, "cross_section", key, value);
  if (x.h_min_nm > 0.5) r.fail("cross_section", "h_min_nm", "must be at most 0.5 nm to resolve the barrier");
  if (x.growth < 0.0) r.fail("cross_section", "growth", "must be non-negative");

  if (r.has_section("parallel_plate")) c.kind = FieldConfig::Kind::ParallelPlate;
  r.num("parallel_plate", "gap_nm", c.plate_gap_nm);
  r.num("parallel_plate", "width_nm", c.plate_width_nm);
  r.num("parallel_plate", "voltage_v", c.plate_voltage_v);
  r.num("parallel_plate", "step_nm", c.plate_step_nm);
  positive(r, "parallel_plate", "gap_nm", c.plate_gap_nm);
  positive(r, "parallel_plate", "width_nm", c.plate_width_nm);
  positive(r, "parallel_plate", "step_nm", c.plate_step_nm);

  r.num("solver", "tolerance", c.tolerance);
  r.num("solver", "dc_threshold", c.dc_threshold);
  r.num("solver", "ac_threshold", c.ac_threshold);
  r.num("solver", "profile_outside_nm", c.profile_outside_nm);
  positive(r, "solver", "tolerance", c.tolerance);
  if (!(c.dc_threshold > 0.0 && c.dc_threshold <= 1.0)) r.fail("solver", "dc_threshold", "must lie in (0, 1]");
  if (!(c.ac_threshold > 0.0 && c.ac_threshold <= 1.0)) r.fail("solver", "ac_threshold", "must lie in (0, 1]");
  positive(r, "solver", "profile_outside_nm", c.profile_outside_nm);

  r.finish({"cross_section", "parallel_plate", "solver"});
  return c;
}

FieldConfig load_field_config(const std::filesystem::path& path) {
  return parse_field_config(read_text_file(path), path.string());
}

std::vector<MeasuredQubit> parse_device_config(std::string_view text, std::string_view origin) {
  Reader r(text, origin);
  static constexpr std::string_view prefix = "qubit ";
  std::vector<MeasuredQubit> out;
  std::set<std::string> known;
  for (const std::string& name : r.sections()) {
    if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size()) continue;
    known.insert(name);
    MeasuredQubit q;
    q.id = boost::algorithm::trim_copy(name.substr(prefix.size()));
    auto required = [&](const char* key, double& v) {
      if (!r.raw(name, key)) r.fail(name, key, "missing");
      r.num(name, key, v);
    };
    if (!r.raw(name, "chip")) r.fail(name, "chip", "missing");
    r.integer(name, "chip", q.chip);
    required("f01_ghz", q.f01_ghz);
    required("t1_us", q.t1_us);
    required("e_charge_ghz", q.e_charge_ghz);
    required("e_josephson_ghz", q.e_josephson_ghz);
    required("field_small_junction_vpm", q.field_small_junction_vpm);
    required("field_stray_junction_vpm", q.field_stray_junction_vpm);
    required("rho_s_per_ghz", q.rho_s);
    required("rho_surf_per_ghz", q.rho_surf);
    required("rho_nc_per_ghz", q.rho_nc);
    const bool a = r.raw(name, "stray_area_um2").has_value();
    const bool o = r.raw(name, "l_open_um").has_value();
    const bool c = r.raw(name, "l_covered_um").has_value();
    if (a != o || a != c) r.fail(name, "stray_area_um2", "give all three stray-junction keys or none");
    q.has_stray = a;
    if (a) {
      r.num(name, "stray_area_um2", q.area_um2);
      r.num(name, "l_open_um", q.l_open_um);
      r.num(name, "l_covered_um", q.l_covered_um);
      positive(r, name.c_str(), "stray_area_um2", q.area_um2);
      positive(r, name.c_str(), "l_open_um", q.l_open_um);
      positive(r, name.c_str(), "l_covered_um", q.l_covered_um);
    }
    positive(r, name.c_str(), "f01_ghz", q.f01_ghz);
    positive(r, name.c_str(), "t1_us", q.t1_us);
    positive(r, name.c_str(), "e_charge_ghz", q.e_charge_ghz);
    positive(r, name.c_str(), "e_josephson_ghz", q.e_josephson_ghz);
    positive(r, name.c_str(), "field_stray_junction_vpm", q.field_stray_junction_vpm);
    if (!(q.field_small_junction_vpm > q.field_stray_junction_vpm)) {
      r.fail(name, "field_small_junction_vpm", "must exceed field_stray_junction_vpm");
    }
    non_negative(r, name.c_str(), "rho_s_per_ghz", q.rho_s);
    non_negative(r, name.c_str(), "rho_surf_per_ghz", q.rho_surf);
    non_negative(r, name.c_str(), "rho_nc_per_ghz", q.rho_nc);
    for (const MeasuredQubit& prev : out) {
      if (prev.id == q.id) r.fail(name, "chip", "duplicate qubit id '" + q.id + "'");
    }
    out.push_back(std::move(q));
  }
  r.finish(known);
  if (out.empty()) throw Error(ErrorCategory::Config, std::string(origin) + ": no [qubit <id>] sections");
  std::set<int> chips;
  for (const MeasuredQubit& q : out) chips.insert(q.chip);
  for (int chip : chips) {
    const auto refs = std::count_if(out.begin(), out.end(),
                                    [&](const MeasuredQubit& q) { return q.chip == chip && !q.has_stray; });
    if (refs != 1) {
      throw Error(ErrorCategory::Config, std::string(origin) + ": chip " + std::to_string(chip) +
                                             " needs exactly one reference qubit, found " + std::to_string(refs));
    }
  }
  return out;
}

std::vector<MeasuredQubit> load_device_config(const std::filesystem::path& path) {
  return parse_device_config(read_text_file(path), path.string());
}

std::string render_device_config(std::span<const MeasuredQubit> qubits) {
  std::ostringstream o;
  bool first = true;
  for (const MeasuredQubit& q : qubits) {
    if (!first) o << "\n";
    first = false;
    o << "[qubit " << q.id << "]\n"
      << "chip = " << q.chip << "\n";
    if (q.has_stray) {
      o << "stray_area_um2 = " << num(q.area_um2) << "\n"
        << "l_open_um = " << num(q.l_open_um) << "\n"
        << "l_covered_um = " << num(q.l_covered_um) << "\n";
    }
    o << "f01_ghz = " << num(q.f01_ghz) << "\n"
      << "t1_us = " << num(q.t1_us) << "\n"
      << "e_charge_ghz = " << num(q.e_charge_ghz) << "\n"
      << "e_josephson_ghz = " << num(q.e_josephson_ghz) << "\n"
      << "field_small_junction_vpm = " << num(q.field_small_junction_vpm) << "\n"
      << "field_stray_junction_vpm = " << num(q.field_stray_junction_vpm) << "\n"
      << "rho_s_per_ghz = " << num(q.rho_s) << "\n"
      << "rho_surf_per_ghz = " << num(q.rho_surf) << "\n"
      << "rho_nc_per_ghz = " << num(q.rho_nc) << "\n";
  }
  return o.str();
}

}  // namespace jjtls
