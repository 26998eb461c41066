#pragma once
// Junction and qubit geometry, planted defect densities, and ensemble
// sampling.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jjtls/tls.hpp"

namespace jjtls {

struct FreqWindow {
  double lo_ghz = 0.0;
  double hi_ghz = 0.0;

  double width() const { return hi_ghz - lo_ghz; }
  bool contains(double f) const { return f >= lo_ghz && f <= hi_ghz; }
};

// The large-area junction. Absent on reference qubits, where a bandage
// shorts it.
struct StrayJunction {
  double area_um2 = 0.0;
  double l_open_um = 0.0;
  double l_covered_um = 0.0;

  friend bool operator==(const StrayJunction&, const StrayJunction&) = default;
};

struct JunctionGeometry {
  std::optional<StrayJunction> stray;
  double barrier_thickness_nm = 2.0;
  double small_width_nm = 260.0;
  double small_height_nm = 280.0;
  int small_junction_count = 2;

  bool has_stray() const { return stray.has_value(); }
  double small_area_um2() const {
    return small_junction_count * small_width_nm * small_height_nm * 1e-6;
  }
  // Throws InvalidArgument if any dimension is non-positive.
  void validate() const;
};

struct QubitParams {
  std::string id;
  double f01_max_ghz = 6.0;
  double e_charge_ghz = 0.2;
  double e_josephson_ghz = 24.0;
  double t1_baseline_us = 10.0;
  double field_small_junction_vpm = 2300.0;
  double field_stray_junction_vpm = 25.0;
  // Not a tabulated quantity: the field seen by electrode-surface defects.
  double field_surface_vpm = 25.0;
  // Dimensionless scale applied to every g before converting to a rate.
  double coupling_gain = 1.0;
  double gate_lever_scale = 1.0;

  void validate() const;
};

// Planted densities. Area-like terms per (GHz um^2); the edge strips have
// area l * d. Surface terms per (GHz um) along each edge, plus a per-GHz
// background from the rest of the electrode film edges.
struct PlantedDensities {
  double rho_area = 0.0;
  double rho_open_edge = 0.0;
  double rho_covered_edge = 0.0;
  double rho_small_junction = 0.0;
  double rho_surface_open = 0.0;
  double rho_surface_covered = 0.0;
  double rho_surface_background = 0.0;

  void validate() const;
};

enum class Host { StrayJunction, SmallJunction, Electrode };

std::string_view host_name(Host h);
Host parse_host(std::string_view name);

struct Defect {
  int id = 0;
  TwoLevelSystem tls;
  LeverArms arms;
  Host host = Host::StrayJunction;
  double half_width_mhz = 1.6;

  friend bool operator==(const Defect&, const Defect&) = default;
};

using Ensemble = std::vector<Defect>;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Rejects candidates whose on-resonance relaxation contribution at the
// reference bias falls below min_rate_per_us, so that the planted density
// is the density of observable defects.
struct DetectabilityFloor {
  double min_rate_per_us = 0.0;
  QubitParams qubit;
};

struct EnsembleOptions {
  Range delta_ghz{0.1, 20.0};        // log-uniform, clipped at E
  Range dipole_enm{0.1, 1.0};        // uniform
  Range kappa_piezo_ghz_per_v{1e-3, 4e-3};   // magnitude, random sign
  Range kappa_gate_ghz_per_v{0.015, 0.045};  // surface defects, times gate_lever_scale
  double gate_lever_scale = 1.0;
  double strain_per_volt = 1e-6;
  double t2_ns = 100.0;
  Range surface_distance_nm{10.0, 100.0};
  double background_edge_length_um = 100.0;
  std::optional<DetectabilityFloor> floor;
  int max_rejections = 100000;
};

// Poisson mean of the defect count in one location class, given a sampling
// band of width window_ghz.
struct RegionMeans {
  double barrier = 0.0;
  double open_edge = 0.0;
  double covered_edge = 0.0;
  double small_junction = 0.0;
  double surface_open = 0.0;
  double surface_covered = 0.0;
  double surface_background = 0.0;
};

RegionMeans region_means(const JunctionGeometry& geom, const PlantedDensities& densities,
                         double window_ghz);

// Draws an ensemble. Transition energies at the reference bias are uniform
// over the band; counts per region are Poisson. Deterministic in seed.
Ensemble sample_ensemble(const JunctionGeometry& geom, const PlantedDensities& densities,
                         const FreqWindow& band, std::uint64_t seed,
                         const EnsembleOptions& options = {});

// True if the defect's position lies inside the region its location and
// host declare.
bool within_region(const JunctionGeometry& geom, const Defect& d);

struct JunctionDensity {
  double per_ghz = 0.0;
  bool has_stray = false;
};

// rho_A * A_S + rho_o * l_op * d + rho_c * l_cov * d, d in um.
// Reference geometry yields zero with has_stray = false.
JunctionDensity expected_junction_density(const JunctionGeometry& geom,
                                          const PlantedDensities& densities);

// Field amplitude seen by a defect in the given host.
double host_field_vpm(const QubitParams& qubit, Host host);

// Peak added relaxation rate of a defect at a given asymmetry.
double defect_peak_rate(const Defect& d, double eps_ghz, const QubitParams& qubit);

}  // namespace jjtls
