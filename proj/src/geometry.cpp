#include "jjtls/geometry.hpp"

#include <cmath>
#include <random>
#include <string>

#include "jjtls/error.hpp"

namespace jjtls {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCategory::InvalidArgument, what);
}

// Stray junction modeled as a rectangle: the open edge on one long side,
// the covered edge on the other. Width is the mean edge length.
struct Footprint {
  double width_nm;
  double depth_nm;
};

Footprint footprint(const StrayJunction& s) {
  const double width_um = 0.5 * (s.l_open_um + s.l_covered_um);
  return {width_um * 1e3, s.area_um2 / width_um * 1e3};
}

class Sampler {
 public:
  Sampler(std::uint64_t seed, const EnsembleOptions& opt) : rng_(seed), opt_(opt) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  double sign() { return uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0; }

  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<long>(mean)(rng_);
  }

  // Fills tunneling parameters, dipole and lever arms for a defect whose
  // reference-bias transition energy is energy_ghz.
  void draw_microscopic(Defect& d, double energy_ghz) {
    const double dmax = std::min(opt_.delta_ghz.hi, energy_ghz);
    const double dmin = std::min(opt_.delta_ghz.lo, 0.5 * dmax);
    const double log_delta = uniform(std::log(dmin), std::log(dmax));
    d.tls.delta_ghz = std::exp(log_delta);
    const double eps_mag = std::sqrt(std::max(0.0, energy_ghz * energy_ghz -
                                                       d.tls.delta_ghz * d.tls.delta_ghz));
    d.tls.eps0_ghz = sign() * eps_mag;
    d.tls.dipole_enm = uniform(opt_.dipole_enm.lo, opt_.dipole_enm.hi);
    d.tls.dipole_cos = uniform(-1.0, 1.0);
    d.arms.kappa_piezo =
        sign() * uniform(opt_.kappa_piezo_ghz_per_v.lo, opt_.kappa_piezo_ghz_per_v.hi);
    d.tls.deformation_ghz = d.arms.kappa_piezo / opt_.strain_per_volt;
    if (is_junction_location(d.tls.location)) {
      d.arms.kappa_gate = 0.0;
    } else {
      d.arms.kappa_gate = sign() * opt_.gate_lever_scale *
                          uniform(opt_.kappa_gate_ghz_per_v.lo, opt_.kappa_gate_ghz_per_v.hi);
    }
  }

  bool accepted(const Defect& d) const {
    if (!opt_.floor) return true;
    return defect_peak_rate(d, d.tls.eps0_ghz, opt_.floor->qubit) >= opt_.floor->min_rate_per_us;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  const EnsembleOptions& opt_;
};

}  // namespace

void JunctionGeometry::validate() const {
  require(barrier_thickness_nm > 0.0, "barrier_thickness_nm must be positive");
  require(small_width_nm > 0.0 && small_height_nm > 0.0, "small junction dimensions must be positive");
  require(small_junction_count >= 0, "small junction count must be non-negative");
  if (stray) {
    require(stray->area_um2 > 0.0, "area_um2 must be positive");
    require(stray->l_open_um > 0.0, "l_open_um must be positive");
    require(stray->l_covered_um > 0.0, "l_covered_um must be positive");
    const Footprint fp = footprint(*stray);
    require(fp.depth_nm > 2.0 * barrier_thickness_nm,
            "stray junction too narrow to hold an interior beyond its edge strips");
  }
}

void QubitParams::validate() const {
  require(f01_max_ghz > 0.0, "f01_max_ghz must be positive");
  require(t1_baseline_us > 0.0, "t1_baseline_us must be positive");
  require(field_small_junction_vpm > field_stray_junction_vpm,
          "small-junction field must exceed the stray-junction field");
  require(field_stray_junction_vpm >= 0.0 && field_surface_vpm >= 0.0, "fields must be non-negative");
  require(coupling_gain > 0.0, "coupling_gain must be positive");
}

void PlantedDensities::validate() const {
  for (double v : {rho_area, rho_open_edge, rho_covered_edge, rho_small_junction, rho_surface_open,
                   rho_surface_covered, rho_surface_background}) {
    require(v >= 0.0, "planted densities must be non-negative");
  }
}

RegionMeans region_means(const JunctionGeometry& geom, const PlantedDensities& rho,
                         double window_ghz) {
  RegionMeans m;
  const double d_um = geom.barrier_thickness_nm * 1e-3;
  if (geom.stray) {
    const StrayJunction& s = *geom.stray;
    m.barrier = rho.rho_area * s.area_um2 * window_ghz;
    m.open_edge = rho.rho_open_edge * s.l_open_um * d_um * window_ghz;
    m.covered_edge = rho.rho_covered_edge * s.l_covered_um * d_um * window_ghz;
    m.surface_open = rho.rho_surface_open * s.l_open_um * window_ghz;
    m.surface_covered = rho.rho_surface_covered * s.l_covered_um * window_ghz;
  }
  m.small_junction = rho.rho_small_junction * geom.small_area_um2() * window_ghz;
  m.surface_background = rho.rho_surface_background * window_ghz;
  return m;
}

Ensemble sample_ensemble(const JunctionGeometry& geom, const PlantedDensities& densities,
                         const FreqWindow& band, std::uint64_t seed,
                         const EnsembleOptions& options) {
  require(band.hi_ghz > band.lo_ghz, "frequency window must be non-empty");
  require(band.lo_ghz > 0.0, "frequency window must be at positive frequency");
  geom.validate();
  densities.validate();

  Sampler s(seed, options);
  const RegionMeans means = region_means(geom, densities, band.width());
  const double d_nm = geom.barrier_thickness_nm;
  Ensemble out;

  auto emit = [&](double mean, Location loc, Host host, auto&& place) {
    const long n = s.poisson(mean);
    for (long i = 0; i < n; ++i) {
      Defect d;
      d.id = static_cast<int>(out.size());
      d.host = host;
      d.tls.location = loc;
      d.half_width_mhz = linewidth_from_t2(options.t2_ns);
      const double energy = s.uniform(band.lo_ghz, band.hi_ghz);
      int tries = 0;
      do {
        if (++tries > options.max_rejections) {
          throw Error(ErrorCategory::InvalidArgument,
                      "detectability floor rejects every candidate defect");
        }
        s.draw_microscopic(d, energy);
      } while (!s.accepted(d));
      place(d);
      out.push_back(d);
    }
  };

  if (geom.stray) {
    const StrayJunction& sj = *geom.stray;
    const Footprint fp = footprint(sj);
    emit(means.barrier, Location::BarrierInterior, Host::StrayJunction, [&](Defect& d) {
      d.tls.position = {s.uniform(0.0, fp.width_nm), s.uniform(d_nm, fp.depth_nm - d_nm)};
    });
    emit(means.open_edge, Location::OpenEdge, Host::StrayJunction, [&](Defect& d) {
      d.tls.position = {s.uniform(0.0, sj.l_open_um * 1e3), s.uniform(0.0, d_nm)};
    });
    emit(means.covered_edge, Location::CoveredEdge, Host::StrayJunction, [&](Defect& d) {
      d.tls.position = {s.uniform(0.0, sj.l_covered_um * 1e3), s.uniform(0.0, d_nm)};
    });
  }
  emit(means.small_junction, Location::BarrierInterior, Host::SmallJunction, [&](Defect& d) {
    d.tls.position = {s.uniform(0.0, geom.small_width_nm), s.uniform(0.0, geom.small_height_nm)};
  });
  const Range dist = options.surface_distance_nm;
  if (geom.stray) {
    const StrayJunction& sj = *geom.stray;
    emit(means.surface_open, Location::ElectrodeSurface, Host::Electrode, [&](Defect& d) {
      d.tls.position = {s.uniform(0.0, sj.l_open_um * 1e3), s.uniform(dist.lo, dist.hi)};
    });
    emit(means.surface_covered, Location::ElectrodeSurface, Host::Electrode, [&](Defect& d) {
      d.tls.position = {s.uniform(0.0, sj.l_covered_um * 1e3), s.uniform(dist.lo, dist.hi)};
    });
  }
  emit(means.surface_background, Location::ElectrodeSurface, Host::Electrode, [&](Defect& d) {
    d.tls.position = {s.uniform(0.0, options.background_edge_length_um * 1e3),
                      s.uniform(dist.lo, dist.hi)};
  });
  return out;
}

bool within_region(const JunctionGeometry& geom, const Defect& d) {
  const double u = d.tls.position.u_nm;
  const double v = d.tls.position.v_nm;
  const double dn = geom.barrier_thickness_nm;
  auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
  switch (d.host) {
    case Host::SmallJunction:
      return d.tls.location == Location::BarrierInterior && in(u, 0.0, geom.small_width_nm) &&
             in(v, 0.0, geom.small_height_nm);
    case Host::StrayJunction: {
      if (!geom.stray) return false;
      const Footprint fp = footprint(*geom.stray);
      switch (d.tls.location) {
        case Location::BarrierInterior:
          return in(u, 0.0, fp.width_nm) && in(v, dn, fp.depth_nm - dn);
        case Location::OpenEdge: return in(u, 0.0, geom.stray->l_open_um * 1e3) && in(v, 0.0, dn);
        case Location::CoveredEdge:
          return in(u, 0.0, geom.stray->l_covered_um * 1e3) && in(v, 0.0, dn);
        case Location::ElectrodeSurface: return false;
      }
      return false;
    }
    case Host::Electrode: return d.tls.location == Location::ElectrodeSurface && u >= 0.0 && v > dn;
  }
  return false;
}

JunctionDensity expected_junction_density(const JunctionGeometry& geom,
                                          const PlantedDensities& rho) {
  if (!geom.stray) return {0.0, false};
  const StrayJunction& s = *geom.stray;
  const double d_um = geom.barrier_thickness_nm * 1e-3;
  return {rho.rho_area * s.area_um2 + rho.rho_open_edge * s.l_open_um * d_um +
              rho.rho_covered_edge * s.l_covered_um * d_um,
          true};
}

std::string_view host_name(Host h) {
  switch (h) {
    case Host::StrayJunction: return "stray_junction";
    case Host::SmallJunction: return "small_junction";
    case Host::Electrode: return "electrode";
  }
  return "unknown";
}

Host parse_host(std::string_view name) {
  for (Host h : {Host::StrayJunction, Host::SmallJunction, Host::Electrode}) {
    if (host_name(h) == name) return h;
  }
  throw Error(ErrorCategory::InvalidArgument, "unknown host '" + std::string(name) + "'");
}

double host_field_vpm(const QubitParams& qubit, Host host) {
  switch (host) {
    case Host::StrayJunction: return qubit.field_stray_junction_vpm;
    case Host::SmallJunction: return qubit.field_small_junction_vpm;
    case Host::Electrode: return qubit.field_surface_vpm;
  }
  return 0.0;
}

double defect_peak_rate(const Defect& d, double eps_ghz, const QubitParams& qubit) {
  const double g = qubit.coupling_gain * transverse_coupling(d.tls, eps_ghz, host_field_vpm(qubit, d.host));
  return on_resonance_rate(g, d.half_width_mhz);
}

}  // namespace jjtls
