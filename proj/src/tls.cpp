#include "jjtls/tls.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "jjtls/error.hpp"

namespace jjtls {

std::string_view location_name(Location loc) {
  switch (loc) {
    case Location::BarrierInterior: return "barrier";
    case Location::OpenEdge: return "open_edge";
    case Location::CoveredEdge: return "covered_edge";
    case Location::ElectrodeSurface: return "surface";
  }
  return "unknown";
}

Location parse_location(std::string_view name) {
  if (name == "barrier") return Location::BarrierInterior;
  if (name == "open_edge") return Location::OpenEdge;
  if (name == "covered_edge") return Location::CoveredEdge;
  if (name == "surface") return Location::ElectrodeSurface;
  throw Error(ErrorCategory::InvalidArgument, "unknown defect location '" + std::string(name) + "'");
}

double asymmetry(const TwoLevelSystem& tls, const LeverArms& arms, const BiasPoint& bias) {
  return tls.eps0_ghz + arms.kappa_gate * bias.v_gate + arms.kappa_piezo * bias.v_piezo;
}

double transition_energy(double delta_ghz, double eps_ghz) {
  if (!(delta_ghz > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "tunnel energy must be positive");
  }
  return std::hypot(delta_ghz, eps_ghz);
}

double transverse_coupling(const TwoLevelSystem& tls, double eps_ghz, double field_rms_vpm) {
  if (field_rms_vpm < 0.0) {
    throw Error(ErrorCategory::InvalidArgument, "field amplitude must be non-negative");
  }
  const double energy = transition_energy(tls.delta_ghz, eps_ghz);
  const double dipole_cm = tls.dipole_enm * phys::elementary_charge * 1e-9;
  const double g_hz = dipole_cm * tls.dipole_cos * field_rms_vpm / phys::planck;
  return g_hz * 1e-6 * (tls.delta_ghz / energy);
}

double transverse_coupling(const TwoLevelSystem& tls, double field_rms_vpm) {
  return transverse_coupling(tls, tls.eps0_ghz, field_rms_vpm);
}

double on_resonance_rate(double coupling_mhz, double half_width_mhz) {
  if (!(half_width_mhz > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "linewidth must be positive");
  }
  return 4.0 * std::numbers::pi * coupling_mhz * coupling_mhz / half_width_mhz;
}

double linewidth_from_t2(double t2_ns) {
  if (!(t2_ns > 0.0)) throw Error(ErrorCategory::InvalidArgument, "T2 must be positive");
  return 1e3 / (2.0 * std::numbers::pi * t2_ns);
}

}  // namespace jjtls
