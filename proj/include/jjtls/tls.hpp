#pragma once
// Standard tunneling model for a single two-level defect.
//
// Energies are carried in GHz*h throughout (numerically equal to the
// transition frequency in GHz). SI units appear only where the dipole
// meets the qubit's electric field.

#include <string_view>

namespace jjtls {

namespace phys {
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double planck = 6.62607015e-34;              // J s
}  // namespace phys

enum class Location { BarrierInterior, OpenEdge, CoveredEdge, ElectrodeSurface };

std::string_view location_name(Location loc);
Location parse_location(std::string_view name);

// Junction-hosted locations sit inside the grounded electrode pair and see
// no DC gate field.
constexpr bool is_junction_location(Location loc) {
  return loc != Location::ElectrodeSurface;
}

struct Position2D {
  double u_nm = 0.0;
  double v_nm = 0.0;

  friend bool operator==(const Position2D&, const Position2D&) = default;
};

struct TwoLevelSystem {
  double delta_ghz = 1.0;      // tunnel energy
  double eps0_ghz = 0.0;       // intrinsic asymmetry offset
  double dipole_enm = 0.0;     // |p| in e*nm
  double dipole_cos = 1.0;     // projection onto the local field axis, [-1, 1]
  double deformation_ghz = 0.0;  // deformation potential per unit strain
  Location location = Location::BarrierInterior;
  Position2D position;

  friend bool operator==(const TwoLevelSystem&, const TwoLevelSystem&) = default;
};

struct BiasPoint {
  double v_gate = 0.0;
  double v_piezo = 0.0;

  friend bool operator==(const BiasPoint&, const BiasPoint&) = default;
};

// Linearized bias channels: d(eps)/dV for gate and piezo, GHz*h per volt.
struct LeverArms {
  double kappa_gate = 0.0;
  double kappa_piezo = 0.0;

  friend bool operator==(const LeverArms&, const LeverArms&) = default;
};

// eps = eps0 + kappa_gate * v_gate + kappa_piezo * v_piezo
double asymmetry(const TwoLevelSystem& tls, const LeverArms& arms, const BiasPoint& bias);

// E = sqrt(delta^2 + eps^2). Throws InvalidArgument unless delta > 0.
double transition_energy(double delta_ghz, double eps_ghz);

// Transverse TLS-qubit coupling in MHz:
//   g = (p * cos(theta) * F / h) * (delta / E)
// field_rms in V/m. Sign follows the dipole projection.
double transverse_coupling(const TwoLevelSystem& tls, double eps_ghz, double field_rms_vpm);

// Same, evaluated at the intrinsic offset (reference bias).
double transverse_coupling(const TwoLevelSystem& tls, double field_rms_vpm);

// Peak added qubit relaxation rate (1/us) from a TLS with coupling g (MHz)
// and Lorentzian half-width w (MHz): 4*pi*g^2 / w, i.e. 2 g^2 / Gamma_2 in
// angular units with Gamma_2 = 2*pi*w.
double on_resonance_rate(double coupling_mhz, double half_width_mhz);

// Lorentzian half-width (MHz) for a TLS coherence time T2 (ns).
double linewidth_from_t2(double t2_ns);

}  // namespace jjtls
