#pragma once
// Measured per-qubit parameters for the two sample chips. Qubits x.1 are
// reference qubits whose stray junction is shorted.

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "jjtls/geometry.hpp"

namespace jjtls {

struct MeasuredQubit {
  std::string id;
  int chip = 0;
  bool has_stray = false;
  double area_um2 = 0.0;
  double l_open_um = 0.0;
  double l_covered_um = 0.0;
  double rho_s = 0.0;     // junction defects, per GHz
  double rho_surf = 0.0;  // electrode-surface defects, per GHz
  double rho_nc = 0.0;    // unclassified, per GHz
  double f01_ghz = 0.0;
  double t1_us = 0.0;
  double e_charge_ghz = 0.2;
  double e_josephson_ghz = 0.0;
  double field_small_junction_vpm = 2300.0;
  double field_stray_junction_vpm = 25.0;

  std::optional<StrayJunction> stray() const;

  friend bool operator==(const MeasuredQubit&, const MeasuredQubit&) = default;
};

namespace measured {
inline constexpr double barrier_thickness_nm = 2.0;
}  // namespace measured

// The embedded table.
std::span<const MeasuredQubit> measured_qubits();
// Throws InvalidArgument for an unknown id.
const MeasuredQubit& measured_qubit(std::string_view id);
const MeasuredQubit& find_qubit(std::span<const MeasuredQubit> qubits, std::string_view id);
// The chip's reference qubit (the one without a stray junction).
const MeasuredQubit& measured_reference(int chip);
const MeasuredQubit& find_reference(std::span<const MeasuredQubit> qubits, int chip);

}  // namespace jjtls
