#include "jjtls/measured_data.hpp"

#include <array>

#include "jjtls/error.hpp"

namespace jjtls {
namespace {

MeasuredQubit row(std::string id, int chip, bool stray, double area, double l_open, double l_cov, double rho_s,
                  double rho_surf, double rho_nc, double f01, double t1) {
  MeasuredQubit q;
  q.id = std::move(id);
  q.chip = chip;
  q.has_stray = stray;
  q.area_um2 = area;
  q.l_open_um = l_open;
  q.l_covered_um = l_cov;
  q.rho_s = rho_s;
  q.rho_surf = rho_surf;
  q.rho_nc = rho_nc;
  q.f01_ghz = f01;
  q.t1_us = t1;
  q.e_josephson_ghz = chip == 1 ? 24.0 : 21.0;
  return q;
}

// id, chip, stray, A_S um^2, l_op um, l_cov um, rho_s, rho_surf, rho_nc, f01 GHz, T1 us
const std::array<MeasuredQubit, 8>& table() {
  static const std::array<MeasuredQubit, 8> rows{
      row("1.1", 1, false, 0.0, 0.0, 0.0, 0.8, 28.8, 7.7, 6.0, 10.0),
      row("1.2", 1, true, 12.1, 7.1, 10.1, 19.6, 10.0, 3.5, 6.0, 10.0),
      row("1.3", 1, true, 12.7, 7.1, 19.1, 19.6, 10.2, 3.0, 6.2, 6.0),
      row("1.4", 1, true, 14.0, 15.7, 11.1, 22.5, 24.7, 9.7, 6.2, 8.0),
      row("2.1", 2, false, 0.0, 0.0, 0.0, 2.3, 67.7, 7.1, 5.9, 17.0),
      row("2.2", 2, true, 13.1, 6.6, 10.8, 22.4, 22.4, 3.3, 5.8, 11.0),
      row("2.3", 2, true, 13.6, 6.6, 18.4, 23.8, 23.8, 3.9, 5.7, 12.0),
      row("2.4", 2, true, 14.3, 17.2, 11.7, 25.4, 64.9, 7.1, 5.9, 8.0),
  };
  return rows;
}

}  // namespace

std::optional<StrayJunction> MeasuredQubit::stray() const {
  if (!has_stray) return std::nullopt;
  return StrayJunction{area_um2, l_open_um, l_covered_um};
}

std::span<const MeasuredQubit> measured_qubits() { return table(); }

const MeasuredQubit& find_qubit(std::span<const MeasuredQubit> qubits, std::string_view id) {
  for (const MeasuredQubit& q : qubits) {
    if (q.id == id) return q;
  }
  throw Error(ErrorCategory::InvalidArgument, "unknown qubit id '" + std::string(id) + "'");
}

const MeasuredQubit& find_reference(std::span<const MeasuredQubit> qubits, int chip) {
  for (const MeasuredQubit& q : qubits) {
    if (q.chip == chip && !q.has_stray) return q;
  }
  throw Error(ErrorCategory::InvalidArgument, "no reference qubit on chip " + std::to_string(chip));
}

const MeasuredQubit& measured_qubit(std::string_view id) { return find_qubit(measured_qubits(), id); }

const MeasuredQubit& measured_reference(int chip) { return find_reference(measured_qubits(), chip); }

}  // namespace jjtls
