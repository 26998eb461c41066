#pragma once
// Hand-built ensembles and plans shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>

#include "jjtls/geometry.hpp"
#include "jjtls/spectroscopy.hpp"

namespace jjtls::testing {

inline Defect make_defect(int id, double freq_ghz, double delta_ghz, double kappa_gate,
                          double kappa_piezo, Host host, double dipole_enm = 0.5) {
  Defect d;
  d.id = id;
  d.host = host;
  d.tls.location = host == Host::Electrode ? Location::ElectrodeSurface : Location::BarrierInterior;
  d.tls.delta_ghz = delta_ghz;
  d.tls.eps0_ghz = std::sqrt(freq_ghz * freq_ghz - delta_ghz * delta_ghz);
  d.tls.dipole_enm = dipole_enm;
  d.tls.dipole_cos = 1.0;
  d.arms = {kappa_gate, kappa_piezo};
  d.half_width_mhz = 1.6;
  return d;
}

// Defects on frequency slots 300 MHz apart starting at 4.65 GHz, hosts
// drawn at random. Piezo motion over 120 V stays below 75 MHz and gate
// motion over +-10 V below 50 MHz, so neighbouring traces never meet.
inline Ensemble separated_ensemble(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto sign = [&] { return unit(rng) < 0.5 ? -1.0 : 1.0; };
  Ensemble out;
  for (int k = 0; k < count; ++k) {
    const double f = 4.65 + 0.3 * k;
    const double delta = 0.3 + 0.7 * unit(rng);
    const double kp = sign() * (0.3e-3 + 0.3e-3 * unit(rng));
    const bool surface = unit(rng) < 0.5;
    const double kg = surface ? sign() * (0.002 + 0.003 * unit(rng)) : 0.0;
    out.push_back(make_defect(k, f, delta, kg, kp, surface ? Host::Electrode : Host::StrayJunction));
  }
  return out;
}

// Window wide enough to hold every separated_ensemble trace at all biases.
inline FreqGrid separated_grid() { return make_grid(4.4, 6.2, 0.002); }

inline NoiseModel noiseless() {
  NoiseModel n;
  n.kind = NoiseModel::Kind::None;
  return n;
}

}  // namespace jjtls::testing
