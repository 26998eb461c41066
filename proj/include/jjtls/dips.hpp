#pragma once
// Dip extraction from T1 maps: each defect resonance shows up as a
// Lorentzian peak in the relaxation rate 1/T1 along the frequency axis.

#include <cstddef>
#include <vector>

#include "jjtls/spectroscopy.hpp"

namespace jjtls {

struct DipDetection {
  int segment = 0;
  std::size_t bias_index = 0;
  double center_ghz = 0.0;
  double depth_per_us = 0.0;  // added relaxation rate at the centre
  double width_mhz = 0.0;     // Lorentzian half-width
  double residual = 0.0;      // RMS log-rate residual of the local fit
  double prominence_sigma = 0.0;
};

struct DipOptions {
  double width_guess_mhz = 1.6;
  double min_noise = 1e-3;         // floor for the per-row log-rate noise
  double separation_sigma = 4.5;   // prominence over the col towards any higher peak
  int fit_half_window = 0;         // points each side; 0 picks from the width
  // Rounds of subtracting the fitted dips and searching the remainder.
  int deblend_passes = 1;
  double deblend_min_gap_mhz = 3.0;  // from any dip already found
};

// Dips whose log-rate excess over the row median is at least
// threshold_sigma times the row noise level, refined by a local
// three-parameter Lorentzian fit. Dips hidden on the tail of a stronger one
// are picked up from the residual once the fitted dips are divided out.
std::vector<DipDetection> detect_dips(const T1Map& map, double threshold_sigma,
                                      const DipOptions& options = {});

}  // namespace jjtls
