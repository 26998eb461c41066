#include <cmath>

#include "doctest.h"
#include "jjtls/dips.hpp"
#include "jjtls/error.hpp"

using namespace jjtls;

namespace {

struct Line {
  double centre_ghz;
  double rate_per_us;
  double width_mhz = 1.6;
};

// One-row map with Lorentzian dips in T1 on a 2 MHz grid.
T1Map row_map(const std::vector<Line>& lines, double noise = 0.0) {
  T1Map m;
  m.biases = {BiasPoint{}};
  m.freqs_ghz = make_grid(5.0, 5.3, 0.002).values();
  for (double f : m.freqs_ghz) {
    double rate = 0.1;
    for (const Line& l : lines) {
      const double d = (f - l.centre_ghz) * 1e3;
      rate += l.rate_per_us * l.width_mhz * l.width_mhz / (d * d + l.width_mhz * l.width_mhz);
    }
    m.t1_us.push_back(1.0 / rate);
    m.noise_rel.push_back(noise);
  }
  return m;
}

}  // namespace

TEST_SUITE("dips") {
  TEST_CASE("flat map has no dips") {
    CHECK(detect_dips(row_map({}), 4.5).empty());
    CHECK(detect_dips(row_map({}, 0.1), 4.5).empty());
  }

  TEST_CASE("a single noiseless Lorentzian is centred to a tenth of a grid step") {
    for (double offset : {0.0, 0.3e-3, 0.7e-3, 1.1e-3, 1.9e-3}) {
      const double centre = 5.15 + offset;
      const auto dips = detect_dips(row_map({{centre, 2.0}}), 4.5);
      REQUIRE(dips.size() == 1);
      CHECK(std::abs(dips[0].center_ghz - centre) < 0.1 * 0.002);
      CHECK(dips[0].width_mhz == doctest::Approx(1.6).epsilon(0.05));
      CHECK(dips[0].depth_per_us == doctest::Approx(2.0).epsilon(0.05));
      // The row median sits slightly above the baseline, so the fit is not exact.
      CHECK(dips[0].residual < 1e-2);
    }
  }

  TEST_CASE("two dips more than five widths apart are both found") {
    const auto dips = detect_dips(row_map({{5.1, 1.0}, {5.1 + 5.5 * 1.6e-3, 0.5}}), 4.5);
    REQUIRE(dips.size() == 2);
    CHECK(std::abs(dips[0].center_ghz - 5.1) < 0.5 * 0.002);
    CHECK(std::abs(dips[1].center_ghz - (5.1 + 5.5 * 1.6e-3)) < 0.5 * 0.002);
  }

  TEST_CASE("a weak dip on the tail of a strong one is recovered from the residual") {
    const auto dips = detect_dips(row_map({{5.1, 400.0}, {5.1 + 0.008, 4.0}}, 0.02), 4.5);
    REQUIRE(dips.size() == 2);
    CHECK(std::abs(dips[1].center_ghz - 5.108) < 0.001);

    DipOptions off;
    off.deblend_passes = 0;
    CHECK(detect_dips(row_map({{5.1, 400.0}, {5.1 + 0.008, 4.0}}, 0.02), 4.5, off).size() == 1);
  }

  TEST_CASE("reported dips stand out by at least the threshold") {
    const T1Map m = row_map({{5.05, 0.05}, {5.12, 0.3}, {5.2, 3.0}}, 0.02);
    for (const DipDetection& d : detect_dips(m, 4.5)) {
      CHECK(d.prominence_sigma >= 4.5);
      CHECK(d.width_mhz > 0.0);
      CHECK(d.depth_per_us > 0.0);
    }
    // 0.05/us on a 0.1/us baseline is a 0.4 log-rate excess, far above 4.5 * 0.02.
    CHECK(detect_dips(m, 4.5).size() == 3);
    // Raising the threshold beyond the weakest excess drops it.
    CHECK(detect_dips(m, 25.0).size() == 2);
  }

  TEST_CASE("invalid threshold") {
    CHECK_THROWS_AS(detect_dips(row_map({}), 0.0), Error);
  }
}
