#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "jjtls/error.hpp"
#include "jjtls/geometry.hpp"

using namespace jjtls;

namespace {

JunctionGeometry stray_geometry(double area = 12.1, double l_open = 7.1, double l_cov = 10.1) {
  JunctionGeometry g;
  g.stray = StrayJunction{area, l_open, l_cov};
  return g;
}

PlantedDensities every_region() {
  PlantedDensities p;
  p.rho_area = 1.5;
  p.rho_open_edge = 150.0;
  p.rho_covered_edge = 100.0;
  p.rho_small_junction = 20.0;
  p.rho_surface_open = 0.5;
  p.rho_surface_covered = 0.2;
  p.rho_surface_background = 5.0;
  return p;
}

struct Counts {
  double barrier = 0, open = 0, covered = 0, small = 0, surface = 0;
};

Counts count(const Ensemble& e) {
  Counts c;
  for (const Defect& d : e) {
    if (d.host == Host::SmallJunction) c.small += 1;
    else if (d.host == Host::Electrode) c.surface += 1;
    else if (d.tls.location == Location::OpenEdge) c.open += 1;
    else if (d.tls.location == Location::CoveredEdge) c.covered += 1;
    else c.barrier += 1;
  }
  return c;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("zero densities give an empty ensemble") {
    CHECK(sample_ensemble(stray_geometry(), {}, {5.0, 6.0}, 1).empty());
  }

  TEST_CASE("barrier mean is density times area times window") {
    PlantedDensities p;
    p.rho_area = 1.5;
    CHECK(region_means(stray_geometry(), p, 1.0).barrier == doctest::Approx(18.15).epsilon(1e-14));
  }

  TEST_CASE("region means use the barrier thickness in micrometres for edge strips") {
    const RegionMeans m = region_means(stray_geometry(), every_region(), 2.0);
    CHECK(m.open_edge == doctest::Approx(150.0 * 7.1 * 0.002 * 2.0));
    CHECK(m.covered_edge == doctest::Approx(100.0 * 10.1 * 0.002 * 2.0));
    CHECK(m.small_junction == doctest::Approx(20.0 * 2 * 0.26 * 0.28 * 2.0));
    CHECK(m.surface_open == doctest::Approx(0.5 * 7.1 * 2.0));
    CHECK(m.surface_covered == doctest::Approx(0.2 * 10.1 * 2.0));
    CHECK(m.surface_background == doctest::Approx(10.0));
  }

  TEST_CASE("reference geometry has only small-junction and background terms") {
    JunctionGeometry ref;
    const RegionMeans m = region_means(ref, every_region(), 1.0);
    CHECK(m.barrier == 0.0);
    CHECK(m.open_edge == 0.0);
    CHECK(m.surface_open == 0.0);
    CHECK(m.small_junction > 0.0);
    const JunctionDensity jd = expected_junction_density(ref, every_region());
    CHECK(jd.per_ghz == 0.0);
    CHECK_FALSE(jd.has_stray);
  }

  TEST_CASE("same seed, same ensemble") {
    const Ensemble a = sample_ensemble(stray_geometry(), every_region(), {5.0, 6.0}, 42);
    const Ensemble b = sample_ensemble(stray_geometry(), every_region(), {5.0, 6.0}, 42);
    const Ensemble c = sample_ensemble(stray_geometry(), every_region(), {5.0, 6.0}, 43);
    CHECK(a == b);
    CHECK_FALSE(a == c);
  }

  TEST_CASE("empirical counts match the Poisson means within three standard errors") {
    const JunctionGeometry g = stray_geometry();
    const PlantedDensities p = every_region();
    const FreqWindow band{4.5, 6.0};
    const RegionMeans m = region_means(g, p, band.width());
    const int seeds = 2000;
    Counts sum;
    for (int s = 0; s < seeds; ++s) {
      const Counts c = count(sample_ensemble(g, p, band, static_cast<std::uint64_t>(s) + 1000));
      sum.barrier += c.barrier;
      sum.open += c.open;
      sum.covered += c.covered;
      sum.small += c.small;
      sum.surface += c.surface;
    }
    auto within = [&](double total, double mean) {
      const double se = std::sqrt(mean / seeds);
      return std::abs(total / seeds - mean) <= 3.0 * se;
    };
    CHECK(within(sum.barrier, m.barrier));
    CHECK(within(sum.open, m.open_edge));
    CHECK(within(sum.covered, m.covered_edge));
    CHECK(within(sum.small, m.small_junction));
    CHECK(within(sum.surface, m.surface_open + m.surface_covered + m.surface_background));
  }

  TEST_CASE("sampled defects respect their regions and lever rules") {
    const JunctionGeometry g = stray_geometry();
    const FreqWindow band{4.5, 6.0};
    for (std::uint64_t s = 1; s <= 50; ++s) {
      for (const Defect& d : sample_ensemble(g, every_region(), band, s)) {
        REQUIRE(within_region(g, d));
        REQUIRE(d.arms.kappa_piezo != 0.0);
        if (is_junction_location(d.tls.location)) REQUIRE(d.arms.kappa_gate == 0.0);
        else REQUIRE(d.arms.kappa_gate != 0.0);
        if (d.host == Host::StrayJunction && d.tls.location == Location::BarrierInterior) {
          REQUIRE(d.tls.position.v_nm >= g.barrier_thickness_nm);
        }
        const double f = transition_energy(d.tls.delta_ghz, d.tls.eps0_ghz);
        REQUIRE(f == doctest::Approx(std::clamp(f, band.lo_ghz, band.hi_ghz)));
        REQUIRE(d.tls.dipole_enm >= 0.1);
        REQUIRE(d.tls.dipole_enm <= 1.0);
      }
    }
  }

  TEST_CASE("detectability floor removes weak defects") {
    EnsembleOptions opt;
    DetectabilityFloor floor;
    floor.min_rate_per_us = 0.2;
    opt.floor = floor;
    const Ensemble e = sample_ensemble(stray_geometry(), every_region(), {4.5, 6.0}, 5, opt);
    REQUIRE_FALSE(e.empty());
    for (const Defect& d : e) CHECK(defect_peak_rate(d, d.tls.eps0_ghz, floor.qubit) >= 0.2);
  }

  TEST_CASE("expected junction density") {
    PlantedDensities p;
    p.rho_area = 1.5;
    CHECK(expected_junction_density(stray_geometry(), p).per_ghz == doctest::Approx(18.15));

    PlantedDensities edges;
    edges.rho_open_edge = 100.0;
    edges.rho_covered_edge = 50.0;
    const double edge_only = 100.0 * 7.1 * 0.002 + 50.0 * 10.1 * 0.002;
    CHECK(expected_junction_density(stray_geometry(1e-6), edges).per_ghz == doctest::Approx(edge_only));

    // Area 1.5, open -6, covered -70 per (GHz um^2) on the 1.3 geometry.
    PlantedDensities fitted;
    fitted.rho_area = 1.5;
    fitted.rho_open_edge = -6.0;
    fitted.rho_covered_edge = -70.0;
    const double oracle = 1.5 * 12.7 - 6.0 * 7.1 * 0.002 - 70.0 * 19.1 * 0.002;
    CHECK(expected_junction_density(stray_geometry(12.7, 7.1, 19.1), fitted).per_ghz ==
          doctest::Approx(oracle));
    CHECK(oracle == doctest::Approx(16.2908));
  }

  TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(sample_ensemble(stray_geometry(), every_region(), {6.0, 6.0}, 1), Error);
    PlantedDensities neg;
    neg.rho_area = -1.0;
    CHECK_THROWS_AS(sample_ensemble(stray_geometry(), neg, {5.0, 6.0}, 1), Error);
    CHECK_THROWS_AS(stray_geometry(0.0).validate(), Error);
    QubitParams q;
    q.field_small_junction_vpm = 10.0;
    CHECK_THROWS_AS(q.validate(), Error);
  }

  TEST_CASE("peak rate follows the host field") {
    Defect d;
    d.tls.delta_ghz = 5.0;
    d.tls.dipole_enm = 1.0;
    d.half_width_mhz = 1.6;
    QubitParams q;
    d.host = Host::StrayJunction;
    const double stray = defect_peak_rate(d, 0.0, q);
    d.host = Host::SmallJunction;
    const double small = defect_peak_rate(d, 0.0, q);
    CHECK(small / stray == doctest::Approx(std::pow(2300.0 / 25.0, 2)));
    CHECK(host_field_vpm(q, Host::Electrode) == q.field_surface_vpm);
    for (Host h : {Host::StrayJunction, Host::SmallJunction, Host::Electrode}) CHECK(parse_host(host_name(h)) == h);
  }
}
