#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "jjtls/error.hpp"
#include "jjtls/field_solver.hpp"

using namespace jjtls;

namespace {

std::vector<double> uniform_axis(double lo, double hi, std::size_t cells) {
  std::vector<double> v(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);
  return v;
}

// A box with two electrodes placed symmetrically about x = 20 and a
// dielectric slab between them.
CrossSectionModel symmetric_box(double left_v, double right_v) {
  CrossSectionModel m(uniform_axis(0.0, 40.0, 80), uniform_axis(0.0, 20.0, 40));
  m.paint_dielectric({10.0, 5.0, 30.0, 15.0}, 4.0);
  const int a = m.add_conductor("left", left_v);
  const int b = m.add_conductor("right", right_v);
  m.paint_conductor(a, {5.0, 8.0, 8.0, 12.0});
  m.paint_conductor(b, {32.0, 8.0, 35.0, 12.0});
  return m;
}

}  // namespace

TEST_SUITE("field-solver") {
  TEST_CASE("parallel plates reproduce V / gap") {
    const ParallelPlateCheck pp = parallel_plate_check(2.0, 40.0, 1.0, 0.25);
    CHECK(pp.analytic_vpm == doctest::Approx(5e8));
    CHECK(pp.numeric_vpm == doctest::Approx(5e8).epsilon(1e-9));
    CHECK(pp.max_relative_error < 1e-9);
  }

  TEST_CASE("solutions obey the maximum principle") {
    const FieldMap map = solve_laplace(symmetric_box(1.0, -0.5));
    CHECK(satisfies_maximum_principle(map));
    CHECK(map.stats.relative_residual <= 1e-10);
  }

  TEST_CASE("conductor nodes keep their prescribed potential and carry no field") {
    const CrossSectionModel model = symmetric_box(1.0, -0.5);
    const FieldMap map = solve_laplace(model);
    for (std::size_t j = 0; j < map.ny(); ++j) {
      for (std::size_t i = 0; i < map.nx(); ++i) {
        const int owner = model.owner(i, j);
        if (owner < 0) continue;
        CHECK(map.potential_v[map.index(i, j)] == model.potential(owner));
        CHECK(map.magnitude_vpm[map.index(i, j)] == 0.0);
      }
    }
  }

  TEST_CASE("solution is linear in the boundary potentials") {
    const FieldMap one = solve_laplace(symmetric_box(1.0, 0.0), 1e-12);
    const FieldMap three = solve_laplace(symmetric_box(3.0, 0.0), 1e-12);
    for (std::size_t n = 0; n < one.potential_v.size(); ++n) {
      REQUIRE(three.potential_v[n] == doctest::Approx(3.0 * one.potential_v[n]).epsilon(1e-9).scale(1.0));
    }
  }

  TEST_CASE("a mirror-symmetric cross-section gives a mirror-symmetric map") {
    const FieldMap map = solve_laplace(symmetric_box(1.0, 1.0), 1e-12);
    const std::size_t nx = map.nx();
    for (std::size_t j = 0; j < map.ny(); ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        REQUIRE(map.potential_v[map.index(i, j)] ==
                doctest::Approx(map.potential_v[map.index(nx - 1 - i, j)]).epsilon(1e-9).scale(1.0));
      }
    }
  }

  TEST_CASE("non-convergence reports the residual reached") {
    try {
      solve_laplace(symmetric_box(1.0, 0.0), 1e-14, 2);
      FAIL("solver claimed convergence in two iterations");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::Convergence);
      CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }
  }

  TEST_CASE("a model without conductors is rejected") {
    CrossSectionModel m(uniform_axis(0.0, 1.0, 4), uniform_axis(0.0, 1.0, 4));
    CHECK_THROWS_AS(solve_laplace(m), Error);
  }

  TEST_CASE("graded axes keep mandatory nodes and respect the spacing bounds") {
    GradedAxis ax;
    ax.mandatory = {10.0, 12.0, 50.0};
    ax.focus = {12.0};
    ax.h_min = 0.25;
    ax.h_max = 5.0;
    const std::vector<double> x = graded_nodes(ax, 0.0, 100.0);
    CHECK(x.front() == 0.0);
    CHECK(x.back() == 100.0);
    for (double m : ax.mandatory) CHECK(std::find(x.begin(), x.end(), m) != x.end());
    for (std::size_t i = 1; i < x.size(); ++i) {
      CHECK(x[i] > x[i - 1]);
      CHECK(x[i] - x[i - 1] <= ax.h_max + 1e-9);
    }
  }

  TEST_CASE("junction cross-section screening") {
    const JunctionCrossSection xs;
    const ScreeningStudy study = screening_study(xs, 1.0, 1e-10, 0.01, 0.01);
    const ScreeningSummary& s = study.summary;
    // The barrier sits between grounded electrodes.
    CHECK(s.dc_midplane_ratio < 1e-3);
    // Outside the open edge the gate field is screened over about ten nanometres.
    CHECK(s.dc_screened_nm > 2.0);
    CHECK(s.dc_screened_nm < 30.0);
    // The AC field inside the barrier approaches V / d and decays on the scale of d.
    CHECK(s.ac_barrier_vpm == doctest::Approx(1.0 / (xs.barrier_thickness_nm * 1e-9)).epsilon(0.05));
    CHECK(s.ac_decay_length_nm > xs.barrier_thickness_nm / 3.0);
    CHECK(s.ac_decay_length_nm < xs.barrier_thickness_nm * 3.0);
    CHECK(s.ac_at_10d_ratio < 0.05);
    CHECK(satisfies_maximum_principle(study.dc));
    CHECK(satisfies_maximum_principle(study.ac.map));

    // The profile decays monotonically outside the edge, up to where the
    // far corner of the bottom electrode starts to concentrate the field.
    double prev = std::numeric_limits<double>::infinity();
    for (const ProfilePoint& p : study.ac.profile) {
      if (p.distance_nm < 0.5 || p.distance_nm > 0.5 * xs.bottom_extension_nm) continue;
      CHECK(p.field_vpm <= prev * (1.0 + 1e-6));
      prev = p.field_vpm;
    }

    const ExclusionZone none = exclusion_zone_width(study.dc, study.ac.map, xs, 1.0, 1.0);
    CHECK(none.dc_screened_nm == 0.0);
    CHECK(none.ac_coupled_nm == 0.0);
  }
}
