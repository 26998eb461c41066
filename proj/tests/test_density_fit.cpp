#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "jjtls/density_fit.hpp"
#include "jjtls/error.hpp"
#include "jjtls/measured_data.hpp"
#include "jjtls/pipeline.hpp"

using namespace jjtls;

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 inverse3(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 inv{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const int r1 = (c + 1) % 3, r2 = (c + 2) % 3, c1 = (r + 1) % 3, c2 = (r + 2) % 3;
      inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
    }
  }
  return inv;
}

struct Normal3 {
  std::array<double, 3> beta{};
  Mat3 cov{};  // (X^T W X)^-1
  double rss = 0.0;
};

// Weighted least squares through the normal equations, independent of the
// library's QR path.
Normal3 solve_normal(const std::vector<std::array<double, 3>>& x, const std::vector<double>& y,
                     const std::vector<double>& w) {
  Mat3 xtx{};
  std::array<double, 3> xty{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int r = 0; r < 3; ++r) {
      xty[r] += w[i] * x[i][r] * y[i];
      for (int c = 0; c < 3; ++c) xtx[r][c] += w[i] * x[i][r] * x[i][c];
    }
  }
  Normal3 out;
  out.cov = inverse3(xtx);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.beta[r] += out.cov[r][c] * xty[c];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    double pred = 0.0;
    for (int c = 0; c < 3; ++c) pred += x[i][c] * out.beta[c];
    out.rss += (y[i] - pred) * (y[i] - pred);
  }
  return out;
}

std::vector<AreaEdgePoint> noisy_points(std::uint64_t seed, int count, double d_um) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> area(8.0, 16.0), edge(5.0, 20.0), noise(-2.0, 2.0);
  std::vector<AreaEdgePoint> pts;
  for (int i = 0; i < count; ++i) {
    AreaEdgePoint p;
    p.id = std::to_string(i);
    p.junction = {area(rng), edge(rng), edge(rng)};
    p.rho_sjj = 1.5 * p.junction.area_um2 + 40.0 * p.junction.l_open_um * d_um +
                20.0 * p.junction.l_covered_um * d_um + noise(rng);
    p.sigma = 0.5 + std::abs(noise(rng));
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_SUITE("density-fit") {

TEST_CASE("junction error bar splits unclassified defects by class share") {
  CHECK(junction_density_errorbar(3.5, 18.8, 10.0) == doctest::Approx(3.5 * 18.8 / 28.8).epsilon(1e-12));
  CHECK(junction_density_errorbar(0.0, 18.8, 10.0) == 0.0);
  CHECK(junction_density_errorbar(3.5, 18.8, 0.0) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK_THROWS_AS(junction_density_errorbar(3.5, 0.0, 0.0), Error);
}

TEST_CASE("stray junction density subtracts the chip reference") {
  CHECK(stray_junction_density(19.6, 0.8) == doctest::Approx(18.8));
  CHECK(stray_junction_density(25.4, 2.3) == doctest::Approx(23.1));
  CHECK(stray_junction_density(0.8, 0.8) == 0.0);
  CHECK(stray_junction_density(0.5, 0.8) == 0.0);
}

TEST_CASE("volume density") {
  CHECK(volume_density(18.8, 12.1, 2.0) == doctest::Approx(776.86).epsilon(1e-4));
  CHECK(volume_density(20.1, 13.1, 2.0) == doctest::Approx(767.18).epsilon(1e-4));
  CHECK(volume_density(0.0, 12.1, 2.0) == 0.0);
}

TEST_CASE("area/edge fit recovers exact coefficients") {
  const double d_um = 0.002;
  std::vector<AreaEdgePoint> pts;
  const std::array<StrayJunction, 5> js{{{12.1, 7.1, 10.1}, {12.7, 7.1, 19.1}, {14.0, 15.7, 11.1},
                                         {13.6, 6.6, 18.4}, {14.3, 17.2, 11.7}}};
  for (const StrayJunction& j : js) {
    AreaEdgePoint p;
    p.junction = j;
    p.rho_sjj = 1.5 * j.area_um2 + 30.0 * j.l_open_um * d_um - 12.0 * j.l_covered_um * d_um;
    pts.push_back(p);
  }
  const AreaEdgeFit fit = fit_area_edge(pts, 2.0);
  CHECK(fit.area.value == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(fit.open_edge.value == doctest::Approx(30.0).epsilon(1e-6));
  CHECK(fit.covered_edge.value == doctest::Approx(-12.0).epsilon(1e-6));
  CHECK(fit.dof == 2);
  CHECK(fit.rss < 1e-20);
  CHECK(fit.area.sigma < 1e-8);
  REQUIRE(fit.residuals.size() == pts.size());
  for (double r : fit.residuals) CHECK(std::abs(r) < 1e-10);

  // The model is linear in the data.
  for (AreaEdgePoint& p : pts) p.rho_sjj *= 3.0;
  const AreaEdgeFit scaled = fit_area_edge(pts, 2.0);
  CHECK(scaled.area.value == doctest::Approx(4.5).epsilon(1e-9));
  CHECK(scaled.open_edge.value == doctest::Approx(90.0).epsilon(1e-6));
}

TEST_CASE("area/edge fit matches normal equations with noise") {
  const double d_um = 0.002;
  const auto pts = noisy_points(7, 9, d_um);
  std::vector<std::array<double, 3>> x;
  std::vector<double> y, unit, inv_var;
  for (const AreaEdgePoint& p : pts) {
    x.push_back({p.junction.area_um2, p.junction.l_open_um * d_um, p.junction.l_covered_um * d_um});
    y.push_back(p.rho_sjj);
    unit.push_back(1.0);
    inv_var.push_back(1.0 / (p.sigma * p.sigma));
  }

  SUBCASE("unweighted") {
    const Normal3 ref = solve_normal(x, y, unit);
    const double s2 = ref.rss / static_cast<double>(pts.size() - 3);
    const AreaEdgeFit fit = fit_area_edge(pts, 2.0);
    CHECK(fit.area.value == doctest::Approx(ref.beta[0]).epsilon(1e-8));
    CHECK(fit.open_edge.value == doctest::Approx(ref.beta[1]).epsilon(1e-8));
    CHECK(fit.covered_edge.value == doctest::Approx(ref.beta[2]).epsilon(1e-8));
    CHECK(fit.area.sigma == doctest::Approx(std::sqrt(s2 * ref.cov[0][0])).epsilon(1e-8));
    CHECK(fit.open_edge.sigma == doctest::Approx(std::sqrt(s2 * ref.cov[1][1])).epsilon(1e-8));
    CHECK(fit.covered_edge.sigma == doctest::Approx(std::sqrt(s2 * ref.cov[2][2])).epsilon(1e-8));
    CHECK(fit.rss == doctest::Approx(ref.rss).epsilon(1e-8));
  }
  SUBCASE("weighted") {
    const Normal3 ref = solve_normal(x, y, inv_var);
    const AreaEdgeFit fit = fit_area_edge(pts, 2.0, Weighting::Weighted);
    CHECK(fit.area.value == doctest::Approx(ref.beta[0]).epsilon(1e-8));
    CHECK(fit.open_edge.value == doctest::Approx(ref.beta[1]).epsilon(1e-8));
    CHECK(fit.covered_edge.value == doctest::Approx(ref.beta[2]).epsilon(1e-8));
    CHECK(fit.area.sigma == doctest::Approx(std::sqrt(ref.cov[0][0])).epsilon(1e-8));
    CHECK(fit.covered_edge.sigma == doctest::Approx(std::sqrt(ref.cov[2][2])).epsilon(1e-8));
  }
}

TEST_CASE("area/edge fit rejects degenerate input") {
  std::vector<AreaEdgePoint> pts;
  for (double a : {10.0, 12.0, 14.0, 16.0}) {
    AreaEdgePoint p;
    p.junction = {a, 5.0, 10.0};  // edges identical across points
    p.rho_sjj = 1.5 * a;
    pts.push_back(p);
  }
  try {
    (void)fit_area_edge(pts, 2.0);
    FAIL("expected a degenerate fit");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Degenerate);
  }
  pts.resize(2);
  try {
    (void)fit_area_edge(pts, 2.0);
    FAIL("expected too few points");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::InvalidArgument);
  }
}

TEST_CASE("total edge fit") {
  const double d_um = 0.002;
  std::vector<AreaEdgePoint> pts;
  const std::array<StrayJunction, 4> js{{{12.1, 7.1, 10.1}, {12.7, 7.1, 19.1}, {14.0, 15.7, 11.1},
                                         {13.1, 6.6, 10.8}}};
  for (const StrayJunction& j : js) {
    AreaEdgePoint p;
    p.junction = j;
    p.rho_sjj = 1.2 * j.area_um2 + 25.0 * (j.l_open_um + j.l_covered_um) * d_um;
    pts.push_back(p);
  }
  const TotalEdgeFit fit = fit_area_total_edge(pts, 2.0);
  CHECK(fit.area.value == doctest::Approx(1.2).epsilon(1e-9));
  CHECK(fit.total_edge.value == doctest::Approx(25.0).epsilon(1e-6));
  CHECK(fit.dof == 2);
  CHECK(fit.rss < 1e-20);
}

TEST_CASE("two-pass surface fit recovers slopes and offset") {
  std::vector<SurfacePoint> pts;
  const std::array<std::array<double, 2>, 4> edges{{{7.1, 10.1}, {7.1, 19.1}, {15.7, 11.1}, {9.0, 14.0}}};
  for (const auto& e : edges) {
    pts.push_back({"q", e[0], e[1], 0.4 * e[0] + 0.1 * e[1] + 3.0});
  }
  const SurfaceFit fit = fit_surface_two_pass(pts);
  CHECK(fit.open_edge.value == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(fit.covered_edge.value == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(fit.offset == doctest::Approx(3.0).epsilon(1e-9));
  for (double r : fit.residuals) CHECK(std::abs(r) < 1e-10);

  pts.resize(2);
  CHECK_THROWS_AS(fit_surface_two_pass(pts), Error);
}

TEST_CASE("segment densities count visible traces per GHz") {
  SegmentPlan plan;
  plan.freqs = make_grid(5.0, 6.0, 0.01);
  Segment seg;
  seg.swept = Channel::Piezo;
  seg.start_v = 0.0;
  seg.stop_v = 10.0;
  seg.step_v = 1.0;
  plan.segments = {seg};
  const double window = plan.freqs.width_ghz();

  SUBCASE("no traces") {
    const RunDensity d = estimate_segment_densities({}, plan);
    REQUIRE(d.segments.size() == 1);
    CHECK(d.rho_jj == 0.0);
    CHECK(d.rho_surf == 0.0);
    CHECK(d.rho_nc == 0.0);
    CHECK(d.dead_fraction == 0.0);
  }
  SUBCASE("twenty full-length traces") {
    std::vector<DefectTrace> traces;
    for (int i = 0; i < 20; ++i) {
      DefectTrace t;
      t.id = i;
      t.cls = i < 12 ? TraceClass::Junction : i < 18 ? TraceClass::Surface : TraceClass::Unclassified;
      for (std::size_t r : {std::size_t{0}, std::size_t{10}}) {
        TracePoint p;
        p.segment = 0;
        p.bias_index = r;
        t.points.push_back(p);
      }
      traces.push_back(t);
    }
    const RunDensity d = estimate_segment_densities(traces, plan);
    CHECK(d.rho_jj + d.rho_surf + d.rho_nc == doctest::Approx(20.0 / window));
    CHECK(d.rho_jj == doctest::Approx(12.0 / window));
    CHECK(d.rho_surf == doctest::Approx(6.0 / window));
    CHECK(d.rho_nc == doctest::Approx(2.0 / window));
    CHECK(d.dead_fraction == doctest::Approx(0.1));
  }
  SUBCASE("a trace counts only between its first and last detection") {
    DefectTrace t;
    t.cls = TraceClass::Surface;
    for (std::size_t r : {std::size_t{2}, std::size_t{6}}) {
      TracePoint p;
      p.bias_index = r;
      t.points.push_back(p);
    }
    const RunDensity d = estimate_segment_densities({t}, plan);
    CHECK(d.rho_surf == doctest::Approx(5.0 / 11.0 / window));
  }
}

TEST_CASE("unclassified traces only count in piezo segments") {
  const SimulationConfig c = measured_qubit_config(measured_qubit("1.2"), recovery_densities());
  for (std::uint64_t seed : {1, 2}) {
    CAPTURE(seed);
    const SimulationRun run = simulate(c, seed);
    const Analysis a = analyze(run.maps, run.plan, c.analysis);
    for (const SegmentDensity& d : a.density.segments) {
      if (d.swept == Channel::Gate) CHECK(d.rho_nc == 0.0);
    }
  }
}

TEST_CASE("embedded measured table") {
  struct Row {
    const char* id;
    int chip;
    bool stray;
    double area, lop, lcov, rho_s, rho_surf, rho_nc, f01, t1;
  };
  const std::array<Row, 8> rows{{
      {"1.1", 1, false, 0.0, 0.0, 0.0, 0.8, 28.8, 7.7, 6.0, 10.0},
      {"1.2", 1, true, 12.1, 7.1, 10.1, 19.6, 10.0, 3.5, 6.0, 10.0},
      {"1.3", 1, true, 12.7, 7.1, 19.1, 19.6, 10.2, 3.0, 6.2, 6.0},
      {"1.4", 1, true, 14.0, 15.7, 11.1, 22.5, 24.7, 9.7, 6.2, 8.0},
      {"2.1", 2, false, 0.0, 0.0, 0.0, 2.3, 67.7, 7.1, 5.9, 17.0},
      {"2.2", 2, true, 13.1, 6.6, 10.8, 22.4, 22.4, 3.3, 5.8, 11.0},
      {"2.3", 2, true, 13.6, 6.6, 18.4, 23.8, 23.8, 3.9, 5.7, 12.0},
      {"2.4", 2, true, 14.3, 17.2, 11.7, 25.4, 64.9, 7.1, 5.9, 8.0},
  }};
  const auto table = measured_qubits();
  REQUIRE(table.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const MeasuredQubit& q = table[i];
    CAPTURE(r.id);
    CHECK(q.id == r.id);
    CHECK(q.chip == r.chip);
    CHECK(q.has_stray == r.stray);
    CHECK(q.area_um2 == r.area);
    CHECK(q.l_open_um == r.lop);
    CHECK(q.l_covered_um == r.lcov);
    CHECK(q.rho_s == r.rho_s);
    CHECK(q.rho_surf == r.rho_surf);
    CHECK(q.rho_nc == r.rho_nc);
    CHECK(q.f01_ghz == r.f01);
    CHECK(q.t1_us == r.t1);
    CHECK(q.stray().has_value() == r.stray);
  }
  CHECK(measured_reference(1).id == "1.1");
  CHECK(measured_reference(2).id == "2.1");
  CHECK(measured_qubit("2.3").l_covered_um == 18.4);
  CHECK_THROWS_AS(measured_qubit("3.1"), Error);
}

}  // TEST_SUITE
