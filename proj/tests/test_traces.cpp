#include <cmath>
#include <set>
#include <tuple>

#include "doctest.h"
#include "jjtls/error.hpp"
#include "jjtls/traces.hpp"
#include "synthetic.hpp"

using namespace jjtls;
using jjtls::testing::make_defect;
using jjtls::testing::noiseless;

namespace {

SegmentPlan piezo_only(double lo_v, double hi_v, double step_v = 1.0) {
  SegmentPlan plan;
  plan.freqs = make_grid(5.0, 5.4, 0.002);
  Segment s;
  s.swept = Channel::Piezo;
  s.start_v = lo_v;
  s.stop_v = hi_v;
  s.step_v = step_v;
  plan.segments.push_back(s);
  return plan;
}

std::vector<DefectTrace> traces_for(const SegmentPlan& plan, const EnsembleTimeline& truth,
                                    const NoiseModel& noise = noiseless()) {
  QubitParams q;
  return analyze_maps(run_swap_spectroscopy(plan, truth, q, noise, 11), plan);
}

int truth_index(const DefectTrace& t, const Ensemble& e) {
  std::vector<int> votes(e.size(), 0);
  for (const TracePoint& p : t.points) {
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (std::abs(defect_frequency(e[k], p.bias) - p.freq_ghz) < 0.002) ++votes[k];
    }
  }
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace

TEST_SUITE("traces") {
  TEST_CASE("one noiseless hyperbola becomes one trace holding every dip") {
    const SegmentPlan plan = piezo_only(0.0, 60.0);
    const Defect d = make_defect(0, 5.2, 5.19, 0.0, 0.004, Host::StrayJunction);
    // Put the vertex inside the sweep.
    Defect v = d;
    v.tls.eps0_ghz = -0.12;
    const EnsembleTimeline truth({v});
    QubitParams q;
    const auto maps = run_swap_spectroscopy(plan, truth, q, noiseless(), 1);
    const auto dips = detect_dips(maps[0], 4.5);
    const auto traces = analyze_maps(maps, plan);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].points.size() == dips.size());
    CHECK(dips.size() == plan.segments[0].size());
    const HyperbolaFit& fit = traces[0].fit;
    REQUIRE(fit.ok);
    CHECK(fit.delta_ghz == doctest::Approx(5.19).epsilon(1e-3));
    CHECK(fit.kappa_piezo * fit.eps0_ghz < 0.0);
    CHECK(std::abs(fit.eps0_ghz / fit.kappa_piezo) == doctest::Approx(30.0).epsilon(0.01));
    CHECK(fit.rms_mhz < 0.2);
  }

  TEST_CASE("crossing traces with different curvature stay apart away from the crossing") {
    const SegmentPlan plan = piezo_only(0.0, 60.0, 0.5);
    Defect straight = make_defect(0, 5.1, 0.3, 0.0, 0.004, Host::StrayJunction);
    Defect curved = make_defect(1, 5.2, 5.2, 0.0, 0.02, Host::StrayJunction);
    curved.tls.eps0_ghz = -0.6;
    const Ensemble truth{straight, curved};
    const auto traces = traces_for(plan, EnsembleTimeline(truth));
    REQUIRE(traces.size() >= 2);
    for (const DefectTrace& t : traces) {
      if (t.points.size() < 10) continue;
      const int k = truth_index(t, truth);
      for (const TracePoint& p : t.points) {
        const double fa = defect_frequency(truth[0], p.bias);
        const double fb = defect_frequency(truth[1], p.bias);
        if (std::abs(fa - fb) < 0.01) continue;  // ambiguity window
        CHECK(std::abs(defect_frequency(truth[static_cast<std::size_t>(k)], p.bias) - p.freq_ghz) < 0.002);
      }
    }
    // Both defects own a long trace.
    std::set<int> owners;
    for (const DefectTrace& t : traces) {
      if (t.points.size() >= 30) owners.insert(truth_index(t, truth));
    }
    CHECK(owners.size() == 2);
  }

  TEST_CASE("a telegraph jump splits the trace") {
    const SegmentPlan plan = piezo_only(0.0, 60.0);
    const Defect d = make_defect(3, 5.15, 0.4, 0.0, 0.002, Host::StrayJunction);
    const auto jumped = inject_telegraph_jump(EnsembleTimeline({d}), 3, d.tls.eps0_ghz + 0.08, 30);
    const auto traces = traces_for(plan, jumped);
    REQUIRE(traces.size() == 2);
    const auto& first = traces[0].points.front().bias_index < traces[1].points.front().bias_index ? traces[0] : traces[1];
    const auto& second = &first == &traces[0] ? traces[1] : traces[0];
    CHECK(first.points.back().bias_index == 29);
    CHECK(second.points.front().bias_index == 30);
  }

  TEST_CASE("classification by gate response") {
    AlternatingPlanOptions o;
    o.piezo_total_v = 40.0;
    const SegmentPlan plan = alternating_plan(make_grid(5.0, 5.4, 0.002), o);

    SUBCASE("barrier defect is junction") {
      const auto traces = traces_for(plan, EnsembleTimeline({make_defect(0, 5.2, 0.5, 0.0, 0.002, Host::StrayJunction)}));
      REQUIRE(traces.size() == 1);
      CHECK(traces[0].cls == TraceClass::Junction);
      CHECK(traces[0].fit.gate_free == false);
      CHECK(traces[0].fit.kappa_gate == 0.0);
    }
    SUBCASE("electrode defect with a large lever is surface") {
      const auto traces = traces_for(plan, EnsembleTimeline({make_defect(0, 5.2, 0.5, 0.006, 0.002, Host::Electrode)}));
      REQUIRE(traces.size() == 1);
      CHECK(traces[0].cls == TraceClass::Surface);
      CHECK(traces[0].fit.kappa_gate == doctest::Approx(0.006).epsilon(0.05));
    }
    SUBCASE("a defect crossing the window inside one piezo segment is unclassified") {
      AlternatingPlanOptions fine = o;
      fine.piezo_step_v = 0.25;
      const SegmentPlan p = alternating_plan(make_grid(5.0, 5.4, 0.002), fine);
      // Crosses 5.0-5.4 GHz between 24.8 and 34.4 V, inside the 20-40 V segment.
      Defect d = make_defect(0, 5.0, 0.3, 0.0, 0.0417, Host::StrayJunction);
      d.tls.eps0_ghz -= 0.0417 * 25.0;
      const auto traces = traces_for(p, EnsembleTimeline({d}));
      REQUIRE(traces.size() == 1);
      CHECK(traces[0].cls == TraceClass::Unclassified);
      CHECK(traces[0].segments == std::vector<int>{3});
    }
  }

  TEST_CASE("a junction trace stays junction and flat whatever the gate range") {
    const Defect d = make_defect(0, 5.2, 0.5, 0.0, 0.002, Host::StrayJunction);
    for (double range : {2.0, 5.0, 10.0, 20.0}) {
      CAPTURE(range);
      AlternatingPlanOptions o;
      o.piezo_total_v = 40.0;
      o.gate_lo_v = -range;
      o.gate_hi_v = range;
      const SegmentPlan plan = alternating_plan(make_grid(5.0, 5.4, 0.002), o);
      const auto traces = traces_for(plan, EnsembleTimeline({d}));
      REQUIRE(traces.size() == 1);
      CHECK(traces[0].cls == TraceClass::Junction);
      for (int s : traces[0].segments) {
        if (plan.segments[static_cast<std::size_t>(s)].swept != Channel::Gate) continue;
        double lo = 1e9, hi = -1e9;
        for (const TracePoint& p : traces[0].points) {
          if (p.segment != s) continue;
          lo = std::min(lo, p.freq_ghz);
          hi = std::max(hi, p.freq_ghz);
        }
        CHECK(hi - lo < plan.freqs.step_ghz);
      }
    }
  }

  TEST_CASE("noiseless separated ensembles are classified perfectly") {
    const SegmentPlan alternating = alternating_plan(testing::separated_grid());
    const SegmentPlan toggled = gate_toggle_plan(testing::separated_grid(), 0.0, 120.0, 1.0);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      CAPTURE(seed);
      const EnsembleTimeline truth(testing::separated_ensemble(seed, 5));
      for (const SegmentPlan* plan : {&alternating, &toggled}) {
        const TruthComparison c = compare_with_truth(traces_for(*plan, truth), truth, *plan);
        CHECK(c.classifiable_defects == 5);
        CHECK(c.junction.wrong_traces == 0);
        CHECK(c.surface.wrong_traces == 0);
        CHECK(c.junction.missed_defects == 0);
        CHECK(c.surface.missed_defects == 0);
        CHECK(c.unclassified_traces == 0);
      }
    }
  }

  TEST_CASE("each detection lands in at most one trace") {
    AlternatingPlanOptions o;
    o.piezo_total_v = 60.0;
    const SegmentPlan plan = alternating_plan(make_grid(5.0, 5.4, 0.002), o);
    Ensemble e;
    for (int k = 0; k < 6; ++k) {
      e.push_back(make_defect(k, 5.05 + 0.06 * k, 0.3 + 0.1 * k, k % 2 ? 0.004 : 0.0, k % 3 ? 0.003 : -0.003,
                              k % 2 ? Host::Electrode : Host::StrayJunction));
    }
    QubitParams q;
    const auto maps = run_swap_spectroscopy(plan, EnsembleTimeline(e), q, NoiseModel{}, 4);
    std::vector<std::vector<DipDetection>> dets;
    for (const T1Map& m : maps) dets.push_back(detect_dips(m, 4.5));
    const auto traces = link_traces(dets, plan);
    std::set<std::tuple<int, std::size_t, double>> seen;
    for (const DefectTrace& t : traces) {
      CHECK(t.points.size() >= 3);
      for (const TracePoint& p : t.points) CHECK(seen.insert(std::make_tuple(p.segment, p.bias_index, p.freq_ghz)).second);
    }
  }

  TEST_CASE("class names round trip") {
    for (TraceClass c : {TraceClass::Junction, TraceClass::Surface, TraceClass::Unclassified}) {
      CHECK(parse_trace_class(trace_class_name(c)) == c);
    }
    CHECK_THROWS_AS(parse_trace_class("bulk"), Error);
  }
}
