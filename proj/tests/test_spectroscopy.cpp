#include <cmath>
#include <numeric>

#include "doctest.h"
#include "jjtls/dips.hpp"
#include "jjtls/error.hpp"
#include "jjtls/spectroscopy.hpp"
#include "synthetic.hpp"

using namespace jjtls;
using jjtls::testing::make_defect;
using jjtls::testing::noiseless;

namespace {

constexpr double kCharge = 1.602176634e-19;
constexpr double kPlanck = 6.62607015e-34;

// Peak added rate from first principles: g = p F / h * delta / E,
// rate = 4 pi g^2 / w.
double peak_rate_oracle(const Defect& d, double eps, double field) {
  const double e = std::sqrt(d.tls.delta_ghz * d.tls.delta_ghz + eps * eps);
  const double g = d.tls.dipole_enm * 1e-9 * kCharge * d.tls.dipole_cos * field / kPlanck * 1e-6 *
                   d.tls.delta_ghz / e;
  return 4.0 * M_PI * g * g / d.half_width_mhz;
}

SegmentPlan small_plan() {
  AlternatingPlanOptions o;
  o.piezo_total_v = 40.0;
  o.piezo_segment_v = 20.0;
  o.gate_step_v = 1.0;
  return alternating_plan(make_grid(5.0, 5.4, 0.002), o);
}

}  // namespace

TEST_SUITE("spectroscopy") {
  TEST_CASE("empty ensemble relaxes at the baseline rate") {
    QubitParams q;
    q.t1_baseline_us = 12.5;
    CHECK(effective_relaxation(5.3, {}, {}, q) == 1.0 / 12.5);
    const auto maps = run_swap_spectroscopy(small_plan(), EnsembleTimeline{}, q, noiseless(), 1);
    for (const T1Map& m : maps) {
      for (double t1 : m.t1_us) REQUIRE(t1 == doctest::Approx(12.5).epsilon(1e-15));
    }
  }

  TEST_CASE("on resonance and one linewidth away") {
    QubitParams q;
    const Defect d = make_defect(0, 5.2, 1.0, 0.0, 0.002, Host::StrayJunction);
    const double peak = peak_rate_oracle(d, d.tls.eps0_ghz, q.field_stray_junction_vpm);
    const double base = 1.0 / q.t1_baseline_us;
    CHECK(effective_relaxation(5.2, {d}, {}, q) == doctest::Approx(base + peak).epsilon(1e-12));
    CHECK(effective_relaxation(5.2 + 1.6e-3, {d}, {}, q) == doctest::Approx(base + peak / 2.0).epsilon(1e-12));
    CHECK(defect_peak_rate(d, d.tls.eps0_ghz, q) == doctest::Approx(peak).epsilon(1e-12));
  }

  TEST_CASE("vectorized rows agree with the pointwise rate") {
    QubitParams q;
    Ensemble e;
    for (int k = 0; k < 9; ++k) {
      e.push_back(make_defect(k, 5.0 + 0.05 * k, 0.5 + 0.1 * k, k % 2 ? 0.01 : 0.0, 0.002, Host::Electrode));
    }
    const std::vector<double> freqs = make_grid(4.9, 5.6, 0.002).values();
    const BiasPoint bias{3.0, 17.0};
    std::vector<double> rates;
    relaxation_row(freqs, e, bias, q, rates);
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      REQUIRE(rates[i] == doctest::Approx(effective_relaxation(freqs[i], e, bias, q)).epsilon(1e-12));
    }
  }

  TEST_CASE("added rates are additive") {
    QubitParams q;
    const Ensemble a{make_defect(0, 5.1, 0.8, 0.0, 0.001, Host::StrayJunction)};
    const Ensemble b{make_defect(1, 5.13, 0.4, 0.02, 0.003, Host::Electrode)};
    Ensemble both = a;
    both.push_back(b.front());
    const double base = 1.0 / q.t1_baseline_us;
    for (double f = 5.05; f < 5.2; f += 0.0037) {
      const BiasPoint bias{1.0, 2.0};
      CHECK(effective_relaxation(f, both, bias, q) - base ==
            doctest::Approx(effective_relaxation(f, a, bias, q) - base + effective_relaxation(f, b, bias, q) - base)
                .epsilon(1e-12));
    }
  }

  TEST_CASE("maps are reproducible under a fixed seed") {
    QubitParams q;
    const EnsembleTimeline t(testing::separated_ensemble(3, 2));
    const SegmentPlan plan = small_plan();
    NoiseModel n;
    CHECK(run_swap_spectroscopy(plan, t, q, n, 9) == run_swap_spectroscopy(plan, t, q, n, 9));
    CHECK_FALSE(run_swap_spectroscopy(plan, t, q, n, 9) == run_swap_spectroscopy(plan, t, q, n, 10));
    CHECK(run_swap_spectroscopy(plan, t, q, noiseless(), 1) == run_swap_spectroscopy(plan, t, q, noiseless(), 2));
  }

  TEST_CASE("junction defects give identical rows across a gate sweep") {
    QubitParams q;
    const EnsembleTimeline t({make_defect(0, 5.2, 1.0, 0.0, 0.002, Host::StrayJunction)});
    const SegmentPlan plan = small_plan();
    const auto maps = run_swap_spectroscopy(plan, t, q, noiseless(), 1);
    for (const T1Map& m : maps) {
      if (m.swept != Channel::Gate) continue;
      for (std::size_t r = 1; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) REQUIRE(m.t1(r, c) == m.t1(0, c));
      }
    }
  }

  TEST_CASE("surface defects alternate between two branches under a toggled gate") {
    QubitParams q;
    const Defect d = make_defect(0, 5.2, 0.5, 0.01, 0.001, Host::Electrode);
    const SegmentPlan plan = gate_toggle_plan(make_grid(5.0, 5.5, 0.002), 0.0, 10.0, 1.0, {0.0, 10.0});
    const auto maps = run_swap_spectroscopy(plan, EnsembleTimeline({d}), q, noiseless(), 1);
    REQUIRE(maps.size() == 1);
    const T1Map& m = maps.front();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < m.cols(); ++c) {
        if (m.t1(r, c) < m.t1(r, best)) best = c;
      }
      const double expect = defect_frequency(d, m.biases[r]);
      CHECK(std::abs(m.freqs_ghz[best] - expect) <= 0.001 + 1e-12);
      if (r > 0) {
        const double jump = std::abs(expect - defect_frequency(d, m.biases[r - 1]));
        CHECK(jump > 0.05);  // the gate moves it by about 0.1 GHz
      }
    }
  }

  TEST_CASE("telegraph jumps") {
    QubitParams q;
    const Defect d = make_defect(4, 5.2, 1.0, 0.0, 0.002, Host::StrayJunction);
    const SegmentPlan plan = small_plan();
    const EnsembleTimeline plain({d});
    Defect moved = d;
    moved.tls.eps0_ghz = d.tls.eps0_ghz + 0.05;

    SUBCASE("at position zero it is a different ensemble") {
      const auto jumped = inject_telegraph_jump(plain, 4, moved.tls.eps0_ghz, 0);
      CHECK(run_swap_spectroscopy(plan, jumped, q, noiseless(), 1) ==
            run_swap_spectroscopy(plan, EnsembleTimeline({moved}), q, noiseless(), 1));
    }
    SUBCASE("a jump to the same offset changes nothing") {
      const auto jumped = inject_telegraph_jump(plain, 4, d.tls.eps0_ghz, 30);
      NoiseModel n;
      CHECK(run_swap_spectroscopy(plan, jumped, q, n, 5) == run_swap_spectroscopy(plan, plain, q, n, 5));
    }
    SUBCASE("mid-sweep the resonance is discontinuous at the jump") {
      const std::size_t at = plan.segments[0].size() + 7;
      const auto jumped = inject_telegraph_jump(plain, 4, moved.tls.eps0_ghz, at);
      CHECK(jumped.at(at - 1).front().tls.eps0_ghz == d.tls.eps0_ghz);
      CHECK(jumped.at(at).front().tls.eps0_ghz == moved.tls.eps0_ghz);
      const auto maps = run_swap_spectroscopy(plan, jumped, q, noiseless(), 1);
      const auto base = run_swap_spectroscopy(plan, plain, q, noiseless(), 1);
      CHECK(maps[0] == base[0]);
      CHECK(maps[1].t1_us[6 * maps[1].cols() + 10] == base[1].t1_us[6 * maps[1].cols() + 10]);
      CHECK_FALSE(maps[1] == base[1]);
    }
    SUBCASE("unknown defect") {
      CHECK_THROWS_AS(inject_telegraph_jump(plain, 99, 0.0, 0), Error);
    }
  }

  TEST_CASE("defects outside the window leave no dip") {
    QubitParams q;
    const EnsembleTimeline t({make_defect(0, 7.5, 1.0, 0.0, 0.002, Host::StrayJunction)});
    for (const T1Map& m : run_swap_spectroscopy(small_plan(), t, q, NoiseModel{}, 2)) {
      CHECK(detect_dips(m, 4.5).empty());
    }
  }

  TEST_CASE("log-normal noise has the configured spread") {
    QubitParams q;
    NoiseModel n;
    n.sigma_rel = 0.1;
    const auto maps = run_swap_spectroscopy(small_plan(), EnsembleTimeline{}, q, n, 3);
    double sum = 0.0, sum2 = 0.0, count = 0.0;
    for (const T1Map& m : maps) {
      for (std::size_t i = 0; i < m.t1_us.size(); ++i) {
        const double z = std::log(m.t1_us[i] / q.t1_baseline_us);
        sum += z;
        sum2 += z * z;
        count += 1.0;
        REQUIRE(m.noise_rel[i] == 0.1);
      }
    }
    const double mean = sum / count;
    const double sd = std::sqrt(sum2 / count - mean * mean);
    CHECK(std::abs(mean) < 4.0 * 0.1 / std::sqrt(count));
    CHECK(sd == doctest::Approx(0.1).epsilon(0.02));
  }

  TEST_CASE("binomial readout noise stays positive and near the truth") {
    QubitParams q;
    NoiseModel n;
    n.kind = NoiseModel::Kind::Binomial;
    n.shots = 2000;
    const auto maps = run_swap_spectroscopy(small_plan(), EnsembleTimeline{}, q, n, 3);
    double sum = 0.0, count = 0.0;
    for (const T1Map& m : maps) {
      m.validate();
      for (double t1 : m.t1_us) {
        sum += t1;
        count += 1.0;
      }
    }
    CHECK(sum / count == doctest::Approx(q.t1_baseline_us).epsilon(0.01));
  }

  TEST_CASE("alternating plans start and end with gate sweeps") {
    const SegmentPlan plan = alternating_plan(make_grid(5.0, 6.0, 0.002));
    REQUIRE(plan.segments.size() == 13);
    for (std::size_t s = 0; s < plan.segments.size(); ++s) {
      CHECK(plan.segments[s].swept == (s % 2 == 0 ? Channel::Gate : Channel::Piezo));
    }
    CHECK(plan.segments[2].fixed_v == 20.0);
    CHECK(plan.segments[3].start_v == 20.0);
    CHECK(plan.segments.back().fixed_v == 120.0);
    CHECK(plan.freqs.count == 501);
    CHECK(plan.freqs.stop_ghz() == doctest::Approx(6.0));
  }

  TEST_CASE("plan validation") {
    SegmentPlan plan = small_plan();
    plan.segments[1].step_v = -1.0;
    CHECK_THROWS_AS(plan.validate(), Error);
    plan = small_plan();
    plan.segments.clear();
    CHECK_THROWS_AS(plan.validate(), Error);
    for (Channel c : {Channel::Gate, Channel::Piezo}) CHECK(parse_channel(channel_name(c)) == c);
    for (auto k : {NoiseModel::Kind::None, NoiseModel::Kind::LogNormal, NoiseModel::Kind::Binomial}) {
      CHECK(parse_noise_kind(noise_kind_name(k)) == k);
    }
  }
}
