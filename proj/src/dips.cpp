#include "jjtls/dips.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "jjtls/error.hpp"
#include "least_squares.hpp"

namespace jjtls {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

struct Candidate {
  std::size_t col;
  double y;
};

// Local maxima of v at or above level whose topographic prominence reaches
// min_prominence. Walk each way until the row rises above the peak; the
// higher of the two minima passed on the way is the col. A noise ripple on
// the flank of a stronger dip has a shallow col on the side facing that dip.
std::vector<Candidate> prominent_peaks(const std::vector<double>& v, double level, double min_prominence) {
  const std::size_t n = v.size();
  std::vector<Candidate> out;
  for (std::size_t c = 0; c < n; ++c) {
    if (v[c] < level) continue;
    const bool left_ok = c == 0 || v[c] >= v[c - 1];
    const bool right_ok = c + 1 == n || v[c] > v[c + 1];
    if (!left_ok || !right_ok) continue;
    double left_min = v[c];
    for (std::size_t i = c; i-- > 0;) {
      if (v[i] > v[c]) break;
      left_min = std::min(left_min, v[i]);
    }
    double right_min = v[c];
    for (std::size_t i = c + 1; i < n; ++i) {
      if (v[i] >= v[c]) break;
      right_min = std::min(right_min, v[i]);
    }
    if (v[c] - std::max(left_min, right_min) >= min_prominence) out.push_back({c, v[c]});
  }
  return out;
}

// One Lorentzian in relative rate, amp * w^2 / (d^2 + w^2), on top of an
// already explained excess `under`.
struct Component {
  double centre_ghz = 0.0;
  double amp_rel = 0.0;
  double width_mhz = 0.0;
  double rms = 0.0;
  double prominence = 0.0;

  double at(double f_ghz) const {
    const double d = (f_ghz - centre_ghz) * 1e3;
    return amp_rel * width_mhz * width_mhz / (d * d + width_mhz * width_mhz);
  }
};

// Fits a component around column c of y (log rate over the row median),
// using columns lo..hi. Returns nothing when the fitted centre leaves the
// frequency range.
std::optional<Component> fit_component(const std::vector<double>& freqs, const std::vector<double>& y,
                                       const std::vector<double>& under, std::size_t c, std::size_t lo,
                                       std::size_t hi, double step_mhz, double width_guess) {
  const std::size_t nf = y.size();
  const double fc = freqs[c];
  std::vector<double> xs, ys, us;
  for (std::size_t i = lo; i <= hi; ++i) {
    xs.push_back((freqs[i] - fc) * 1e3);
    ys.push_back(y[i]);
    us.push_back(under[i]);
  }
  auto excess = [&](std::size_t i) { return std::log1p(under[i]); };

  // Parabolic vertex of the three points around the maximum as the
  // starting centre.
  double c0 = 0.0;
  if (c > 0 && c + 1 < nf) {
    const double a = y[c - 1] - excess(c - 1);
    const double b = y[c] - excess(c);
    const double d = y[c + 1] - excess(c + 1);
    const double den = a - 2.0 * b + d;
    if (den < 0.0) c0 = std::clamp(0.5 * (a - d) / den, -0.5, 0.5) * step_mhz;
  }
  const double amp0 = std::max((std::exp(y[c]) - 1.0 - under[c]), 1e-6);

  Component out;
  double centre = c0;
  out.amp_rel = amp0;
  out.width_mhz = width_guess;
  bool fitted = false;
  auto rel_model = [&](std::size_t i, double ctr, double a, double w) {
    const double d = xs[i] - ctr;
    return std::log1p(us[i] + a * w * w / (d * d + w * w)) - ys[i];
  };
  if (xs.size() >= 4) {
    Eigen::VectorXd p(3);
    p << c0, std::log(amp0), width_guess;
    const auto n = static_cast<Eigen::Index>(xs.size());
    auto model = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
      const double a = std::exp(q[1]);
      for (Eigen::Index i = 0; i < n; ++i) r[i] = rel_model(static_cast<std::size_t>(i), q[0], a, q[2]);
    };
    const detail::LmOutcome fit = detail::levenberg_marquardt(model, p, n);
    const double w = std::abs(fit.params[2]);
    if (fit.ok && std::abs(fit.params[0]) <= step_mhz && w > 0.05 * step_mhz && w < 20.0 * width_guess &&
        std::isfinite(fit.params[1])) {
      centre = fit.params[0];
      out.amp_rel = std::exp(fit.params[1]);
      out.width_mhz = w;
      out.rms = std::sqrt(fit.rss / static_cast<double>(n));
      fitted = true;
    }
  }
  if (!fitted) {
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = rel_model(i, centre, out.amp_rel, out.width_mhz);
      rss += r * r;
    }
    out.rms = std::sqrt(rss / static_cast<double>(xs.size()));
  }
  out.centre_ghz = fc + centre * 1e-3;
  if (out.centre_ghz < freqs.front() || out.centre_ghz > freqs.back()) return std::nullopt;
  return out;
}

}  // namespace

std::vector<DipDetection> detect_dips(const T1Map& map, double threshold_sigma,
                                      const DipOptions& options) {
  map.validate();
  if (!(threshold_sigma > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "threshold_sigma must be positive");
  }
  const std::size_t nf = map.cols();
  std::vector<DipDetection> out;
  if (nf < 3) return out;
  const double step_mhz = (map.freqs_ghz[1] - map.freqs_ghz[0]) * 1e3;
  const int half = options.fit_half_window > 0
                       ? options.fit_half_window
                       : std::max(3, static_cast<int>(std::ceil(3.0 * options.width_guess_mhz / step_mhz)));
  const double min_gap_ghz = options.deblend_min_gap_mhz * 1e-3;

  std::vector<double> rate(nf), y(nf), noise(nf), under(nf), resid(nf);
  for (std::size_t row = 0; row < map.rows(); ++row) {
    for (std::size_t c = 0; c < nf; ++c) {
      rate[c] = 1.0 / map.t1(row, c);
      noise[c] = map.noise(row, c);
    }
    const double base = median(rate);
    for (std::size_t c = 0; c < nf; ++c) y[c] = std::log(rate[c] / base);

    double sigma = median(noise);
    if (!(sigma > 0.0)) {
      std::vector<double> dev(nf);
      for (std::size_t c = 0; c < nf; ++c) dev[c] = std::abs(y[c]);
      sigma = 1.4826 * median(dev);
    }
    sigma = std::max(sigma, options.min_noise);
    const double level = threshold_sigma * sigma;
    const double prominence = options.separation_sigma * sigma;

    std::vector<Component> comps;
    std::fill(under.begin(), under.end(), 0.0);
    const std::vector<Candidate> kept = prominent_peaks(y, level, prominence);
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const std::size_t c = kept[k].col;
      // Fit window: up to `half` points each side, stopping halfway to the
      // neighbouring peaks.
      std::size_t lo = c >= static_cast<std::size_t>(half) ? c - half : 0;
      std::size_t hi = std::min(nf - 1, c + half);
      if (k > 0) lo = std::max(lo, (kept[k - 1].col + c) / 2 + 1);
      if (k + 1 < kept.size()) hi = std::min(hi, (kept[k + 1].col + c + 1) / 2 - 1);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
      if (auto comp = fit_component(map.freqs_ghz, y, under, c, lo, hi, step_mhz, options.width_guess_mhz)) {
        comp->prominence = kept[k].y / sigma;
        comps.push_back(*comp);
      }
    }

    // Weak dips sitting on the tail of a strong one have no col of their
    // own. Subtract the fitted dips and look again in what is left.
    for (int pass = 0; pass < options.deblend_passes; ++pass) {
      for (std::size_t c = 0; c < nf; ++c) {
        double m = 0.0;
        for (const Component& k : comps) m += k.at(map.freqs_ghz[c]);
        under[c] = m;
        resid[c] = y[c] - std::log1p(m);
      }
      std::vector<Component> found;
      for (const Candidate& cand : prominent_peaks(resid, level, prominence)) {
        const double fc = map.freqs_ghz[cand.col];
        const bool clear = std::none_of(comps.begin(), comps.end(), [&](const Component& k) {
          return std::abs(k.centre_ghz - fc) < min_gap_ghz;
        });
        if (!clear) continue;
        const std::size_t c = cand.col;
        const std::size_t lo = c >= static_cast<std::size_t>(half) ? c - half : 0;
        const std::size_t hi = std::min(nf - 1, c + half);
        auto comp = fit_component(map.freqs_ghz, y, under, c, lo, hi, step_mhz, options.width_guess_mhz);
        if (!comp) continue;
        const bool still_clear = std::none_of(comps.begin(), comps.end(), [&](const Component& k) {
          return std::abs(k.centre_ghz - comp->centre_ghz) < min_gap_ghz;
        });
        if (!still_clear) continue;
        comp->prominence = cand.y / sigma;
        found.push_back(*comp);
      }
      if (found.empty()) break;
      comps.insert(comps.end(), found.begin(), found.end());
    }

    std::sort(comps.begin(), comps.end(),
              [](const Component& a, const Component& b) { return a.centre_ghz < b.centre_ghz; });
    for (const Component& k : comps) {
      DipDetection d;
      d.segment = map.segment;
      d.bias_index = row;
      d.center_ghz = k.centre_ghz;
      d.depth_per_us = k.amp_rel * base;
      d.width_mhz = k.width_mhz;
      d.residual = k.rms;
      d.prominence_sigma = k.prominence;
      out.push_back(d);
    }
  }
  return out;
}

}  // namespace jjtls
