#include "jjtls/traces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>

#include "jjtls/error.hpp"
#include "least_squares.hpp"

namespace jjtls {
namespace {

double swept_value(const Segment& seg, const BiasPoint& b) {
  return seg.swept == Channel::Gate ? b.v_gate : b.v_piezo;
}

struct Tracklet {
  int segment = 0;
  int group = 0;
  std::vector<TracePoint> pts;
  std::vector<double> xs;  // swept coordinate per point
  std::size_t last_step = 0;  // position within the group's row list
};

// Least-squares line through the last few points, evaluated at x.
double predict(const Tracklet& t, double x) {
  const std::size_t n = t.pts.size();
  if (n == 1) return t.pts.back().freq_ghz;
  const std::size_t k = std::min<std::size_t>(4, n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = n - k; i < n; ++i) {
    const double xi = t.xs[i];
    const double yi = t.pts[i].freq_ghz;
    sx += xi;
    sy += yi;
    sxx += xi * xi;
    sxy += xi * yi;
  }
  const double kk = static_cast<double>(k);
  const double den = kk * sxx - sx * sx;
  if (std::abs(den) < 1e-12) return sy / kk;
  const double slope = (kk * sxy - sx * sy) / den;
  return (sy - slope * sx) / kk + slope * x;
}

// Same, extrapolating backwards from the first few points.
double predict_front(const Tracklet& t, double x) {
  Tracklet rev;
  const std::size_t k = std::min<std::size_t>(4, t.pts.size());
  for (std::size_t i = 0; i < k; ++i) {
    rev.pts.push_back(t.pts[k - 1 - i]);
    rev.xs.push_back(t.xs[k - 1 - i]);
  }
  return predict(rev, x);
}

struct Pair {
  double residual;
  std::size_t tracklet;
  std::size_t detection;
  std::size_t length;
};

// Greedy assignment: smallest residual first, ties to the longer tracklet.
void sort_pairs(std::vector<Pair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.residual != b.residual) return a.residual < b.residual;
    return a.length > b.length;
  });
}

std::vector<Tracklet> link_group(int segment, int group, const Segment& seg,
                                 const std::vector<BiasPoint>& biases,
                                 const std::vector<std::size_t>& rows,
                                 const std::vector<std::vector<const DipDetection*>>& by_row,
                                 const LinkOptions& opt) {
  std::vector<Tracklet> done;
  std::vector<Tracklet> open;
  for (std::size_t step = 0; step < rows.size(); ++step) {
    const std::size_t row = rows[step];
    const double x = swept_value(seg, biases[row]);
    // Close tracklets that have missed too many rows.
    for (std::size_t t = 0; t < open.size();) {
      if (step - open[t].last_step > static_cast<std::size_t>(opt.max_gap) + 1) {
        done.push_back(std::move(open[t]));
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(t));
      } else {
        ++t;
      }
    }
    const auto& dets = by_row[row];
    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < open.size(); ++t) {
      const double pred = predict(open[t], x);
      const double tol = open[t].pts.size() == 1 ? opt.max_jump_mhz : opt.max_residual_mhz;
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const double r = std::abs(dets[d]->center_ghz - pred) * 1e3;
        if (r <= tol) pairs.push_back({r, t, d, open[t].pts.size()});
      }
    }
    sort_pairs(pairs);
    std::vector<char> t_used(open.size(), 0), d_used(dets.size(), 0);
    auto point_of = [&](const DipDetection& d) {
      return TracePoint{segment, row, biases[row], d.center_ghz, d.depth_per_us, d.width_mhz};
    };
    for (const Pair& p : pairs) {
      if (t_used[p.tracklet] || d_used[p.detection]) continue;
      t_used[p.tracklet] = d_used[p.detection] = 1;
      Tracklet& t = open[p.tracklet];
      t.pts.push_back(point_of(*dets[p.detection]));
      t.xs.push_back(x);
      t.last_step = step;
    }
    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (d_used[d]) continue;
      Tracklet t;
      t.segment = segment;
      t.group = group;
      t.pts.push_back(point_of(*dets[d]));
      t.xs.push_back(x);
      t.last_step = step;
      open.push_back(std::move(t));
    }
  }
  for (Tracklet& t : open) done.push_back(std::move(t));

  // Bridge longer gaps when both fragments extrapolate onto each other.
  bool merged = true;
  while (merged) {
    merged = false;
    double best = opt.max_residual_mhz;
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < done.size(); ++a) {
      if (done[a].pts.size() < 2) continue;
      for (std::size_t b = 0; b < done.size(); ++b) {
        if (a == b || done[b].pts.size() < 2) continue;
        if (done[b].pts.front().bias_index <= done[a].pts.back().bias_index) continue;
        const double fwd = std::abs(predict(done[a], done[b].xs.front()) - done[b].pts.front().freq_ghz) * 1e3;
        const double bwd = std::abs(predict_front(done[b], done[a].xs.back()) - done[a].pts.back().freq_ghz) * 1e3;
        const double r = std::max(fwd, bwd);
        if (r < best) {
          best = r;
          ba = a;
          bb = b;
          merged = true;
        }
      }
    }
    if (merged) {
      Tracklet& a = done[ba];
      Tracklet& b = done[bb];
      a.pts.insert(a.pts.end(), b.pts.begin(), b.pts.end());
      a.xs.insert(a.xs.end(), b.xs.begin(), b.xs.end());
      done.erase(done.begin() + static_cast<std::ptrdiff_t>(bb));
    }
  }
  return done;
}

// Merges tracklets from different gate values of a toggled sweep when they
// sit at the same frequency.
std::vector<Tracklet> merge_toggle_groups(std::vector<Tracklet> ts, const LinkOptions& opt) {
  std::map<int, std::vector<Tracklet>> by_group;
  for (Tracklet& t : ts) by_group[t.group].push_back(std::move(t));
  std::vector<Tracklet> merged;
  for (auto& [group, list] : by_group) {
    if (merged.empty()) {
      merged = std::move(list);
      continue;
    }
    struct Match {
      double median;
      std::size_t m;
      std::size_t t;
    };
    std::vector<Match> matches;
    for (std::size_t m = 0; m < merged.size(); ++m) {
      const auto& mp = merged[m].pts;
      for (std::size_t t = 0; t < list.size(); ++t) {
        std::vector<double> diffs;
        for (const TracePoint& p : list[t].pts) {
          // The other branch interpolated to this row: the piezo keeps
          // moving the defect between neighbouring rows.
          const TracePoint* before = nullptr;
          const TracePoint* after = nullptr;
          for (const TracePoint& q : mp) {
            if (q.bias_index < p.bias_index && p.bias_index - q.bias_index < 3 &&
                (!before || q.bias_index > before->bias_index)) {
              before = &q;
            }
            if (q.bias_index > p.bias_index && q.bias_index - p.bias_index < 3 &&
                (!after || q.bias_index < after->bias_index)) {
              after = &q;
            }
          }
          if (!before && !after) continue;
          double expect = before ? before->freq_ghz : after->freq_ghz;
          if (before && after) {
            const double u = static_cast<double>(p.bias_index - before->bias_index) /
                             static_cast<double>(after->bias_index - before->bias_index);
            expect = before->freq_ghz + u * (after->freq_ghz - before->freq_ghz);
          }
          diffs.push_back(std::abs(expect - p.freq_ghz) * 1e3);
        }
        const std::size_t shorter = std::min(mp.size(), list[t].pts.size());
        if (diffs.empty() || 2 * diffs.size() < shorter) continue;
        std::nth_element(diffs.begin(), diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2), diffs.end());
        const double med = diffs[diffs.size() / 2];
        if (med <= opt.toggle_merge_mhz) matches.push_back({med, m, t});
      }
    }
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) { return a.median < b.median; });
    // A branch may absorb several pieces of the other branch as long as
    // their row spans do not overlap.
    auto span_of = [](const Tracklet& t) {
      const auto [lo, hi] = std::minmax_element(t.pts.begin(), t.pts.end(), [](const TracePoint& a, const TracePoint& b) {
        return a.bias_index < b.bias_index;
      });
      return std::pair{lo->bias_index, hi->bias_index};
    };
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> taken(merged.size());
    std::vector<char> t_used(list.size(), 0);
    for (const Match& mt : matches) {
      if (t_used[mt.t]) continue;
      const auto span = span_of(list[mt.t]);
      const bool overlaps = std::any_of(taken[mt.m].begin(), taken[mt.m].end(), [&](const auto& o) {
        return span.first <= o.second && o.first <= span.second;
      });
      if (overlaps) continue;
      taken[mt.m].push_back(span);
      t_used[mt.t] = 1;
      Tracklet& into = merged[mt.m];
      into.pts.insert(into.pts.end(), list[mt.t].pts.begin(), list[mt.t].pts.end());
      into.xs.insert(into.xs.end(), list[mt.t].xs.begin(), list[mt.t].xs.end());
    }
    for (std::size_t t = 0; t < list.size(); ++t) {
      if (!t_used[t]) merged.push_back(std::move(list[t]));
    }
  }
  for (Tracklet& t : merged) {
    std::vector<std::size_t> order(t.pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return t.pts[a].bias_index < t.pts[b].bias_index; });
    Tracklet s = t;
    for (std::size_t i = 0; i < order.size(); ++i) {
      s.pts[i] = t.pts[order[i]];
      s.xs[i] = t.xs[order[i]];
    }
    t = std::move(s);
  }
  return merged;
}

double bias_distance(const BiasPoint& a, const BiasPoint& b) {
  return std::abs(a.v_gate - b.v_gate) + std::abs(a.v_piezo - b.v_piezo);
}

// Frequency spread of a set of (x, f) samples after smoothing with a
// quadratic fit; plain max - min for three or fewer points. Points lying
// far off the fit (a neighbouring dip picked up at a crossing) are dropped
// and the fit repeated.
double smoothed_motion_mhz(const std::vector<double>& x, const std::vector<double>& f) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  if (n <= 3) {
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    return (*hi - *lo) * 1e3;
  }
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<bool> keep(n, true);
  Eigen::VectorXd c;
  for (int pass = 0; pass < 3; ++pass) {
    const auto m = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), true));
    if (m < 4) break;
    Eigen::MatrixXd a(m, 3);
    Eigen::VectorXd b(m);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep[i]) continue;
      const double u = x[i] - xm;
      a(row, 0) = 1.0;
      a(row, 1) = u;
      a(row, 2) = u * u;
      b[row++] = f[i] * 1e3;
    }
    c = a.colPivHouseholderQr().solve(b);
    std::vector<double> resid(n);
    std::vector<double> kept_abs;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = x[i] - xm;
      resid[i] = std::abs(f[i] * 1e3 - (c[0] + c[1] * u + c[2] * u * u));
      if (keep[i]) kept_abs.push_back(resid[i]);
    }
    std::nth_element(kept_abs.begin(), kept_abs.begin() + static_cast<std::ptrdiff_t>(kept_abs.size() / 2),
                     kept_abs.end());
    const double cut = std::max(1.0, 5.0 * 1.4826 * kept_abs[kept_abs.size() / 2]);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool k = resid[i] <= cut;
      changed = changed || k != keep[i];
      keep[i] = k;
    }
    if (!changed) break;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    const double u = x[i] - xm;
    const double v = c[0] + c[1] * u + c[2] * u * u;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi > lo ? hi - lo : 0.0;
}

}  // namespace

std::string_view trace_class_name(TraceClass c) {
  switch (c) {
    case TraceClass::Junction: return "junction";
    case TraceClass::Surface: return "surface";
    case TraceClass::Unclassified: return "unclassified";
  }
  return "unclassified";
}

TraceClass parse_trace_class(std::string_view name) {
  if (name == "junction") return TraceClass::Junction;
  if (name == "surface") return TraceClass::Surface;
  if (name == "unclassified") return TraceClass::Unclassified;
  throw Error(ErrorCategory::InvalidArgument, "unknown trace class '" + std::string(name) + "'");
}

double hyperbola_frequency(const HyperbolaFit& fit, const BiasPoint& bias) {
  const double eps = fit.eps0_ghz + fit.kappa_gate * bias.v_gate + fit.kappa_piezo * bias.v_piezo;
  return std::hypot(fit.delta_ghz, eps);
}

std::vector<DefectTrace> link_traces(const std::vector<std::vector<DipDetection>>& detections,
                                     const SegmentPlan& plan, const LinkOptions& opt) {
  plan.validate();
  if (detections.size() != plan.segments.size()) {
    throw Error(ErrorCategory::InvalidArgument, "need one detection list per plan segment");
  }

  struct Building {
    std::vector<TracePoint> pts;
    int last_segment = -1;
  };
  std::vector<Building> traces;

  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    const Segment& seg = plan.segments[s];
    const std::vector<BiasPoint> biases = seg.biases();
    std::vector<std::vector<const DipDetection*>> by_row(biases.size());
    for (const DipDetection& d : detections[s]) {
      if (d.bias_index >= biases.size()) {
        throw Error(ErrorCategory::InvalidArgument, "detection bias index outside its segment");
      }
      by_row[d.bias_index].push_back(&d);
    }
    const std::size_t groups = seg.gate_pattern.empty() ? 1 : seg.gate_pattern.size();
    std::vector<Tracklet> tracklets;
    for (std::size_t g = 0; g < groups; ++g) {
      std::vector<std::size_t> rows;
      for (std::size_t r = g; r < biases.size(); r += groups) rows.push_back(r);
      auto part = link_group(static_cast<int>(s), static_cast<int>(g), seg, biases, rows, by_row, opt);
      tracklets.insert(tracklets.end(), std::make_move_iterator(part.begin()),
                       std::make_move_iterator(part.end()));
    }
    if (groups > 1) tracklets = merge_toggle_groups(std::move(tracklets), opt);

    // Join to traces that were visible in the previous segment.
    struct Join {
      double df;
      std::size_t trace;
      std::size_t tracklet;
    };
    std::vector<Join> joins;
    for (std::size_t tr = 0; tr < traces.size(); ++tr) {
      if (traces[tr].last_segment != static_cast<int>(s) - 1) continue;
      for (std::size_t t = 0; t < tracklets.size(); ++t) {
        // Compare at the closest pair of bias points only, so that a
        // trace merely passing by within the bias tolerance cannot claim
        // the continuation.
        double closest = opt.join_bias_tol_v;
        double df = 0.0;
        bool any = false;
        for (const TracePoint& a : traces[tr].pts) {
          if (a.segment != static_cast<int>(s) - 1) continue;
          for (const TracePoint& b : tracklets[t].pts) {
            const double dist = bias_distance(a.bias, b.bias);
            const double d = std::abs(a.freq_ghz - b.freq_ghz) * 1e3;
            if (dist < closest - 1e-9 || (dist <= closest + 1e-9 && (!any || d < df))) {
              closest = dist;
              df = d;
              any = true;
            }
          }
        }
        if (any && df <= opt.join_freq_tol_mhz) joins.push_back({df, tr, t});
      }
    }
    std::sort(joins.begin(), joins.end(), [](const Join& a, const Join& b) { return a.df < b.df; });
    std::vector<char> tr_used(traces.size(), 0), t_used(tracklets.size(), 0);
    for (const Join& j : joins) {
      if (tr_used[j.trace] || t_used[j.tracklet]) continue;
      tr_used[j.trace] = t_used[j.tracklet] = 1;
      auto& pts = traces[j.trace].pts;
      pts.insert(pts.end(), tracklets[j.tracklet].pts.begin(), tracklets[j.tracklet].pts.end());
      traces[j.trace].last_segment = static_cast<int>(s);
    }
    for (std::size_t t = 0; t < tracklets.size(); ++t) {
      if (t_used[t]) continue;
      traces.push_back({std::move(tracklets[t].pts), static_cast<int>(s)});
    }
  }

  std::vector<DefectTrace> out;
  for (Building& b : traces) {
    if (b.pts.size() < opt.min_points) continue;
    DefectTrace t;
    t.id = static_cast<int>(out.size());
    t.points = std::move(b.pts);
    for (const TracePoint& p : t.points) t.segments.push_back(p.segment);
    std::sort(t.segments.begin(), t.segments.end());
    t.segments.erase(std::unique(t.segments.begin(), t.segments.end()), t.segments.end());
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

// What one segment of a trace says about gate response. `votes` is the
// number of comparisons behind `motion`; `flat_ok` is false when too little
// of a gate sweep was seen for a small motion to count as flat.
struct GateEvidence {
  double motion = 0.0;
  double votes = 0.0;
  bool flat_ok = false;
};

std::optional<GateEvidence> gate_evidence(const DefectTrace& trace, int s, const SegmentPlan& plan,
                                          const ClassifyOptions& opt) {
  const Segment& seg = plan.segments.at(static_cast<std::size_t>(s));
  std::vector<const TracePoint*> pts;
  for (const TracePoint& p : trace.points) {
    if (p.segment == s) pts.push_back(&p);
  }
  if (pts.empty()) return std::nullopt;
  if (seg.swept == Channel::Gate) {
    if (pts.size() < 2) return std::nullopt;
    std::vector<double> x, f;
    for (const TracePoint* p : pts) {
      x.push_back(p->bias.v_gate);
      f.push_back(p->freq_ghz);
    }
    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](const TracePoint* a, const TracePoint* b) {
      return a->bias_index < b->bias_index;
    });
    const double coverage = static_cast<double>((*hi)->bias_index - (*lo)->bias_index + 1) /
                            static_cast<double>(seg.size());
    return GateEvidence{smoothed_motion_mhz(x, f), static_cast<double>(pts.size()),
                        coverage >= opt.min_gate_coverage};
  }
  if (seg.gate_pattern.size() < 2) return std::nullopt;
  // Gate-toggled sweep: compare each point with the mean of its
  // neighbours taken at the other gate value.
  std::map<std::size_t, const TracePoint*> by_row;
  std::vector<double> gates;
  for (const TracePoint* p : pts) {
    by_row[p->bias_index] = p;
    gates.push_back(p->bias.v_gate);
  }
  std::sort(gates.begin(), gates.end());
  gates.erase(std::unique(gates.begin(), gates.end()), gates.end());
  if (gates.size() < 2) {
    // Seen at one gate value only: it vanished at the other.
    if (pts.size() >= 3) return GateEvidence{std::numeric_limits<double>::infinity(), static_cast<double>(pts.size()), false};
    return std::nullopt;
  }
  std::vector<double> diffs;
  for (const auto& [row, p] : by_row) {
    auto prev = by_row.find(row - 1);
    auto next = by_row.find(row + 1);
    if (row == 0 || prev == by_row.end() || next == by_row.end()) continue;
    if (prev->second->bias.v_gate == p->bias.v_gate) continue;
    diffs.push_back(std::abs(p->freq_ghz - 0.5 * (prev->second->freq_ghz + next->second->freq_ghz)) * 1e3);
  }
  if (diffs.empty()) return std::nullopt;
  std::nth_element(diffs.begin(), diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2), diffs.end());
  return GateEvidence{diffs[diffs.size() / 2], static_cast<double>(diffs.size()), true};
}

}  // namespace

TraceClass classify_trace(DefectTrace& trace, const SegmentPlan& plan, const ClassifyOptions& opt) {
  if (trace.points.empty()) {
    throw Error(ErrorCategory::InvalidArgument, "cannot classify an empty trace");
  }
  // Each gate-resolved segment votes with its number of points, so a single
  // segment spoiled by a crossing does not decide a long trace.
  double moving = 0.0;
  double flat = 0.0;
  double short_flat = 0.0;
  double motion_max = 0.0;
  for (int s : trace.segments) {
    const auto ev = gate_evidence(trace, s, plan, opt);
    if (!ev) continue;
    if (std::isfinite(ev->motion)) motion_max = std::max(motion_max, ev->motion);
    if (ev->motion >= opt.flat_threshold_mhz) {
      moving += ev->votes;
    } else if (ev->flat_ok) {
      flat += ev->votes;
    } else {
      short_flat += ev->votes;
    }
  }
  trace.gate_motion_mhz = motion_max;
  if (moving > 0.0 && moving >= flat) {
    trace.cls = TraceClass::Surface;
  } else if (flat > 0.0 || short_flat > 0.0) {
    // A flat stretch shorter than the coverage requirement only counts
    // when nothing better is available.
    trace.cls = TraceClass::Junction;
  } else {
    trace.cls = TraceClass::Unclassified;
  }
  return trace.cls;
}

std::vector<DefectTrace> split_at_hops(const DefectTrace& trace, const SegmentPlan& plan,
                                       const ClassifyOptions& opt) {
  enum class Kind { None, Moving, Flat };
  std::vector<Kind> kinds;
  bool any_moving = false;
  bool any_flat = false;
  for (int s : trace.segments) {
    Kind k = Kind::None;
    if (const auto ev = gate_evidence(trace, s, plan, opt)) {
      if (ev->motion >= opt.hop_motion_mhz) {
        k = Kind::Moving;
      } else if (ev->motion < opt.flat_threshold_mhz && ev->flat_ok) {
        k = Kind::Flat;
      }
    }
    any_moving = any_moving || k == Kind::Moving;
    any_flat = any_flat || k == Kind::Flat;
    kinds.push_back(k);
  }
  if (!any_moving || !any_flat) return {trace};

  // A new piece starts at each gate-resolved segment that disagrees with
  // the piece so far; segments without evidence stay with what precedes.
  std::vector<std::vector<int>> pieces(1);
  Kind current = Kind::None;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] != Kind::None && current != Kind::None && kinds[i] != current) pieces.emplace_back();
    if (kinds[i] != Kind::None) current = kinds[i];
    pieces.back().push_back(trace.segments[i]);
  }
  std::vector<DefectTrace> out;
  for (const std::vector<int>& segs : pieces) {
    DefectTrace piece;
    piece.id = trace.id;
    piece.segments = segs;
    for (const TracePoint& p : trace.points) {
      if (std::find(segs.begin(), segs.end(), p.segment) != segs.end()) piece.points.push_back(p);
    }
    out.push_back(std::move(piece));
  }
  return out;
}

HyperbolaFit fit_hyperbola(const DefectTrace& trace) {
  HyperbolaFit fit;
  const std::size_t n = trace.points.size();
  if (n == 0) return fit;
  double g_lo = trace.points[0].bias.v_gate, g_hi = g_lo;
  double p_lo = trace.points[0].bias.v_piezo, p_hi = p_lo;
  for (const TracePoint& p : trace.points) {
    g_lo = std::min(g_lo, p.bias.v_gate);
    g_hi = std::max(g_hi, p.bias.v_gate);
    p_lo = std::min(p_lo, p.bias.v_piezo);
    p_hi = std::max(p_hi, p.bias.v_piezo);
  }
  fit.gate_free = trace.cls != TraceClass::Junction && g_hi > g_lo;
  fit.piezo_free = p_hi > p_lo;
  const int n_params = 2 + (fit.gate_free ? 1 : 0) + (fit.piezo_free ? 1 : 0);

  // Starting point from a linear fit of f^2, a quadratic form in the
  // biases.
  std::vector<int> cols;  // 0:1 1:g 2:p 3:g^2 4:gp 5:p^2
  cols.push_back(0);
  if (fit.gate_free) cols.insert(cols.end(), {1, 3});
  if (fit.piezo_free) cols.insert(cols.end(), {2, 5});
  if (fit.gate_free && fit.piezo_free) cols.push_back(4);
  const double f_mean = std::accumulate(trace.points.begin(), trace.points.end(), 0.0,
                                        [](double a, const TracePoint& p) { return a + p.freq_ghz; }) /
                        static_cast<double>(n);
  double c[6] = {f_mean * f_mean, 0, 0, 0, 0, 0};
  if (n >= cols.size()) {
    Eigen::MatrixXd a(n, cols.size());
    Eigen::VectorXd b(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = trace.points[i].bias.v_gate;
      const double p = trace.points[i].bias.v_piezo;
      const double basis[6] = {1.0, g, p, g * g, g * p, p * p};
      for (std::size_t k = 0; k < cols.size(); ++k) {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = basis[cols[k]];
      }
      b[static_cast<Eigen::Index>(i)] = trace.points[i].freq_ghz * trace.points[i].freq_ghz;
    }
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < cols.size(); ++k) c[cols[k]] = sol[static_cast<Eigen::Index>(k)];
  }
  double kp = std::sqrt(std::max(c[5], 0.0));
  double kg = std::sqrt(std::max(c[3], 0.0));
  if (fit.gate_free && fit.piezo_free && c[4] < 0.0) kg = -kg;
  double eps0 = 0.0;
  if (kp > 1e-9) {
    eps0 = c[2] / (2.0 * kp);
  } else if (kg > 1e-9) {
    eps0 = c[1] / (2.0 * kg);
  }
  double delta2 = c[0] - eps0 * eps0;
  if (!(delta2 > 0.0)) {
    delta2 = 0.25 * f_mean * f_mean;
    eps0 = std::sqrt(0.75) * f_mean;
  }
  if (fit.piezo_free && kp <= 1e-9) kp = 1e-3;
  if (fit.gate_free && std::abs(kg) <= 1e-9) kg = 1e-2;

  Eigen::VectorXd start(n_params);
  int k = 0;
  start[k++] = std::sqrt(delta2);
  start[k++] = eps0;
  if (fit.gate_free) start[k++] = kg;
  if (fit.piezo_free) start[k++] = kp;

  auto unpack = [&](const Eigen::VectorXd& q, double& d, double& e, double& g, double& p) {
    int i = 0;
    d = std::abs(q[i++]);
    e = q[i++];
    g = fit.gate_free ? q[i++] : 0.0;
    p = fit.piezo_free ? q[i++] : 0.0;
  };
  auto residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
    double d, e, g, p;
    unpack(q, d, e, g, p);
    for (std::size_t i = 0; i < n; ++i) {
      const BiasPoint& b = trace.points[i].bias;
      r[static_cast<Eigen::Index>(i)] =
          (std::hypot(d, e + g * b.v_gate + p * b.v_piezo) - trace.points[i].freq_ghz) * 1e3;
    }
  };
  if (static_cast<int>(n) <= n_params) {
    unpack(start, fit.delta_ghz, fit.eps0_ghz, fit.kappa_gate, fit.kappa_piezo);
    return fit;
  }
  const detail::LmOutcome lm = detail::levenberg_marquardt(residuals, start, static_cast<Eigen::Index>(n));
  unpack(lm.params, fit.delta_ghz, fit.eps0_ghz, fit.kappa_gate, fit.kappa_piezo);
  if (fit.eps0_ghz < 0.0) {
    fit.eps0_ghz = -fit.eps0_ghz;
    fit.kappa_gate = -fit.kappa_gate;
    fit.kappa_piezo = -fit.kappa_piezo;
  }
  fit.rms_mhz = std::sqrt(lm.rss / static_cast<double>(n));
  fit.ok = lm.ok;
  return fit;
}

std::vector<DefectTrace> analyze_maps(const std::vector<T1Map>& maps, const SegmentPlan& plan,
                                      const TraceAnalysisOptions& options) {
  if (maps.size() != plan.segments.size()) {
    throw Error(ErrorCategory::InvalidArgument, "need one T1 map per plan segment");
  }
  std::vector<std::vector<DipDetection>> dets;
  dets.reserve(maps.size());
  for (const T1Map& m : maps) dets.push_back(detect_dips(m, options.threshold_sigma, options.dips));
  std::vector<DefectTrace> traces;
  for (const DefectTrace& linked : link_traces(dets, plan, options.link)) {
    for (DefectTrace& t : split_at_hops(linked, plan, options.classify)) {
      if (classify_trace(t, plan, options.classify) == TraceClass::Unclassified) {
        // Lone detections in a gate sweep say nothing about the gate
        // response; the rest of the trace belongs to piezo sweeps.
        std::erase_if(t.points, [&](const TracePoint& p) {
          return plan.segments[static_cast<std::size_t>(p.segment)].swept == Channel::Gate;
        });
        std::erase_if(t.segments, [&](int s) { return plan.segments[static_cast<std::size_t>(s)].swept == Channel::Gate; });
        if (t.points.size() < options.link.min_points) continue;
      }
      t.id = static_cast<int>(traces.size());
      t.fit = fit_hyperbola(t);
      traces.push_back(std::move(t));
    }
  }
  return traces;
}

double ClassScore::precision() const {
  const int n = correct_traces + wrong_traces;
  return n == 0 ? 1.0 : static_cast<double>(correct_traces) / n;
}

double ClassScore::recall() const {
  const int n = found_defects + missed_defects;
  return n == 0 ? 1.0 : static_cast<double>(found_defects) / n;
}

TruthComparison compare_with_truth(const std::vector<DefectTrace>& traces,
                                   const EnsembleTimeline& truth, const SegmentPlan& plan,
                                   double tolerance_mhz) {
  plan.validate();
  std::vector<std::size_t> offset(plan.segments.size(), 0);
  for (std::size_t s = 1; s < plan.segments.size(); ++s) {
    offset[s] = offset[s - 1] + plan.segments[s - 1].size();
  }
  const Ensemble& base = truth.base();
  auto ensemble_at = [&](std::size_t position) { return truth.has_jumps() ? truth.at(position) : base; };
  auto true_class = [](const Defect& d) {
    return d.host == Host::Electrode ? TraceClass::Surface : TraceClass::Junction;
  };
  const FreqWindow win = plan.freqs.window();

  // Which defects could in principle be classified.
  std::vector<char> classifiable(base.size(), 0);
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    const Segment& seg = plan.segments[s];
    const bool gate_info = seg.swept == Channel::Gate || seg.gate_pattern.size() >= 2;
    if (!gate_info) continue;
    const auto biases = seg.biases();
    std::vector<std::vector<double>> gates(base.size());
    for (std::size_t r = 0; r < biases.size(); ++r) {
      const Ensemble e = ensemble_at(offset[s] + r);
      for (std::size_t k = 0; k < e.size(); ++k) {
        if (win.contains(defect_frequency(e[k], biases[r]))) gates[k].push_back(biases[r].v_gate);
      }
    }
    for (std::size_t k = 0; k < base.size(); ++k) {
      std::sort(gates[k].begin(), gates[k].end());
      gates[k].erase(std::unique(gates[k].begin(), gates[k].end()), gates[k].end());
      if (gates[k].size() >= 2) classifiable[k] = 1;
    }
  }

  TruthComparison out;
  out.traces = static_cast<int>(traces.size());
  std::vector<char> found_as_junction(base.size(), 0), found_as_surface(base.size(), 0);
  for (const DefectTrace& t : traces) {
    std::vector<int> votes(base.size(), 0);
    for (const TracePoint& p : t.points) {
      const Ensemble e = ensemble_at(offset[static_cast<std::size_t>(p.segment)] + p.bias_index);
      for (std::size_t k = 0; k < e.size(); ++k) {
        if (std::abs(defect_frequency(e[k], p.bias) - p.freq_ghz) * 1e3 <= tolerance_mhz) ++votes[k];
      }
    }
    int match = -1;
    if (!votes.empty()) {
      const auto best = std::max_element(votes.begin(), votes.end());
      if (2 * *best >= static_cast<int>(t.points.size())) match = static_cast<int>(best - votes.begin());
    }
    if (match >= 0) ++out.matched_traces;
    if (t.cls == TraceClass::Unclassified) {
      ++out.unclassified_traces;
      continue;
    }
    ClassScore& score = t.cls == TraceClass::Junction ? out.junction : out.surface;
    if (match >= 0 && true_class(base[static_cast<std::size_t>(match)]) == t.cls) {
      ++score.correct_traces;
      (t.cls == TraceClass::Junction ? found_as_junction : found_as_surface)[static_cast<std::size_t>(match)] = 1;
    } else {
      ++score.wrong_traces;
    }
  }
  for (std::size_t k = 0; k < base.size(); ++k) {
    if (!classifiable[k]) continue;
    ++out.classifiable_defects;
    if (true_class(base[k]) == TraceClass::Junction) {
      (found_as_junction[k] ? out.junction.found_defects : out.junction.missed_defects)++;
    } else {
      (found_as_surface[k] ? out.surface.found_defects : out.surface.missed_defects)++;
    }
  }
  return out;
}

}  // namespace jjtls
