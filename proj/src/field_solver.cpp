#include "jjtls/field_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

#include "jjtls/error.hpp"
#include "jjtls/kernels.hpp"

namespace jjtls {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCategory::InvalidArgument, what);
}

double spacing_at(const GradedAxis& axis, double x) {
  if (axis.focus.empty()) return axis.h_max;
  double dist = std::numeric_limits<double>::infinity();
  for (double f : axis.focus) dist = std::min(dist, std::abs(x - f));
  return std::min(axis.h_max, axis.h_min + axis.growth * dist);
}

std::size_t nearest(const std::vector<double>& v, double x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.begin()) return 0;
  if (it == v.end()) return v.size() - 1;
  const auto hi = static_cast<std::size_t>(it - v.begin());
  return (x - v[hi - 1] <= v[hi] - x) ? hi - 1 : hi;
}

// Locates x in a sorted axis: index of the cell and the fraction inside it.
std::pair<std::size_t, double> locate(const std::vector<double>& v, double x) {
  if (x <= v.front()) return {0, 0.0};
  if (x >= v.back()) return {v.size() - 2, 1.0};
  auto it = std::upper_bound(v.begin(), v.end(), x);
  const auto i = static_cast<std::size_t>(it - v.begin()) - 1;
  return {i, (x - v[i]) / (v[i + 1] - v[i])};
}

double bilinear(const FieldMap& m, const std::vector<double>& values, double x, double y) {
  const auto [i, tx] = locate(m.x_nm, x);
  const auto [j, ty] = locate(m.y_nm, y);
  const double v00 = values[m.index(i, j)];
  const double v10 = values[m.index(i + 1, j)];
  const double v01 = values[m.index(i, j + 1)];
  const double v11 = values[m.index(i + 1, j + 1)];
  return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

// Non-uniform centred derivative, one-sided at the ends.
double derivative(const std::vector<double>& coord, std::size_t i, double fm, double f0,
                  double fp) {
  const std::size_t n = coord.size();
  if (i == 0) return (fp - f0) / (coord[1] - coord[0]);
  if (i + 1 == n) return (f0 - fm) / (coord[n - 1] - coord[n - 2]);
  const double hm = coord[i] - coord[i - 1];
  const double hp = coord[i + 1] - coord[i];
  return (hm * hm * (fp - f0) + hp * hp * (f0 - fm)) / (hm * hp * (hm + hp));
}

// Linear interpolation of the first distance >= 0 at which pred switches
// from true to false between consecutive profile samples.
template <typename Pred>
double first_crossing(const std::vector<ProfilePoint>& prof, double level, Pred below) {
  const ProfilePoint* prev = nullptr;
  for (const ProfilePoint& p : prof) {
    if (p.distance_nm < 0.0) continue;
    if (!below(p.field_vpm, level)) {
      if (!prev) return p.distance_nm;
      const double span = p.field_vpm - prev->field_vpm;
      const double t = span != 0.0 ? (level - prev->field_vpm) / span : 0.0;
      return prev->distance_nm + std::clamp(t, 0.0, 1.0) * (p.distance_nm - prev->distance_nm);
    }
    prev = &p;
  }
  return prof.empty() ? 0.0 : prof.back().distance_nm;
}

}  // namespace

std::vector<double> graded_nodes(const GradedAxis& axis, double lo, double hi) {
  require(hi > lo, "axis range must be non-empty");
  require(axis.h_min > 0.0 && axis.h_max >= axis.h_min && axis.growth >= 0.0,
          "invalid axis spacing parameters");
  const double tol = 1e-9 * (hi - lo);
  std::vector<double> fixed{lo, hi};
  for (double m : axis.mandatory) {
    if (m > lo && m < hi) fixed.push_back(m);
  }
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end(),
                          [tol](double a, double b) { return std::abs(a - b) <= tol; }),
              fixed.end());

  std::vector<double> out{fixed.front()};
  for (std::size_t k = 0; k + 1 < fixed.size(); ++k) {
    const double a = fixed[k];
    const double b = fixed[k + 1];
    // Cumulative cell count integral of 1/h(x), sampled finely enough to see
    // the smallest spacing, then inverted at integer levels.
    const auto samples = static_cast<std::size_t>(
        std::clamp(std::ceil(4.0 * (b - a) / axis.h_min), 16.0, 4.0e6));
    std::vector<double> cum(samples + 1, 0.0);
    const double dx = (b - a) / static_cast<double>(samples);
    for (std::size_t s = 0; s < samples; ++s) {
      const double xm = a + (static_cast<double>(s) + 0.5) * dx;
      cum[s + 1] = cum[s] + dx / spacing_at(axis, xm);
    }
    const double total = cum.back();
    const auto cells = static_cast<std::size_t>(std::max(1.0, std::ceil(total - 1e-9)));
    std::size_t s = 0;
    for (std::size_t c = 1; c < cells; ++c) {
      const double level = total * static_cast<double>(c) / static_cast<double>(cells);
      while (cum[s + 1] < level) ++s;
      const double t = (level - cum[s]) / (cum[s + 1] - cum[s]);
      out.push_back(a + (static_cast<double>(s) + t) * dx);
    }
    out.push_back(b);
  }
  return out;
}

CrossSectionModel::CrossSectionModel(std::vector<double> x_nm, std::vector<double> y_nm,
                                     double background_eps)
    : x_(std::move(x_nm)), y_(std::move(y_nm)) {
  require(x_.size() >= 2 && y_.size() >= 2, "grid needs at least two nodes per axis");
  require(std::is_sorted(x_.begin(), x_.end()) && std::is_sorted(y_.begin(), y_.end()),
          "grid coordinates must be increasing");
  for (std::size_t i = 1; i < x_.size(); ++i) require(x_[i] > x_[i - 1], "duplicate x node");
  for (std::size_t j = 1; j < y_.size(); ++j) require(y_[j] > y_[j - 1], "duplicate y node");
  require(background_eps > 0.0, "permittivity must be positive");
  eps_.assign((x_.size() - 1) * (y_.size() - 1), background_eps);
  owner_.assign(x_.size() * y_.size(), -1);
}

void CrossSectionModel::paint_dielectric(const Rect& r, double eps_r) {
  require(eps_r > 0.0, "permittivity must be positive");
  for (std::size_t j = 0; j + 1 < ny(); ++j) {
    const double yc = 0.5 * (y_[j] + y_[j + 1]);
    if (yc < r.y0 || yc > r.y1) continue;
    for (std::size_t i = 0; i + 1 < nx(); ++i) {
      const double xc = 0.5 * (x_[i] + x_[i + 1]);
      if (xc >= r.x0 && xc <= r.x1) eps_[j * (nx() - 1) + i] = eps_r;
    }
  }
}

int CrossSectionModel::add_conductor(std::string name, double potential_v) {
  names_.push_back(std::move(name));
  potentials_.push_back(potential_v);
  return static_cast<int>(potentials_.size()) - 1;
}

void CrossSectionModel::paint_conductor(int conductor, const Rect& r) {
  require(conductor >= 0 && static_cast<std::size_t>(conductor) < potentials_.size(),
          "unknown conductor");
  const double tol = 1e-9 * std::max(x_.back() - x_.front(), y_.back() - y_.front());
  for (std::size_t j = 0; j < ny(); ++j) {
    if (y_[j] < r.y0 - tol || y_[j] > r.y1 + tol) continue;
    for (std::size_t i = 0; i < nx(); ++i) {
      if (x_[i] < r.x0 - tol || x_[i] > r.x1 + tol) continue;
      int& o = owner_[j * nx() + i];
      if (o >= 0 && o != conductor) {
        throw Error(ErrorCategory::InvalidArgument,
                    "conductor masks overlap: " + names_[o] + " and " + names_[conductor]);
      }
      o = conductor;
    }
  }
}

void CrossSectionModel::set_potential(int conductor, double v) { potentials_.at(conductor) = v; }

int CrossSectionModel::find_conductor(const std::string& name) const {
  for (std::size_t k = 0; k < names_.size(); ++k) {
    if (names_[k] == name) return static_cast<int>(k);
  }
  return -1;
}

std::size_t CrossSectionModel::nearest_x(double x) const { return nearest(x_, x); }
std::size_t CrossSectionModel::nearest_y(double y) const { return nearest(y_, y); }

double FieldMap::field_at(double x, double y) const { return bilinear(*this, magnitude_vpm, x, y); }
double FieldMap::potential_at(double x, double y) const { return bilinear(*this, potential_v, x, y); }

FieldMap solve_laplace(const CrossSectionModel& model, double tolerance, int max_iterations) {
  require(tolerance > 0.0, "tolerance must be positive");
  const std::size_t nx = model.nx();
  const std::size_t ny = model.ny();
  const std::size_t n = nx * ny;
  const auto& xs = model.x();
  const auto& ys = model.y();

  std::vector<double> diag(n, 0.0), west(n, 0.0), east(n, 0.0), south(n, 0.0), north(n, 0.0);
  std::vector<double> rhs(n, 0.0), phi(n, 0.0);
  bool any_dirichlet = false;

  auto eps_or_zero = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(nx) - 1 ||
        j >= static_cast<std::ptrdiff_t>(ny) - 1) {
      return 0.0;
    }
    return model.cell_eps(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  auto hx = [&](std::ptrdiff_t i) {
    return (i < 0 || i >= static_cast<std::ptrdiff_t>(nx) - 1) ? 0.0 : xs[i + 1] - xs[i];
  };
  auto hy = [&](std::ptrdiff_t j) {
    return (j < 0 || j >= static_cast<std::ptrdiff_t>(ny) - 1) ? 0.0 : ys[j + 1] - ys[j];
  };

  // Finite-volume couplings around the dual cell of each node.
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      const auto jj = static_cast<std::ptrdiff_t>(j);
      const std::size_t k = model.node_index(i, j);
      double ce = 0.0, cw = 0.0, cn = 0.0, cs = 0.0;
      if (i + 1 < nx) {
        ce = (eps_or_zero(ii, jj - 1) * hy(jj - 1) + eps_or_zero(ii, jj) * hy(jj)) / (2.0 * hx(ii));
      }
      if (i > 0) {
        cw = (eps_or_zero(ii - 1, jj - 1) * hy(jj - 1) + eps_or_zero(ii - 1, jj) * hy(jj)) /
             (2.0 * hx(ii - 1));
      }
      if (j + 1 < ny) {
        cn = (eps_or_zero(ii - 1, jj) * hx(ii - 1) + eps_or_zero(ii, jj) * hx(ii)) / (2.0 * hy(jj));
      }
      if (j > 0) {
        cs = (eps_or_zero(ii - 1, jj - 1) * hx(ii - 1) + eps_or_zero(ii, jj - 1) * hx(ii)) /
             (2.0 * hy(jj - 1));
      }
      const int own = model.owner(i, j);
      if (own >= 0) {
        any_dirichlet = true;
        diag[k] = 1.0;
        rhs[k] = model.potential(own);
        phi[k] = rhs[k];
        continue;
      }
      diag[k] = ce + cw + cn + cs;
      east[k] = ce;
      west[k] = cw;
      north[k] = cn;
      south[k] = cs;
    }
  }
  require(any_dirichlet, "ill-posed problem: no conductor nodes");

  // Every free node must reach a conductor through non-zero couplings.
  {
    std::vector<char> seen(n, 0);
    std::deque<std::size_t> queue;
    for (std::size_t k = 0; k < n; ++k) {
      if (model.owner(k % nx, k / nx) >= 0) {
        seen[k] = 1;
        queue.push_back(k);
      }
    }
    while (!queue.empty()) {
      const std::size_t k = queue.front();
      queue.pop_front();
      const std::size_t i = k % nx;
      const std::size_t j = k / nx;
      auto visit = [&](std::size_t m, double c) {
        if (c > 0.0 && !seen[m]) {
          seen[m] = 1;
          queue.push_back(m);
        }
      };
      // Couplings are symmetric, so a neighbour's coefficient toward k is
      // the one k would have toward it.
      if (i + 1 < nx) visit(k + 1, west[k + 1]);
      if (i > 0) visit(k - 1, east[k - 1]);
      if (j + 1 < ny) visit(k + nx, south[k + nx]);
      if (j > 0) visit(k - nx, north[k - nx]);
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!seen[k]) {
        std::ostringstream msg;
        msg << "ill-posed problem: node (" << xs[k % nx] << ", " << ys[k / nx]
            << ") nm is not connected to any conductor";
        throw Error(ErrorCategory::InvalidArgument, msg.str());
      }
    }
  }

  // Move Dirichlet neighbours to the right-hand side.
  for (std::size_t k = 0; k < n; ++k) {
    if (model.owner(k % nx, k / nx) >= 0) continue;
    auto fold = [&](double& c, std::size_t m) {
      if (c != 0.0 && model.owner(m % nx, m / nx) >= 0) {
        rhs[k] += c * phi[m];
        c = 0.0;
      }
    };
    if (k % nx + 1 < nx) fold(east[k], k + 1);
    if (k % nx > 0) fold(west[k], k - 1);
    if (k / nx + 1 < ny) fold(north[k], k + nx);
    if (k / nx > 0) fold(south[k], k - nx);
  }

  double b_norm2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (model.owner(k % nx, k / nx) < 0) b_norm2 += rhs[k] * rhs[k];
  }

  FieldMap out;
  if (b_norm2 > 0.0) {
    namespace kn = kernels;
    const kn::StencilView a{nx, ny, diag, west, east, south, north};
    std::vector<double> inv_diag(n), r(n), z(n), p(n), q(n);
    for (std::size_t k = 0; k < n; ++k) inv_diag[k] = 1.0 / diag[k];
    kn::stencil_apply(a, phi, q);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - q[k];
    kn::scale(r, inv_diag, z);
    p = z;
    double rz = kn::dot(r, z);
    const double b_norm = std::sqrt(b_norm2);
    const int cap = max_iterations > 0 ? max_iterations : static_cast<int>(std::max<std::size_t>(2000, n));
    double rel = std::sqrt(kn::dot(r, r)) / b_norm;
    int it = 0;
    while (rel > tolerance && it < cap) {
      kn::stencil_apply(a, p, q);
      const double alpha = rz / kn::dot(p, q);
      kn::axpy(alpha, p, phi);
      kn::axpy(-alpha, q, r);
      kn::scale(r, inv_diag, z);
      const double rz_next = kn::dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      // p = z + beta * p
      for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
      rel = std::sqrt(kn::dot(r, r)) / b_norm;
      ++it;
    }
    if (rel > tolerance) {
      std::ostringstream msg;
      msg << "Laplace solve did not converge: relative residual " << rel << " after " << it
          << " iterations (tolerance " << tolerance << ")";
      throw Error(ErrorCategory::Convergence, msg.str());
    }
    out.stats = {it, rel};
  }

  out.x_nm = xs;
  out.y_nm = ys;
  out.potential_v = std::move(phi);
  out.owner.resize(n);
  out.ex_vpm.assign(n, 0.0);
  out.ey_vpm.assign(n, 0.0);
  out.magnitude_vpm.assign(n, 0.0);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = out.index(i, j);
      out.owner[k] = model.owner(i, j);
      if (out.owner[k] >= 0) continue;
      const double* v = out.potential_v.data();
      const double ex = -derivative(xs, i, i > 0 ? v[k - 1] : 0.0, v[k], i + 1 < nx ? v[k + 1] : 0.0);
      const double ey =
          -derivative(ys, j, j > 0 ? v[k - nx] : 0.0, v[k], j + 1 < ny ? v[k + nx] : 0.0);
      out.ex_vpm[k] = ex * 1e9;
      out.ey_vpm[k] = ey * 1e9;
      out.magnitude_vpm[k] = std::hypot(ex, ey) * 1e9;
    }
  }
  return out;
}

bool satisfies_maximum_principle(const FieldMap& map, double slack) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < map.owner.size(); ++k) {
    if (map.owner[k] >= 0) {
      lo = std::min(lo, map.potential_v[k]);
      hi = std::max(hi, map.potential_v[k]);
    }
  }
  for (std::size_t k = 0; k < map.owner.size(); ++k) {
    if (map.owner[k] < 0 && (map.potential_v[k] < lo - slack || map.potential_v[k] > hi + slack)) {
      return false;
    }
  }
  return true;
}

// Horizontal layout, left to right: margin, top electrode draped on the
// substrate, covered-edge barrier on the bottom electrode's side wall,
// overlap region, open edge, exposed bottom electrode, margin.
namespace {
struct Layout {
  double ys, yb, yo, yt, gate;
  double xt0, xc, xb0, xo, xb1, width;
};

Layout layout(const JunctionCrossSection& s) {
  Layout l{};
  l.ys = s.substrate_thickness_nm;
  l.yb = l.ys + s.bottom_thickness_nm;
  l.yo = l.yb + s.barrier_thickness_nm;
  l.yt = l.yo + s.top_thickness_nm;
  l.gate = l.ys + s.gate_height_nm;
  l.xt0 = s.side_margin_nm;
  l.xb0 = l.xt0 + s.top_extension_nm;
  l.xc = l.xb0 - s.barrier_thickness_nm;
  l.xo = l.xb0 + s.overlap_nm;
  l.xb1 = l.xo + s.bottom_extension_nm;
  l.width = l.xb1 + s.side_margin_nm;
  return l;
}
}  // namespace

double JunctionCrossSection::covered_edge_x() const { return layout(*this).xb0; }
double JunctionCrossSection::open_edge_x() const { return layout(*this).xo; }
double JunctionCrossSection::midplane_y() const {
  const Layout l = layout(*this);
  return 0.5 * (l.yb + l.yo);
}
double JunctionCrossSection::barrier_centre_x() const {
  const Layout l = layout(*this);
  return 0.5 * (l.xb0 + l.xo);
}
double JunctionCrossSection::far_x() const {
  const Layout l = layout(*this);
  return 0.5 * (l.xo + l.xb1);
}
double JunctionCrossSection::far_y() const {
  const Layout l = layout(*this);
  return 0.5 * (l.yt + l.gate);
}
double JunctionCrossSection::domain_width() const { return layout(*this).width; }
double JunctionCrossSection::domain_height() const { return layout(*this).gate; }

CrossSectionModel JunctionCrossSection::build(Drive drive, double volts, double refine) const {
  require(barrier_thickness_nm > 0.0 && bottom_thickness_nm > 0.0 && top_thickness_nm > 0.0 &&
              substrate_thickness_nm > 0.0 && overlap_nm > 0.0 && bottom_extension_nm > 0.0 &&
              top_extension_nm > barrier_thickness_nm && side_margin_nm > 0.0,
          "cross-section dimensions must be positive");
  require(refine > 0.0, "refinement factor must be positive");
  const Layout l = layout(*this);
  require(l.gate > l.yt, "gate plane must lie above the top electrode");
  require(h_min_nm <= 0.5 && 4.0 * h_min_nm / refine <= barrier_thickness_nm,
          "grid must resolve the tunnel barrier (h_min <= 0.5 nm and <= d/4)");

  GradedAxis ax;
  ax.h_min = h_min_nm / refine;
  ax.h_max = h_max_nm / refine;
  ax.growth = growth / refine;
  ax.focus = {l.xc, l.xb0, l.xo};
  ax.mandatory = {l.xt0, l.xc, l.xb0, l.xo, l.xb1, l.xb1 + barrier_thickness_nm,
                  barrier_centre_x(), far_x()};
  GradedAxis ay = ax;
  ay.focus = {l.ys, l.yb, l.yo};
  ay.mandatory = {l.ys, l.yb, midplane_y(), l.yo, l.yt, far_y()};

  CrossSectionModel m(graded_nodes(ax, 0.0, l.width), graded_nodes(ay, 0.0, l.gate), eps_vacuum);
  m.paint_dielectric({0.0, 0.0, l.width, l.ys}, eps_substrate);
  // Oxide: the barrier and its continuation over the exposed bottom
  // electrode, the covered-edge barrier on the side wall, and the native
  // oxide on the far side wall.
  m.paint_dielectric({l.xc, l.yb, l.xb1 + barrier_thickness_nm, l.yo}, eps_oxide);
  m.paint_dielectric({l.xc, l.ys, l.xb0, l.yb}, eps_oxide);
  m.paint_dielectric({l.xb1, l.ys, l.xb1 + barrier_thickness_nm, l.yo}, eps_oxide);

  double v_bottom = 0.0, v_top = 0.0, v_gate = 0.0;
  if (drive == Drive::DcGate) {
    v_gate = volts;
  } else {
    v_bottom = -0.5 * volts;
    v_top = 0.5 * volts;
  }
  const int bottom = m.add_conductor("bottom", v_bottom);
  const int top = m.add_conductor("top", v_top);
  const int gate = m.add_conductor("gate", v_gate);
  m.paint_conductor(bottom, {l.xb0, l.ys, l.xb1, l.yb});
  m.paint_conductor(top, {l.xt0, l.ys, l.xc, l.yo});
  m.paint_conductor(top, {l.xt0, l.yo, l.xo, l.yt});
  m.paint_conductor(gate, {0.0, l.gate, l.width, l.gate});
  return m;
}

std::vector<ProfilePoint> open_edge_profile(const FieldMap& map, const JunctionCrossSection& xs,
                                            double max_inside_nm, double max_outside_nm) {
  const std::size_t j = nearest(map.y_nm, xs.midplane_y());
  const double x0 = xs.open_edge_x();
  std::vector<ProfilePoint> out;
  for (std::size_t i = 0; i < map.nx(); ++i) {
    const double s = map.x_nm[i] - x0;
    if (s < -max_inside_nm || s > max_outside_nm) continue;
    out.push_back({s, map.magnitude_vpm[map.index(i, j)]});
  }
  return out;
}

AcDecayProfile ac_decay_profile(const JunctionCrossSection& xs, double barrier_voltage,
                                double refine, double tolerance) {
  require(barrier_voltage != 0.0, "barrier voltage must be non-zero");
  AcDecayProfile out;
  out.map = solve_laplace(xs.build(JunctionCrossSection::Drive::AcQubit, barrier_voltage, refine),
                          tolerance);
  out.barrier_field_vpm = out.map.field_at(xs.barrier_centre_x(), xs.midplane_y());
  out.profile = open_edge_profile(out.map, xs, 10.0 * xs.barrier_thickness_nm,
                                  xs.bottom_extension_nm);
  out.decay_length_nm = first_crossing(out.profile, out.barrier_field_vpm / std::numbers::e,
                                       [](double f, double level) { return f > level; });
  return out;
}

ExclusionZone exclusion_zone_width(const FieldMap& dc, const FieldMap& ac,
                                   const JunctionCrossSection& xs, double dc_threshold,
                                   double ac_threshold) {
  require(dc.nx() == ac.nx() && dc.ny() == ac.ny(), "field maps must share a grid");
  require(dc_threshold > 0.0 && dc_threshold <= 1.0 && ac_threshold > 0.0 && ac_threshold <= 1.0,
          "thresholds must lie in (0, 1]");
  ExclusionZone z;
  const double reach = xs.bottom_extension_nm;
  if (dc_threshold < 1.0) {
    const double far = dc.field_at(xs.far_x(), xs.far_y());
    z.dc_screened_nm = first_crossing(open_edge_profile(dc, xs, 0.0, reach), dc_threshold * far,
                                      [](double f, double level) { return f < level; });
  }
  if (ac_threshold < 1.0) {
    const double barrier = ac.field_at(xs.barrier_centre_x(), xs.midplane_y());
    z.ac_coupled_nm = first_crossing(open_edge_profile(ac, xs, 0.0, reach), ac_threshold * barrier,
                                     [](double f, double level) { return f > level; });
  }
  return z;
}

ScreeningStudy screening_study(const JunctionCrossSection& xs, double refine, double tolerance,
                               double dc_threshold, double ac_threshold) {
  ScreeningStudy out;
  ScreeningSummary& s = out.summary;
  s.refine = refine;
  out.dc = solve_laplace(xs.build(JunctionCrossSection::Drive::DcGate, 1.0, refine), tolerance);
  out.ac = ac_decay_profile(xs, 1.0, refine, tolerance);
  const FieldMap& dc = out.dc;
  const AcDecayProfile& ac = out.ac;
  s.nodes = dc.x_nm.size() * dc.y_nm.size();
  s.dc_midplane_vpm = dc.field_at(xs.barrier_centre_x(), xs.midplane_y());
  s.dc_far_vpm = dc.field_at(xs.far_x(), xs.far_y());
  s.dc_midplane_ratio = s.dc_midplane_vpm / s.dc_far_vpm;
  const ExclusionZone z = exclusion_zone_width(dc, ac.map, xs, dc_threshold, ac_threshold);
  s.dc_screened_nm = z.dc_screened_nm;
  s.ac_coupled_nm = z.ac_coupled_nm;
  s.ac_barrier_vpm = ac.barrier_field_vpm;
  s.ac_decay_length_nm = ac.decay_length_nm;
  s.ac_at_10d_ratio =
      ac.map.field_at(xs.open_edge_x() + 10.0 * xs.barrier_thickness_nm, xs.midplane_y()) /
      ac.barrier_field_vpm;
  s.dc_iterations = dc.stats.iterations;
  s.ac_iterations = ac.map.stats.iterations;
  return out;
}

ScreeningSummary screening_summary(const JunctionCrossSection& xs, double refine,
                                   double tolerance) {
  return screening_study(xs, refine, tolerance, 0.01, 0.01).summary;
}

ParallelPlateCheck parallel_plate_check(double gap_nm, double width_nm, double volts, double step_nm,
                                        double tolerance) {
  if (!(gap_nm > 0.0 && width_nm > 0.0 && step_nm > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "plate gap, width, and grid step must be positive");
  }
  auto uniform = [&](double len) {
    const auto n = static_cast<std::size_t>(std::max(2.0, std::round(len / step_nm))) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = len * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
  };
  // Plates span the full width and the side walls are insulating, so the
  // exact solution is the uniform field V / gap.
  CrossSectionModel model(uniform(width_nm), uniform(gap_nm), 1.0);
  const int low = model.add_conductor("low", 0.0);
  const int high = model.add_conductor("high", volts);
  model.paint_conductor(low, {0.0, 0.0, width_nm, 0.0});
  model.paint_conductor(high, {0.0, gap_nm, width_nm, gap_nm});
  const FieldMap map = solve_laplace(model, tolerance);
  ParallelPlateCheck c;
  c.analytic_vpm = std::abs(volts) / (gap_nm * 1e-9);
  c.numeric_vpm = map.field_at(0.5 * width_nm, 0.5 * gap_nm);
  for (std::size_t k = 0; k < map.magnitude_vpm.size(); ++k) {
    if (map.owner[k] >= 0) continue;
    c.max_relative_error =
        std::max(c.max_relative_error, std::abs(map.magnitude_vpm[k] - c.analytic_vpm) / c.analytic_vpm);
  }
  c.iterations = map.stats.iterations;
  return c;
}

}  // namespace jjtls
