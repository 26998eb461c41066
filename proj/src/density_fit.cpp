#include "jjtls/density_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "jjtls/error.hpp"

namespace jjtls {
namespace {

struct LinearFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd sigma;
  Eigen::VectorXd residuals;
  double rss = 0.0;
  int dof = 0;
};

// Zero-intercept least squares. Columns are rescaled to unit norm before
// the rank check so that mixed units (um^2 against um^2 * 1e-3) do not
// masquerade as degeneracy.
LinearFit solve_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd* sigma) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (sigma) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!((*sigma)[i] > 0.0)) {
        throw Error(ErrorCategory::InvalidArgument, "weighted fit needs positive uncertainties for every point");
      }
      w[i] = 1.0 / (*sigma)[i];
    }
  }
  const Eigen::MatrixXd xw = w.asDiagonal() * x;
  const Eigen::VectorXd yw = w.asDiagonal() * y;
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    scale[j] = xw.col(j).norm();
    if (!(scale[j] > 0.0)) throw Error(ErrorCategory::Degenerate, "degenerate geometry: a regressor is identically zero");
  }
  const Eigen::MatrixXd xs = xw * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xs);
  const auto& sv = svd.singularValues();
  if (sv[p - 1] <= 1e-10 * sv[0]) {
    throw Error(ErrorCategory::Degenerate, "degenerate geometry: design matrix is rank deficient");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  const Eigen::VectorXd cs = qr.solve(yw);
  LinearFit f;
  f.coef = cs.cwiseQuotient(scale);
  f.residuals = y - x * f.coef;
  f.rss = f.residuals.squaredNorm();
  f.dof = static_cast<int>(n - p);
  const Eigen::MatrixXd xtx_inv = (xw.transpose() * xw).inverse();
  double s2 = 1.0;
  if (!sigma) s2 = f.dof > 0 ? f.rss / f.dof : 0.0;
  f.sigma = (s2 * xtx_inv.diagonal()).cwiseMax(0.0).cwiseSqrt();
  return f;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

RunDensity estimate_segment_densities(const std::vector<DefectTrace>& traces, const SegmentPlan& plan) {
  plan.validate();
  const double window = plan.freqs.width_ghz();
  if (!(window > 0.0)) throw Error(ErrorCategory::InvalidArgument, "zero-width frequency window");
  RunDensity run;
  double piezo_total = 0.0;
  double piezo_dead = 0.0;
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    const Segment& seg = plan.segments[s];
    const std::size_t rows = seg.size();
    std::vector<double> jj(rows, 0.0), surf(rows, 0.0), nc(rows, 0.0);
    for (const DefectTrace& t : traces) {
      std::size_t lo = rows, hi = 0;
      for (const TracePoint& p : t.points) {
        if (p.segment != static_cast<int>(s)) continue;
        lo = std::min(lo, p.bias_index);
        hi = std::max(hi, p.bias_index);
      }
      if (lo == rows) continue;
      auto& counts = t.cls == TraceClass::Junction ? jj : t.cls == TraceClass::Surface ? surf : nc;
      for (std::size_t r = lo; r <= hi && r < rows; ++r) counts[r] += 1.0;
      if (seg.swept == Channel::Piezo) {
        const double span = static_cast<double>(hi - lo + 1);
        piezo_total += span;
        if (t.cls == TraceClass::Unclassified) piezo_dead += span;
      }
    }
    auto mean = [&](const std::vector<double>& v) {
      double acc = 0.0;
      for (double x : v) acc += x;
      return rows ? acc / static_cast<double>(rows) / window : 0.0;
    };
    SegmentDensity d;
    d.segment = static_cast<int>(s);
    d.swept = seg.swept;
    d.rho_jj = mean(jj);
    d.rho_surf = mean(surf);
    d.rho_nc = mean(nc);
    d.window_ghz = window;
    run.segments.push_back(d);
  }
  for (const SegmentDensity& d : run.segments) {
    run.rho_jj += d.rho_jj;
    run.rho_surf += d.rho_surf;
    run.rho_nc += d.rho_nc;
  }
  const auto n = static_cast<double>(run.segments.size());
  run.rho_jj /= n;
  run.rho_surf /= n;
  run.rho_nc /= n;
  run.dead_fraction = piezo_total > 0.0 ? piezo_dead / piezo_total : 0.0;
  return run;
}

double stray_junction_density(double rho_s_qubit, double rho_s_reference) {
  return std::max(0.0, rho_s_qubit - rho_s_reference);
}

AreaEdgeFit fit_area_edge(const std::vector<AreaEdgePoint>& points, double barrier_nm, Weighting weighting) {
  if (points.size() < 3) throw Error(ErrorCategory::InvalidArgument, "area/edge fit needs at least 3 points");
  if (!(barrier_nm > 0.0)) throw Error(ErrorCategory::InvalidArgument, "barrier thickness must be positive");
  const double d_um = barrier_nm * 1e-3;
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n), s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const AreaEdgePoint& p = points[static_cast<std::size_t>(i)];
    x(i, 0) = p.junction.area_um2;
    x(i, 1) = p.junction.l_open_um * d_um;
    x(i, 2) = p.junction.l_covered_um * d_um;
    y[i] = p.rho_sjj;
    s[i] = p.sigma;
  }
  const LinearFit f = solve_linear(x, y, weighting == Weighting::Weighted ? &s : nullptr);
  AreaEdgeFit out;
  out.area = {f.coef[0], f.sigma[0]};
  out.open_edge = {f.coef[1], f.sigma[1]};
  out.covered_edge = {f.coef[2], f.sigma[2]};
  out.residuals = to_std(f.residuals);
  out.rss = f.rss;
  out.dof = f.dof;
  return out;
}

TotalEdgeFit fit_area_total_edge(const std::vector<AreaEdgePoint>& points, double barrier_nm,
                                 Weighting weighting) {
  if (points.size() < 2) throw Error(ErrorCategory::InvalidArgument, "total-edge fit needs at least 2 points");
  if (!(barrier_nm > 0.0)) throw Error(ErrorCategory::InvalidArgument, "barrier thickness must be positive");
  const double d_um = barrier_nm * 1e-3;
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n), s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const AreaEdgePoint& p = points[static_cast<std::size_t>(i)];
    x(i, 0) = p.junction.area_um2;
    x(i, 1) = (p.junction.l_open_um + p.junction.l_covered_um) * d_um;
    y[i] = p.rho_sjj;
    s[i] = p.sigma;
  }
  const LinearFit f = solve_linear(x, y, weighting == Weighting::Weighted ? &s : nullptr);
  TotalEdgeFit out;
  out.area = {f.coef[0], f.sigma[0]};
  out.total_edge = {f.coef[1], f.sigma[1]};
  out.residuals = to_std(f.residuals);
  out.rss = f.rss;
  out.dof = f.dof;
  return out;
}

SurfaceFit fit_surface_two_pass(const std::vector<SurfacePoint>& points) {
  if (points.size() < 3) throw Error(ErrorCategory::InvalidArgument, "surface fit needs at least 3 points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x3(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SurfacePoint& p = points[static_cast<std::size_t>(i)];
    x3(i, 0) = p.l_open_um;
    x3(i, 1) = p.l_covered_um;
    x3(i, 2) = 1.0;
    y[i] = p.rho_surf;
  }
  const LinearFit pass1 = solve_linear(x3, y, nullptr);
  const double offset = pass1.coef[2];
  const Eigen::VectorXd y2 = y.array() - offset;
  const LinearFit pass2 = solve_linear(x3.leftCols(2), y2, nullptr);
  SurfaceFit out;
  out.open_edge = {pass2.coef[0], pass2.sigma[0]};
  out.covered_edge = {pass2.coef[1], pass2.sigma[1]};
  out.offset = offset;
  out.residuals = to_std(pass2.residuals);
  return out;
}

double volume_density(double rho_sjj, double area_um2, double barrier_nm) {
  if (!(area_um2 > 0.0) || !(barrier_nm > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "area and barrier thickness must be positive");
  }
  return rho_sjj / (area_um2 * barrier_nm * 1e-3);
}

double junction_density_errorbar(double rho_nc, double rho_sjj, double rho_surf) {
  const double den = rho_sjj + rho_surf;
  if (den == 0.0) throw Error(ErrorCategory::InvalidArgument, "rho_sjj + rho_surf must be non-zero");
  return rho_nc * rho_sjj / den;
}

}  // namespace jjtls
