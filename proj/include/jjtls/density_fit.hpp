#pragma once
// Spectral defect densities from classified traces, and the linear models
// relating them to junction dimensions.

#include <string>
#include <vector>

#include "jjtls/traces.hpp"

namespace jjtls {

struct SegmentDensity {
  int segment = 0;
  Channel swept = Channel::Piezo;
  double rho_jj = 0.0;    // per GHz
  double rho_surf = 0.0;
  double rho_nc = 0.0;
  double window_ghz = 0.0;

  friend bool operator==(const SegmentDensity&, const SegmentDensity&) = default;
};

struct RunDensity {
  std::vector<SegmentDensity> segments;
  double rho_jj = 0.0;  // means over segments
  double rho_surf = 0.0;
  double rho_nc = 0.0;
  // Share of (trace, piezo bias point) incidences belonging to unclassified
  // traces.
  double dead_fraction = 0.0;

  friend bool operator==(const RunDensity&, const RunDensity&) = default;
};

// Per segment, the number of traces of each class visible at a bias point
// (between the trace's first and last detection in that segment), averaged
// over the segment's bias points and divided by the window width.
RunDensity estimate_segment_densities(const std::vector<DefectTrace>& traces, const SegmentPlan& plan);

// rho_s(qubit) - rho_s(reference), floored at zero.
double stray_junction_density(double rho_s_qubit, double rho_s_reference);

struct Coefficient {
  double value = 0.0;
  double sigma = 0.0;
};

struct AreaEdgePoint {
  std::string id;
  StrayJunction junction;
  double rho_sjj = 0.0;  // per GHz
  double sigma = 0.0;    // per GHz; used only by weighted fits
};

enum class Weighting { Unweighted, Weighted };

// rho_sjj = rho_A*A + rho_o*l_op*d + rho_c*l_cov*d, zero intercept, d in um.
struct AreaEdgeFit {
  Coefficient area;          // per (GHz um^2)
  Coefficient open_edge;     // per (GHz um^2)
  Coefficient covered_edge;  // per (GHz um^2)
  std::vector<double> residuals;
  double rss = 0.0;
  int dof = 0;
};

// Throws Error(Degenerate) if the design matrix is rank deficient and
// InvalidArgument for fewer than three points. Standard errors come from
// s^2 (X^T X)^-1 (unweighted) or (X^T W X)^-1 with W = 1/sigma^2.
AreaEdgeFit fit_area_edge(const std::vector<AreaEdgePoint>& points, double barrier_nm,
                          Weighting weighting = Weighting::Unweighted);

// rho_sjj = rho_A*A + rho_tot*(l_op + l_cov)*d.
struct TotalEdgeFit {
  Coefficient area;
  Coefficient total_edge;
  std::vector<double> residuals;
  double rss = 0.0;
  int dof = 0;
};

TotalEdgeFit fit_area_total_edge(const std::vector<AreaEdgePoint>& points, double barrier_nm,
                                 Weighting weighting = Weighting::Unweighted);

struct SurfacePoint {
  std::string id;
  double l_open_um = 0.0;
  double l_covered_um = 0.0;
  double rho_surf = 0.0;
};

// rho_surf = a*l_op + b*l_cov + offset. The first pass fits all three
// parameters; the second refits the slopes on offset-subtracted data with
// no intercept.
struct SurfaceFit {
  Coefficient open_edge;     // per (GHz um)
  Coefficient covered_edge;  // per (GHz um)
  double offset = 0.0;       // per GHz, from the first pass
  std::vector<double> residuals;  // second pass
};

SurfaceFit fit_surface_two_pass(const std::vector<SurfacePoint>& points);

// rho_sjj / (area * d), per (GHz um^3).
double volume_density(double rho_sjj, double area_um2, double barrier_nm);

// rho_nc * rho_sjj / (rho_sjj + rho_surf). Throws on a zero denominator.
double junction_density_errorbar(double rho_nc, double rho_sjj, double rho_surf);

}  // namespace jjtls
