#pragma once
// 2D finite-volume electrostatics on a tensor-product grid with piecewise
// constant permittivity. Used to check that the DC gate field is screened
// at the junction edges and that the qubit's AC field is confined to the
// tunnel barrier.

#include <string>
#include <vector>

namespace jjtls {

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
};

// Node placement along one axis. Every mandatory coordinate becomes a node;
// spacing grows linearly with distance from the nearest focus coordinate,
// h(x) = min(h_max, h_min + growth * dist).
struct GradedAxis {
  std::vector<double> mandatory;
  std::vector<double> focus;
  double h_min = 0.25;
  double h_max = 20.0;
  double growth = 0.15;
};

std::vector<double> graded_nodes(const GradedAxis& axis, double lo, double hi);

// Grid, materials, and Dirichlet conductors. Nodes not owned by a conductor
// are free; domain edges not covered by a conductor are insulating.
class CrossSectionModel {
 public:
  CrossSectionModel(std::vector<double> x_nm, std::vector<double> y_nm, double background_eps = 1.0);

  // Assigns eps_r to every cell whose centre lies inside r. Later calls win.
  void paint_dielectric(const Rect& r, double eps_r);

  int add_conductor(std::string name, double potential_v);
  // Claims every node inside the closed rectangle. Throws if a node is
  // already owned by a different conductor.
  void paint_conductor(int conductor, const Rect& r);
  void set_potential(int conductor, double v);

  std::size_t nx() const { return x_.size(); }
  std::size_t ny() const { return y_.size(); }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  double cell_eps(std::size_t i, std::size_t j) const { return eps_[j * (nx() - 1) + i]; }
  int owner(std::size_t i, std::size_t j) const { return owner_[j * nx() + i]; }
  std::size_t conductor_count() const { return potentials_.size(); }
  double potential(int conductor) const { return potentials_.at(conductor); }
  const std::string& conductor_name(int conductor) const { return names_.at(conductor); }
  int find_conductor(const std::string& name) const;
  std::size_t node_index(std::size_t i, std::size_t j) const { return j * nx() + i; }

  // Index of the grid line closest to a coordinate.
  std::size_t nearest_x(double x) const;
  std::size_t nearest_y(double y) const;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> eps_;
  std::vector<int> owner_;
  std::vector<double> potentials_;
  std::vector<std::string> names_;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

struct FieldMap {
  std::vector<double> x_nm;
  std::vector<double> y_nm;
  std::vector<double> potential_v;
  std::vector<double> ex_vpm;
  std::vector<double> ey_vpm;
  std::vector<double> magnitude_vpm;
  std::vector<int> owner;
  SolveStats stats;

  std::size_t nx() const { return x_nm.size(); }
  std::size_t ny() const { return y_nm.size(); }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx() + i; }

  // Bilinear interpolation of the field magnitude (V/m).
  double field_at(double x, double y) const;
  double potential_at(double x, double y) const;
};

// Solves div(eps grad phi) = 0 with the model's conductor potentials.
// Throws Error(Convergence) with the reached residual if the relative
// residual stays above tolerance within max_iterations (0 = automatic), and
// Error(InvalidArgument) if some free node is not connected to a conductor.
FieldMap solve_laplace(const CrossSectionModel& model, double tolerance = 1e-10,
                       int max_iterations = 0);

// True if every free-node potential lies within the conductor potential
// range (up to slack).
bool satisfies_maximum_principle(const FieldMap& map, double slack = 1e-9);

// Cross-section of an overlap junction on a substrate. The bottom electrode
// is oxidized on top; the top electrode caps part of it. On the left, the
// top electrode drapes over the bottom electrode's side wall (covered
// edge); on the right it ends on top of the bottom electrode (open edge).
// The DC gate is a plane at the top of the domain.
struct JunctionCrossSection {
  double barrier_thickness_nm = 2.0;
  double bottom_thickness_nm = 30.0;
  double top_thickness_nm = 100.0;
  double substrate_thickness_nm = 200.0;
  double overlap_nm = 300.0;
  double bottom_extension_nm = 300.0;
  double top_extension_nm = 200.0;
  double side_margin_nm = 400.0;
  double gate_height_nm = 800.0;  // gate plane above the substrate surface
  double eps_substrate = 10.0;
  double eps_oxide = 9.0;
  double eps_vacuum = 1.0;
  double h_min_nm = 0.1;
  double h_max_nm = 25.0;
  double growth = 0.1;

  enum class Drive { DcGate, AcQubit };

  // DcGate: gate at volts, both electrodes grounded.
  // AcQubit: electrodes at -volts/2 (bottom) and +volts/2 (top), gate grounded.
  CrossSectionModel build(Drive drive, double volts, double refine = 1.0) const;

  double covered_edge_x() const;
  double open_edge_x() const;
  double midplane_y() const;
  double barrier_centre_x() const;
  // Point in vacuum halfway between the top electrode and the gate, above
  // the exposed part of the bottom electrode.
  double far_x() const;
  double far_y() const;
  double domain_width() const;
  double domain_height() const;
};

struct ProfilePoint {
  double distance_nm = 0.0;  // from the open edge, positive outward
  double field_vpm = 0.0;
};

// Field magnitude along the barrier mid-plane from max_inside_nm inside the
// junction to max_outside_nm beyond the open edge, at grid nodes.
std::vector<ProfilePoint> open_edge_profile(const FieldMap& map, const JunctionCrossSection& xs,
                                            double max_inside_nm, double max_outside_nm);

struct AcDecayProfile {
  std::vector<ProfilePoint> profile;
  double barrier_field_vpm = 0.0;  // at the barrier centre
  double decay_length_nm = 0.0;    // outward distance where the field falls to barrier/e
  FieldMap map;
};

AcDecayProfile ac_decay_profile(const JunctionCrossSection& xs, double barrier_voltage,
                                double refine = 1.0, double tolerance = 1e-10);

struct ExclusionZone {
  double dc_screened_nm = 0.0;  // outward extent with DC field below threshold * far field
  double ac_coupled_nm = 0.0;   // outward extent with AC field above threshold * barrier field
};

// Thresholds are fractions in (0, 1]. A threshold of 1 is degenerate and
// yields zero width for that map.
ExclusionZone exclusion_zone_width(const FieldMap& dc, const FieldMap& ac,
                                   const JunctionCrossSection& xs, double dc_threshold,
                                   double ac_threshold);

struct ScreeningSummary {
  double refine = 1.0;
  std::size_t nodes = 0;
  double dc_midplane_vpm = 0.0;
  double dc_far_vpm = 0.0;
  double dc_midplane_ratio = 0.0;
  double dc_screened_nm = 0.0;  // at 1 %
  double ac_barrier_vpm = 0.0;
  double ac_decay_length_nm = 0.0;
  double ac_coupled_nm = 0.0;  // at 1 %
  double ac_at_10d_ratio = 0.0;
  int dc_iterations = 0;
  int ac_iterations = 0;
};

struct ScreeningStudy {
  ScreeningSummary summary;
  FieldMap dc;
  AcDecayProfile ac;
};

// DC solve with a 1 V gate and AC solve with a 1 V barrier drive; exclusion
// widths use the given thresholds.
ScreeningStudy screening_study(const JunctionCrossSection& xs, double refine, double tolerance,
                               double dc_threshold, double ac_threshold);

// Summary of screening_study at 1 % thresholds.
ScreeningSummary screening_summary(const JunctionCrossSection& xs, double refine = 1.0,
                                   double tolerance = 1e-10);

struct ParallelPlateCheck {
  double analytic_vpm = 0.0;
  double numeric_vpm = 0.0;         // at the centre
  double max_relative_error = 0.0;  // over free nodes
  int iterations = 0;
};

// Two plates of the given width a gap apart, vacuum between, on a uniform
// grid. Compares against V / gap.
ParallelPlateCheck parallel_plate_check(double gap_nm, double width_nm, double volts, double step_nm,
                                        double tolerance = 1e-10);

}  // namespace jjtls
