#pragma once
// Internal: thin wrapper over Eigen's Levenberg-Marquardt with forward
// difference Jacobians.

#include <Eigen/Dense>
#include <functional>

namespace jjtls::detail {

using Residuals = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& out)>;

struct LmOutcome {
  Eigen::VectorXd params;
  double rss = 0.0;
  bool ok = false;
};

LmOutcome levenberg_marquardt(const Residuals& f, Eigen::VectorXd start, Eigen::Index n_residuals,
                              int max_evaluations = 600);

}  // namespace jjtls::detail
