#include "least_squares.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

namespace jjtls::detail {
namespace {

struct Adapter : Eigen::DenseFunctor<double> {
  Adapter(const Residuals& f, Eigen::Index n, Eigen::Index m)
      : Eigen::DenseFunctor<double>(static_cast<int>(n), static_cast<int>(m)), fn(&f) {}
  int operator()(const InputType& x, ValueType& fvec) const {
    (*fn)(x, fvec);
    return 0;
  }
  const Residuals* fn;
};

}  // namespace

LmOutcome levenberg_marquardt(const Residuals& f, Eigen::VectorXd start, Eigen::Index n_residuals,
                              int max_evaluations) {
  LmOutcome out;
  out.params = start;
  if (n_residuals < start.size() || start.size() == 0) return out;
  Adapter adapter(f, start.size(), n_residuals);
  Eigen::NumericalDiff<Adapter> diff(adapter);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Adapter>> lm(diff);
  lm.setMaxfev(max_evaluations);
  const auto status = lm.minimize(start);
  Eigen::VectorXd r(n_residuals);
  f(start, r);
  out.params = start;
  out.rss = r.squaredNorm();
  out.ok = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
           start.allFinite() && std::isfinite(out.rss);
  return out;
}

}  // namespace jjtls::detail
