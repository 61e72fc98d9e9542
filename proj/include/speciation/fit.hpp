#pragma once

// Ordinary least-squares polynomial fit, y ~ c0 + c1 x + ... + cd x^d.

#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace speciation {

struct FitResult {
  int degree = 1;
  std::vector<double> coefficients;  // constant first
  /// Root-mean-square residual (divides by the sample count).
  double sigma = 0.0;
  double max_abs = 0.0;
  std::size_t samples = 0;

  double operator()(double x) const {
    double y = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) y = y * x + *it;
    return y;
  }
};

inline FitResult polyfit(std::span<const double> x, std::span<const double> y, int degree) {
  if (degree < 1 || degree > 2) throw std::invalid_argument("fit degree must be 1 or 2");
  if (x.size() != y.size()) throw std::invalid_argument("fit: x and y differ in length");
  const auto m = static_cast<Eigen::Index>(x.size());
  if (m < degree + 2) {
    throw std::invalid_argument("fit needs at least " + std::to_string(degree + 2) + " points, got " + std::to_string(m));
  }
  Eigen::MatrixXd V(m, degree + 1);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double p = 1.0;
    for (int j = 0; j <= degree; ++j, p *= x[static_cast<std::size_t>(i)]) V(i, j) = p;
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  if (qr.rank() < degree + 1) throw std::domain_error("fit: design matrix is rank deficient (too few distinct x values)");
  const Eigen::VectorXd c = qr.solve(rhs);
  const Eigen::VectorXd r = rhs - V * c;

  FitResult out;
  out.degree = degree;
  out.coefficients.assign(c.data(), c.data() + c.size());
  out.samples = static_cast<std::size_t>(m);
  out.sigma = std::sqrt(r.squaredNorm() / static_cast<double>(m));
  out.max_abs = r.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace speciation
