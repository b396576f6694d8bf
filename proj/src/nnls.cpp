#include <cmath>
#include <limits>

#include "opsys/numerics.hpp"

namespace opsys {

namespace {

// Unconstrained least squares restricted to the passive columns.
RVector passive_solve(const RMatrix& a, const RVector& b, const std::vector<int>& passive) {
  RMatrix ap(a.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t c = 0; c < passive.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = a.col(passive[c]);
  return ap.colPivHouseholderQr().solve(b);
}

}  // namespace

NnlsResult nnls_solve(const RMatrix& a, const RVector& b, double tol, int max_iter) {
  if (a.rows() < 1 || a.cols() < 1) throw Error(ErrorKind::DimensionMismatch, "nnls needs a non-empty matrix");
  if (b.size() != a.rows()) throw Error(ErrorKind::DimensionMismatch, "nnls right-hand side length");
  if (!a.allFinite() || !b.allFinite()) throw Error(ErrorKind::NumericInput, "nnls: non-finite input");

  const Eigen::Index g = a.cols();
  if (max_iter < 0) max_iter = static_cast<int>(3 * g + 30);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff() * std::max(1.0, b.norm()));
  const double wtol = tol * scale;

  NnlsResult res;
  RVector x = RVector::Zero(g);
  std::vector<char> in_p(g, 0);
  RVector w = a.transpose() * b;

  int outer = 0;
  for (; outer < max_iter; ++outer) {
    Eigen::Index t = -1;
    double wmax = wtol;
    for (Eigen::Index j = 0; j < g; ++j)
      if (!in_p[j] && w(j) > wmax) {
        wmax = w(j);
        t = j;
      }
    if (t < 0) break;
    in_p[t] = 1;

    // Inner loop: keep the passive solution feasible.
    for (int inner = 0; inner < 3 * g + 30; ++inner) {
      std::vector<int> passive;
      for (Eigen::Index j = 0; j < g; ++j)
        if (in_p[j]) passive.push_back(static_cast<int>(j));
      const RVector zp = passive_solve(a, b, passive);
      bool all_pos = true;
      for (Eigen::Index c = 0; c < zp.size(); ++c)
        if (!(zp(c) > 0.0)) all_pos = false;
      if (all_pos) {
        x.setZero();
        for (std::size_t c = 0; c < passive.size(); ++c) x(passive[c]) = zp(static_cast<Eigen::Index>(c));
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < passive.size(); ++c) {
        const double zc = zp(static_cast<Eigen::Index>(c));
        if (zc <= 0.0) {
          const double xc = x(passive[c]);
          const double denom = xc - zc;
          if (denom > 0.0) alpha = std::min(alpha, xc / denom);
        }
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      for (std::size_t c = 0; c < passive.size(); ++c) {
        const int j = passive[c];
        x(j) += alpha * (zp(static_cast<Eigen::Index>(c)) - x(j));
        if (x(j) <= 1e-15 * std::max(1.0, std::abs(zp(static_cast<Eigen::Index>(c))))) {
          x(j) = 0.0;
          in_p[j] = 0;
        }
      }
      // The entering column can be dropped immediately on degenerate data; stop then.
      if (!in_p[t]) break;
    }
    w = a.transpose() * (b - a * x);
  }
  res.coeffs = x.cwiseMax(0.0);
  res.residual = (a * res.coeffs - b).norm();
  res.iterations = outer;
  res.converged = outer < max_iter;
  return res;
}

}  // namespace opsys
