#include <cmath>

#include "opsys/numerics.hpp"

namespace opsys {

const char* to_string(FeasStatus s) {
  switch (s) {
    case FeasStatus::Feasible: return "feasible";
    case FeasStatus::InfeasibleEvidence: return "infeasible-evidence";
    case FeasStatus::Budget: return "budget";
  }
  return "?";
}

RVector hvec(const CMatrix& h) {
  const auto n = h.rows();
  RVector v(n * n);
  Eigen::Index idx = 0;
  for (Eigen::Index a = 0; a < n; ++a) v(idx++) = h(a, a).real();
  const double r2 = std::sqrt(2.0);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      v(idx++) = r2 * h(a, b).real();
      v(idx++) = r2 * h(a, b).imag();
    }
  return v;
}

CMatrix hmat(const Eigen::Ref<const RVector>& v, int n) {
  if (v.size() != static_cast<Eigen::Index>(n) * n) throw Error(ErrorKind::DimensionMismatch, "hmat length");
  CMatrix h(n, n);
  Eigen::Index idx = 0;
  for (int a = 0; a < n; ++a) h(a, a) = Complex(v(idx++), 0.0);
  const double r2 = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double re = r2 * v(idx++);
      const double im = r2 * v(idx++);
      h(a, b) = Complex(re, im);
      h(b, a) = Complex(re, -im);
    }
  return h;
}

namespace {

struct Packed {
  RMatrix z;  // n^2 x g
  RVector s;  // m
};

double sq_dist(const Packed& a, const Packed& b) { return (a.z - b.z).squaredNorm() + (a.s - b.s).squaredNorm(); }

// Vectorised affine operator A(z, s) = z C^T + sum_i s_i D_i and its adjoint,
// with (A A^*)^{-1} applied through K = C C^T and a Woodbury correction.
class AffineOp {
 public:
  explicit AffineOp(const AffineSystem& sys) : n_(sys.n) {
    const int rows = sys.rows();
    const int nn = n_ * n_;
    c_ = sys.coeff;
    rhs_.resize(nn, rows);
    for (int k = 0; k < rows; ++k) rhs_.col(k) = hvec(sys.rhs[k]);
    for (const auto& dir : sys.scalar_dirs) {
      RMatrix dv(nn, rows);
      for (int k = 0; k < rows; ++k) dv.col(k) = hvec(dir[k]);
      dirs_.push_back(std::move(dv));
    }
    const RMatrix k = c_ * c_.transpose();
    Eigen::SelfAdjointEigenSolver<RMatrix> es(k);
    const RVector ev = es.eigenvalues();
    const double cut = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    RVector inv = RVector::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > cut) inv(i) = 1.0 / ev(i);
    kinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    const int m = static_cast<int>(dirs_.size());
    if (m > 0) {
      for (const auto& dv : dirs_) w_.push_back(dv * kinv_);
      RMatrix s = RMatrix::Identity(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s(i, j) += (dirs_[i].array() * w_[j].array()).sum();
      s_ = s.ldlt();
    }
  }

  RMatrix apply(const Packed& p) const {
    RMatrix r = p.z * c_.transpose();
    for (std::size_t i = 0; i < dirs_.size(); ++i) r += p.s(static_cast<Eigen::Index>(i)) * dirs_[i];
    return r;
  }

  RMatrix residual(const Packed& p) const { return apply(p) - rhs_; }

  // Solves A A^* Y = r.
  RMatrix solve_normal(const RMatrix& r) const {
    RMatrix y = r * kinv_;
    if (!dirs_.empty()) {
      const int m = static_cast<int>(dirs_.size());
      RVector rhs(m);
      for (int i = 0; i < m; ++i) rhs(i) = (dirs_[i].array() * y.array()).sum();
      const RVector c = s_.solve(rhs);
      for (int j = 0; j < m; ++j) y -= c(j) * w_[j];
    }
    return y;
  }

  Packed adjoint(const RMatrix& y) const {
    Packed out;
    out.z = y * c_;
    out.s.resize(static_cast<Eigen::Index>(dirs_.size()));
    for (std::size_t i = 0; i < dirs_.size(); ++i) out.s(static_cast<Eigen::Index>(i)) = (dirs_[i].array() * y.array()).sum();
    return out;
  }

  Packed project(const Packed& p) const {
    const Packed corr = adjoint(solve_normal(residual(p)));
    return Packed{p.z - corr.z, p.s - corr.s};
  }

  const RMatrix& rhs() const { return rhs_; }

 private:
  int n_;
  RMatrix c_;
  RMatrix rhs_;
  std::vector<RMatrix> dirs_;
  RMatrix kinv_;
  std::vector<RMatrix> w_;
  Eigen::LDLT<RMatrix> s_;
};

Packed project_cone(const Packed& p, int n) {
  Packed out{p.z, p.s.cwiseMax(0.0)};
  for (Eigen::Index j = 0; j < p.z.cols(); ++j) {
    if (n == 1) {
      out.z(0, j) = std::max(0.0, p.z(0, j));
      continue;
    }
    const CMatrix h = hmat(p.z.col(j), n);
    Eigen::LLT<CMatrix> llt(h);
    if (llt.info() == Eigen::Success) continue;
    out.z.col(j) = hvec(psd_project(h));
  }
  return out;
}

FeasPoint unpack(const Packed& p, int n) {
  FeasPoint out;
  for (Eigen::Index j = 0; j < p.z.cols(); ++j) out.blocks.push_back(hmat(p.z.col(j), n));
  out.scalars = p.s;
  return out;
}

}  // namespace

std::vector<CMatrix> affine_residual(const AffineSystem& sys, const FeasPoint& p) {
  std::vector<CMatrix> out;
  for (int k = 0; k < sys.rows(); ++k) {
    CMatrix r = -sys.rhs[k];
    for (int j = 0; j < sys.vars(); ++j)
      if (sys.coeff(k, j) != 0.0) r += sys.coeff(k, j) * p.blocks[j];
    for (std::size_t i = 0; i < sys.scalar_dirs.size(); ++i) r += p.scalars(static_cast<Eigen::Index>(i)) * sys.scalar_dirs[i][k];
    out.push_back(std::move(r));
  }
  return out;
}

FeasResult dykstra_psd_feasibility(const AffineSystem& sys, const FeasOptions& opts) {
  const int n = sys.n;
  if (n < 1) throw Error(ErrorKind::DimensionMismatch, "feasibility: block size must be >= 1");
  if (sys.rows() < 1 || sys.vars() < 1) throw Error(ErrorKind::DimensionMismatch, "feasibility: empty system");
  if (static_cast<int>(sys.rhs.size()) != sys.rows())
    throw Error(ErrorKind::DimensionMismatch, "feasibility: rhs count differs from constraint rows");
  for (const auto& r : sys.rhs)
    if (r.rows() != n || r.cols() != n) throw Error(ErrorKind::DimensionMismatch, "feasibility: rhs block shape");
  for (const auto& dir : sys.scalar_dirs) {
    if (static_cast<int>(dir.size()) != sys.rows())
      throw Error(ErrorKind::DimensionMismatch, "feasibility: direction row count");
    for (const auto& r : dir)
      if (r.rows() != n || r.cols() != n) throw Error(ErrorKind::DimensionMismatch, "feasibility: direction block shape");
  }

  const AffineOp op(sys);
  const double scale = std::max(1.0, op.rhs().norm());
  const double tol = opts.tol * scale;
  const int nn = n * n;
  const int g = sys.vars();
  const auto m = static_cast<Eigen::Index>(sys.scalar_dirs.size());

  FeasResult res;
  Packed x{RMatrix::Zero(nn, g), RVector::Zero(m)};
  Packed q{RMatrix::Zero(nn, g), RVector::Zero(m)};
  Packed y = x;
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(std::min(opts.max_iter, 100000)) + 1);

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    y = op.project(x);
    Packed w{y.z + q.z, y.s + q.s};
    x = project_cone(w, n);
    if (opts.dykstra) q = Packed{w.z - x.z, w.s - x.s};
    const double gap = std::sqrt(sq_dist(x, y));
    history.push_back(gap);

    if (gap <= tol || (it % 10 == 0)) {
      const double r = op.residual(x).norm();
      if (r <= tol) {
        res.status = FeasStatus::Feasible;
        res.point = unpack(x, n);
        res.residual = r;
        res.gap = gap;
        res.iterations = it + 1;
        if (opts.record_gaps) res.gaps = std::move(history);
        return res;
      }
    }
    if (it >= opts.burn_in && it >= opts.stall_window && gap > tol) {
      const double old = history[history.size() - 1 - static_cast<std::size_t>(opts.stall_window)];
      if (std::abs(old - gap) <= opts.stall_rel * gap) {
        ++it;
        break;
      }
    }
  }

  // Displacement from the last affine iterate to its PSD projection. Its
  // component in the row space of A is the candidate separator.
  const Packed px = project_cone(y, n);
  const Packed v{px.z - y.z, px.s - y.s};
  const RMatrix fy = op.solve_normal(op.apply(v));
  std::vector<CMatrix> sep;
  const double fnorm = std::max(fy.norm(), 1e-300);
  for (Eigen::Index k = 0; k < fy.cols(); ++k) sep.push_back(hmat(fy.col(k) / fnorm, n));

  res.point = unpack(x, n);
  res.residual = op.residual(x).norm();
  res.gap = history.empty() ? 0.0 : history.back();
  res.iterations = it;
  res.status = it < opts.max_iter ? FeasStatus::InfeasibleEvidence : FeasStatus::Budget;
  if (res.gap > tol) res.separator = std::move(sep);
  if (opts.record_gaps) res.gaps = std::move(history);
  return res;
}

}  // namespace opsys
