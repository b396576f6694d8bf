#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "opsys/numerics.hpp"

namespace opsys {

const char* to_string(MarginStatus s) {
  switch (s) {
    case MarginStatus::Optimal: return "optimal";
    case MarginStatus::PrimalHit: return "primal-hit";
    case MarginStatus::DualHit: return "dual-hit";
    case MarginStatus::Stalled: return "stalled";
  }
  return "?";
}

namespace {

CMatrix herm(const CMatrix& w) { return 0.5 * (w + w.adjoint()); }

// Largest step a with x + a dx >= 0, capped at `cap`.
double psd_step(const CMatrix& x, const CMatrix& dx, double cap) {
  Eigen::LLT<CMatrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const CMatrix li = llt.matrixL().solve(CMatrix::Identity(x.rows(), x.cols()));
  const CMatrix s = herm(li * dx * li.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(s, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return cap;
  return std::min(cap, -1.0 / lmin);
}

double scalar_step(const RVector& v, const RVector& dv, double cap) {
  double a = cap;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

CMatrix inverse_pd(const CMatrix& z) {
  Eigen::LLT<CMatrix> llt(z);
  return llt.solve(CMatrix::Identity(z.rows(), z.cols()));
}

struct Problem {
  int n = 1, nn = 1, rows = 0, g = 0, ns = 0;
  RMatrix coeff;       // rows x g
  RMatrix a;           // m x ns, columns of the scalar variables (dirs then -unit)
  RVector b;           // m
  RVector cs;          // ns
  double cq = 0.0;     // trace cost on blocks
  std::vector<CMatrix> basis;  // hvec basis of n x n Hermitian matrices

  int m() const { return rows * nn; }

  RVector apply(const std::vector<CMatrix>& q, const RVector& s) const {
    RVector out = a * s;
    for (int k = 0; k < rows; ++k) {
      CMatrix acc = CMatrix::Zero(n, n);
      for (int j = 0; j < g; ++j)
        if (coeff(k, j) != 0.0) acc += coeff(k, j) * q[j];
      out.segment(k * nn, nn) += hvec(herm(acc));
    }
    return out;
  }
  std::vector<CMatrix> adjoint_blocks(const RVector& y) const {
    std::vector<CMatrix> yk(rows);
    for (int k = 0; k < rows; ++k) yk[k] = hmat(y.segment(k * nn, nn), n);
    std::vector<CMatrix> out(g, CMatrix::Zero(n, n));
    for (int j = 0; j < g; ++j)
      for (int k = 0; k < rows; ++k)
        if (coeff(k, j) != 0.0) out[j] += coeff(k, j) * yk[k];
    return out;
  }
};

}  // namespace

MarginResult sdp_margin(const AffineSystem& sys, const std::vector<CMatrix>& unit, const MarginOptions& opts) {
  Problem p;
  p.n = sys.n;
  p.nn = p.n * p.n;
  p.rows = sys.rows();
  p.g = sys.vars();
  if (static_cast<int>(sys.rhs.size()) != p.rows || static_cast<int>(unit.size()) != p.rows)
    throw Error(ErrorKind::DimensionMismatch, "margin system row count");
  for (const auto& d : sys.scalar_dirs)
    if (static_cast<int>(d.size()) != p.rows) throw Error(ErrorKind::DimensionMismatch, "margin direction row count");
  p.coeff = sys.coeff;
  const int nd = static_cast<int>(sys.scalar_dirs.size());
  p.ns = nd + 1;
  const int m = p.m();
  p.a.resize(m, p.ns);
  p.b.resize(m);
  for (int k = 0; k < p.rows; ++k) {
    if (sys.rhs[k].rows() != p.n || unit[k].rows() != p.n) throw Error(ErrorKind::DimensionMismatch, "margin block size");
    p.b.segment(k * p.nn, p.nn) = hvec(sys.rhs[k]);
    for (int i = 0; i < nd; ++i) p.a.block(k * p.nn, i, p.nn, 1) = hvec(sys.scalar_dirs[i][k]);
    p.a.block(k * p.nn, nd, p.nn, 1) = -hvec(unit[k]);
  }
  p.cs = RVector::Constant(p.ns, opts.dir_reg);
  p.cs(nd) = 1.0;
  p.cq = opts.reg;
  for (int k = 0; k < p.nn; ++k) p.basis.push_back(hmat(RVector::Unit(p.nn, k), p.n));

  const int g = p.g, n = p.n, nn = p.nn;
  const double bnorm = p.b.norm();
  const double cnorm = std::sqrt(p.cs.squaredNorm() + g * n * p.cq * p.cq);
  const double degree = static_cast<double>(g) * n + p.ns;

  double amax = 0.0;
  for (int j = 0; j < g; ++j) amax = std::max(amax, p.coeff.col(j).norm());
  for (int i = 0; i < p.ns; ++i) amax = std::max(amax, p.a.col(i).norm());
  const double xi = std::max(10.0, std::sqrt(static_cast<double>(n)) * (1.0 + p.b.cwiseAbs().maxCoeff()) /
                                       std::max(1e-12, amax));
  const double zeta = std::max(10.0, std::max(amax, 1.0));

  std::vector<CMatrix> x(g, xi * CMatrix::Identity(n, n)), z(g, zeta * CMatrix::Identity(n, n));
  RVector s = RVector::Constant(p.ns, xi), zs = RVector::Constant(p.ns, zeta);
  RVector y = RVector::Zero(m);

  // Last iterates that met the feasibility tolerance, returned on a stall.
  struct PrimalSnap {
    std::vector<CMatrix> x;
    RVector s;
    double res = 0.0, obj = 0.0;
  };
  struct DualSnap {
    RVector y;
    double res = 0.0, obj = 0.0;
  };
  std::optional<PrimalSnap> psnap;
  std::optional<DualSnap> dsnap;

  MarginResult res;
  auto finish = [&](MarginStatus st, int it, double pres, double dres, double pobj, double dobj) {
    if (st == MarginStatus::Stalled && psnap && !(pres <= psnap->res)) {
      x = psnap->x;
      s = psnap->s;
      pres = psnap->res;
      pobj = psnap->obj;
    }
    if (st == MarginStatus::Stalled && dsnap && !(dres <= dsnap->res)) {
      y = dsnap->y;
      dres = dsnap->res;
      dobj = dsnap->obj;
    }
    res.status = st;
    res.iterations = it;
    res.point.blocks = x;
    res.point.scalars = s.head(nd);
    res.sigma = s(nd);
    res.dual.assign(p.rows, CMatrix());
    for (int k = 0; k < p.rows; ++k) res.dual[k] = -hmat(y.segment(k * nn, nn), n);
    res.primal_res = pres;
    res.dual_res = dres;
    res.primal_obj = pobj;
    res.dual_obj = dobj;
    return res;
  };

  // A A^* = (C C^T) (x) I + A_s A_s^T.
  Eigen::LLT<RMatrix> aat;
  {
    RMatrix full = p.a * p.a.transpose();
    const RMatrix cct = p.coeff * p.coeff.transpose();
    for (int r1 = 0; r1 < p.rows; ++r1)
      for (int r2 = 0; r2 < p.rows; ++r2) full.block(r1 * nn, r2 * nn, nn, nn).diagonal().array() += cct(r1, r2);
    aat.compute(full);
    if (aat.info() != Eigen::Success) throw Error(ErrorKind::InvalidInput, "margin system is rank deficient");
  }

  RMatrix kmat(nn, nn);
  RMatrix mm(m, m);
  double pres = 0.0, dres = 0.0, pobj = 0.0, dobj = 0.0;
  double best_mu = std::numeric_limits<double>::infinity();
  int flat = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    // Residuals and measures.
    const RVector rp = p.b - p.apply(x, s);
    std::vector<CMatrix> aty = p.adjoint_blocks(y);
    std::vector<CMatrix> rd(g);
    double rdn = 0.0;
    for (int j = 0; j < g; ++j) {
      rd[j] = p.cq * CMatrix::Identity(n, n) - aty[j] - z[j];
      rdn += rd[j].squaredNorm();
    }
    const RVector rds = p.cs - p.a.transpose() * y - zs;
    rdn += rds.squaredNorm();
    pres = rp.norm() / (1.0 + bnorm);
    dres = std::sqrt(rdn) / (1.0 + cnorm);
    double xz = s.dot(zs);
    double trx = 0.0;
    for (int j = 0; j < g; ++j) {
      xz += (x[j].conjugate().cwiseProduct(z[j])).sum().real();
      trx += x[j].trace().real();
    }
    const double mu = xz / degree;
    pobj = p.cq * trx + p.cs.dot(s);
    dobj = p.b.dot(y);
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (pres <= opts.hit_tol && (!psnap || pres <= opts.feas_tol || psnap->res > opts.feas_tol))
      psnap = PrimalSnap{x, s, pres, pobj};
    if (dres <= opts.hit_tol && (!dsnap || dres <= opts.feas_tol || dsnap->res > opts.feas_tol))
      dsnap = DualSnap{y, dres, dobj};
    if (pres <= opts.hit_tol && s(nd) <= opts.stop_sigma) return finish(MarginStatus::PrimalHit, it, pres, dres, pobj, dobj);
    if (dres <= opts.hit_tol && dobj >= opts.stop_dual) return finish(MarginStatus::DualHit, it, pres, dres, pobj, dobj);
    if (pres <= opts.feas_tol && dres <= opts.feas_tol && relgap <= opts.gap_tol)
      return finish(MarginStatus::Optimal, it, pres, dres, pobj, dobj);
    if (mu < 0.99 * best_mu) {
      best_mu = mu;
      flat = 0;
    } else if (++flat >= 5) {
      return finish(MarginStatus::Stalled, it, pres, dres, pobj, dobj);
    }

    // Schur complement M = sum_j (c_j c_j^T) (x) K_j + A_s diag(s/zs) A_s^T.
    std::vector<CMatrix> zi(g);
    mm.setZero();
    for (int j = 0; j < g; ++j) {
      zi[j] = inverse_pd(z[j]);
      for (int kp = 0; kp < nn; ++kp) kmat.col(kp) = hvec(herm(x[j] * p.basis[kp] * zi[j]));
      kmat = 0.5 * (kmat + kmat.transpose()).eval();
      for (int r1 = 0; r1 < p.rows; ++r1) {
        const double c1 = p.coeff(r1, j);
        if (c1 == 0.0) continue;
        for (int r2 = 0; r2 < p.rows; ++r2) {
          const double c2 = p.coeff(r2, j);
          if (c2 == 0.0) continue;
          mm.block(r1 * nn, r2 * nn, nn, nn) += (c1 * c2) * kmat;
        }
      }
    }
    const RVector ratio = s.cwiseQuotient(zs);
    mm += p.a * ratio.asDiagonal() * p.a.transpose();
    const double diag_scale = std::max(1e-300, mm.diagonal().cwiseAbs().maxCoeff());
    Eigen::LLT<RMatrix> llt(mm);
    if (llt.info() != Eigen::Success) {
      mm.diagonal().array() += 1e-14 * diag_scale;
      llt.compute(mm);
      if (llt.info() != Eigen::Success) return finish(MarginStatus::Stalled, it, pres, dres, pobj, dobj);
    }

    // Direction for a given centering target and second-order correction.
    struct Dir {
      std::vector<CMatrix> dx, dz;
      RVector ds, dzs;
      RVector dy;
    };
    auto solve = [&](double target, const Dir* corr) {
      std::vector<CMatrix> pj(g);
      for (int j = 0; j < g; ++j) {
        CMatrix t = target * zi[j] - x[j] - x[j] * rd[j] * zi[j];
        if (corr) t -= corr->dx[j] * corr->dz[j] * zi[j];
        pj[j] = t;
      }
      RVector ps(p.ns);
      for (int i = 0; i < p.ns; ++i) {
        double t = target - s(i) * zs(i) - s(i) * rds(i);
        if (corr) t -= corr->ds(i) * corr->dzs(i);
        ps(i) = t / zs(i);
      }
      std::vector<CMatrix> ph(g);
      for (int j = 0; j < g; ++j) ph[j] = herm(pj[j]);
      const RVector rhs = rp - p.apply(ph, ps);
      Dir d;
      d.dy = llt.solve(rhs);
      d.dy += llt.solve(rhs - mm * d.dy);
      const std::vector<CMatrix> atdy = p.adjoint_blocks(d.dy);
      d.dx.resize(g);
      d.dz.resize(g);
      for (int j = 0; j < g; ++j) {
        d.dz[j] = rd[j] - atdy[j];
        d.dx[j] = herm(pj[j] + x[j] * atdy[j] * zi[j]);
      }
      const RVector atdys = p.a.transpose() * d.dy;
      d.dzs = rds - atdys;
      d.ds = ps + ratio.cwiseProduct(atdys);
      // Restore A(dx, ds) = rp through the well-conditioned normal map.
      const RVector w = aat.solve(rp - p.apply(d.dx, d.ds));
      const std::vector<CMatrix> atw = p.adjoint_blocks(w);
      for (int j = 0; j < g; ++j) d.dx[j] += atw[j];
      d.ds += p.a.transpose() * w;
      return d;
    };
    auto steps = [&](const Dir& d, double cap) {
      double ap = scalar_step(s, d.ds, cap), ad = scalar_step(zs, d.dzs, cap);
      for (int j = 0; j < g; ++j) {
        ap = psd_step(x[j], d.dx[j], ap);
        ad = psd_step(z[j], d.dz[j], ad);
      }
      return std::pair<double, double>(ap, ad);
    };

    const Dir aff = solve(0.0, nullptr);
    const auto [ap0, ad0] = steps(aff, 1.0);
    double xz_aff = (s + ap0 * aff.ds).dot(zs + ad0 * aff.dzs);
    for (int j = 0; j < g; ++j)
      xz_aff += ((x[j] + ap0 * aff.dx[j]).conjugate().cwiseProduct(z[j] + ad0 * aff.dz[j])).sum().real();
    const double mu_aff = xz_aff / degree;
    const double centering = std::clamp(std::pow(std::max(0.0, mu_aff) / mu, 3.0), 0.0, 1.0);

    const Dir d = solve(centering * mu, &aff);
    auto [ap, ad] = steps(d, 1e30);
    ap = std::min(1.0, 0.98 * ap);
    ad = std::min(1.0, 0.98 * ad);
    if (!(ap > 1e-14) && !(ad > 1e-14)) return finish(MarginStatus::Stalled, it, pres, dres, pobj, dobj);
    for (int j = 0; j < g; ++j) {
      x[j] = herm(x[j] + ap * d.dx[j]);
      z[j] = herm(z[j] + ad * d.dz[j]);
    }
    s += ap * d.ds;
    zs += ad * d.dzs;
    y += ad * d.dy;
  }
  return finish(MarginStatus::Stalled, opts.max_iter, pres, dres, pobj, dobj);
}

}  // namespace opsys
