#include <algorithm>
#include <cmath>
#include <limits>

#include "opsys/cone.hpp"

namespace opsys {

namespace {

std::vector<CMatrix> scalar_blocks(const RVector& f) {
  std::vector<CMatrix> out;
  for (Eigen::Index k = 0; k < f.size(); ++k) out.push_back(CMatrix::Constant(1, 1, Complex(f(k), 0.0)));
  return out;
}

void check_query(const SpacePtr& space, const HermLevel& x, double eps, const std::vector<HermLevel>& dirs) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::InvalidParameter, "eps must be positive");
  if (!x.space()->same_as(*space)) throw Error(ErrorKind::DimensionMismatch, "element from another space");
  for (const auto& d : dirs)
    if (d.level() != x.level() || !d.space()->same_as(*space))
      throw Error(ErrorKind::DimensionMismatch, "free direction level differs from the query");
}

double min_eig_scaled(const CMatrix& q) {
  const double s = std::max(1.0, q.norm());
  return min_eigenvalue(q) / s;
}

}  // namespace

ConeOracle::ConeOracle(ConePtr cone, ConeOracleOptions opts)
    : cone_(std::move(cone)), opts_(std::move(opts)), gram_(gram_matrix(cone_->space())) {
  const RVector& u = space()->unit_coeffs();
  const NnlsResult nn = nnls_solve(cone_->matrix(), u, opts_.nnls_tol);
  if (nn.residual <= 1e-13 * std::max(1.0, u.norm())) unit_weights_ = nn.coeffs;
}

MembershipResult ConeOracle::member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs) const {
  check_query(space(), x, eps, dirs);
  if (x.level() == 1) {
    std::vector<VElement> dv;
    for (const auto& d : dirs) dv.push_back(d.to_element());
    return lp(x.to_element(), dv, eps);
  }
  return omax(x, eps, dirs);
}

MembershipResult ConeOracle::lp(const VElement& y, const std::vector<VElement>& dirs, double eps) const {
  const GeneratorCone& c = *cone_;
  const int g = c.size();
  const int m = static_cast<int>(dirs.size());
  RMatrix a(space()->dim(), g + m);
  a.leftCols(g) = c.matrix();
  for (int i = 0; i < m; ++i) a.col(g + i) = -dirs[i].coeffs();
  const RVector b = y.coeffs() + eps * space()->unit_coeffs();
  const NnlsResult nn = nnls_solve(a, b, opts_.nnls_tol);

  MembershipResult r;
  r.epsilon_used = eps;
  r.diagnostics["nnls_iterations"] = nn.iterations;
  r.diagnostics["residual"] = nn.residual;

  const HermLevel target = HermLevel::from_element(y);
  std::vector<HermLevel> hd;
  for (const auto& d : dirs) hd.push_back(HermLevel::from_element(d));

  if (nn.residual <= 1e-9 * std::max(1.0, b.norm())) {
    auto cert = std::make_shared<Certificate>();
    cert->kind = CertKind::ConeCoeffs;
    cert->weights = nn.coeffs.head(g);
    cert->dir_weights = nn.coeffs.tail(m);
    r.verdict = Verdict::Inside;
    r.certificate = cert;
    r.diagnostics["residual"] = 0.0;
    if (!validate(target, eps, hd, r)) {
      r.verdict = Verdict::Unknown;
      r.certificate.reset();
      r.diagnostics["residual"] = nn.residual;
    }
    return r;
  }
  // f = -(b - A c): nonnegative on every column by the optimality conditions.
  const RVector f = -(b - a * nn.coeffs) / nn.residual;
  auto cert = std::make_shared<Certificate>();
  cert->kind = CertKind::Separator;
  cert->blocks = scalar_blocks(f);
  cert->weights = gram_.matrix.ldlt().solve(f);  // Gram representer
  r.verdict = Verdict::Outside;
  r.certificate = cert;
  if (!validate(target, eps, hd, r)) {
    r.verdict = Verdict::Unknown;
    r.certificate.reset();
  }
  return r;
}

std::optional<MembershipResult> ConeOracle::compression_refute(const HermLevel& target, const std::vector<HermLevel>& dirs,
                                                              const std::vector<std::vector<CMatrix>>& hints) const {
  const int n = target.level();
  std::vector<CVector> cands;
  auto add = [&](CVector v) {
    const double nv = v.norm();
    if (nv < 1e-12) return;
    v /= nv;
    for (const auto& c : cands)
      if (std::abs(c.dot(v)) > 1.0 - 1e-9) return;
    cands.push_back(std::move(v));
  };
  for (int i = 0; i < n; ++i) add(CVector::Unit(n, i));
  // Negative directions of the target paired with dual-cone functionals:
  // generator Gram representers and any supplied hints.
  std::vector<std::pair<double, CVector>> scored;
  auto score_functional = [&](const RVector& phi) {
    CMatrix mm = CMatrix::Zero(n, n);
    for (int k = 0; k < target.dim(); ++k)
      if (phi(k) != 0.0) mm += phi(k) * target.block(k);
    const EigResult er = herm_eig(mm);
    const double s = std::max(1e-300, er.eigenvalues.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i)
      if (er.eigenvalues(i) < -1e-12 * s) scored.emplace_back(er.eigenvalues(i) / s, er.eigenvectors.col(i));
  };
  for (const auto& gen : cone_->generators()) score_functional(gram_.matrix * gen.coeffs());
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& h : hints) {
    CMatrix me = CMatrix::Zero(n, n);
    const RVector& u = space()->unit_coeffs();
    for (int k = 0; k < target.dim(); ++k) me += u(k) * h[k];
    const EigResult er = herm_eig(me);
    for (int i = n - 1; i >= 0 && i >= n - 2; --i) add(er.eigenvectors.col(i));
  }
  for (const auto& s : scored) {
    if (static_cast<int>(cands.size()) >= opts_.max_compressions) break;
    add(s.second);
  }

  for (const auto& v : cands) {
    const CMatrix alpha = v;
    const VElement tv = compress(target, alpha).to_element();
    std::vector<VElement> dv;
    for (const auto& d : dirs) dv.push_back(compress(d, alpha).to_element());
    // target already carries eps; query the compressed point with zero slack.
    const GeneratorCone& c = *cone_;
    const int g = c.size();
    const int m = static_cast<int>(dv.size());
    RMatrix a(space()->dim(), g + m);
    a.leftCols(g) = c.matrix();
    for (int i = 0; i < m; ++i) a.col(g + i) = -dv[i].coeffs();
    const RVector& b = tv.coeffs();
    const NnlsResult nn = nnls_solve(a, b, opts_.nnls_tol);
    if (nn.residual <= 1e-9 * std::max(1.0, b.norm())) continue;
    const RVector f1 = -(b - a * nn.coeffs) / nn.residual;
    std::vector<CMatrix> lifted = normalized(lift_functional(scalar_blocks(f1), alpha));
    if (!separator_valid(c, lifted, target, dirs, opts_.tol)) continue;
    MembershipResult r;
    r.verdict = Verdict::Outside;
    auto inner = std::make_shared<Certificate>();
    inner->kind = CertKind::Separator;
    inner->blocks = scalar_blocks(f1);
    auto cert = std::make_shared<Certificate>();
    cert->kind = CertKind::CompressionLift;
    cert->alpha = alpha;
    cert->blocks = std::move(lifted);
    cert->inner = inner;
    r.certificate = cert;
    r.diagnostics["residual"] = nn.residual;
    r.diagnostics["compressions_tried"] = static_cast<double>(cands.size());
    return r;
  }
  return std::nullopt;
}

std::vector<CMatrix> ConeOracle::repair(std::vector<CMatrix> f, int n) const {
  f = normalized(std::move(f));
  const GeneratorCone& c = *cone_;
  const RVector u = gram_.matrix * space()->unit_coeffs();
  const RVector ue = c.matrix().transpose() * u;
  if (ue.size() == 0 || ue.minCoeff() <= 0.0) return f;
  double eta = 0.0;
  for (int j = 0; j < c.size(); ++j) {
    const double lam = min_eigenvalue(pair_matrix(f, c.generators()[j]));
    if (lam < 0.0) eta = std::max(eta, -lam / ue(j));
  }
  if (eta > 0.0) {
    for (int k = 0; k < static_cast<int>(f.size()); ++k) f[k] += (eta * (1.0 + 1e-9)) * u(k) * CMatrix::Identity(n, n);
    f = normalized(std::move(f));
  }
  return f;
}

std::optional<MembershipResult> ConeOracle::omax_interior(const HermLevel& x, double eps,
                                                          const std::vector<HermLevel>& dirs, const AffineSystem& sys,
                                                          std::vector<std::vector<CMatrix>>& hints) const {
  const int n = x.level();
  const GeneratorCone& c = *cone_;
  // Half the slack goes into the right-hand side so that boundary points of
  // the cone still sit in the interior of the margin problem.
  AffineSystem base = sys;
  const HermLevel half = x + HermLevel::unit(space(), n) * (0.5 * eps);
  base.rhs = half.blocks();
  MarginOptions mo = opts_.margin;
  if (unit_weights_.size() > 0) mo.stop_sigma = 0.499 * eps;
  mo.stop_dual = 0.5 * eps * (1.0 + 1e-6) + 1e-9;
  // An early stop carries residuals near hit_tol; when its certificate does
  // not validate, the solve is repeated to full convergence. The last pass
  // drops the cost on direction multipliers, which otherwise keeps the dual
  // pairing with a recession direction at dir_reg.
  const double stop_sigma = mo.stop_sigma, stop_dual = mo.stop_dual;
  bool early = false;
  for (int pass = 0; pass < 4; ++pass) {
    if (pass % 2 == 1 && !early) continue;
    if (pass == 2 && (dirs.empty() || mo.dir_reg <= mo.reg)) break;
    if (pass == 2) mo.dir_reg = mo.reg;
    mo.stop_sigma = pass % 2 == 0 ? stop_sigma : -1.0;
    mo.stop_dual = pass % 2 == 0 ? stop_dual : std::numeric_limits<double>::infinity();
    const MarginResult mr = sdp_margin(base, HermLevel::unit(space(), n).blocks(), mo);

    MembershipResult r;
    r.epsilon_used = eps;
    r.diagnostics["iterations"] = mr.iterations;
    r.diagnostics["margin_sigma"] = mr.sigma;
    r.diagnostics["margin_dual"] = mr.dual_obj;
    r.diagnostics["residual"] = std::max(0.0, mr.dual_obj - 0.5 * eps);

    if (unit_weights_.size() > 0 && mr.sigma < 0.5 * eps && mr.primal_res <= 1e-8) {
      // x + eps U = sum Q_j (x) g_j - sum s_i D_i + (eps/2 - sigma) U, and U splits over the generators.
      auto cert = std::make_shared<Certificate>();
      cert->kind = CertKind::OmaxBlocks;
      cert->blocks = mr.point.blocks;
      const double slack = 0.5 * eps - mr.sigma;
      for (int j = 0; j < c.size(); ++j)
        if (unit_weights_(j) > 0.0) cert->blocks[j] += (slack * unit_weights_(j)) * CMatrix::Identity(n, n);
      cert->dir_weights = mr.point.scalars;
      r.verdict = Verdict::Inside;
      r.certificate = cert;
      r.diagnostics["residual"] = 0.0;
      if (validate(x, eps, dirs, r)) return r;
      r.verdict = Verdict::Unknown;
      r.certificate.reset();
    }
    if (mr.dual_obj > 0.5 * eps) {
      std::vector<CMatrix> f = repair(mr.dual, n);
      auto cert = std::make_shared<Certificate>();
      cert->kind = CertKind::Separator;
      cert->blocks = f;
      r.verdict = Verdict::Outside;
      r.certificate = cert;
      if (validate(x, eps, dirs, r)) return r;
      r.verdict = Verdict::Unknown;
      r.certificate.reset();
      if (pass % 2 == 1) hints.push_back(std::move(f));
    }
    early = mr.status == MarginStatus::PrimalHit || mr.status == MarginStatus::DualHit;
  }
  return std::nullopt;
}

std::optional<MembershipResult> ConeOracle::omax_dykstra(const HermLevel& x, double eps,
                                                         const std::vector<HermLevel>& dirs, const AffineSystem& sys,
                                                         std::vector<std::vector<CMatrix>>& hints) const {
  const int n = x.level();
  const FeasResult fr = dykstra_psd_feasibility(sys, opts_.feas);
  MembershipResult r;
  r.epsilon_used = eps;
  r.diagnostics["iterations"] = fr.iterations;
  r.diagnostics["gap"] = fr.gap;
  r.diagnostics["residual"] = fr.status == FeasStatus::Feasible ? 0.0 : fr.gap;

  if (fr.status == FeasStatus::Feasible) {
    auto cert = std::make_shared<Certificate>();
    cert->kind = CertKind::OmaxBlocks;
    cert->blocks = fr.point.blocks;
    cert->dir_weights = fr.point.scalars;
    r.verdict = Verdict::Inside;
    r.certificate = cert;
    if (validate(x, eps, dirs, r)) return r;
    return std::nullopt;
  }
  if (fr.separator) {
    std::vector<CMatrix> f = repair(*fr.separator, n);
    auto cert = std::make_shared<Certificate>();
    cert->kind = CertKind::Separator;
    cert->blocks = f;
    r.verdict = Verdict::Outside;
    r.certificate = cert;
    if (validate(x, eps, dirs, r)) return r;
    hints.push_back(std::move(f));
  }
  return std::nullopt;
}

MembershipResult ConeOracle::omax(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs) const {
  const int n = x.level();
  const HermLevel target = x + HermLevel::unit(space(), n) * eps;

  // Diagonal compressions are cheap and catch most non-members.
  if (auto ref = compression_refute(target, dirs, {})) {
    ref->epsilon_used = eps;
    if (validate(x, eps, dirs, *ref)) return *ref;
  }

  AffineSystem sys;
  sys.n = n;
  sys.coeff = cone_->matrix();
  sys.rhs = target.blocks();
  for (const auto& d : dirs) {
    std::vector<CMatrix> nd;
    for (const auto& b : d.blocks()) nd.push_back(-b);
    sys.scalar_dirs.push_back(std::move(nd));
  }
  std::vector<std::vector<CMatrix>> hints;
  const bool interior = opts_.solver == OmaxSolver::InteriorPoint;
  if (auto res = interior ? omax_interior(x, eps, dirs, sys, hints) : omax_dykstra(x, eps, dirs, sys, hints))
    return *res;
  if (!hints.empty()) {
    if (auto ref = compression_refute(target, dirs, hints)) {
      ref->epsilon_used = eps;
      if (validate(x, eps, dirs, *ref)) return *ref;
    }
  }
  MembershipResult r;
  r.epsilon_used = eps;
  r.diagnostics["residual"] = std::numeric_limits<double>::infinity();
  return r;
}

bool ConeOracle::validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                          const MembershipResult& r) const {
  if (!r.certificate) return false;
  if (r.epsilon_used != eps) return false;
  const Certificate& c = *r.certificate;
  const GeneratorCone& cone = *cone_;
  const int n = x.level();
  const HermLevel target = x + HermLevel::unit(space(), n) * eps;
  const double scale = std::max(1.0, target.norm());

  if (r.verdict == Verdict::Inside) {
    if (c.dir_weights.size() != static_cast<Eigen::Index>(dirs.size())) return false;
    if (c.dir_weights.size() > 0 && c.dir_weights.minCoeff() < 0.0) return false;
    HermLevel sum = HermLevel::zero(space(), n);
    if (c.kind == CertKind::ConeCoeffs) {
      if (n != 1 || c.weights.size() != cone.size()) return false;
      if (c.weights.size() > 0 && c.weights.minCoeff() < 0.0) return false;
      sum = HermLevel::from_element(VElement(space(), cone.matrix() * c.weights));
    } else if (c.kind == CertKind::OmaxBlocks) {
      if (static_cast<int>(c.blocks.size()) != cone.size()) return false;
      std::vector<CMatrix> acc(space()->dim(), CMatrix::Zero(n, n));
      for (int j = 0; j < cone.size(); ++j) {
        const CMatrix& q = c.blocks[j];
        if (q.rows() != n || q.cols() != n) return false;
        if (min_eig_scaled(q) < -opts_.tol.psd) return false;
        const RVector& gj = cone.generators()[j].coeffs();
        for (int k = 0; k < space()->dim(); ++k)
          if (gj(k) != 0.0) acc[k] += gj(k) * q;
      }
      sum = HermLevel(space(), std::move(acc));
    } else {
      return false;
    }
    for (std::size_t i = 0; i < dirs.size(); ++i) sum = sum - dirs[i] * c.dir_weights(static_cast<Eigen::Index>(i));
    return (sum - target).norm() <= opts_.tol.recombine * scale;
  }
  if (r.verdict == Verdict::Outside) {
    if (c.kind != CertKind::Separator && c.kind != CertKind::CompressionLift) return false;
    return separator_valid(cone, c.blocks, target, dirs, opts_.tol);
  }
  return false;
}

MembershipResult lp_member(const GeneratorCone& cone, const VElement& y, double eps) {
  const ConeOracle o(std::make_shared<GeneratorCone>(cone));
  return o.member(HermLevel::from_element(y), eps);
}

MembershipResult omax_member(const GeneratorCone& cone, const HermLevel& x, double eps) {
  const ConeOracle o(std::make_shared<GeneratorCone>(cone));
  return o.member(x, eps);
}

}  // namespace opsys
