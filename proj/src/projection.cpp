#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "opsys/projection.hpp"

namespace opsys {

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Places a 2x2 pattern s against an n x n block a in the chosen layout.
CMatrix place(const CMatrix& s, const CMatrix& a, TensorLayout layout) {
  return layout == TensorLayout::Block ? kron(s, a) : kron(a, s);
}

CMatrix diag2(double a, double b) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

double op_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

}  // namespace

// Compression lemma ---------------------------------------------------------------

LemmaVerdict lemma_compression_witness(const CMatrix& p, const CMatrix& t, double eps, double t_max) {
  const Eigen::Index m = p.rows();
  if (p.cols() != m || t.rows() != m || t.cols() != m) throw Error(ErrorKind::DimensionMismatch, "P and T sizes");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParameter, "eps must be positive");
  const double ps = std::max(1.0, p.norm());
  if ((p * p - p).norm() > 1e-10 * ps || (p - p.adjoint()).norm() > 1e-10 * ps)
    throw Error(ErrorKind::InvalidInput, "P is not an orthogonal projection");
  if ((t - t.adjoint()).norm() > 1e-10 * std::max(1.0, t.norm())) throw Error(ErrorKind::InvalidInput, "T is not Hermitian");
  const CMatrix perp = CMatrix::Identity(m, m) - p;
  const CMatrix base = t + eps * p;
  for (double s = 0x1p-20; s <= t_max; s *= 2.0)
    if (min_eigenvalue(base + s * perp) >= -1e-10) return {true, s};
  return {false, 0.0};
}

double compressed_min_eig(const CMatrix& p, const CMatrix& t) {
  const EigResult pe = herm_eig(p);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < pe.eigenvalues.size(); ++i)
    if (pe.eigenvalues(i) > 0.5) cols.push_back(i);
  if (cols.empty()) return std::numeric_limits<double>::infinity();
  CMatrix v(p.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = pe.eigenvectors.col(cols[c]);
  return min_eigenvalue(v.adjoint() * t * v);
}

// C_n(p) -----------------------------------------------------------------------------

HermLevel cnp_lift(const HermLevel& x, TensorLayout layout) {
  const CMatrix j = CMatrix::Ones(2, 2);
  std::vector<CMatrix> blocks;
  for (const auto& a : x.blocks()) blocks.push_back(place(j, a, layout));
  return HermLevel(x.space(), std::move(blocks));
}

HermLevel cnp_padding(const VElement& p, int n, TensorLayout layout) {
  const auto& space = p.space();
  const VElement perp = VElement::unit(space) - p;
  const CMatrix id = CMatrix::Identity(n, n);
  return HermLevel::tensor(place(diag2(1.0, 0.0), id, layout), perp) +
         HermLevel::tensor(place(diag2(0.0, 1.0), id, layout), p);
}

void check_projection_bounds(const MembershipOracle& oracle, const VElement& p) {
  const VElement perp = VElement::unit(p.space()) - p;
  if (closure_member(oracle, HermLevel::from_element(p)).outside())
    throw Error(ErrorKind::Precondition, "p is not positive in the current cone");
  if (closure_member(oracle, HermLevel::from_element(perp)).outside())
    throw Error(ErrorKind::Precondition, "e - p is not positive in the current cone");
}

namespace {

std::vector<HermLevel> cnp_dirs(const HermLevel& x, const VElement& p, const CnpOptions& opts,
                                const std::vector<HermLevel>& dirs) {
  std::vector<HermLevel> out;
  for (const auto& d : dirs) out.push_back(cnp_lift(d, opts.layout));
  out.push_back(cnp_padding(p, x.level(), opts.layout));
  return out;
}

}  // namespace

namespace {

// Coordinate form of an Outside certificate, when it has one.
std::optional<std::vector<CMatrix>> coordinate_functional(const MembershipResult& r) {
  if (!r.outside() || !r.certificate) return std::nullopt;
  const Certificate& c = *r.certificate;
  if (c.kind == CertKind::Separator || c.kind == CertKind::CompressionLift) return c.blocks;
  if (c.kind == CertKind::ProjectionLift && !c.blocks.empty()) return c.blocks;
  if (c.kind == CertKind::ConcreteWitness && c.blocks.size() > 1)
    return std::vector<CMatrix>(c.blocks.begin() + 1, c.blocks.end());
  return std::nullopt;
}

}  // namespace

MembershipResult cnp_member(const MembershipOracle& oracle_2n, const HermLevel& x, const VElement& p, double eps,
                            const CnpOptions& opts, const std::vector<HermLevel>& dirs) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParameter, "eps must be positive");
  if (opts.check_precondition) check_projection_bounds(oracle_2n, p);
  const HermLevel lifted = cnp_lift(x, opts.layout);
  const std::vector<HermLevel> ldirs = cnp_dirs(x, p, opts, dirs);
  const MembershipResult inner = oracle_2n.member(lifted, eps, ldirs);

  MembershipResult r;
  r.epsilon_used = eps;
  r.diagnostics = inner.diagnostics;
  if (inner.verdict == Verdict::Unknown || !inner.certificate) return r;

  auto cert = std::make_shared<Certificate>();
  cert->kind = CertKind::ProjectionLift;
  cert->inner = inner.certificate;
  if (inner.outside()) {
    // Pull the level-2n functional back through x -> [[x, x], [x, x]].
    if (auto f = coordinate_functional(inner)) {
      const int n = x.level();
      const CMatrix row = CMatrix::Ones(1, 2);
      const CMatrix id = CMatrix::Identity(n, n);
      cert->blocks = lift_functional(*f, opts.layout == TensorLayout::Block ? kron(row, id) : kron(id, row));
    }
  }
  if (inner.inside()) {
    const RVector& w = inner.certificate->dir_weights;
    if (w.size() != static_cast<Eigen::Index>(ldirs.size())) return r;
    // eps I (x) e = eps diag(p, p^perp) + eps diag(p^perp, p).
    cert->t = w(w.size() - 1) + eps;
    cert->dir_weights = w.head(w.size() - 1);
    r.diagnostics["t"] = cert->t;
    if (cert->t > opts.t_max) return r;
  }
  r.verdict = inner.verdict;
  r.certificate = cert;
  return r;
}

bool cnp_validate(const MembershipOracle& oracle_2n, const HermLevel& x, const VElement& p, double eps,
                  const CnpOptions& opts, const std::vector<HermLevel>& dirs, const MembershipResult& r) {
  if (!r.certificate || r.certificate->kind != CertKind::ProjectionLift || !r.certificate->inner) return false;
  if (r.verdict == Verdict::Unknown || r.epsilon_used != eps) return false;
  const Certificate& c = *r.certificate;
  if (r.verdict == Verdict::Inside) {
    if (c.t > opts.t_max || c.dir_weights.size() != static_cast<Eigen::Index>(dirs.size())) return false;
    const RVector& w = c.inner->dir_weights;
    if (w.size() != c.dir_weights.size() + 1) return false;
    if ((w.head(c.dir_weights.size()) - c.dir_weights).norm() != 0.0) return false;
    if (std::abs(w(w.size() - 1) + eps - c.t) > 1e-12 * std::max(1.0, c.t)) return false;
  }
  MembershipResult inner;
  inner.verdict = r.verdict;
  inner.epsilon_used = eps;
  inner.certificate = c.inner;
  return oracle_2n.validate(cnp_lift(x, opts.layout), eps, cnp_dirs(x, p, opts, dirs), inner);
}

// Relations -----------------------------------------------------------------------

const char* to_string(Holds h) {
  switch (h) {
    case Holds::Yes: return "yes";
    case Holds::No: return "no";
    case Holds::Unknown: return "unknown";
  }
  return "?";
}

RelationVerdict relation_check(const MembershipOracle& oracle, const VElement& p, const VElement& x, double tau,
                               const std::vector<double>& schedule, double t_max) {
  if (schedule.empty()) throw Error(ErrorKind::InvalidParameter, "empty eps schedule");
  check_projection_bounds(oracle, p);
  const auto& space = p.space();
  const VElement e = VElement::unit(space);
  const HermLevel perp = HermLevel::from_element(e - p);
  const HermLevel base = HermLevel::from_element(x - e * tau);

  RelationVerdict out;
  bool all = true, refuted = false;
  for (double eps : schedule) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParameter, "eps must be positive");
    for (int s : {1, -1}) {
      RelationEntry ent;
      ent.eps = eps;
      ent.sign = s;
      const HermLevel z = base * static_cast<double>(s);
      // z + eps e + w p^perp = z + eps p + (w + eps) p^perp.
      ent.result = oracle.member(z, eps, {perp});
      ent.verdict = ent.result.verdict;
      if (ent.result.inside()) {
        ent.t = ent.result.certificate->dir_weights(0) + eps;
        if (ent.t > t_max) ent.verdict = Verdict::Unknown;
      } else if (ent.result.outside() && !oracle.validate(z, eps, {perp}, ent.result)) {
        ent.verdict = Verdict::Unknown;
      }
      if (ent.verdict == Verdict::Inside) out.witnesses.emplace_back(eps, ent.t);
      all = all && ent.verdict == Verdict::Inside;
      refuted = refuted || ent.verdict == Verdict::Outside;
      out.entries.push_back(std::move(ent));
    }
  }
  out.holds = all ? Holds::Yes : (refuted ? Holds::No : Holds::Unknown);
  return out;
}

// d-minimal refutation ------------------------------------------------------------------

std::pair<HermLevel, std::vector<HermLevel>> compressed_query(const HermLevel& x, double eps, const CMatrix& alpha,
                                                              const std::vector<HermLevel>& dirs) {
  const Eigen::Index d = alpha.cols();
  const VElement e = VElement::unit(x.space());
  HermLevel target = compress(x, alpha) + HermLevel::tensor(alpha.adjoint() * alpha - CMatrix::Identity(d, d), e) * eps;
  std::vector<HermLevel> cd;
  for (const auto& dir : dirs) cd.push_back(compress(dir, alpha));
  return {std::move(target), std::move(cd)};
}

bool validate_compression(const MembershipOracle& oracle_d, const HermLevel& x, double eps,
                          const std::vector<HermLevel>& dirs, const CompressionCert& c) {
  if (c.alpha.rows() != x.level() || c.violation.verdict != Verdict::Outside) return false;
  if (std::abs(op_norm(c.alpha) - 1.0) > 1e-9) return false;
  const HermLevel comp = compress(x, c.alpha);
  if ((comp - c.compressed).norm() > 1e-12 * std::max(1.0, comp.norm())) return false;
  const auto [target, cd] = compressed_query(x, eps, c.alpha, dirs);
  return oracle_d.validate(target, eps, cd, c.violation);
}

namespace {

struct Searcher {
  const MembershipOracle& oracle;
  const HermLevel& x;
  double eps;
  const std::vector<HermLevel>& dirs;

  struct Eval {
    double score = 0.0;
    std::optional<CompressionCert> cert;
  };

  Eval operator()(CMatrix alpha) const {
    Eval out;
    const double nrm = op_norm(alpha);
    if (!(nrm > 0.0)) {
      out.score = 1e300;
      return out;
    }
    alpha /= nrm;
    const auto [target, cd] = compressed_query(x, eps, alpha, dirs);
    MembershipResult r = oracle.member(target, eps, cd);
    out.score = r.margin();
    if (r.outside() && oracle.validate(target, eps, cd, r)) {
      out.cert = CompressionCert{alpha, compress(x, alpha), std::move(r)};
    }
    return out;
  }
};

CMatrix random_alpha(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix a(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  return a;
}

}  // namespace

std::vector<CMatrix> axis_compressions(int n, int d, int cap) {
  std::vector<CMatrix> out;
  if (n <= d) {
    CMatrix a = CMatrix::Zero(n, d);
    a.leftCols(n) = CMatrix::Identity(n, n);
    out.push_back(a);
    return out;
  }
  std::vector<int> idx(d);
  for (int i = 0; i < d; ++i) idx[i] = i;
  while (static_cast<int>(out.size()) < cap) {
    CMatrix a = CMatrix::Zero(n, d);
    for (int j = 0; j < d; ++j) a(idx[j], j) = 1.0;
    out.push_back(a);
    int k = d - 1;
    while (k >= 0 && idx[k] == n - d + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}


std::vector<CMatrix> separator_compressions(const MembershipResult& r, const HermLevel& x, int d) {
  const auto f = coordinate_functional(r);
  if (!f || static_cast<int>(f->size()) != x.dim()) return {};
  const int n = x.level();
  const RVector u = VElement::unit(x.space()).coeffs();
  CMatrix m = CMatrix::Zero(n, n);
  for (int k = 0; k < x.dim(); ++k)
    if (u(k) != 0.0) m += u(k) * (*f)[k];
  const EigResult er = herm_eig(hermitian_from_upper(m));
  const int take = std::min(n, d);
  CMatrix a = CMatrix::Zero(n, d);
  a.leftCols(take) = er.eigenvectors.rightCols(take);
  return {a};
}

std::optional<CompressionCert> try_compression(const MembershipOracle& oracle_d, const HermLevel& x, double eps,
                                               CMatrix alpha, const std::vector<HermLevel>& dirs) {
  return Searcher{oracle_d, x, eps, dirs}(std::move(alpha)).cert;
}

DminOutcome dmin_refute(const MembershipOracle& oracle_d, const HermLevel& x, double eps, int d,
                        const SearchBudget& budget, const std::vector<HermLevel>& dirs) {
  if (d < 1) throw Error(ErrorKind::InvalidParameter, "d must be >= 1");
  if (eps < 0.0) throw Error(ErrorKind::InvalidParameter, "eps must be >= 0");
  const int n = x.level();
  const Searcher eval{oracle_d, x, eps, dirs};
  DminOutcome out;

  std::vector<CMatrix> fixed;
  if (budget.hints && n > d && oracle_d.max_level() >= n)
    fixed = separator_compressions(oracle_d.member(x, eps, dirs), x, d);
  if (budget.axis || n <= d)
    for (auto& a : axis_compressions(n, d)) fixed.push_back(std::move(a));
  for (const auto& a : fixed) {
    ++out.tested;
    auto r = eval(a);
    if (r.cert) {
      out.refutation = std::move(r.cert);
      return out;
    }
  }
  if (n <= d) return out;

  struct Run {
    std::optional<CompressionCert> cert;
    int tested = 0;
  };
  auto restart = [&](int idx) {
    Run run;
    std::mt19937_64 rng(derive_seed(budget.seed, static_cast<std::uint64_t>(idx)));
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix a = random_alpha(n, d, rng);
    a /= op_norm(a);
    auto cur = eval(a);
    ++run.tested;
    double h = 0.5;
    for (int step = 0; step < budget.steps && !cur.cert; ++step) {
      CMatrix dir = random_alpha(n, d, rng);
      dir *= 1.0 / dir.norm();
      CMatrix trial = a + h * dir;
      trial /= op_norm(trial);
      auto te = eval(trial);
      ++run.tested;
      if (te.cert || te.score < cur.score) {
        a = trial;
        cur = std::move(te);
        h = std::min(1.0, 1.5 * h);
      } else {
        h *= 0.5;
        if (h < 1e-6) break;
      }
    }
    run.cert = std::move(cur.cert);
    return run;
  };

  const int threads = std::max(1, budget.threads);
  for (int first = 0; first < budget.restarts; first += threads) {
    const int count = std::min(threads, budget.restarts - first);
    std::vector<Run> runs(count);
    if (count == 1) {
      runs[0] = restart(first);
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < count; ++i) pool.emplace_back([&, i] { runs[i] = restart(first + i); });
      for (auto& t : pool) t.join();
    }
    for (int i = 0; i < count; ++i) {
      out.tested += runs[i].tested;
      if (runs[i].cert) {
        out.refutation = std::move(runs[i].cert);
        return out;
      }
    }
  }
  return out;
}

DminOutcome dmin_sampled_certify(const MembershipOracle& oracle_d, const HermLevel& x, double eps, int d, int samples,
                                 std::uint64_t seed, const std::vector<HermLevel>& dirs) {
  if (samples < 0) throw Error(ErrorKind::InvalidParameter, "samples must be >= 0");
  const int n = x.level();
  const Searcher eval{oracle_d, x, eps, dirs};
  DminOutcome out;
  auto check = [&](const CMatrix& a) {
    ++out.tested;
    auto r = eval(a);
    if (r.cert) out.refutation = std::move(r.cert);
    return out.refuted();
  };
  for (const auto& a : axis_compressions(n, d))
    if (check(a)) return out;
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s)
    if (check(random_alpha(n, d, rng))) return out;
  return out;
}

}  // namespace opsys
