#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "opsys/quantum.hpp"

namespace opsys {

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double overlap_sq(const CVector& a, const CVector& b) { return std::norm(a.dot(b)); }

std::vector<CVector> haar_vectors(int count, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<CVector> out;
  for (int a = 0; a < count; ++a) {
    CVector v(d);
    for (int i = 0; i < d; ++i) v(i) = Complex(g(rng), g(rng));
    out.push_back(v / v.norm());
  }
  return out;
}

double sic_error(const CMatrix& gram, int d) {
  const double lam = 1.0 / (d + 1);
  double err = 0.0;
  for (Eigen::Index a = 0; a < gram.rows(); ++a)
    for (Eigen::Index b = 0; b < gram.cols(); ++b)
      if (a != b) err = std::max(err, std::abs(std::norm(gram(a, b)) - lam));
  return err;
}

// Levenberg-Marquardt on r_ab = |<phi_a, phi_b>|^2 / (|phi_a|^2 |phi_b|^2) - lambda,
// a < b, over the real and imaginary parts of all vectors.
double polish(CMatrix& phi, int d, int max_iters) {
  const int m = static_cast<int>(phi.cols());
  const double lam = 1.0 / (d + 1);
  const int pairs = m * (m - 1) / 2;
  const int params = 2 * d * m;
  auto residuals = [&](const CMatrix& p) {
    RVector r(pairs);
    const CMatrix g = p.adjoint() * p;
    int row = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) r(row++) = std::norm(g(a, b)) / (g(a, a).real() * g(b, b).real()) - lam;
    return r;
  };
  RVector r = residuals(phi);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  for (int it = 0; it < max_iters && r.cwiseAbs().maxCoeff() > 1e-14; ++it) {
    const CMatrix g = phi.adjoint() * phi;
    RMatrix jac = RMatrix::Zero(pairs, params);
    int row = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b, ++row) {
        const double na = g(a, a).real(), nb = g(b, b).real();
        const Complex gab = g(a, b);
        const double g2 = std::norm(gab);
        for (int i = 0; i < d; ++i) {
          // Wirtinger derivatives with respect to conj(phi); real partials are 2 Re / 2 Im.
          const Complex wa = (phi(i, b) * std::conj(gab) - g2 * phi(i, a) / na) / (na * nb);
          const Complex wb = (phi(i, a) * gab - g2 * phi(i, b) / nb) / (na * nb);
          jac(row, 2 * (a * d + i)) = 2.0 * wa.real();
          jac(row, 2 * (a * d + i) + 1) = 2.0 * wa.imag();
          jac(row, 2 * (b * d + i)) = 2.0 * wb.real();
          jac(row, 2 * (b * d + i) + 1) = 2.0 * wb.imag();
        }
      }
    const RMatrix jtj = jac.transpose() * jac;
    const RVector jtr = jac.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 20 && !accepted; ++tries) {
      RMatrix h = jtj;
      h.diagonal().array() += mu * (1.0 + jtj.diagonal().array());
      const RVector step = h.ldlt().solve(-jtr);
      CMatrix trial = phi;
      for (int a = 0; a < m; ++a)
        for (int i = 0; i < d; ++i) trial(i, a) += Complex(step(2 * (a * d + i)), step(2 * (a * d + i) + 1));
      for (int a = 0; a < m; ++a) trial.col(a).normalize();
      const RVector rt = residuals(trial);
      if (rt.squaredNorm() < cost) {
        phi = trial;
        r = rt;
        cost = rt.squaredNorm();
        mu = std::max(mu * 0.3, 1e-15);
        accepted = true;
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) break;
  }
  return r.cwiseAbs().maxCoeff();
}

struct Attempt {
  std::vector<CVector> vectors;
  double error = std::numeric_limits<double>::infinity();
};

Attempt descend(int d, int max_iters, double step0, double polish_from, std::uint64_t seed) {
  const int m = d * d;
  CMatrix phi(d, m);
  {
    const auto start = haar_vectors(m, d, seed);
    for (int a = 0; a < m; ++a) phi.col(a) = start[a];
  }
  auto potential = [](const CMatrix& gram) {
    double f = 0.0;
    for (Eigen::Index a = 0; a < gram.rows(); ++a)
      for (Eigen::Index b = 0; b < gram.cols(); ++b)
        if (a != b) f += std::pow(std::norm(gram(a, b)), 2);
    return f;
  };
  CMatrix gram = phi.adjoint() * phi;
  double f = potential(gram);
  double step = step0;
  for (int it = 0; it < max_iters && step > 1e-16; ++it) {
    // Wirtinger gradient: 4 sum_b |g_ab|^2 g_ba phi_b.
    CMatrix h(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) h(b, a) = a == b ? Complex(0.0) : std::norm(gram(a, b)) * gram(b, a);
    const CMatrix grad = 4.0 * phi * h;
    CMatrix trial = phi - step * grad;
    for (int a = 0; a < m; ++a) trial.col(a).normalize();
    const CMatrix tg = trial.adjoint() * trial;
    const double ft = potential(tg);
    if (ft < f) {
      phi = trial;
      gram = tg;
      f = ft;
    } else {
      step *= 0.5;
    }
    if (it % 64 == 0 && sic_error(gram, d) <= polish_from) break;
  }
  if (sic_error(gram, d) <= polish_from) {
    polish(phi, d, 200);
    gram = phi.adjoint() * phi;
  }
  Attempt out;
  for (int a = 0; a < m; ++a) out.vectors.push_back(phi.col(a));
  out.error = sic_error(gram, d);
  return out;
}

}  // namespace

void QuantumInstance::refresh() {
  projections.clear();
  for (const auto& v : vectors) projections.push_back(v * v.adjoint());
  overlap_error = 0.0;
  if (kind == SpaceKind::Sic) {
    const double lam = 1.0 / (d + 1);
    for (std::size_t a = 0; a < vectors.size(); ++a)
      for (std::size_t b = 0; b < vectors.size(); ++b)
        if (a != b) overlap_error = std::max(overlap_error, std::abs(overlap_sq(vectors[a], vectors[b]) - lam));
  } else {
    const double mu = 1.0 / d;
    for (std::size_t a = 0; a < vectors.size(); ++a)
      for (std::size_t b = 0; b < vectors.size(); ++b)
        if (static_cast<int>(a) / d != static_cast<int>(b) / d)
          overlap_error = std::max(overlap_error, std::abs(overlap_sq(vectors[a], vectors[b]) - mu));
  }
}

double frame_potential(const std::vector<CVector>& vectors) {
  double f = 0.0;
  for (std::size_t a = 0; a < vectors.size(); ++a)
    for (std::size_t b = 0; b < vectors.size(); ++b)
      if (a != b) f += std::pow(overlap_sq(vectors[a], vectors[b]), 2);
  return f;
}

QuantumInstance sic_search(int d, const SicSearchOptions& opts) {
  if (d < 2) throw Error(ErrorKind::InvalidDimension, "SIC search needs d >= 2");
  if (opts.restarts < 1) throw Error(ErrorKind::InvalidParameter, "restarts must be >= 1");
  const int threads = std::max(1, opts.threads);
  Attempt best;
  std::uint64_t best_seed = 0;
  // Batches run in restart order; the first success by index wins, so the
  // result does not depend on the thread count.
  for (int first = 0; first < opts.restarts; first += threads) {
    const int count = std::min(threads, opts.restarts - first);
    std::vector<Attempt> batch(count);
    std::vector<std::thread> pool;
    for (int i = 0; i < count; ++i)
      pool.emplace_back([&, i] {
        batch[i] = descend(d, opts.max_iters, opts.step, opts.polish_from, derive_seed(opts.seed, static_cast<std::uint64_t>(first + i)));
      });
    for (auto& t : pool) t.join();
    for (int i = 0; i < count; ++i) {
      if (batch[i].error < best.error) {
        best = batch[i];
        best_seed = derive_seed(opts.seed, static_cast<std::uint64_t>(first + i));
      }
      if (best.error <= opts.threshold) break;
    }
    if (best.error <= opts.threshold) break;
  }
  QuantumInstance inst;
  inst.kind = SpaceKind::Sic;
  inst.d = d;
  inst.vectors = best.vectors;
  inst.seed = best_seed;
  inst.refresh();
  if (inst.overlap_error > opts.threshold)
    throw SearchFailed(inst, "no restart reached overlap error " + std::to_string(opts.threshold) + " (best " +
                                 std::to_string(inst.overlap_error) + ")");
  return inst;
}

bool is_prime(int d) {
  if (d < 2) return false;
  for (int q = 2; q * q <= d; ++q)
    if (d % q == 0) return false;
  return true;
}

QuantumInstance mub_generate(int d) {
  if (d < 2) throw Error(ErrorKind::InvalidDimension, "MUB generation needs d >= 2");
  if (!is_prime(d)) throw Error(ErrorKind::UnsupportedDimension, "MUBs are generated for prime d only");
  QuantumInstance inst;
  inst.kind = SpaceKind::Mub;
  inst.d = d;
  const double r = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d; ++i) inst.vectors.push_back(CVector::Unit(d, i));
  if (d == 2) {
    const Complex I(0.0, 1.0);
    CVector v(2);
    v << r, r;
    inst.vectors.push_back(v);
    v << r, -r;
    inst.vectors.push_back(v);
    v << r, r * I;
    inst.vectors.push_back(v);
    v << r, -r * I;
    inst.vectors.push_back(v);
  } else {
    const double w = 2.0 * std::numbers::pi / d;
    for (int x = 1; x <= d; ++x)
      for (int a = 0; a < d; ++a) {
        CVector v(d);
        for (int k = 0; k < d; ++k) {
          const long ph = (static_cast<long>(x) * k * k + static_cast<long>(a) * k) % d;
          v(k) = r * std::polar(1.0, w * static_cast<double>(ph));
        }
        inst.vectors.push_back(v);
      }
  }
  inst.refresh();
  return inst;
}

VerificationReport verify_instance(const QuantumInstance& inst, double tol) {
  const int d = inst.d;
  if (d < 2) throw Error(ErrorKind::InvalidInput, "instance dimension");
  const int expect = inst.kind == SpaceKind::Sic ? d * d : d * (d + 1);
  if (static_cast<int>(inst.vectors.size()) != expect || inst.projections.size() != inst.vectors.size())
    throw Error(ErrorKind::InvalidInput, "instance has " + std::to_string(inst.vectors.size()) + " vectors, expected " +
                                             std::to_string(expect));
  for (std::size_t a = 0; a < inst.vectors.size(); ++a)
    if (inst.vectors[a].size() != d || inst.projections[a].rows() != d || inst.projections[a].cols() != d)
      throw Error(ErrorKind::InvalidInput, "vector or projection of wrong size");

  VerificationReport rep;
  auto record = [&](const std::string& name, double dev) {
    rep.checks.emplace_back(name, dev);
    if (!(dev <= tol)) {
      rep.passed = false;
      rep.failures.push_back(name);
    }
  };
  const CMatrix id = CMatrix::Identity(d, d);
  const auto& p = inst.projections;
  const int m = static_cast<int>(p.size());
  auto tau = [&](const CMatrix& a) { return a.trace().real() / d; };

  double proj = 0.0, rank1 = 0.0, tr1 = 0.0;
  for (const auto& q : p) {
    proj = std::max({proj, (q * q - q).norm(), (q - q.adjoint()).norm()});
    const RVector ev = herm_eigenvalues(q);
    RVector want = RVector::Zero(d);
    want(d - 1) = 1.0;
    rank1 = std::max(rank1, (ev - want).cwiseAbs().maxCoeff());
    tr1 = std::max(tr1, std::abs(tau(q) - 1.0 / d));
  }
  record("projection", proj);
  record("rank_one", rank1);
  record("trace_p", tr1);

  if (inst.kind == SpaceKind::Sic) {
    const double lam = 1.0 / (d + 1);
    CMatrix sum = CMatrix::Zero(d, d);
    for (const auto& q : p) sum += q;
    record("resolution", (sum - d * id).norm());
    double rel = 0.0, tr2 = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (i == j) continue;
        rel = std::max(rel, (p[i] * p[j] * p[i] - lam * p[i]).norm());
        tr2 = std::max(tr2, std::abs(tau(p[i] * p[j]) - lam / d));
      }
    record("relation", rel);
    record("trace_pp", tr2);
  } else {
    const double mu = 1.0 / d;
    double unitary = 0.0, res = 0.0;
    for (int x = 0; x <= d; ++x) {
      CMatrix u(d, d);
      CMatrix sum = CMatrix::Zero(d, d);
      for (int a = 0; a < d; ++a) {
        u.col(a) = inst.vectors[x * d + a];
        sum += p[x * d + a];
      }
      unitary = std::max(unitary, (u.adjoint() * u - id).norm());
      res = std::max(res, (sum - id).norm());
    }
    record("unitary", unitary);
    record("resolution", res);
    double rel = 0.0, tr3 = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (i / d == j / d) continue;
        const CMatrix pqp = p[i] * p[j] * p[i];
        rel = std::max(rel, (pqp - mu * p[i]).norm());
        tr3 = std::max(tr3, std::abs(tau(pqp) - 1.0 / (static_cast<double>(d) * d)));
      }
    record("relation", rel);
    record("trace_pqp", tr3);
  }
  return rep;
}

std::vector<CMatrix> pi_images(const StarSpace& space, const QuantumInstance& inst) {
  if (space.kind() != inst.kind || space.d() != inst.d)
    throw Error(ErrorKind::InvalidInput, "instance does not match the space");
  const int d = inst.d;
  if (static_cast<int>(inst.projections.size()) != space.label_count())
    throw Error(ErrorKind::InvalidInput, "instance projection count");
  std::vector<CMatrix> out;
  if (inst.kind == SpaceKind::Sic) return inst.projections;
  out.push_back(CMatrix::Identity(d, d));
  for (int x = 1; x <= d + 1; ++x)
    for (int i = 1; i <= d - 1; ++i) out.push_back(inst.projections[(x - 1) * d + (i - 1)]);
  return out;
}

CMatrix pi_map(const std::vector<CMatrix>& images, const HermLevel& x) {
  if (static_cast<int>(images.size()) != x.dim()) throw Error(ErrorKind::DimensionMismatch, "pi images");
  const int n = x.level();
  const int d = static_cast<int>(images.front().rows());
  CMatrix out = CMatrix::Zero(n * d, n * d);
  for (int k = 0; k < x.dim(); ++k) {
    if (x.block(k).isZero(0.0)) continue;
    out += kron(x.block(k), images[k]);
  }
  return out;
}

PiReport pi_positivity_check(const StarSpace& space, const QuantumInstance& inst, const TSequence& tseq, int n_max,
                             double tol) {
  if (space.kind() != inst.kind || space.d() != inst.d)
    throw Error(ErrorKind::InvalidInput, "instance does not match the space");
  const int d = inst.d;
  const std::vector<CMatrix> images = pi_images(space, inst);
  const std::vector<GeneratorSpec> specs = initial_cone_specs(space, tseq, n_max);
  const CMatrix id = CMatrix::Identity(d, d);
  PiReport rep;
  rep.worst = std::numeric_limits<double>::infinity();
  // The space pointer is only needed to build coordinates.
  const auto sp = StarSpace::build(space.kind(), space.d());
  for (const auto& s : specs) {
    PiGeneratorEntry e;
    e.name = describe(space, s);
    const VElement g = make_generator(sp, s);
    e.min_eig = min_eigenvalue(pi_map(images, HermLevel::from_element(g)));
    if (const auto* c = std::get_if<CrossGen>(&s)) {
      e.cross = true;
      e.t_used = c->t;
      const CMatrix& pa = inst.projections[c->a];
      const CMatrix& pb = inst.projections[c->b];
      const CMatrix base = c->sign * (pa - space.constant() * id) + (1.0 / c->n) * pb;
      const CMatrix perp = id - pb;
      auto ok = [&](double t) { return min_eigenvalue(base + t * perp) >= -1e-12; };
      if (ok(0.0)) {
        e.min_t = 0.0;
      } else {
        double hi = 1.0;
        while (!ok(hi) && hi < 0x1p40) hi *= 2.0;
        double lo = 0.0;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          (ok(mid) ? hi : lo) = mid;
        }
        e.min_t = hi;
      }
    }
    rep.worst = std::min(rep.worst, e.min_eig);
    if (e.min_eig < -tol) {
      rep.passed = false;
      ++rep.violations;
    }
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

// Concrete oracle ------------------------------------------------------------------

ConcreteOracle::ConcreteOracle(SpacePtr space, std::vector<CMatrix> images, double tol)
    : space_(std::move(space)), images_(std::move(images)), tol_(tol) {
  if (static_cast<int>(images_.size()) != space_->dim()) throw Error(ErrorKind::DimensionMismatch, "image count");
}

ConcreteOracle::ConcreteOracle(SpacePtr space, const QuantumInstance& inst)
    : ConcreteOracle(space, pi_images(*space, inst)) {}

std::vector<CMatrix> ConcreteOracle::coordinate_functional(const CMatrix& w, int n) const {
  const int d = static_cast<int>(images_.front().rows());
  std::vector<CMatrix> f;
  for (const auto& pk : images_) {
    CMatrix fk = CMatrix::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Complex s = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) s += w(a * d + i, b * d + j) * pk(j, i);
        fk(a, b) = s;
      }
    f.push_back(hermitian_from_upper(fk));
  }
  return f;
}

MembershipResult ConcreteOracle::member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs) const {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParameter, "eps must be positive");
  const int n = x.level();
  const CMatrix xc = map(x);
  const int m = static_cast<int>(xc.rows());
  const CMatrix id = CMatrix::Identity(m, m);
  const CMatrix target = xc + eps * id;
  const double scale = std::max(1.0, target.norm());
  MembershipResult r;
  r.epsilon_used = eps;

  auto outside = [&](const CMatrix& w) {
    auto cert = std::make_shared<Certificate>();
    cert->kind = CertKind::ConcreteWitness;
    cert->blocks.push_back(w);
    for (auto& f : coordinate_functional(w, n)) cert->blocks.push_back(std::move(f));
    r.verdict = Verdict::Outside;
    r.certificate = cert;
  };

  if (dirs.empty()) {
    const EigResult er = herm_eig(target);
    const double lam = er.eigenvalues(0);
    r.diagnostics["margin"] = lam;
    r.diagnostics["residual"] = std::max(0.0, -lam);
    if (lam >= -tol_ * scale) {
      auto cert = std::make_shared<Certificate>();
      cert->kind = CertKind::ConcreteWitness;
      cert->blocks.push_back(target);
      r.verdict = Verdict::Inside;
      r.certificate = cert;
      r.diagnostics["residual"] = 0.0;
    } else {
      const CVector v = er.eigenvectors.col(0);
      outside(v * v.adjoint());
    }
    if (!validate(x, eps, dirs, r)) {
      r.verdict = Verdict::Unknown;
      r.certificate.reset();
    }
    return r;
  }

  if (dirs.size() == 1) {
    // lambda_min(target + t D) is concave in t: double t until it turns
    // nonnegative or starts to fall, then refine the maximiser by golden
    // section.
    const CMatrix dm = map(dirs.front());
    auto f = [&](double t) { return min_eigenvalue(target + t * dm); };
    double best_t = 0.0, best = f(0.0);
    double lo = 0.0, hi = 0.0;
    for (double t = std::ldexp(1.0, -20); best < 0.0 && t <= Tolerances{}.dir_horizon; t *= 2.0) {
      const double v = f(t);
      if (v >= best) {
        lo = best_t;
        best = v;
        best_t = t;
        hi = 2.0 * t;
      } else {
        hi = t;
        break;
      }
    }
    if (best < -tol_ * scale && hi > lo && hi > best_t) {
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double a = lo, b = hi;
      double c = b - g * (b - a), e = a + g * (b - a);
      double fc = f(c), fe = f(e);
      for (int it = 0; it < 80 && b - a > 1e-12 * b; ++it) {
        if (fc >= fe) {
          b = e;
          e = c;
          fe = fc;
          c = b - g * (b - a);
          fc = f(c);
        } else {
          a = c;
          c = e;
          fc = fe;
          e = a + g * (b - a);
          fe = f(e);
        }
      }
      if (fc > best) best = fc, best_t = c;
      if (fe > best) best = fe, best_t = e;
    }
    if (best >= -tol_ * scale) {
      auto cert = std::make_shared<Certificate>();
      cert->kind = CertKind::ConcreteWitness;
      cert->blocks.push_back(target + best_t * dm);
      cert->dir_weights = RVector::Constant(1, best_t);
      r.verdict = Verdict::Inside;
      r.certificate = cert;
      r.diagnostics["margin"] = best;
      r.diagnostics["residual"] = 0.0;
      if (validate(x, eps, dirs, r)) return r;
      r.verdict = Verdict::Unknown;
      r.certificate.reset();
    }
  }

  AffineSystem sys;
  sys.n = m;
  sys.coeff = RMatrix::Ones(1, 1);
  sys.rhs = {xc + 0.5 * eps * id};
  std::vector<CMatrix> dir_maps;
  for (const auto& dir : dirs) dir_maps.push_back(map(dir));
  for (const auto& dm : dir_maps) sys.scalar_dirs.push_back({-dm});
  MarginOptions mo;
  mo.stop_sigma = 0.499 * eps;
  mo.stop_dual = 0.5 * eps * (1.0 + 1e-6) + 1e-9;
  const double stop_sigma = mo.stop_sigma, stop_dual = mo.stop_dual;
  bool early = false;
  for (int pass = 0; pass < 4; ++pass) {
    if (pass % 2 == 1 && !early) continue;
    if (pass == 2 && (mo.dir_reg <= mo.reg)) break;
    if (pass == 2) mo.dir_reg = mo.reg;
    mo.stop_sigma = pass % 2 == 0 ? stop_sigma : -1.0;
    mo.stop_dual = pass % 2 == 0 ? stop_dual : std::numeric_limits<double>::infinity();
    const MarginResult mr = sdp_margin(sys, {id}, mo);
    r.diagnostics["iterations"] = mr.iterations;
    r.diagnostics["margin"] = 0.5 * eps - mr.sigma;
    r.diagnostics["residual"] = std::max(0.0, mr.dual_obj - 0.5 * eps);

    if (mr.sigma < 0.5 * eps && mr.primal_res <= 1e-8) {
      RVector s = mr.point.scalars.cwiseMax(0.0);
      CMatrix q = target;
      for (std::size_t i = 0; i < dirs.size(); ++i) q += s(static_cast<Eigen::Index>(i)) * map(dirs[i]);
      auto cert = std::make_shared<Certificate>();
      cert->kind = CertKind::ConcreteWitness;
      cert->blocks.push_back(q);
      cert->dir_weights = s;
      r.verdict = Verdict::Inside;
      r.certificate = cert;
      r.diagnostics["residual"] = 0.0;
      if (validate(x, eps, dirs, r)) return r;
      r.verdict = Verdict::Unknown;
      r.certificate.reset();
    }
    if (mr.dual_obj > 0.5 * eps) {
      const CMatrix w = psd_project(hermitian_from_upper(mr.dual.front()));
      outside(w);
      if (validate(x, eps, dirs, r)) return r;
      // Near a recession direction the pairing only reaches the dual
      // residual. Compress W off the strongly positive part of the
      // directions it still pairs positively with.
      std::vector<CMatrix> pos;
      for (const auto& dm : dir_maps)
        if ((w * dm).trace().real() > 0.0) pos.push_back(dm);
      for (double theta : {1e-8, 1e-6, 1e-4, 1e-2}) {
        if (pos.empty()) break;
        CMatrix span(m, 0);
        for (const auto& dm : pos) {
          const EigResult de = herm_eig(dm);
          const double cut = theta * std::max(de.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
          for (Eigen::Index k = 0; k < de.eigenvalues.size(); ++k)
            if (de.eigenvalues(k) > cut) {
              span.conservativeResize(m, span.cols() + 1);
              span.col(span.cols() - 1) = de.eigenvectors.col(k);
            }
        }
        if (span.cols() == 0 || span.cols() >= m) continue;
        const Eigen::HouseholderQR<CMatrix> qr(span);
        const CMatrix qf = qr.householderQ() * CMatrix::Identity(m, m);
        const CMatrix keep = qf.rightCols(m - span.cols());
        const CMatrix proj = keep * keep.adjoint();
        outside(hermitian_from_upper(proj * w * proj));
        if (validate(x, eps, dirs, r)) return r;
      }
      r.verdict = Verdict::Unknown;
      r.certificate.reset();
    }
    early = mr.status == MarginStatus::PrimalHit || mr.status == MarginStatus::DualHit;
  }
  return r;
}

bool ConcreteOracle::validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                              const MembershipResult& r) const {
  if (!r.certificate || r.epsilon_used != eps) return false;
  const Certificate& c = *r.certificate;
  if (c.kind != CertKind::ConcreteWitness || c.blocks.empty()) return false;
  const CMatrix xc = map(x);
  const int m = static_cast<int>(xc.rows());
  const CMatrix target = xc + eps * CMatrix::Identity(m, m);
  const double scale = std::max(1.0, target.norm());
  if (r.verdict == Verdict::Inside) {
    if (c.dir_weights.size() != static_cast<Eigen::Index>(dirs.size())) return false;
    if (c.dir_weights.size() > 0 && c.dir_weights.minCoeff() < 0.0) return false;
    CMatrix q = target;
    for (std::size_t i = 0; i < dirs.size(); ++i) q += c.dir_weights(static_cast<Eigen::Index>(i)) * map(dirs[i]);
    return min_eigenvalue(q) >= -tol_ * std::max(scale, q.norm());
  }
  if (r.verdict == Verdict::Outside) {
    const CMatrix& w = c.blocks.front();
    if (w.rows() != m || w.cols() != m) return false;
    const double wn = w.norm();
    if (!(wn > 0.0)) return false;
    if (min_eigenvalue(w) < -1e-12 * wn) return false;
    const double wt = (w * target).trace().real();
    if (wt > -1e-12 * wn * scale) return false;
    double leak = 0.0;
    for (const auto& dir : dirs) leak += std::max(0.0, (w * map(dir)).trace().real());
    return leak * Tolerances{}.dir_horizon <= -wt;
  }
  return false;
}

}  // namespace opsys
