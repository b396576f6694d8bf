// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "opsys/iterate.hpp"
#include "opsys/projection.hpp"
#include "opsys/quantum.hpp"
#include "opsys/soundness.hpp"

using namespace opsys;

namespace {

int g_threads = 1;
int g_outside_seen = 0;
int g_outside_unvalidated = 0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void note_outside(const MembershipOracle& o, const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                  const MembershipResult& r) {
  if (!r.outside()) return;
  ++g_outside_seen;
  if (!o.validate(x, eps, dirs, r)) ++g_outside_unvalidated;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

CMatrix rand_herm(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

CMatrix rand_psd(int m, std::mt19937_64& rng) {
  const CMatrix a = rand_herm(m, rng);
  return a * a.adjoint() / m;
}

double eig_min(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Level-1 inner product from the label table <p_a, p_b> of a SIC frame.
double sic_inner(int d, const RVector& a, const RVector& b) {
  const double lam = 1.0 / (d + 1);
  double s = 0.0;
  for (int i = 0; i < d * d; ++i)
    for (int j = 0; j < d * d; ++j) s += a(i) * b(j) * (i == j ? 1.0 / d : lam / d);
  return s;
}

// sum_k A_k (x) M_k for images M_k.
CMatrix concrete_map(const std::vector<CMatrix>& img, const HermLevel& x) {
  const int n = x.level();
  const int d = static_cast<int>(img.front().rows());
  CMatrix m = CMatrix::Zero(n * d, n * d);
  for (int k = 0; k < x.dim(); ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m.block(i * d, j * d, d, d) += x.block(k)(i, j) * img[k];
  return m;
}

// Coordinates of an nd x nd matrix over the images, blockwise least squares.
HermLevel from_concrete(const SpacePtr& space, const std::vector<CMatrix>& img, const CMatrix& x, int n) {
  const int d = static_cast<int>(img.front().rows());
  const int k = static_cast<int>(img.size());
  CMatrix g(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) g(a, b) = (img[a].adjoint() * img[b]).trace();
  std::vector<CMatrix> blocks(k, CMatrix::Zero(n, n));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const CMatrix blk = x.block(r * d, c * d, d, d);
      CVector rhs(k);
      for (int a = 0; a < k; ++a) rhs(a) = (img[a].adjoint() * blk).trace();
      const CVector coef = g.lu().solve(rhs);
      for (int a = 0; a < k; ++a) blocks[a](r, c) = coef(a);
    }
  return HermLevel(space, blocks);
}

// 1. Gram identities --------------------------------------------------------------

Outcome gram_identities() {
  Outcome o;
  double worst = 0.0;
  for (int d = 2; d <= 6; ++d) {
    const auto s = StarSpace::sic(d);
    const Gram g = gram_matrix(s);
    const double lam = 1.0 / (d + 1);
    auto dev = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    for (int i = 0; i < d * d; ++i) {
      const VElement pi = VElement::label(s, i), qi = VElement::label_perp(s, i);
      for (int j = 0; j < d * d; ++j) {
        const VElement pj = VElement::label(s, j), qj = VElement::label_perp(s, j);
        dev(g.inner(pi, pj), i == j ? 1.0 / d : lam / d);
        dev(g.inner(pi, qj), i == j ? 0.0 : (1 - lam) / d);
        dev(g.inner(qi, qj), i == j ? (d - 1.0) / d : (d - 2 + lam) / d);
        if (i != j)
          for (int n = 1; n <= 3; ++n) {
            dev(g.inner(pj, make_generator(s, x_plus(i + 1, j + 1, n, 7.5))), 1.0 / (n * d));
            dev(g.inner(pj, make_generator(s, x_minus(i + 1, j + 1, n, 7.5))), 1.0 / (n * d));
          }
      }
      const VElement v = VElement::unit(s) * lam - pi;
      dev(g.inner(v, v), (lam * lam * d - 2 * lam + 1) / d);
    }
    dev(g.inner(s->unit_coeffs(), s->unit_coeffs()), 1.0);
    // The Gram form against the label table, on random pairs.
    std::mt19937_64 rng(d);
    std::normal_distribution<double> nd;
    for (int c = 0; c < 20; ++c) {
      RVector a(s->dim()), b(s->dim());
      for (int k = 0; k < s->dim(); ++k) a(k) = nd(rng), b(k) = nd(rng);
      dev(g.inner(a, b), sic_inner(d, a, b));
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> es(g.matrix);
    const int rank = static_cast<int>((es.eigenvalues().array() > 1e-10 * es.eigenvalues().maxCoeff()).count());
    if (rank != d * d || g.rank != d * d) {
      o.pass = false;
      o.detail += "rank mismatch at d=" + std::to_string(d) + "; ";
    }
  }
  o.pass = o.pass && worst <= 1e-12;
  o.detail += fmt("max deviation %.2e", worst);
  return o;
}

// 2. Threshold positivity ---------------------------------------------------------

Outcome threshold_positivity() {
  Outcome o;
  double worst = std::numeric_limits<double>::infinity();
  long long pairs_d3 = 0;
  for (int d : {2, 3, 4}) {
    const auto s = StarSpace::sic(d);
    const Thresholds th = t_thresholds(d);
    const GeneratorCone cone = build_initial_cone(s, TSequence::affine(th.t_star, 1.0), 10);
    const Gram g = gram_matrix(s);
    const RMatrix ip = cone.matrix().transpose() * g.matrix * cone.matrix();
    worst = std::min(worst, ip.minCoeff());
    if (d == 3) pairs_d3 = static_cast<long long>(cone.size()) * (cone.size() + 1) / 2;
  }
  // Independent evaluation of the three bounds at d = 2.
  const double d = 2.0, lam = 1.0 / 3.0;
  const double beta = std::sqrt((lam * lam * d - 2 * lam + 2) / d);
  const double a = (d - 2 + lam) / d;
  const double gam = std::sqrt(d - 1) * beta / std::sqrt(d);
  const double b1 = std::sqrt(d) * beta / (1 - lam);
  const double b2 = std::sqrt(d * d - d) * beta / (d - 2 + lam);
  const double b3 = (2 * gam + std::sqrt(4 * gam * gam + 4 * a * beta * beta)) / (2 * a);
  const double tstar = std::max({b1, b2, b3});
  const double lib = t_thresholds(2).t_star;
  o.pass = worst >= -1e-10 && pairs_d3 >= 10000 && std::abs(lib - tstar) <= 1e-3 && std::abs(lib - 8.0622) <= 1e-3;
  o.detail = fmt("min pairwise %.3e", worst) + ", pairs(d=3) " + std::to_string(pairs_d3) +
             fmt(", t_star(2) %.6f", lib) + fmt(" (rederived %.6f)", tstar);
  return o;
}

// 3. Properness ---------------------------------------------------------------------

Outcome properness() {
  Outcome o;
  std::string det;
  for (int d : {2, 3}) {
    const auto s = StarSpace::sic(d);
    auto cone = std::make_shared<GeneratorCone>(build_initial_cone(s, TSequence::affine(t_thresholds(d).t_star, 1.0), 10));
    const ConeOracle oracle(cone);
    const MemberFn fn = [&](const HermLevel& y, double eps) { return oracle.member(y, eps); };
    ProbeBudget b;
    b.directions = 2000;
    b.seed = 11;
    b.threads = g_threads;
    const ProbeResult pr = properness_probe(fn, s, 1, b);
    o.pass = o.pass && !pr.lineality_found && pr.probes >= 2000;

    const VElement y0 = random_direction(s, 1, 77 + d).to_element();
    auto planted = std::make_shared<GeneratorCone>(cone->with_extra({y0, -y0}, {"y0", "-y0"}));
    const ConeOracle po(planted);
    const MemberFn pf = [&](const HermLevel& y, double eps) { return po.member(y, eps); };
    const ProbeResult pp = properness_probe(pf, s, 1, b);
    double angle = M_PI;
    if (pp.lineality_found && pp.direction) {
      const RVector f = pp.direction->to_element().coeffs();
      const double c = std::abs(f.dot(y0.coeffs())) / (f.norm() * y0.coeffs().norm());
      angle = std::acos(std::min(1.0, c));
    }
    o.pass = o.pass && pp.lineality_found && angle <= 1e-3;
    det += "d=" + std::to_string(d) + ": " + (pr.lineality_found ? "LinealityFound" : "NoneFound") + " (" +
           std::to_string(pr.probes) + " probes), planted " + (pp.lineality_found ? "found" : "missed") +
           fmt(" angle %.1e; ", angle);
  }
  o.detail = det;
  return o;
}

// 4. Compression lemma ----------------------------------------------------------------

Outcome compression_lemma() {
  std::mt19937_64 rng(404);
  int agree = 0, positive = 0;
  for (int c = 0; c < 200; ++c) {
    const int m = 2 + c % 3;
    const int rank = 1 + static_cast<int>(rng() % static_cast<unsigned>(m));
    Eigen::SelfAdjointEigenSolver<CMatrix> base(rand_herm(m, rng));
    const CMatrix v = base.eigenvectors().leftCols(rank);
    const CMatrix p = v * v.adjoint();
    CMatrix t = rand_herm(m, rng);
    const double direct_min = eig_min(v.adjoint() * t * v);
    if (c % 2 == 0) t += (-direct_min + 0.05 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng)) * p;
    const bool direct = eig_min(v.adjoint() * t * v) >= 0.0;
    bool all = true;
    for (double eps : default_eps_schedule()) all = all && lemma_compression_witness(p, t, eps).witness;
    positive += direct;
    agree += all == direct;
  }
  Outcome o;
  o.pass = agree == 200;
  o.detail = std::to_string(agree) + "/200 agree (" + std::to_string(positive) + " positive)";
  return o;
}

// 5. SIC instances --------------------------------------------------------------------

std::vector<QuantumInstance> g_sics;  // d = 2, 3 reused by later criteria

Outcome sic_instances() {
  Outcome o;
  std::string det;
  for (int d : {2, 3, 4}) {
    SicSearchOptions so;
    so.restarts = 20;
    so.seed = 1;
    so.threads = g_threads;
    QuantumInstance inst;
    try {
      inst = sic_search(d, so);
    } catch (const SearchFailed& e) {
      o.pass = false;
      det += "d=" + std::to_string(d) + " search failed; ";
      continue;
    }
    const VerificationReport v = verify_instance(inst, 1e-8);
    // Trace values recomputed here.
    double dev = 0.0;
    const double lam = 1.0 / (d + 1);
    for (int a = 0; a < d * d; ++a)
      for (int b = 0; b < d * d; ++b) {
        const CVector& x = inst.vectors[a];
        const CVector& y = inst.vectors[b];
        const double tr = (a == b) ? x.squaredNorm() * x.squaredNorm() : std::norm(x.dot(y));
        dev = std::max(dev, std::abs(tr / d - (a == b ? 1.0 / d : lam / d)));
      }
    o.pass = o.pass && inst.overlap_error <= 1e-6 && v.passed && dev <= 1e-8;
    det += "d=" + std::to_string(d) + fmt(" overlap %.1e", inst.overlap_error) + fmt(" trace dev %.1e; ", dev);
    if (d <= 3) g_sics.push_back(inst);
  }
  o.detail = det;
  return o;
}

// 6. MUB instances ----------------------------------------------------------------------

Outcome mub_instances() {
  Outcome o;
  std::string det;
  for (int d : {2, 3, 5, 7}) {
    const QuantumInstance inst = mub_generate(d);
    const VerificationReport v = verify_instance(inst, 1e-10);
    double dev = 0.0;
    std::vector<CMatrix> proj;
    for (const auto& x : inst.vectors) proj.push_back(x * x.adjoint());
    for (int a = 0; a < static_cast<int>(proj.size()); ++a)
      for (int b = 0; b < static_cast<int>(proj.size()); ++b) {
        if (a / d == b / d) continue;
        const Complex tr = (proj[a] * proj[b] * proj[a]).trace() / static_cast<double>(d);
        dev = std::max(dev, std::abs(tr - Complex(1.0 / (d * d), 0.0)));
      }
    o.pass = o.pass && v.passed && dev <= 1e-10;
    det += "d=" + std::to_string(d) + fmt(" dev %.1e; ", dev);
  }
  o.detail = det;
  return o;
}

// 7. pi-positivity ------------------------------------------------------------------------

Outcome pi_positivity() {
  Outcome o;
  std::string det;
  for (const QuantumInstance& inst : g_sics) {
    const int d = inst.d;
    const auto s = StarSpace::sic(d);
    const std::vector<CMatrix> img = pi_images(*s, inst);
    const GeneratorCone good = build_initial_cone(s, TSequence::affine(t_thresholds(d).t_star, 1.0), 10);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& g : good.generators()) worst = std::min(worst, eig_min(concrete_map(img, HermLevel::from_element(g))));
    const PiReport rep = pi_positivity_check(*s, inst, TSequence::affine(t_thresholds(d).t_star, 1.0), 10, 1e-9);
    const GeneratorCone small = build_initial_cone(s, TSequence::affine(0.01, 0.01), 10);
    int neg = 0;
    for (const auto& g : small.generators()) neg += eig_min(concrete_map(img, HermLevel::from_element(g))) < -1e-9;
    const PiReport bad = pi_positivity_check(*s, inst, TSequence::affine(0.01, 0.01), 10, 1e-9);
    o.pass = o.pass && worst >= -1e-9 && rep.passed && neg > 0 && bad.violations > 0;
    det += "d=" + std::to_string(d) + fmt(" min eig %.1e", worst) + ", t=0.01 violations " +
           std::to_string(bad.violations) + "; ";
  }
  o.pass = o.pass && g_sics.size() == 2;
  o.detail = det;
  return o;
}

// 8. OMAX certificates ----------------------------------------------------------------------

Outcome omax_certificates() {
  Outcome o;
  const auto s = StarSpace::sic(2);
  auto cone = std::make_shared<GeneratorCone>(build_initial_cone(s, TSequence::affine(t_thresholds(2).t_star, 1.0), 3));
  const ConeOracle oracle(cone);
  const Gram gram = gram_matrix(s);
  const double eps = 1e-6;
  std::mt19937_64 rng(808);
  int inside = 0, reeval = 0;
  double worst_rel = 0.0;
  for (int c = 0; c < 100; ++c) {
    const int n = 1 + c % 4;
    HermLevel x = HermLevel::zero(s, n);
    const int terms = 1 + static_cast<int>(rng() % 3);
    for (int t = 0; t < terms; ++t) {
      const VElement& g = cone->generators()[rng() % static_cast<unsigned>(cone->size())];
      const CMatrix q = n == 1 ? CMatrix::Constant(1, 1, 0.2 + std::uniform_real_distribution<double>(0, 1)(rng))
                               : rand_psd(n, rng);
      x = x + HermLevel::tensor(q, g);
    }
    const MembershipResult r = oracle.member(x, eps);
    if (!r.inside()) continue;
    ++inside;
    // Recombine the certificate here.
    const HermLevel target = x + HermLevel::unit(s, n) * eps;
    const Certificate& cert = *r.certificate;
    std::vector<CMatrix> acc(s->dim(), CMatrix::Zero(n, n));
    bool psd = true;
    if (cert.kind == CertKind::ConeCoeffs) {
      for (int j = 0; j < cone->size(); ++j) {
        psd = psd && cert.weights(j) >= 0.0;
        for (int k = 0; k < s->dim(); ++k) acc[k](0, 0) += cert.weights(j) * cone->generators()[j].coeffs()(k);
      }
    } else {
      for (int j = 0; j < cone->size(); ++j) {
        const CMatrix& q = cert.blocks[j];
        psd = psd && eig_min(q) >= -1e-10 * std::max(1.0, q.norm());
        for (int k = 0; k < s->dim(); ++k) acc[k] += cone->generators()[j].coeffs()(k) * q;
      }
    }
    double diff = 0.0;
    for (int k = 0; k < s->dim(); ++k) diff += (acc[k] - target.block(k)).squaredNorm();
    const double rel = std::sqrt(diff) / std::max(1.0, target.norm());
    worst_rel = std::max(worst_rel, rel);
    reeval += psd && rel <= 1e-7;
  }

  // Non-members: a compression pairs negatively with e, which lies in the dual.
  int outside = 0, valid = 0;
  for (int c = 0; c < 20; ++c) {
    const int n = 2 + c % 3;
    HermLevel x = HermLevel::zero(s, n);
    for (int t = 0; t < 2; ++t)
      x = x + HermLevel::tensor(rand_psd(n, rng), cone->generators()[rng() % static_cast<unsigned>(cone->size())]);
    CVector v(n);
    std::normal_distribution<double> nd;
    for (int i = 0; i < n; ++i) v(i) = Complex(nd(rng), nd(rng));
    v.normalize();
    RVector comp = RVector::Zero(s->dim());
    for (int k = 0; k < s->dim(); ++k) comp(k) = (v.adjoint() * x.block(k) * v)(0).real();
    const double shift = gram.inner(comp, s->unit_coeffs()) + 1.0;
    const HermLevel bad = x - HermLevel::tensor(v * v.adjoint(), VElement::unit(s)) * shift;
    const MembershipResult r = oracle.member(bad, eps);
    if (!r.outside()) continue;
    ++outside;
    // Separator re-check: every lifted generator pairs PSD, the target negatively.
    const auto& f = r.certificate->blocks;
    bool ok = static_cast<int>(f.size()) == s->dim();
    if (ok) {
      double fnorm = 0.0;
      for (const auto& b : f) fnorm += b.squaredNorm();
      fnorm = std::sqrt(fnorm);
      for (const auto& g : cone->generators()) {
        CMatrix m = CMatrix::Zero(n, n);
        for (int k = 0; k < s->dim(); ++k) m += g.coeffs()(k) * f[k];
        ok = ok && eig_min(0.5 * (m + m.adjoint())) >= -1e-9 * fnorm;
      }
      const HermLevel target = bad + HermLevel::unit(s, n) * eps;
      double val = 0.0;
      for (int k = 0; k < s->dim(); ++k) val += (f[k] * target.block(k)).trace().real();
      ok = ok && val < 0.0;
    }
    valid += ok;
    note_outside(oracle, bad, eps, {}, r);
  }
  o.pass = inside == 100 && reeval == 100 && outside == 20 && valid == 20 && g_outside_unvalidated == 0;
  o.detail = std::to_string(inside) + "/100 inside (" + std::to_string(reeval) + fmt(" re-evaluated, worst %.1e)", worst_rel) +
             ", " + std::to_string(outside) + "/20 outside (" + std::to_string(valid) + " separators checked), " +
             std::to_string(g_outside_unvalidated) + "/" + std::to_string(g_outside_seen) + " outside unvalidated";
  return o;
}

// 9. d-min refutation ----------------------------------------------------------------------

Outcome dmin_refutation() {
  Outcome o;
  std::string det;
  for (const QuantumInstance& inst : g_sics) {
    const int d = inst.d;
    const auto s = StarSpace::sic(d);
    const ConcreteOracle oracle(s, inst);
    const int n = d + 1, m = n * d;
    std::mt19937_64 rng(900 + d);
    std::normal_distribution<double> g(0.0, 1.0);
    int found = 0, false_ref = 0;
    for (int c = 0; c < 50; ++c) {
      const CMatrix psd = rand_psd(m, rng);
      CVector w(m);
      for (int i = 0; i < m; ++i) w(i) = Complex(g(rng), g(rng));
      w.normalize();
      const double top = (w.adjoint() * psd * w)(0).real();
      const CMatrix bad = psd - (top + 0.1) * w * w.adjoint();
      SearchBudget b;
      b.seed = 5000 + c;
      b.hints = false;
      b.threads = g_threads;
      const HermLevel xb = from_concrete(s, oracle.images(), bad, n);
      const auto r = dmin_refute(oracle, xb, 1e-6, d, b);
      if (r.refuted()) {
        // Independent check of the compression on the concrete side.
        const CMatrix& al = r.refutation->alpha;
        CMatrix ad = CMatrix::Zero(m, d * d);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < d; ++j) ad.block(i * d, j * d, d, d) = al(i, j) * CMatrix::Identity(d, d);
        const bool neg = eig_min(ad.adjoint() * (bad + 1e-6 * CMatrix::Identity(m, m)) * ad) < 0.0;
        found += neg && validate_compression(oracle, xb, 1e-6, {}, *r.refutation);
        note_outside(oracle, r.refutation->compressed, 1e-6, {}, r.refutation->violation);
      }
      SearchBudget quick = b;
      quick.restarts = 4;
      quick.steps = 50;
      false_ref += dmin_refute(oracle, from_concrete(s, oracle.images(), psd, n), 1e-6, d, quick).refuted();
    }
    o.pass = o.pass && found >= 48 && false_ref == 0;
    det += "d=" + std::to_string(d) + ": " + std::to_string(found) + "/50 refuted, " + std::to_string(false_ref) +
           " false; ";
  }
  o.pass = o.pass && g_sics.size() == 2;
  o.detail = det;
  return o;
}

// 10. Iteration soundness -------------------------------------------------------------------

Outcome iteration_soundness() {
  Outcome o;
  IterationConfig c;
  c.kind = SpaceKind::Sic;
  c.d = 2;
  c.tseq = TSequence::affine(8.07, 1.0);
  c.n_max = 5;
  c.stages = 6;
  c.seed = 7;
  c.threads = g_threads;
  c.probe.threads = g_threads;
  const IterationReport rep = run_iteration(c);
  bool none = !rep.error && rep.stages_completed == 6 && !rep.lineality_found;
  for (const auto& st : rep.stages) none = none && !st.lineality_found;
  int nesting = 0;
  for (const auto& st : rep.stages) nesting += st.nesting_failures;
  // Every entry is re-certified at every stage after it entered.
  for (const auto& e : rep.ledger) {
    bool chain = !e.history.empty() && e.history.front().first == e.stage && e.history.back().first == 6;
    for (std::size_t i = 1; i < e.history.size(); ++i) chain = chain && e.history[i].first == e.history[i - 1].first + 1;
    nesting += !chain;
  }
  QuantumInstance inst = g_sics.empty() ? sic_search(2) : g_sics.front();
  const SoundnessReport sr = soundness_check(rep, inst);
  const auto img = pi_images(*StarSpace::sic(2), inst);
  int own = 0;
  for (const auto& e : rep.ledger) {
    double emin = e.eps;
    for (const auto& h : e.history) emin = std::min(emin, h.second);
    const CMatrix m = concrete_map(img, e.x) + emin * CMatrix::Identity(2 * e.x.level(), 2 * e.x.level());
    own += eig_min(m) < -1e-6 * (1 + e.x.norm());
  }
  o.pass = none && sr.passed && sr.violations == 0 && own == 0 && nesting == 0 && !rep.ledger.empty();
  o.detail = std::string(none ? "NoneFound at all " : "lineality or error in ") + std::to_string(rep.stages.size()) +
             " stages, ledger " + std::to_string(rep.ledger.size()) + ", soundness violations " +
             std::to_string(sr.violations) + " (recomputed " + std::to_string(own) + "), nesting failures " +
             std::to_string(nesting);
  return o;
}

}  // namespace

int main() {
  g_threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {"gram identities", 1.0, gram_identities},
      {"threshold positivity", 30.0, threshold_positivity},
      {"properness", 120.0, properness},
      {"compression lemma", 10.0, compression_lemma},
      {"sic instances", 120.0, sic_instances},
      {"mub instances", 5.0, mub_instances},
      {"pi positivity", 10.0, pi_positivity},
      {"omax certificates", 180.0, omax_certificates},
      {"d-min refutation", 120.0, dmin_refutation},
      {"iteration soundness", 600.0, iteration_soundness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < all[i].limit_s;
    failed += !pass;
    std::printf("%s %2zu %-22s %8.2fs (< %.0fs)  %s\n", pass ? "PASS" : "FAIL", i + 1, all[i].name, secs,
                all[i].limit_s, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
