#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "opsys/projection.hpp"
#include "opsys/quantum.hpp"

using namespace opsys;

namespace {

CMatrix rand_herm(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

CMatrix rand_proj(int m, int rank, std::mt19937_64& rng) {
  const EigResult er = herm_eig(rand_herm(m, rng));
  const CMatrix v = er.eigenvectors.leftCols(rank);
  return v * v.adjoint();
}

// Independent oracle: the lemma holds at every scheduled eps iff P T P >= 0
// on range(P); computed from an orthonormal basis of the range.
bool compression_psd(const CMatrix& p, const CMatrix& t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(p);
  std::vector<int> cols;
  for (int i = 0; i < p.rows(); ++i)
    if (es.eigenvalues()(i) > 0.5) cols.push_back(i);
  if (cols.empty()) return true;
  CMatrix v(p.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) v.col(c) = es.eigenvectors().col(cols[c]);
  Eigen::SelfAdjointEigenSolver<CMatrix> ct(v.adjoint() * t * v);
  return ct.eigenvalues()(0) >= -1e-8;
}

QuantumInstance sic2() {
  SicSearchOptions o;
  o.seed = 3;
  return sic_search(2, o);
}

// Coordinates of a concrete nd x nd matrix X = sum_k A_k (x) pi_k, solved
// blockwise through the Hilbert-Schmidt Gram matrix of the images.
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

}  // namespace

TEST_CASE("compression lemma examples") {
  CMatrix p = CMatrix::Zero(2, 2);
  p(0, 0) = 1.0;
  CMatrix t = CMatrix::Zero(2, 2);
  t(1, 1) = -1.0;
  const auto w = lemma_compression_witness(p, t, 0.1);
  CHECK(w.witness);
  CHECK(w.t == 1.0);
  const auto r = lemma_compression_witness(p, -CMatrix::Identity(2, 2), 0.5);
  CHECK_FALSE(r.witness);
  CMatrix notp = p;
  notp(0, 1) = 0.3;
  CHECK_THROWS_AS((void)lemma_compression_witness(notp, t, 0.1), Error);
  CHECK_THROWS_AS((void)lemma_compression_witness(p, t, 0.0), Error);
}

TEST_CASE("compression lemma agrees with the direct check") {
  std::mt19937_64 rng(2024);
  int agree = 0, positive = 0;
  for (int c = 0; c < 200; ++c) {
    const int m = 2 + c % 3;
    const int rank = 1 + static_cast<int>(rng() % static_cast<unsigned>(m));
    const CMatrix p = rand_proj(m, rank, rng);
    CMatrix t = rand_herm(m, rng);
    if (c % 2 == 0) {
      // Shift half the cases so that the compression is strictly positive.
      const double lam = compressed_min_eig(p, t);
      t += (-lam + 0.05 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng)) * p;
    }
    bool all = true;
    for (double eps : default_eps_schedule()) all = all && lemma_compression_witness(p, t, eps).witness;
    const bool direct = compression_psd(p, t);
    positive += direct;
    agree += all == direct;
  }
  CHECK(agree == 200);
  CHECK(positive >= 100);
}

TEST_CASE("cnp on the concrete model is the identity") {
  const auto space = StarSpace::sic(2);
  const auto inst = sic2();
  const ConcreteOracle o(space, inst);
  const VElement p = VElement::label(space, 0);
  std::mt19937_64 rng(7);
  for (int n : {1, 2}) {
    for (int c = 0; c < 12; ++c) {
      // Plant X = (I (x) P) Y (I (x) P) + Z with Y, Z PSD, or a non-PSD X.
      const int m = 2 * n;
      CMatrix y = rand_herm(m, rng);
      y = y * y.adjoint();
      CMatrix ip = CMatrix::Zero(m, m);
      for (int a = 0; a < n; ++a) ip.block(2 * a, 2 * a, 2, 2) = inst.projections[0];
      CMatrix x = ip * y * ip;
      if (c % 3 == 1) x += 0.2 * CMatrix::Identity(m, m);
      if (c % 3 == 2) x -= (0.5 + herm_eigenvalues(x).maxCoeff()) * ip;
      const HermLevel xl = from_concrete(space, o.images(), x, n);
      CHECK((o.map(xl) - x).norm() < 1e-9);
      const bool psd = min_eigenvalue(x) >= -1e-8;
      const auto r = cnp_member(o, xl, p, 1e-6);
      CAPTURE(n);
      CAPTURE(c);
      CHECK(r.verdict == (psd ? Verdict::Inside : Verdict::Outside));
      CHECK(cnp_validate(o, xl, p, 1e-6, {}, {}, r));
      CHECK(o.member(xl, 1e-6).verdict == r.verdict);

      // The interleaved layout gives the same verdict and padding weight.
      CnpOptions il;
      il.layout = TensorLayout::Interleaved;
      const auto ri = cnp_member(o, xl, p, 1e-6, il);
      CHECK(ri.verdict == r.verdict);
      CHECK(cnp_validate(o, xl, p, 1e-6, il, {}, ri));
      if (r.inside() && ri.inside()) CHECK(std::abs(ri.certificate->t - r.certificate->t) <= 1e-3 * (1 + r.certificate->t));
    }
  }
}

TEST_CASE("cnp over the initial cone") {
  const auto space = StarSpace::sic(2);
  auto cone = std::make_shared<GeneratorCone>(build_initial_cone(space, TSequence::affine(8.07, 1.0), 5));
  const ConeOracle o(cone);
  const VElement p = VElement::label(space, 1);
  for (int n : {1, 2}) {
    const HermLevel u = HermLevel::unit(space, n);
    const auto r = cnp_member(o, u, p, 1e-6);
    REQUIRE(r.inside());
    CHECK(r.certificate->t <= kDefaultTMax);
    CHECK(cnp_validate(o, u, p, 1e-6, {}, {}, r));
    const auto m = cnp_member(o, -u, p, 1e-6);
    REQUIRE(m.outside());
    CHECK(cnp_validate(o, -u, p, 1e-6, {}, {}, m));
  }
  // Generators stay inside C_1(p).
  for (int j = 0; j < cone->size(); j += 7) {
    const HermLevel g = HermLevel::from_element(cone->generators()[j]);
    CHECK(cnp_member(o, g, p, 1e-6).inside());
  }
  // 0 <= 2e <= e fails.
  CHECK_THROWS_AS((void)cnp_member(o, HermLevel::unit(space, 1), VElement::unit(space) * 2.0, 1e-6), Error);
  // A t budget below what the padding needs yields Unknown.
  CnpOptions tight;
  tight.t_max = 1e-9;
  const HermLevel x = HermLevel::from_element(VElement::label(space, 0) - VElement::unit(space) * (1.0 / 3.0));
  const auto un = cnp_member(o, x, p, 1e-2, tight);
  CHECK_FALSE(un.inside());
}

TEST_CASE("relation checks") {
  const auto space = StarSpace::sic(2);
  const double lam = space->constant();
  auto cone = std::make_shared<GeneratorCone>(build_initial_cone(space, TSequence::affine(8.07, 1.0), 5));
  const ConeOracle o(cone);
  const VElement p1 = VElement::label(space, 0);
  const VElement p2 = VElement::label(space, 1);
  // Witnesses at eps = 1/n come from the cross generators; the schedule needs
  // eps down to 1e-6, which the truncated cone cannot reach.
  const auto coarse = relation_check(o, p1, p2, lam, {1.0, 0.5, 0.2});
  CHECK(coarse.holds == Holds::Yes);
  CHECK(coarse.witnesses.size() == 6);

  const auto inst = sic2();
  const ConcreteOracle c(space, inst);
  const auto yes = relation_check(c, p1, p2, lam);
  CHECK(yes.holds == Holds::Yes);
  CHECK(yes.entries.size() == 6);
  const auto no = relation_check(c, p1, p2, 0.5);
  CHECK(no.holds == Holds::No);
  for (const auto& e : no.entries)
    if (e.sign == 1) CHECK(e.verdict == Verdict::Outside);
}

TEST_CASE("d-min refutation basics") {
  const auto space = StarSpace::sic(2);
  const auto inst = sic2();
  const ConcreteOracle o(space, inst);
  // n <= d: the padding compression returns x itself.
  const HermLevel bad1 = HermLevel::from_element(-VElement::label(space, 0));
  const auto r1 = dmin_refute(o, bad1, 1e-6, 2);
  REQUIRE(r1.refuted());
  CHECK(r1.tested == 1);
  CHECK(validate_compression(o, bad1, 1e-6, {}, *r1.refutation));

  const HermLevel u = HermLevel::unit(space, 3);
  SearchBudget small;
  small.restarts = 2;
  small.steps = 20;
  CHECK_FALSE(dmin_refute(o, u, 1e-6, 2, small).refuted());

  const auto s = dmin_sampled_certify(o, u, 1e-6, 2, 500, 9);
  CHECK_FALSE(s.refuted());
  CHECK(s.tested == 503);
  const auto s0 = dmin_sampled_certify(o, u, 1e-6, 2, 0, 9);
  CHECK(s0.tested == 3);
}

TEST_CASE("d-min refutation of planted instances") {
  for (int d : {2, 3}) {
    CAPTURE(d);
    const auto space = StarSpace::sic(d);
    SicSearchOptions so;
    so.seed = 3;
    const ConcreteOracle o(space, sic_search(d, so));
    const int n = d + 1, m = n * d;
    std::mt19937_64 rng(100 + d);
    std::normal_distribution<double> g(0.0, 1.0);
    int found = 0, false_refutations = 0;
    for (int c = 0; c < 10; ++c) {
      CMatrix a = rand_herm(m, rng);
      CMatrix psd = a * a.adjoint() / m;
      CVector w(m);
      for (int i = 0; i < m; ++i) w(i) = Complex(g(rng), g(rng));
      w.normalize();
      const double top = (w.adjoint() * psd * w)(0).real();
      const CMatrix bad = psd - (top + 0.1) * w * w.adjoint();
      SearchBudget b;
      b.seed = 1000 + c;
      b.hints = false;
      const auto r = dmin_refute(o, from_concrete(space, o.images(), bad, n), 1e-6, d, b);
      if (r.refuted()) {
        ++found;
        CHECK(validate_compression(o, from_concrete(space, o.images(), bad, n), 1e-6, {}, *r.refutation));
      }
      SearchBudget quick = b;
      quick.restarts = 2;
      quick.steps = 30;
      false_refutations += dmin_refute(o, from_concrete(space, o.images(), psd, n), 1e-6, d, quick).refuted();
    }
    CHECK(found >= 9);
    CHECK(false_refutations == 0);
  }
}

TEST_CASE("d-min hints from a level-n separator") {
  const auto space = StarSpace::sic(2);
  const ConcreteOracle o(space, sic2());
  std::mt19937_64 rng(5);
  const CMatrix a = rand_herm(6, rng);
  const CMatrix x = a * a.adjoint() - 40.0 * CMatrix::Identity(6, 6) / 6.0;
  const HermLevel xl = from_concrete(space, o.images(), x, 3);
  SearchBudget b;
  b.restarts = 0;
  b.axis = false;
  const auto r = dmin_refute(o, xl, 1e-6, 2, b);
  if (min_eigenvalue(x) < -1e-3) {
    REQUIRE(r.refuted());
    CHECK(r.tested == 1);
  }
}
