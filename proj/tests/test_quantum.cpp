#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "opsys/quantum.hpp"

using namespace opsys;

namespace {

// Brute-force overlap table, independent of QuantumInstance::refresh.
double max_cross_overlap_dev(const std::vector<CVector>& v, int group, double target) {
  double dev = 0.0;
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = 0; b < v.size(); ++b) {
      if (group > 0 ? (static_cast<int>(a) / group == static_cast<int>(b) / group) : a == b) continue;
      Complex s = 0.0;
      for (Eigen::Index k = 0; k < v[a].size(); ++k) s += std::conj(v[a](k)) * v[b](k);
      dev = std::max(dev, std::abs(std::norm(s) - target));
    }
  return dev;
}

QuantumInstance sic(int d) {
  SicSearchOptions o;
  o.seed = 11;
  return sic_search(d, o);
}

}  // namespace

TEST_CASE("sic search d = 2, 3, 4") {
  for (int d : {2, 3, 4}) {
    const QuantumInstance inst = sic(d);
    CAPTURE(d);
    CHECK(inst.overlap_error <= 1e-6);
    CHECK(max_cross_overlap_dev(inst.vectors, 0, 1.0 / (d + 1)) <= 1e-6);
    const auto rep = verify_instance(inst, 1e-6);
    CHECK(rep.passed);
    if (d == 2) {
      // Constant overlaps give the potential d^2 (d^2 - 1) lambda^2.
      CHECK(frame_potential(inst.vectors) == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("sic search with no iterations fails") {
  SicSearchOptions o;
  o.max_iters = 0;
  o.restarts = 2;
  try {
    (void)sic_search(2, o);
    FAIL("expected SearchFailed");
  } catch (const SearchFailed& e) {
    CHECK(e.kind() == ErrorKind::SearchFailed);
    CHECK(e.best().overlap_error > 1e-6);
  }
  CHECK_THROWS_AS((void)sic_search(1), Error);
}

TEST_CASE("sic search is deterministic across thread counts") {
  SicSearchOptions a;
  a.seed = 5;
  a.threads = 1;
  SicSearchOptions b = a;
  b.threads = 4;
  const auto x = sic_search(3, a);
  const auto y = sic_search(3, b);
  REQUIRE(x.vectors.size() == y.vectors.size());
  for (std::size_t i = 0; i < x.vectors.size(); ++i) CHECK((x.vectors[i] - y.vectors[i]).norm() == 0.0);
}

TEST_CASE("mub generation for primes") {
  for (int d : {2, 3, 5, 7, 11}) {
    CAPTURE(d);
    const QuantumInstance inst = mub_generate(d);
    CHECK(inst.vectors.size() == static_cast<std::size_t>(d * (d + 1)));
    CHECK(max_cross_overlap_dev(inst.vectors, d, 1.0 / d) <= 1e-12);
    const auto rep = verify_instance(inst, 1e-10);
    CHECK(rep.passed);
    for (const auto& [name, dev] : rep.checks) {
      CAPTURE(name);
      CHECK(dev <= 1e-12);
    }
  }
  CHECK_THROWS_AS((void)mub_generate(6), Error);
  CHECK_THROWS_AS((void)mub_generate(4), Error);
  try {
    (void)mub_generate(6);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedDimension);
  }
}

TEST_CASE("verification trace values") {
  const QuantumInstance s = sic(2);
  // tau(P_i) = 1/2, tau(P_i P_j) = 1/6 computed directly.
  for (int i = 0; i < 4; ++i) {
    CHECK(s.projections[i].trace().real() / 2 == doctest::Approx(0.5).epsilon(1e-9));
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK((s.projections[i] * s.projections[j]).trace().real() / 2 == doctest::Approx(1.0 / 6).epsilon(1e-6));
  }
  const QuantumInstance m = mub_generate(3);
  const CMatrix pqp = m.projections[0] * m.projections[4] * m.projections[0];
  CHECK(pqp.trace().real() / 3 == doctest::Approx(1.0 / 9).epsilon(1e-12));
}

TEST_CASE("verification detects perturbation") {
  QuantumInstance s = sic(2);
  s.vectors[1](0) += 1e-2;
  s.vectors[1].normalize();
  s.refresh();
  const auto rep = verify_instance(s, 1e-8);
  CHECK_FALSE(rep.passed);
  bool rel = false;
  for (const auto& f : rep.failures) rel = rel || f == "relation";
  CHECK(rel);

  QuantumInstance bad = s;
  bad.vectors.pop_back();
  CHECK_THROWS_AS((void)verify_instance(bad, 1e-8), Error);
}

TEST_CASE("pi images and map") {
  const auto space = StarSpace::sic(2);
  const QuantumInstance s = sic(2);
  const auto img = pi_images(*space, s);
  // e maps to the identity.
  const CMatrix e = pi_map(img, HermLevel::unit(space, 1));
  CHECK((e - CMatrix::Identity(2, 2)).norm() < 1e-8);
  const CMatrix e2 = pi_map(img, HermLevel::unit(space, 3));
  CHECK((e2 - CMatrix::Identity(6, 6)).norm() < 1e-8);
  // p_k^perp -> I - P_k is PSD.
  for (int k = 0; k < 4; ++k)
    CHECK(min_eigenvalue(pi_map(img, HermLevel::from_element(VElement::label_perp(space, k)))) >= -1e-9);

  const auto mspace = StarSpace::mub(3);
  const QuantumInstance m = mub_generate(3);
  const auto mimg = pi_images(*mspace, m);
  for (int l = 0; l < mspace->label_count(); ++l)
    CHECK((pi_map(mimg, HermLevel::from_element(VElement::label(mspace, l))) - m.projections[l]).norm() < 1e-12);
  CHECK_THROWS_AS((void)pi_images(*mspace, s), Error);
}

TEST_CASE("pi positivity of the initial cone") {
  for (int d : {2, 3}) {
    CAPTURE(d);
    const auto space = StarSpace::sic(d);
    const QuantumInstance s = sic(d);
    const double ts = t_thresholds(d).t_star;
    const auto rep = pi_positivity_check(*space, s, TSequence::affine(ts, 1.0), 10, 1e-9);
    CHECK(rep.passed);
    CHECK(rep.violations == 0);
    CHECK(rep.worst >= -1e-9);
    for (const auto& e : rep.entries)
      if (e.cross) CHECK(e.min_t <= e.t_used);

    const auto bad = pi_positivity_check(*space, s, TSequence::affine(0.01, 0.01), 10, 1e-9);
    CHECK_FALSE(bad.passed);
    CHECK(bad.violations > 0);
  }
  const auto mspace = StarSpace::mub(3);
  CHECK_THROWS_AS((void)pi_positivity_check(*mspace, sic(2), TSequence::affine(8.0, 1.0), 2, 1e-9), Error);
}

TEST_CASE("concrete oracle") {
  const auto space = StarSpace::sic(2);
  const QuantumInstance s = sic(2);
  const ConcreteOracle o(space, s);

  // Unit is inside; -unit is outside with a validated functional.
  const HermLevel u = HermLevel::unit(space, 2);
  const auto in = o.member(u, 1e-6);
  CHECK(in.inside());
  const auto out = o.member(-u, 1e-6);
  REQUIRE(out.outside());
  CHECK(o.validate(-u, 1e-6, {}, out));
  // The coordinate functional pairs like the matrix one.
  const auto& w = out.certificate->blocks.front();
  std::vector<CMatrix> f(out.certificate->blocks.begin() + 1, out.certificate->blocks.end());
  const HermLevel y = random_direction(space, 2, 3);
  CHECK(pair(f, y) == doctest::Approx((w * o.map(y)).trace().real()).epsilon(1e-10));

  // p_1 - e is not positive alone but is with the free direction p_1^perp.
  const HermLevel x = HermLevel::from_element(VElement::label(space, 0) - VElement::unit(space));
  CHECK(o.member(x, 1e-6).outside());
  const HermLevel dir = HermLevel::from_element(VElement::label_perp(space, 0));
  const auto r = o.member(x, 1e-6, {dir});
  REQUIRE(r.inside());
  CHECK(r.certificate->dir_weights(0) >= 1.0 - 1e-5);
  CHECK(o.validate(x, 1e-6, {dir}, r));
  // Free direction that cannot help.
  const auto r2 = o.member(-u, 1e-3, {-u});
  CHECK(r2.outside());
  CHECK(o.validate(-u, 1e-3, {-u}, r2));
}
