#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "opsys/space.hpp"

using namespace opsys;

namespace {

CMatrix random_herm(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(nd(rng), nd(rng));
  return (a + a.adjoint()) / 2.0;
}

HermLevel random_level(const SpacePtr& s, int n, std::mt19937_64& rng) {
  std::vector<CMatrix> blocks;
  for (int k = 0; k < s->dim(); ++k) blocks.push_back(random_herm(n, rng));
  return HermLevel(s, blocks);
}

}  // namespace

TEST_CASE("sic space basics") {
  auto s2 = StarSpace::sic(2);
  CHECK(s2->dim() == 4);
  CHECK(s2->constant() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (int k = 0; k < 4; ++k) CHECK(s2->unit_coeffs()(k) == 0.5);
  auto s3 = StarSpace::sic(3);
  CHECK(s3->dim() == 9);
  CHECK(s3->constant() == 0.25);
  CHECK_THROWS_AS(StarSpace::sic(1), Error);
  try {
    StarSpace::sic(1);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidDimension);
  }
}

TEST_CASE("unit resums from labels") {
  for (int d = 2; d <= 6; ++d) {
    auto s = StarSpace::sic(d);
    RVector sum = RVector::Zero(s->dim());
    for (int k = 0; k < s->label_count(); ++k) sum += s->label_coeffs(k) / d;
    CHECK((sum - s->unit_coeffs()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("mub space relations hold in coordinates") {
  for (int d = 2; d <= 5; ++d) {
    auto s = StarSpace::mub(d);
    CHECK(s->dim() == d * d);
    CHECK(s->label_count() == d * (d + 1));
    CHECK(s->constant() == doctest::Approx(1.0 / d));
    for (int x = 1; x <= d + 1; ++x) {
      RVector sum = RVector::Zero(s->dim());
      for (int i = 1; i <= d; ++i) sum += s->label_coeffs(s->mub_label(i, x));
      CHECK((sum - s->unit_coeffs()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK_THROWS_AS(StarSpace::mub(1), Error);
}

TEST_CASE("mub concrete model is a family of PVMs") {
  for (int d = 2; d <= 4; ++d) {
    auto s = StarSpace::mub(d);
    const RVector unit = s->concrete_diagonal(s->unit_coeffs());
    CHECK((unit.array() == 1.0).all());
    for (int x = 1; x <= d + 1; ++x) {
      RVector sum = RVector::Zero(s->dim());
      for (int i = 1; i <= d; ++i) {
        const RVector pi = s->concrete_diagonal(s->label_coeffs(s->mub_label(i, x)));
        // projection: entries are 0 or 1
        CHECK(((pi.array() == 0.0) || (pi.array() == 1.0)).all());
        for (int j = 1; j <= d; ++j) {
          const RVector pj = s->concrete_diagonal(s->label_coeffs(s->mub_label(j, x)));
          const RVector prod = pi.cwiseProduct(pj);
          if (i == j)
            CHECK((prod - pi).cwiseAbs().maxCoeff() == 0.0);
          else
            CHECK(prod.cwiseAbs().maxCoeff() == 0.0);
        }
        sum += pi;
      }
      CHECK((sum.array() == 1.0).all());
    }
  }
}

TEST_CASE("generator expansions") {
  auto s = StarSpace::sic(2);
  const VElement g = make_generator(s, x_plus(1, 2, 1, 9.0));
  RVector want(4);
  want << 16.0 / 3, -11.0 / 3, 13.0 / 3, 13.0 / 3;
  CHECK((g.coeffs() - want).cwiseAbs().maxCoeff() < 1e-13);

  // independent expansion: (p_i - lambda e) + p_j/n + t (e - p_j)
  const double lam = 1.0 / 3, t = 9.0, n = 1.0;
  RVector oracle(4);
  for (int k = 0; k < 4; ++k) oracle(k) = -lam / 2 + t / 2;
  oracle(0) += 1.0;
  oracle(1) += 1.0 / n - t;
  CHECK((g.coeffs() - oracle).cwiseAbs().maxCoeff() < 1e-13);

  const VElement perp = make_generator(s, BasisProjPerp{0});
  RVector wp(4);
  wp << -0.5, 0.5, 0.5, 0.5;
  CHECK((perp.coeffs() - wp).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(make_generator(s, x_plus(1, 1, 1, 1.0)), Error);
  try {
    make_generator(s, x_plus(1, 1, 1, 1.0));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidGenerator);
  }
  try {
    make_generator(s, x_plus(1, 2, 1, 0.0));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidParameter);
  }
  auto m = StarSpace::mub(3);
  CHECK_THROWS_AS(make_generator(m, y_plus(*m, 1, 1, 1, 2, 1, 1.0)), Error);
  CHECK_NOTHROW(make_generator(m, y_plus(*m, 1, 1, 2, 2, 1, 1.0)));
}

TEST_CASE("plus and minus generators sum to the symmetric part") {
  for (int d = 2; d <= 4; ++d) {
    auto s = StarSpace::sic(d);
    for (int i = 1; i <= d * d; ++i)
      for (int j = 1; j <= d * d; ++j) {
        if (i == j) continue;
        const VElement sum = make_generator(s, x_plus(i, j, 3, 7.5)) + make_generator(s, x_minus(i, j, 3, 7.5));
        const VElement want = VElement::label(s, j - 1) * (2.0 / 3) + VElement::label_perp(s, j - 1) * 15.0;
        CHECK((sum.coeffs() - want.coeffs()).cwiseAbs().maxCoeff() < 1e-13);
      }
  }
}

TEST_CASE("compression") {
  std::mt19937_64 rng(11);
  auto s = StarSpace::sic(2);
  const HermLevel x = random_level(s, 3, rng);
  const HermLevel same = compress(x, CMatrix::Identity(3, 3));
  CHECK((same - x).norm() == 0.0);

  CMatrix e1 = CMatrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  const VElement corner = compress(x, e1).to_element();
  for (int k = 0; k < 4; ++k) CHECK(corner.coeffs()(k) == x.block(k)(0, 0).real());

  std::normal_distribution<double> nd;
  CMatrix a(3, 2), b(2, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = Complex(nd(rng), nd(rng));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) b(i, j) = Complex(nd(rng), nd(rng));
  const HermLevel lhs = compress(compress(x, a), b);
  const HermLevel rhs = compress(x, a * b);
  CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, x.norm()));

  CHECK_THROWS_AS(compress(x, CMatrix::Identity(2, 2)), Error);
}

TEST_CASE("herm level structure") {
  auto s = StarSpace::sic(2);
  const VElement v = make_generator(s, x_minus(2, 3, 2, 4.0));
  CHECK((HermLevel::from_element(v).to_element().coeffs() - v.coeffs()).norm() == 0.0);

  CMatrix raw(2, 2);
  raw << Complex(1, 5), Complex(2, 3), Complex(100, 100), Complex(4, 0);
  std::vector<CMatrix> blocks(4, raw);
  const HermLevel h(s, blocks);
  CHECK(h.block(0)(1, 0) == Complex(2, -3));
  CHECK(h.block(0)(0, 0) == Complex(1, 0));

  const HermLevel u = HermLevel::unit(s, 2);
  const HermLevel dd = u.doubled();
  CHECK(dd.level() == 4);
  CHECK(dd.block(0)(0, 2) == Complex(0.5, 0));
  const HermLevel ds = HermLevel::direct_sum(u, -u);
  CHECK(ds.level() == 4);
  CHECK(ds.block(1)(3, 3) == Complex(-0.5, 0));
  CHECK(ds.block(1)(0, 3) == Complex(0, 0));

  std::vector<CMatrix> bad(4, CMatrix::Identity(2, 2));
  bad[2](0, 1) = Complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(HermLevel(s, bad), Error);
  CHECK_THROWS_AS(VElement(s, RVector::Zero(3)), Error);
}
