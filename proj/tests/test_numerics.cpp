#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "opsys/numerics.hpp"

using namespace opsys;

namespace {

CMatrix random_herm(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(nd(rng), nd(rng));
  return (a + a.adjoint()) / 2.0;
}

CMatrix random_psd(int n, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMatrix a(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = Complex(nd(rng), nd(rng));
  return a * a.adjoint();
}

}  // namespace

TEST_CASE("herm_eig small cases") {
  const EigResult id = herm_eig(CMatrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(id.eigenvalues(i) == doctest::Approx(1.0));
  CMatrix d = CMatrix::Zero(2, 2);
  d(1, 1) = -1.0;
  const EigResult er = herm_eig(d);
  CHECK(er.eigenvalues(0) == -1.0);
  CHECK(er.eigenvalues(1) == 0.0);
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(0, 1) = Complex(INFINITY, 0);
  CHECK_THROWS_AS(herm_eig(bad), Error);
}

TEST_CASE("herm_eig reconstruction and unitarity") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 8;
    const CMatrix h = random_herm(n == 1 ? 8 : n, rng);
    const EigResult er = herm_eig(h);
    const CMatrix& v = er.eigenvectors;
    const CMatrix rec = v * er.eigenvalues.cast<Complex>().asDiagonal() * v.adjoint();
    CHECK((rec - h).norm() <= 1e-10 * h.norm());
    CHECK((v.adjoint() * v - CMatrix::Identity(h.rows(), h.rows())).norm() <= 1e-10);
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      CHECK((h * v.col(i) - er.eigenvalues(i) * v.col(i)).norm() <= 1e-10 * h.norm());
      if (i > 0) CHECK(er.eigenvalues(i - 1) <= er.eigenvalues(i));
    }
  }
}

TEST_CASE("herm_eig is deterministic and phase normalised") {
  std::mt19937_64 rng(5);
  const CMatrix h = random_herm(6, rng);
  const EigResult a = herm_eig(h);
  const EigResult b = herm_eig(h);
  CHECK((a.eigenvectors - b.eigenvectors).norm() == 0.0);
  for (int j = 0; j < 6; ++j) {
    for (int r = 0; r < 6; ++r) {
      if (std::abs(a.eigenvectors(r, j)) > 1e-12) {
        CHECK(std::abs(a.eigenvectors(r, j).imag()) < 1e-14);
        CHECK(a.eigenvectors(r, j).real() > 0.0);
        break;
      }
    }
  }
}

TEST_CASE("psd projection is idempotent") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix h = random_herm(5, rng);
    const CMatrix p1 = psd_project(h);
    const CMatrix p2 = psd_project(p1);
    CHECK((p1 - p2).norm() <= 1e-12 * std::max(1.0, h.norm()));
    CHECK(min_eigenvalue(p1) >= -1e-12);
  }
}

TEST_CASE("nnls examples") {
  RMatrix a = RMatrix::Identity(2, 2);
  RVector b(2);
  b << 1, 2;
  NnlsResult r = nnls_solve(a, b);
  CHECK(r.coeffs(0) == doctest::Approx(1.0));
  CHECK(r.coeffs(1) == doctest::Approx(2.0));
  CHECK(r.residual < 1e-14);
  b << -1, 0;
  r = nnls_solve(a, b);
  CHECK(r.coeffs.norm() == 0.0);
  CHECK(r.residual == doctest::Approx(1.0));
}

TEST_CASE("nnls recovers planted solution") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    RMatrix a(10, 4);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 4; ++j) a(i, j) = nd(rng);
    RVector c(4);
    for (int j = 0; j < 4; ++j) c(j) = (j == trial % 4) ? 0.0 : ud(rng);
    const NnlsResult r = nnls_solve(a, a * c);
    CHECK(r.residual <= 1e-10);
    CHECK(r.converged);
    CHECK((r.coeffs.array() >= 0.0).all());
  }
}

TEST_CASE("nnls optimality conditions on random data") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    RMatrix a(6, 9);
    RVector b(6);
    for (int i = 0; i < 6; ++i) {
      b(i) = nd(rng);
      for (int j = 0; j < 9; ++j) a(i, j) = nd(rng);
    }
    const NnlsResult r = nnls_solve(a, b);
    const RVector grad = a.transpose() * (b - a * r.coeffs);
    for (int j = 0; j < 9; ++j) {
      CHECK(grad(j) <= 1e-9);
      if (r.coeffs(j) > 1e-12) CHECK(std::abs(grad(j)) <= 1e-9);
    }
  }
}

TEST_CASE("hvec is an isometry") {
  std::mt19937_64 rng(19);
  const CMatrix a = random_herm(4, rng), b = random_herm(4, rng);
  CHECK(hvec(a).dot(hvec(b)) == doctest::Approx((a * b).trace().real()).epsilon(1e-12));
  CHECK((hmat(hvec(a), 4) - a).norm() < 1e-14);
}

TEST_CASE("dykstra trivial systems") {
  AffineSystem sys;
  sys.n = 3;
  sys.coeff = RMatrix::Identity(1, 1);
  sys.rhs = {CMatrix::Identity(3, 3)};
  FeasResult r = dykstra_psd_feasibility(sys);
  REQUIRE(r.status == FeasStatus::Feasible);
  CHECK((r.point.blocks[0] - CMatrix::Identity(3, 3)).norm() <= 1e-8);

  sys.rhs = {-CMatrix::Identity(3, 3)};
  r = dykstra_psd_feasibility(sys);
  REQUIRE(r.status == FeasStatus::InfeasibleEvidence);
  CHECK(r.gap == doctest::Approx(std::sqrt(3.0)).epsilon(1e-6));
  REQUIRE(r.separator.has_value());
  // separator is a positive multiple of I: PSD against the variable, negative on -I
  CHECK(min_eigenvalue((*r.separator)[0]) > 0.0);
  CHECK((((*r.separator)[0]) * sys.rhs[0]).trace().real() < 0.0);

  AffineSystem bad = sys;
  bad.rhs.push_back(CMatrix::Identity(3, 3));
  CHECK_THROWS_AS(dykstra_psd_feasibility(bad), Error);
}

TEST_CASE("dykstra recovers planted feasible instances") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3, g = 6, rows = 4;
    AffineSystem sys;
    sys.n = n;
    sys.coeff.resize(rows, g);
    for (int k = 0; k < rows; ++k)
      for (int j = 0; j < g; ++j) sys.coeff(k, j) = nd(rng);
    std::vector<CMatrix> planted;
    for (int j = 0; j < g; ++j) planted.push_back(random_psd(n, n, rng));
    for (int k = 0; k < rows; ++k) {
      CMatrix r = CMatrix::Zero(n, n);
      for (int j = 0; j < g; ++j) r += sys.coeff(k, j) * planted[j];
      sys.rhs.push_back(r);
    }
    FeasOptions opt;
    opt.record_gaps = true;
    const FeasResult res = dykstra_psd_feasibility(sys, opt);
    REQUIRE(res.status == FeasStatus::Feasible);
    double scale = 0.0;
    for (const auto& r : sys.rhs) scale += r.squaredNorm();
    scale = std::max(1.0, std::sqrt(scale));
    double resid = 0.0;
    for (const auto& r : affine_residual(sys, res.point)) resid += r.squaredNorm();
    CHECK(std::sqrt(resid) <= 1e-8 * scale);
    for (const auto& q : res.point.blocks) CHECK(min_eigenvalue(q) >= -1e-8);
  }
}

TEST_CASE("dykstra with scalar directions") {
  // Q - s I = diag(1, -1): feasible with s >= 1.
  AffineSystem sys;
  sys.n = 2;
  sys.coeff = RMatrix::Identity(1, 1);
  CMatrix r = CMatrix::Zero(2, 2);
  r(0, 0) = 1.0;
  r(1, 1) = -1.0;
  sys.rhs = {r};
  sys.scalar_dirs = {{-CMatrix::Identity(2, 2)}};
  const FeasResult res = dykstra_psd_feasibility(sys);
  REQUIRE(res.status == FeasStatus::Feasible);
  CHECK(res.point.scalars(0) >= 1.0 - 1e-7);
  CHECK(min_eigenvalue(res.point.blocks[0]) >= -1e-12);
}

TEST_CASE("interior point margin on trivial systems") {
  AffineSystem sys;
  sys.n = 2;
  sys.coeff = RMatrix::Constant(1, 1, 1.0);
  sys.rhs = {-CMatrix::Identity(2, 2)};
  const MarginResult r = sdp_margin(sys, {CMatrix::Identity(2, 2)});
  CHECK(r.status == MarginStatus::Optimal);
  CHECK(r.sigma == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.dual_obj == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(min_eigenvalue(r.dual[0]) >= -1e-9);

  sys.rhs = {CMatrix::Identity(2, 2)};
  const MarginResult r2 = sdp_margin(sys, {CMatrix::Identity(2, 2)});
  CHECK(r2.sigma <= 1e-8);
  CHECK(min_eigenvalue(r2.point.blocks[0]) > 0.0);

  sys.rhs = {CMatrix::Identity(3, 3)};
  CHECK_THROWS_AS(sdp_margin(sys, {CMatrix::Identity(2, 2)}), Error);
}

TEST_CASE("interior point margin on planted instances") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3, g = 6, rows = 4;
    AffineSystem sys;
    sys.n = n;
    sys.coeff.resize(rows, g);
    for (int k = 0; k < rows; ++k)
      for (int j = 0; j < g; ++j) sys.coeff(k, j) = ud(rng);
    std::vector<CMatrix> planted, unit;
    for (int j = 0; j < g; ++j) planted.push_back(random_psd(n, 1, rng));
    for (int k = 0; k < rows; ++k) {
      CMatrix r = CMatrix::Zero(n, n);
      for (int j = 0; j < g; ++j) r += sys.coeff(k, j) * planted[j];
      sys.rhs.push_back(r);
      unit.push_back(sys.coeff.row(k).sum() * CMatrix::Identity(n, n));
    }
    // Rank-one planted blocks leave no interior; the path stalls near sigma = 0.
    const MarginResult r = sdp_margin(sys, unit);
    CHECK(r.sigma <= 1e-6);
    CHECK(r.primal_res <= 1e-10);
    for (const auto& q : r.point.blocks) CHECK(min_eigenvalue(q) >= -1e-12);

    // -unit needs sigma = 1 exactly; weak duality brackets it.
    for (int k = 0; k < rows; ++k) sys.rhs[k] = -unit[k];
    const MarginResult o = sdp_margin(sys, unit);
    CHECK(o.sigma == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(o.dual_obj <= o.primal_obj + 1e-9);
    CHECK(o.dual_obj >= 1.0 - 1e-7);
  }
}

TEST_CASE("interior point early stops") {
  AffineSystem sys;
  sys.n = 2;
  sys.coeff = RMatrix::Constant(1, 1, 1.0);
  sys.rhs = {-CMatrix::Identity(2, 2)};
  MarginOptions o;
  o.stop_dual = 0.5;
  const MarginResult r = sdp_margin(sys, {CMatrix::Identity(2, 2)}, o);
  CHECK(r.status == MarginStatus::DualHit);
  CHECK(r.dual_obj >= 0.5);
  sys.rhs = {CMatrix::Identity(2, 2)};
  o = MarginOptions{};
  o.stop_sigma = 1e-3;
  const MarginResult p = sdp_margin(sys, {CMatrix::Identity(2, 2)}, o);
  CHECK(p.status == MarginStatus::PrimalHit);
  CHECK(p.sigma <= 1e-3);
}
