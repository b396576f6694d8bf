#include <algorithm>
#include <cmath>
#include <numeric>

#include "opsys/numerics.hpp"

namespace opsys {

namespace {

double conj_if(double v) { return v; }
Complex conj_if(Complex v) { return std::conj(v); }

double phase_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }
Complex phase_of(Complex v) {
  const double a = std::abs(v);
  return a == 0.0 ? Complex(1.0, 0.0) : v / a;
}

double real_part(double v) { return v; }
double real_part(Complex v) { return v.real(); }

// Cyclic Jacobi on a Hermitian (or real symmetric) matrix. On return `a` is
// diagonal up to rounding and `v` holds the accumulated unitary.
template <class Scalar>
void jacobi_sweeps(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
                   Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& v) {
  const Eigen::Index n = a.rows();
  v.setIdentity(n, n);
  if (n < 2) return;
  const double scale = std::max(a.norm(), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= 1e-17 * scale) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = std::abs(a(p, q));
        if (apq <= 1e-300) continue;
        const double app = real_part(a(p, p));
        const double aqq = real_part(a(q, q));
        // After the first sweeps, drop elements already negligible next to both diagonals.
        if (sweep > 3 && apq * 1e17 < std::abs(app) && apq * 1e17 < std::abs(aqq)) {
          a(p, q) = Scalar(0);
          a(q, p) = Scalar(0);
          continue;
        }
        const Scalar ph = phase_of(a(p, q));  // a_pq = |a_pq| ph
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const Scalar ph_c = conj_if(ph);
        // U = diag(1, conj(ph)) * [[c, s], [-s, c]] on (p, q).
        for (Eigen::Index r = 0; r < n; ++r) {
          const Scalar arp = a(r, p);
          const Scalar arq = a(r, q) * ph_c;
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const Scalar apr = a(p, r);
          const Scalar aqr = a(q, r) * ph;
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        a(p, p) = Scalar(real_part(a(p, p)));
        a(q, q) = Scalar(real_part(a(q, q)));
        for (Eigen::Index r = 0; r < n; ++r) {
          const Scalar vrp = v(r, p);
          const Scalar vrq = v(r, q) * ph_c;
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
}

template <class Scalar>
EigResult finish(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
                 const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& v) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  RVector diag(n);
  for (Eigen::Index i = 0; i < n; ++i) diag(i) = real_part(a(i, i));
  CMatrix vc = v.template cast<Complex>();
  // Phase convention first so tie-breaking can compare normalised vectors.
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(vc(r, j)) > 1e-12) {
        vc.col(j) *= std::conj(phase_of(vc(r, j)));
        break;
      }
    }
  }
  auto lex_less = [&](Eigen::Index x, Eigen::Index y) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double dx = vc(r, x).real() - vc(r, y).real();
      if (std::abs(dx) > 1e-12) return dx > 0.0;
      const double di = vc(r, x).imag() - vc(r, y).imag();
      if (std::abs(di) > 1e-12) return di > 0.0;
    }
    return x < y;
  };
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    if (diag(x) != diag(y)) return diag(x) < diag(y);
    return lex_less(x, y);
  });
  EigResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = diag(order[i]);
    out.eigenvectors.col(i) = vc.col(order[i]);
  }
  return out;
}

bool is_real_matrix(const CMatrix& h) {
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      if (h(i, j).imag() != 0.0) return false;
  return true;
}

void check_input(const CMatrix& h) {
  if (h.rows() != h.cols()) throw Error(ErrorKind::DimensionMismatch, "herm_eig needs a square matrix");
  if (!h.allFinite()) throw Error(ErrorKind::NumericInput, "herm_eig: non-finite entry");
}

}  // namespace

EigResult herm_eig(const CMatrix& h_in) {
  check_input(h_in);
  const CMatrix h = hermitian_from_upper(h_in);
  if (is_real_matrix(h)) {
    RMatrix a = h.real();
    RMatrix v;
    jacobi_sweeps(a, v);
    return finish(a, v);
  }
  CMatrix a = h;
  CMatrix v;
  jacobi_sweeps(a, v);
  return finish(a, v);
}

RVector herm_eigenvalues(const CMatrix& h_in) {
  check_input(h_in);
  const CMatrix h = hermitian_from_upper(h_in);
  RVector ev(h.rows());
  if (is_real_matrix(h)) {
    RMatrix a = h.real();
    RMatrix v;
    jacobi_sweeps(a, v);
    ev = a.diagonal();
  } else {
    CMatrix a = h;
    CMatrix v;
    jacobi_sweeps(a, v);
    ev = a.diagonal().real();
  }
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

double min_eigenvalue(const CMatrix& h) {
  if (h.rows() == 1) return h(0, 0).real();
  return herm_eigenvalues(h)(0);
}

CMatrix psd_project(const CMatrix& h) {
  if (h.rows() == 1) return CMatrix::Constant(1, 1, Complex(std::max(0.0, h(0, 0).real()), 0.0));
  const EigResult er = herm_eig(h);
  if (er.eigenvalues(0) >= 0.0) return hermitian_from_upper(h);
  CMatrix out = CMatrix::Zero(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < er.eigenvalues.size(); ++i) {
    const double lam = er.eigenvalues(i);
    if (lam > 0.0) out.noalias() += lam * er.eigenvectors.col(i) * er.eigenvectors.col(i).adjoint();
  }
  return hermitian_from_upper(out);
}

}  // namespace opsys
