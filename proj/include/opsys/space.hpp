#pragma once

// *-vector spaces spanned by SIC / MUB projection labels, their self-adjoint
// elements, and Hermitian matrices over them.

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "opsys/error.hpp"

namespace opsys {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

enum class SpaceKind { Sic, Mub };

const char* to_string(SpaceKind kind);
SpaceKind space_kind_from_string(const std::string& s);

/// A finite-dimensional *-vector space with a distinguished self-adjoint basis
/// and order unit e.
///
/// SIC kind: basis p_1..p_{d^2}, e = (1/d) sum p_i.
/// MUB kind: basis {e} u {p_i^x : i <= d-1, x <= d+1}; the dependent labels
/// p_d^x are resolved as e - sum_{i<d} p_i^x so that sum_i p_i^x = e holds in
/// coordinates.
///
/// Labels are the d^2 (SIC) or d(d+1) (MUB) projections p; for MUB, label
/// index (x-1)*d + (i-1) names p_i^x.
class StarSpace {
 public:
  static std::shared_ptr<const StarSpace> sic(int d);
  static std::shared_ptr<const StarSpace> mub(int d);
  static std::shared_ptr<const StarSpace> build(SpaceKind kind, int d);

  SpaceKind kind() const { return kind_; }
  int d() const { return d_; }
  int dim() const { return dim_; }
  /// lambda = 1/(d+1) for SIC, mu = 1/d for MUB.
  double constant() const { return constant_; }
  const RVector& unit_coeffs() const { return unit_; }
  const std::vector<std::string>& basis_labels() const { return basis_labels_; }

  int label_count() const { return static_cast<int>(labels_.size()); }
  const std::string& label_name(int label) const { return label_names_.at(label); }
  /// Coordinate expansion of projection label `label` (0-based).
  const RVector& label_coeffs(int label) const { return labels_.at(label); }
  /// MUB only: label index of p_i^x, 1-based i and x.
  int mub_label(int i, int x) const;
  /// MUB only: the basis index x (1-based) a label belongs to.
  int mub_basis_of(int label) const;
  /// Two labels may not appear together in a cross generator.
  bool labels_conflict(int a, int b) const;

  /// Concrete diagonal model of a coordinate vector (d^2 x d^2 diagonal, as a
  /// vector of diagonal entries). SIC: p_i -> E_ii. MUB: (E_i (x) E_x) (+) 0.
  RVector concrete_diagonal(const RVector& coeffs) const;

  bool same_as(const StarSpace& other) const { return kind_ == other.kind_ && d_ == other.d_; }

 private:
  StarSpace() = default;

  SpaceKind kind_ = SpaceKind::Sic;
  int d_ = 0;
  int dim_ = 0;
  double constant_ = 0.0;
  RVector unit_;
  std::vector<std::string> basis_labels_;
  std::vector<RVector> labels_;
  std::vector<std::string> label_names_;
};

using SpacePtr = std::shared_ptr<const StarSpace>;

/// Self-adjoint element of V as a real coefficient vector over the basis.
class VElement {
 public:
  VElement(SpacePtr space, RVector coeffs);

  static VElement zero(SpacePtr space);
  static VElement unit(SpacePtr space);
  static VElement label(SpacePtr space, int label);
  /// e - p for a projection label.
  static VElement label_perp(SpacePtr space, int label);

  const SpacePtr& space() const { return space_; }
  const RVector& coeffs() const { return coeffs_; }
  int dim() const { return static_cast<int>(coeffs_.size()); }

  VElement operator+(const VElement& o) const;
  VElement operator-(const VElement& o) const;
  VElement operator-() const;
  VElement operator*(double s) const;
  friend VElement operator*(double s, const VElement& v) { return v * s; }

 private:
  SpacePtr space_;
  RVector coeffs_;
};

/// Hermitian n x n matrix over V, stored as x = sum_k A_k (x) p_k with one
/// Hermitian n x n block per basis coordinate. Blocks are rebuilt from their
/// upper triangle on construction, so the lower triangle never carries
/// independent data.
class HermLevel {
 public:
  HermLevel(SpacePtr space, std::vector<CMatrix> blocks);

  static HermLevel zero(SpacePtr space, int n);
  /// I_n (x) e.
  static HermLevel unit(SpacePtr space, int n);
  /// Level-1 embedding of v.
  static HermLevel from_element(const VElement& v);
  /// Q (x) v.
  static HermLevel tensor(const CMatrix& q, const VElement& v);
  /// Block diagonal direct sum.
  static HermLevel direct_sum(const HermLevel& a, const HermLevel& b);

  const SpacePtr& space() const { return space_; }
  int level() const { return n_; }
  int dim() const { return static_cast<int>(blocks_.size()); }
  const std::vector<CMatrix>& blocks() const { return blocks_; }
  const CMatrix& block(int k) const { return blocks_.at(k); }

  /// Level-1 elements only.
  VElement to_element() const;
  /// The V-valued (a, b) entry; only the self-adjoint part for a != b is
  /// meaningful so this is restricted to diagonal entries.
  VElement diagonal_entry(int a) const;

  HermLevel operator+(const HermLevel& o) const;
  HermLevel operator-(const HermLevel& o) const;
  HermLevel operator-() const;
  HermLevel operator*(double s) const;
  friend HermLevel operator*(double s, const HermLevel& x) { return x * s; }

  /// [[x, x], [x, x]] at level 2n.
  HermLevel doubled() const;
  /// Frobenius norm of the coefficient stack.
  double norm() const;
  bool is_real() const;

 private:
  SpacePtr space_;
  int n_ = 0;
  std::vector<CMatrix> blocks_;
};

/// Hermitian matrix rebuilt from its upper triangle (diagonal made real).
CMatrix hermitian_from_upper(const CMatrix& m);

/// sum_k (alpha^* A_k alpha) (x) p_k.
HermLevel compress(const HermLevel& x, const CMatrix& alpha);

// Generator specifications --------------------------------------------------

struct BasisProj {
  int label;
};
struct BasisProjPerp {
  int label;
};
/// sign * (p_a - c e) + (1/n) p_b + t p_b^perp, with c = lambda or mu.
struct CrossGen {
  int sign;  // +1 or -1
  int a;
  int b;
  int n;
  double t;
};
using GeneratorSpec = std::variant<BasisProj, BasisProjPerp, CrossGen>;

/// SIC helpers (1-based indices as written in the construction).
GeneratorSpec x_plus(int i, int j, int n, double t);
GeneratorSpec x_minus(int i, int j, int n, double t);
/// MUB helpers: y^{+-}_{x,i,y,j,n} with 1-based labels.
GeneratorSpec y_plus(const StarSpace& space, int x, int i, int y, int j, int n, double t);
GeneratorSpec y_minus(const StarSpace& space, int x, int i, int y, int j, int n, double t);

VElement make_generator(const SpacePtr& space, const GeneratorSpec& spec);
std::string describe(const StarSpace& space, const GeneratorSpec& spec);

}  // namespace opsys
