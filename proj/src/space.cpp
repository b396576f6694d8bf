#include "opsys/space.hpp"

#include <cmath>
#include <sstream>

namespace opsys {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::InvalidGenerator: return "invalid-generator";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::NumericInput: return "numeric-input";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::SearchFailed: return "search-failed";
  }
  return "error";
}

const char* to_string(SpaceKind kind) { return kind == SpaceKind::Sic ? "sic" : "mub"; }

SpaceKind space_kind_from_string(const std::string& s) {
  if (s == "sic" || s == "SIC") return SpaceKind::Sic;
  if (s == "mub" || s == "MUB") return SpaceKind::Mub;
  throw Error(ErrorKind::InvalidInput, "unknown space kind '" + s + "'");
}

std::shared_ptr<const StarSpace> StarSpace::sic(int d) {
  if (d < 2) throw Error(ErrorKind::InvalidDimension, "SIC space needs d >= 2, got " + std::to_string(d));
  auto s = std::shared_ptr<StarSpace>(new StarSpace());
  s->kind_ = SpaceKind::Sic;
  s->d_ = d;
  s->dim_ = d * d;
  s->constant_ = 1.0 / (d + 1);
  s->unit_ = RVector::Constant(s->dim_, 1.0 / d);
  for (int k = 0; k < s->dim_; ++k) {
    s->basis_labels_.push_back("p" + std::to_string(k + 1));
    RVector c = RVector::Zero(s->dim_);
    c(k) = 1.0;
    s->labels_.push_back(c);
    s->label_names_.push_back(s->basis_labels_.back());
  }
  return s;
}

std::shared_ptr<const StarSpace> StarSpace::mub(int d) {
  if (d < 2) throw Error(ErrorKind::InvalidDimension, "MUB space needs d >= 2, got " + std::to_string(d));
  auto s = std::shared_ptr<StarSpace>(new StarSpace());
  s->kind_ = SpaceKind::Mub;
  s->d_ = d;
  s->dim_ = d * d;
  s->constant_ = 1.0 / d;
  s->unit_ = RVector::Zero(s->dim_);
  s->unit_(0) = 1.0;
  s->basis_labels_.push_back("e");
  // coordinate 1 + (x-1)*(d-1) + (i-1) holds p_i^x for i <= d-1.
  for (int x = 1; x <= d + 1; ++x)
    for (int i = 1; i <= d - 1; ++i)
      s->basis_labels_.push_back("p" + std::to_string(i) + "^" + std::to_string(x));
  for (int x = 1; x <= d + 1; ++x) {
    RVector last = s->unit_;
    for (int i = 1; i <= d; ++i) {
      RVector c = RVector::Zero(s->dim_);
      if (i < d) {
        c(1 + (x - 1) * (d - 1) + (i - 1)) = 1.0;
        last -= c;
      } else {
        c = last;
      }
      s->labels_.push_back(c);
      s->label_names_.push_back("p" + std::to_string(i) + "^" + std::to_string(x));
    }
  }
  return s;
}

std::shared_ptr<const StarSpace> StarSpace::build(SpaceKind kind, int d) {
  return kind == SpaceKind::Sic ? sic(d) : mub(d);
}

int StarSpace::mub_label(int i, int x) const {
  if (kind_ != SpaceKind::Mub) throw Error(ErrorKind::InvalidInput, "mub_label on a SIC space");
  if (i < 1 || i > d_ || x < 1 || x > d_ + 1)
    throw Error(ErrorKind::InvalidGenerator, "MUB label out of range");
  return (x - 1) * d_ + (i - 1);
}

int StarSpace::mub_basis_of(int label) const { return label / d_ + 1; }

bool StarSpace::labels_conflict(int a, int b) const {
  if (kind_ == SpaceKind::Sic) return a == b;
  return mub_basis_of(a) == mub_basis_of(b);
}

RVector StarSpace::concrete_diagonal(const RVector& coeffs) const {
  if (coeffs.size() != dim_) throw Error(ErrorKind::DimensionMismatch, "coefficient length");
  if (kind_ == SpaceKind::Sic) return coeffs;
  // e -> I, p_i^x (i<d) -> the (i, x) slot of D_{d-1} (x) D_{d+1}; the last
  // slot is the D_1 summand. Coordinates are x-major, Kronecker slots i-major.
  RVector out = RVector::Constant(dim_, coeffs(0));
  for (int x = 1; x <= d_ + 1; ++x)
    for (int i = 1; i <= d_ - 1; ++i) {
      const int coord = 1 + (x - 1) * (d_ - 1) + (i - 1);
      const int slot = (i - 1) * (d_ + 1) + (x - 1);
      out(slot) += coeffs(coord);
    }
  return out;
}

// VElement ------------------------------------------------------------------

VElement::VElement(SpacePtr space, RVector coeffs) : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (!space_) throw Error(ErrorKind::InvalidInput, "null space");
  if (coeffs_.size() != space_->dim())
    throw Error(ErrorKind::DimensionMismatch, "element has " + std::to_string(coeffs_.size()) +
                                                  " coefficients, space dim " + std::to_string(space_->dim()));
  if (!coeffs_.allFinite()) throw Error(ErrorKind::NumericInput, "non-finite coefficient");
}

VElement VElement::zero(SpacePtr space) {
  const int n = space->dim();
  return VElement(std::move(space), RVector::Zero(n));
}

VElement VElement::unit(SpacePtr space) {
  RVector u = space->unit_coeffs();
  return VElement(std::move(space), std::move(u));
}

VElement VElement::label(SpacePtr space, int label) {
  RVector c = space->label_coeffs(label);
  return VElement(std::move(space), std::move(c));
}

VElement VElement::label_perp(SpacePtr space, int label) {
  RVector c = space->unit_coeffs() - space->label_coeffs(label);
  return VElement(std::move(space), std::move(c));
}

namespace {
void require_same(const SpacePtr& a, const SpacePtr& b) {
  if (a != b && !a->same_as(*b)) throw Error(ErrorKind::DimensionMismatch, "elements live in different spaces");
}
}  // namespace

VElement VElement::operator+(const VElement& o) const {
  require_same(space_, o.space_);
  return VElement(space_, coeffs_ + o.coeffs_);
}
VElement VElement::operator-(const VElement& o) const {
  require_same(space_, o.space_);
  return VElement(space_, coeffs_ - o.coeffs_);
}
VElement VElement::operator-() const { return VElement(space_, -coeffs_); }
VElement VElement::operator*(double s) const { return VElement(space_, s * coeffs_); }

// HermLevel -----------------------------------------------------------------

CMatrix hermitian_from_upper(const CMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "Hermitian block must be square");
  const auto n = m.rows();
  CMatrix h(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    h(a, a) = Complex(m(a, a).real(), 0.0);
    for (Eigen::Index b = a + 1; b < n; ++b) {
      h(a, b) = m(a, b);
      h(b, a) = std::conj(m(a, b));
    }
  }
  return h;
}

HermLevel::HermLevel(SpacePtr space, std::vector<CMatrix> blocks) : space_(std::move(space)) {
  if (!space_) throw Error(ErrorKind::InvalidInput, "null space");
  if (static_cast<int>(blocks.size()) != space_->dim())
    throw Error(ErrorKind::DimensionMismatch, "HermLevel needs one block per basis coordinate");
  n_ = static_cast<int>(blocks.front().rows());
  if (n_ < 1) throw Error(ErrorKind::DimensionMismatch, "level must be >= 1");
  blocks_.reserve(blocks.size());
  for (const auto& b : blocks) {
    if (b.rows() != n_ || b.cols() != n_) throw Error(ErrorKind::DimensionMismatch, "ragged HermLevel blocks");
    if (!b.allFinite()) throw Error(ErrorKind::NumericInput, "non-finite block entry");
    blocks_.push_back(hermitian_from_upper(b));
  }
}

HermLevel HermLevel::zero(SpacePtr space, int n) {
  std::vector<CMatrix> blocks(space->dim(), CMatrix::Zero(n, n));
  return HermLevel(std::move(space), std::move(blocks));
}

HermLevel HermLevel::unit(SpacePtr space, int n) {
  return tensor(CMatrix::Identity(n, n), VElement::unit(std::move(space)));
}

HermLevel HermLevel::from_element(const VElement& v) { return tensor(CMatrix::Identity(1, 1), v); }

HermLevel HermLevel::tensor(const CMatrix& q, const VElement& v) {
  std::vector<CMatrix> blocks;
  blocks.reserve(v.dim());
  for (int k = 0; k < v.dim(); ++k) blocks.push_back(v.coeffs()(k) * q);
  return HermLevel(v.space(), std::move(blocks));
}

HermLevel HermLevel::direct_sum(const HermLevel& a, const HermLevel& b) {
  require_same(a.space_, b.space_);
  const int n = a.level() + b.level();
  std::vector<CMatrix> blocks;
  for (int k = 0; k < a.dim(); ++k) {
    CMatrix m = CMatrix::Zero(n, n);
    m.topLeftCorner(a.level(), a.level()) = a.blocks_[k];
    m.bottomRightCorner(b.level(), b.level()) = b.blocks_[k];
    blocks.push_back(std::move(m));
  }
  return HermLevel(a.space_, std::move(blocks));
}

VElement HermLevel::to_element() const {
  if (n_ != 1) throw Error(ErrorKind::DimensionMismatch, "to_element needs level 1");
  return diagonal_entry(0);
}

VElement HermLevel::diagonal_entry(int a) const {
  RVector c(dim());
  for (int k = 0; k < dim(); ++k) c(k) = blocks_[k](a, a).real();
  return VElement(space_, std::move(c));
}

HermLevel HermLevel::operator+(const HermLevel& o) const {
  require_same(space_, o.space_);
  if (o.n_ != n_) throw Error(ErrorKind::DimensionMismatch, "level mismatch in sum");
  std::vector<CMatrix> blocks(blocks_);
  for (int k = 0; k < dim(); ++k) blocks[k] += o.blocks_[k];
  return HermLevel(space_, std::move(blocks));
}

HermLevel HermLevel::operator-(const HermLevel& o) const { return *this + (-o); }

HermLevel HermLevel::operator-() const { return *this * -1.0; }

HermLevel HermLevel::operator*(double s) const {
  std::vector<CMatrix> blocks(blocks_);
  for (auto& b : blocks) b *= s;
  return HermLevel(space_, std::move(blocks));
}

HermLevel HermLevel::doubled() const {
  std::vector<CMatrix> blocks;
  for (const auto& b : blocks_) {
    CMatrix m(2 * n_, 2 * n_);
    m << b, b, b, b;
    blocks.push_back(std::move(m));
  }
  return HermLevel(space_, std::move(blocks));
}

double HermLevel::norm() const {
  double s = 0.0;
  for (const auto& b : blocks_) s += b.squaredNorm();
  return std::sqrt(s);
}

bool HermLevel::is_real() const {
  for (const auto& b : blocks_)
    if (b.imag().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

HermLevel compress(const HermLevel& x, const CMatrix& alpha) {
  if (alpha.rows() != x.level() || alpha.cols() < 1)
    throw Error(ErrorKind::DimensionMismatch, "compression matrix must have " + std::to_string(x.level()) + " rows");
  std::vector<CMatrix> blocks;
  blocks.reserve(x.dim());
  for (const auto& b : x.blocks()) blocks.push_back(alpha.adjoint() * b * alpha);
  return HermLevel(x.space(), std::move(blocks));
}

// Generators ----------------------------------------------------------------

GeneratorSpec x_plus(int i, int j, int n, double t) { return CrossGen{+1, i - 1, j - 1, n, t}; }
GeneratorSpec x_minus(int i, int j, int n, double t) { return CrossGen{-1, i - 1, j - 1, n, t}; }

GeneratorSpec y_plus(const StarSpace& space, int x, int i, int y, int j, int n, double t) {
  return CrossGen{+1, space.mub_label(i, x), space.mub_label(j, y), n, t};
}
GeneratorSpec y_minus(const StarSpace& space, int x, int i, int y, int j, int n, double t) {
  return CrossGen{-1, space.mub_label(i, x), space.mub_label(j, y), n, t};
}

namespace {
void check_label(const StarSpace& s, int label) {
  if (label < 0 || label >= s.label_count())
    throw Error(ErrorKind::InvalidGenerator, "label index " + std::to_string(label) + " out of range");
}
}  // namespace

VElement make_generator(const SpacePtr& space, const GeneratorSpec& spec) {
  return std::visit(
      [&](const auto& g) -> VElement {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, BasisProj>) {
          check_label(*space, g.label);
          return VElement::label(space, g.label);
        } else if constexpr (std::is_same_v<G, BasisProjPerp>) {
          check_label(*space, g.label);
          return VElement::label_perp(space, g.label);
        } else {
          check_label(*space, g.a);
          check_label(*space, g.b);
          if (g.sign != 1 && g.sign != -1) throw Error(ErrorKind::InvalidGenerator, "sign must be +1 or -1");
          if (space->labels_conflict(g.a, g.b))
            throw Error(ErrorKind::InvalidGenerator,
                        space->kind() == SpaceKind::Sic ? "cross generator needs i != j"
                                                        : "cross generator needs distinct bases x != y");
          if (g.n < 1) throw Error(ErrorKind::InvalidParameter, "generator index n must be >= 1");
          if (!(g.t > 0.0) || !std::isfinite(g.t))
            throw Error(ErrorKind::InvalidParameter, "t_n must be positive");
          const RVector& e = space->unit_coeffs();
          const RVector& pa = space->label_coeffs(g.a);
          const RVector& pb = space->label_coeffs(g.b);
          RVector c = g.sign * (pa - space->constant() * e) + (1.0 / g.n) * pb + g.t * (e - pb);
          return VElement(space, std::move(c));
        }
      },
      spec);
}

std::string describe(const StarSpace& space, const GeneratorSpec& spec) {
  return std::visit(
      [&](const auto& g) -> std::string {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, BasisProj>) {
          return space.label_name(g.label);
        } else if constexpr (std::is_same_v<G, BasisProjPerp>) {
          return space.label_name(g.label) + "^perp";
        } else {
          std::ostringstream os;
          os << (space.kind() == SpaceKind::Sic ? "x" : "y") << (g.sign > 0 ? "+" : "-") << "["
             << space.label_name(g.a) << "," << space.label_name(g.b) << ",n=" << g.n << "]";
          return os.str();
        }
      },
      spec);
}

}  // namespace opsys
