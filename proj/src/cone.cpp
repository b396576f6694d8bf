#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "opsys/cone.hpp"

namespace opsys {

// Gram -------------------------------------------------------------------------

RMatrix label_inner_products(const StarSpace& space) {
  const int d = space.d();
  const int labels = space.label_count();
  RMatrix l(labels, labels);
  for (int a = 0; a < labels; ++a)
    for (int b = 0; b < labels; ++b) {
      if (space.kind() == SpaceKind::Sic) {
        l(a, b) = a == b ? 1.0 / d : space.constant() / d;
      } else if (a == b) {
        l(a, b) = 1.0 / d;
      } else if (space.mub_basis_of(a) == space.mub_basis_of(b)) {
        l(a, b) = 0.0;
      } else {
        l(a, b) = space.constant() / d;
      }
    }
  return l;
}

Gram gram_matrix(const SpacePtr& space) {
  const RMatrix l = label_inner_products(*space);
  // Express each coordinate basis vector as a combination of labels.
  RMatrix b = RMatrix::Zero(space->label_count(), space->dim());
  if (space->kind() == SpaceKind::Sic) {
    b.setIdentity();
  } else {
    const int d = space->d();
    for (int i = 1; i <= d; ++i) b(space->mub_label(i, 1), 0) = 1.0;  // e = sum_i p_i^1
    for (int x = 1; x <= d + 1; ++x)
      for (int i = 1; i <= d - 1; ++i) b(space->mub_label(i, x), 1 + (x - 1) * (d - 1) + (i - 1)) = 1.0;
  }
  Gram g;
  g.space = space;
  g.matrix = b.transpose() * l * b;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(g.matrix);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  g.rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) > 1e-9 * std::max(1.0, top)) ++g.rank;
  return g;
}

// Thresholds -------------------------------------------------------------------

Thresholds t_thresholds(int d) {
  if (d < 2) throw Error(ErrorKind::InvalidDimension, "thresholds need d >= 2");
  Thresholds t;
  t.d = d;
  const double dd = d;
  const double lam = 1.0 / (dd + 1.0);
  t.lambda = lam;
  t.beta = std::sqrt((lam * lam * dd - 2.0 * lam + 2.0) / dd);
  t.alpha_c = (dd - 2.0 + lam) / dd;
  t.gamma = std::sqrt(dd - 1.0) * t.beta / std::sqrt(dd);
  t.bound1 = std::sqrt(dd) * t.beta / (1.0 - lam);
  t.bound2 = std::sqrt(dd * dd - dd) * t.beta / (dd - 2.0 + lam);
  t.bound3 = (2.0 * t.gamma + std::sqrt(4.0 * t.gamma * t.gamma + 4.0 * t.alpha_c * t.beta * t.beta)) / (2.0 * t.alpha_c);
  t.t_star = std::max({t.bound1, t.bound2, t.bound3});
  return t;
}

// TSequence ---------------------------------------------------------------------

TSequence TSequence::affine(double t0, double slope) {
  if (!(t0 > 0.0) || !(slope > 0.0)) throw Error(ErrorKind::InvalidParameter, "affine t-sequence needs t0 > 0, slope > 0");
  TSequence s;
  s.rule_ = Rule::Affine;
  s.params_ = {t0, slope};
  return s;
}

TSequence TSequence::geometric(double t0, double ratio) {
  if (!(t0 > 0.0) || !(ratio > 1.0)) throw Error(ErrorKind::InvalidParameter, "geometric t-sequence needs t0 > 0, ratio > 1");
  TSequence s;
  s.rule_ = Rule::Geometric;
  s.params_ = {t0, ratio};
  return s;
}

TSequence TSequence::explicit_list(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidParameter, "explicit t-sequence is empty");
  TSequence s;
  s.rule_ = Rule::Explicit;
  s.params_ = std::move(values);
  s.validate(static_cast<int>(s.params_.size()));
  return s;
}

double TSequence::operator()(int n) const {
  if (n < 1) throw Error(ErrorKind::InvalidParameter, "t-sequence index starts at 1");
  switch (rule_) {
    case Rule::Affine: return params_[0] + params_[1] * (n - 1);
    case Rule::Geometric: return params_[0] * std::pow(params_[1], n - 1);
    case Rule::Explicit: {
      const int len = static_cast<int>(params_.size());
      if (n <= len) return params_[n - 1];
      const double last = params_.back();
      const double step = len >= 2 ? last - params_[len - 2] : last;
      return last + step * (n - len);
    }
  }
  return 0.0;
}

std::string TSequence::rule_name() const {
  switch (rule_) {
    case Rule::Affine: return "affine";
    case Rule::Geometric: return "geometric";
    case Rule::Explicit: return "explicit";
  }
  return "?";
}

void TSequence::validate(int count) const {
  double prev = 0.0;
  for (int n = 1; n <= count; ++n) {
    const double t = (*this)(n);
    if (!std::isfinite(t) || !(t > prev))
      throw Error(ErrorKind::InvalidParameter, "t-sequence must be positive and strictly increasing (fails at n=" +
                                                   std::to_string(n) + ")");
    prev = t;
  }
}

// Cones --------------------------------------------------------------------------

GeneratorCone::GeneratorCone(SpacePtr space, std::vector<VElement> generators, std::vector<std::string> names,
                             int n_max, std::optional<TSequence> tseq)
    : space_(std::move(space)), n_max_(n_max), tseq_(std::move(tseq)) {
  if (n_max_ < 1) throw Error(ErrorKind::InvalidParameter, "N_max must be >= 1");
  if (names.size() != generators.size()) throw Error(ErrorKind::InvalidInput, "generator names/elements mismatch");
  for (std::size_t i = 0; i < generators.size(); ++i) {
    const RVector& c = generators[i].coeffs();
    if (generators[i].dim() != space_->dim()) throw Error(ErrorKind::DimensionMismatch, "generator dimension");
    bool dup = false;
    for (const auto& g : generators_)
      if ((g.coeffs() - c).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, c.cwiseAbs().maxCoeff())) {
        dup = true;
        break;
      }
    if (dup) continue;
    generators_.push_back(generators[i]);
    names_.push_back(names[i]);
  }
  if (generators_.empty()) throw Error(ErrorKind::InvalidInput, "cone has no generators");
  matrix_.resize(space_->dim(), static_cast<Eigen::Index>(generators_.size()));
  for (std::size_t j = 0; j < generators_.size(); ++j) matrix_.col(static_cast<Eigen::Index>(j)) = generators_[j].coeffs();
}

GeneratorCone GeneratorCone::with_extra(const std::vector<VElement>& extra, const std::vector<std::string>& names) const {
  std::vector<VElement> g = generators_;
  std::vector<std::string> n = names_;
  g.insert(g.end(), extra.begin(), extra.end());
  n.insert(n.end(), names.begin(), names.end());
  return GeneratorCone(space_, std::move(g), std::move(n), n_max_, tseq_);
}

std::vector<GeneratorSpec> initial_cone_specs(const StarSpace& space, const TSequence& tseq, int n_max) {
  if (n_max < 1) throw Error(ErrorKind::InvalidParameter, "N_max must be >= 1");
  tseq.validate(n_max);
  std::vector<GeneratorSpec> specs;
  const int labels = space.label_count();
  for (int k = 0; k < labels; ++k) specs.push_back(BasisProj{k});
  if (space.kind() == SpaceKind::Sic)
    for (int k = 0; k < labels; ++k) specs.push_back(BasisProjPerp{k});
  for (int n = 1; n <= n_max; ++n) {
    const double t = tseq(n);
    for (int a = 0; a < labels; ++a)
      for (int b = 0; b < labels; ++b) {
        if (space.labels_conflict(a, b)) continue;
        specs.push_back(CrossGen{+1, a, b, n, t});
        specs.push_back(CrossGen{-1, a, b, n, t});
      }
  }
  return specs;
}

GeneratorCone build_initial_cone(const SpacePtr& space, const TSequence& tseq, int n_max) {
  const std::vector<GeneratorSpec> specs = initial_cone_specs(*space, tseq, n_max);
  std::vector<VElement> gens;
  std::vector<std::string> names;
  for (const auto& s : specs) {
    gens.push_back(make_generator(space, s));
    names.push_back(describe(*space, s));
  }
  return GeneratorCone(space, std::move(gens), std::move(names), n_max, tseq);
}

// Verdicts -------------------------------------------------------------------------

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Inside: return "inside";
    case Verdict::Outside: return "outside";
    case Verdict::Unknown: return "unknown";
  }
  return "?";
}

const char* to_string(CertKind k) {
  switch (k) {
    case CertKind::ConeCoeffs: return "cone-coeffs";
    case CertKind::OmaxBlocks: return "omax-blocks";
    case CertKind::Separator: return "separator";
    case CertKind::ProjectionLift: return "projection-lift";
    case CertKind::CompressionLift: return "compression-lift";
    case CertKind::ConcreteWitness: return "concrete-witness";
  }
  return "?";
}

double MembershipResult::residual() const {
  const auto it = diagnostics.find("residual");
  if (it != diagnostics.end()) return it->second;
  return verdict == Verdict::Inside ? 0.0 : std::numeric_limits<double>::infinity();
}

double MembershipResult::margin() const {
  const auto it = diagnostics.find("margin");
  if (it != diagnostics.end()) return it->second;
  const double r = residual();
  return std::isfinite(r) ? -r : -1e300;
}

// Functionals ---------------------------------------------------------------------

double pair(const std::vector<CMatrix>& f, const HermLevel& y) {
  if (static_cast<int>(f.size()) != y.dim()) throw Error(ErrorKind::DimensionMismatch, "functional length");
  double s = 0.0;
  for (int k = 0; k < y.dim(); ++k) {
    if (f[k].rows() != y.level()) throw Error(ErrorKind::DimensionMismatch, "functional level");
    s += (f[k].array() * y.block(k).transpose().array()).sum().real();
  }
  return s;
}

CMatrix pair_matrix(const std::vector<CMatrix>& f, const VElement& g) {
  CMatrix m = CMatrix::Zero(f.front().rows(), f.front().cols());
  for (int k = 0; k < g.dim(); ++k)
    if (g.coeffs()(k) != 0.0) m += g.coeffs()(k) * f[k];
  return hermitian_from_upper(m);
}

std::vector<CMatrix> lift_functional(const std::vector<CMatrix>& f, const CMatrix& alpha) {
  std::vector<CMatrix> out;
  out.reserve(f.size());
  for (const auto& fk : f) out.push_back(hermitian_from_upper(alpha * fk * alpha.adjoint()));
  return out;
}

std::vector<CMatrix> normalized(std::vector<CMatrix> f) {
  double s = 0.0;
  for (const auto& fk : f) s += fk.squaredNorm();
  s = std::sqrt(s);
  if (s > 0.0)
    for (auto& fk : f) fk /= s;
  return f;
}

bool separator_valid(const GeneratorCone& cone, const std::vector<CMatrix>& f_in, const HermLevel& target,
                     const std::vector<HermLevel>& dirs, const Tolerances& tol) {
  if (static_cast<int>(f_in.size()) != target.dim()) return false;
  for (const auto& fk : f_in)
    if (fk.rows() != target.level() || fk.cols() != target.level() || !fk.allFinite()) return false;
  const std::vector<CMatrix> f = normalized(f_in);
  const double ft = pair(f, target);
  if (ft > -tol.sep_negative) return false;
  double leak = 0.0;
  for (const auto& d : dirs) leak += std::max(0.0, pair(f, d));
  if (leak * tol.dir_horizon > -ft) return false;
  for (const auto& g : cone.generators()) {
    const CMatrix m = pair_matrix(f, g);
    if (min_eigenvalue(m) < -tol.sep_positive) return false;
  }
  return true;
}

// Closure -----------------------------------------------------------------------

std::vector<double> default_eps_schedule() { return {1e-6, 1e-4, 1e-2}; }

MembershipResult closure_member(const MembershipOracle& oracle, const HermLevel& x, const std::vector<double>& schedule,
                                const std::vector<HermLevel>& dirs) {
  std::vector<double> eps = schedule;
  std::sort(eps.begin(), eps.end());
  MembershipResult last;
  for (double e : eps) {
    MembershipResult r = oracle.member(x, e, dirs);
    if (r.verdict != Verdict::Unknown) return r;
    last = std::move(r);
  }
  last.verdict = Verdict::Unknown;
  return last;
}

// Randomness -----------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

HermLevel random_direction(const SpacePtr& space, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<CMatrix> blocks;
  for (int k = 0; k < space->dim(); ++k) {
    CMatrix b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) b(i, j) = i == j ? Complex(nd(rng), 0.0) : Complex(nd(rng), nd(rng)) / std::sqrt(2.0);
    blocks.push_back(hermitian_from_upper(b));
  }
  HermLevel h(space, std::move(blocks));
  return h * (1.0 / h.norm());
}

}  // namespace opsys
