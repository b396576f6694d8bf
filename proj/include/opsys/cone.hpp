#pragma once

// Generator-described cones over a StarSpace: Gram inner product, t-threshold
// bounds, t-sequences, the initial cone, membership oracles with checkable
// certificates, and properness probing.

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opsys/numerics.hpp"
#include "opsys/space.hpp"

namespace opsys {

// Inner product ---------------------------------------------------------------

struct Gram {
  SpacePtr space;
  RMatrix matrix;  // dim x dim, coordinates of the basis
  int rank = 0;

  double inner(const RVector& a, const RVector& b) const { return a.dot(matrix * b); }
  double inner(const VElement& a, const VElement& b) const { return inner(a.coeffs(), b.coeffs()); }
};

Gram gram_matrix(const SpacePtr& space);
/// Label-level table <p_a, p_b> (SIC: d^2 x d^2, MUB: d(d+1) x d(d+1)).
RMatrix label_inner_products(const StarSpace& space);

// Thresholds -----------------------------------------------------------------

struct Thresholds {
  int d = 0;
  double lambda = 0.0;
  double beta = 0.0;
  double alpha_c = 0.0;
  double gamma = 0.0;
  double bound1 = 0.0;
  double bound2 = 0.0;
  double bound3 = 0.0;
  double t_star = 0.0;
};

Thresholds t_thresholds(int d);

// t-sequences -----------------------------------------------------------------

class TSequence {
 public:
  enum class Rule { Affine, Geometric, Explicit };

  static TSequence affine(double t0, double slope);
  static TSequence geometric(double t0, double ratio);
  static TSequence explicit_list(std::vector<double> values);

  /// t_n for n >= 1.
  double operator()(int n) const;
  Rule rule() const { return rule_; }
  const std::vector<double>& params() const { return params_; }
  std::string rule_name() const;
  /// Throws unless t_1..t_count is positive and strictly increasing.
  void validate(int count) const;

 private:
  Rule rule_ = Rule::Affine;
  std::vector<double> params_;
};

// Cones ------------------------------------------------------------------------

class GeneratorCone {
 public:
  GeneratorCone(SpacePtr space, std::vector<VElement> generators, std::vector<std::string> names, int n_max,
                std::optional<TSequence> tseq);

  const SpacePtr& space() const { return space_; }
  const std::vector<VElement>& generators() const { return generators_; }
  const std::vector<std::string>& names() const { return names_; }
  int size() const { return static_cast<int>(generators_.size()); }
  /// dim x g coefficient matrix, one generator per column.
  const RMatrix& matrix() const { return matrix_; }
  int n_max() const { return n_max_; }
  const std::optional<TSequence>& tseq() const { return tseq_; }
  HermLevel archimedean_unit(int n) const { return HermLevel::unit(space_, n); }

  /// Same cone with extra generators appended (duplicates dropped).
  GeneratorCone with_extra(const std::vector<VElement>& extra, const std::vector<std::string>& names) const;

 private:
  SpacePtr space_;
  std::vector<VElement> generators_;
  std::vector<std::string> names_;
  RMatrix matrix_;
  int n_max_ = 1;
  std::optional<TSequence> tseq_;
};

using ConePtr = std::shared_ptr<const GeneratorCone>;

/// Generator specifications of the initial cone, in construction order.
std::vector<GeneratorSpec> initial_cone_specs(const StarSpace& space, const TSequence& tseq, int n_max);
GeneratorCone build_initial_cone(const SpacePtr& space, const TSequence& tseq, int n_max);

// Verdicts and certificates ----------------------------------------------------

enum class Verdict { Inside, Outside, Unknown };
const char* to_string(Verdict v);

enum class CertKind { ConeCoeffs, OmaxBlocks, Separator, ProjectionLift, CompressionLift, ConcreteWitness };
const char* to_string(CertKind k);

struct Certificate;
using CertPtr = std::shared_ptr<const Certificate>;

/// ConeCoeffs: `weights` over generators. OmaxBlocks: `blocks` (one PSD block
/// per generator). Separator: `blocks` is the functional, one Hermitian block
/// per basis coordinate, acting as y -> sum_k Re tr(F_k Y_k).
/// ProjectionLift / CompressionLift: provenance wrappers around `inner`.
/// ConcreteWitness: `blocks` holds the relevant concrete matrix or vector.
/// In all Inside kinds `dir_weights` holds the multipliers of free directions.
struct Certificate {
  CertKind kind = CertKind::ConeCoeffs;
  RVector weights;
  std::vector<CMatrix> blocks;
  RVector dir_weights;
  CMatrix alpha;
  double t = 0.0;
  CertPtr inner;
  std::string note;
};

struct MembershipResult {
  Verdict verdict = Verdict::Unknown;
  double epsilon_used = 0.0;
  CertPtr certificate;
  /// Solver diagnostics. "residual" is an infeasibility measure, 0 when Inside.
  std::map<std::string, double> diagnostics;

  bool inside() const { return verdict == Verdict::Inside; }
  bool outside() const { return verdict == Verdict::Outside; }
  double residual() const;
  /// Signed slack: diagnostics["margin"] when the solver reports one,
  /// otherwise minus the residual. Lower means further outside.
  double margin() const;
};

/// A matrix ordering given through a membership oracle. `member` answers
/// whether some t_i >= 0 puts x + sum_i t_i dirs_i + eps I_n (x) e in the cone
/// at level n; Outside verdicts certify that no such t exists.
class MembershipOracle {
 public:
  virtual ~MembershipOracle() = default;
  virtual const SpacePtr& space() const = 0;
  virtual std::string name() const = 0;
  virtual MembershipResult member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs = {}) const = 0;
  /// Re-checks a result's certificate without trusting the solver.
  virtual bool validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                        const MembershipResult& r) const = 0;
  /// Largest level this oracle will attempt.
  virtual int max_level() const { return std::numeric_limits<int>::max(); }
};

using OraclePtr = std::shared_ptr<const MembershipOracle>;

// Separators --------------------------------------------------------------------

/// sum_k Re tr(F_k Y_k).
double pair(const std::vector<CMatrix>& f, const HermLevel& y);
/// Blocks sum_k g_k F_k for a level-1 element g.
CMatrix pair_matrix(const std::vector<CMatrix>& f, const VElement& g);
/// F_k -> alpha F_k alpha^*: lifts a level-m functional through x -> alpha^* x alpha.
std::vector<CMatrix> lift_functional(const std::vector<CMatrix>& f, const CMatrix& alpha);
std::vector<CMatrix> normalized(std::vector<CMatrix> f);

struct Tolerances {
  double recombine = 1e-7;   // relative to max(1, |target|)
  double psd = 1e-10;        // certificate blocks, relative to max(1, |Q|)
  double sep_positive = 1e-9;
  double sep_negative = 1e-7;
  /// Separators must keep the target negative along free directions up to
  /// this total weight: sum_i max(0, f(D_i)) * dir_horizon <= -f(target).
  double dir_horizon = 1073741824.0;
};

/// Checks that a normalised functional F is >= -tol on every generator lifted
/// with PSD weights and <= -tol' on the target, and that the target stays
/// negative along the dirs up to tol.dir_horizon.
bool separator_valid(const GeneratorCone& cone, const std::vector<CMatrix>& f, const HermLevel& target,
                     const std::vector<HermLevel>& dirs, const Tolerances& tol = {});

// Oracles over a generator cone -------------------------------------------------

enum class OmaxSolver { InteriorPoint, Dykstra };

struct ConeOracleOptions {
  double nnls_tol = 1e-13;
  OmaxSolver solver = OmaxSolver::InteriorPoint;
  MarginOptions margin;
  FeasOptions feas;
  Tolerances tol;
  /// Candidate compressions tried for Outside at levels > 1.
  int max_compressions = 48;
  int refine_rounds = 3;
};

/// Level 1: nonnegative least squares over the generators. Level n > 1: the
/// maximal ordering generated by the level-1 cone, decided through PSD
/// feasibility, with compression and dual separators for Outside.
class ConeOracle final : public MembershipOracle {
 public:
  explicit ConeOracle(ConePtr cone, ConeOracleOptions opts = {});

  const SpacePtr& space() const override { return cone_->space(); }
  std::string name() const override { return "cone"; }
  MembershipResult member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs = {}) const override;
  bool validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                const MembershipResult& r) const override;

  const GeneratorCone& cone() const { return *cone_; }
  const ConePtr& cone_ptr() const { return cone_; }
  const ConeOracleOptions& options() const { return opts_; }

  MembershipResult lp(const VElement& target, const std::vector<VElement>& dirs, double eps) const;
  MembershipResult omax(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs) const;

 private:
  std::optional<MembershipResult> compression_refute(const HermLevel& target, const std::vector<HermLevel>& dirs,
                                                     const std::vector<std::vector<CMatrix>>& hints) const;
  std::optional<MembershipResult> omax_interior(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                                                const AffineSystem& sys, std::vector<std::vector<CMatrix>>& hints) const;
  std::optional<MembershipResult> omax_dykstra(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                                               const AffineSystem& sys, std::vector<std::vector<CMatrix>>& hints) const;
  /// Pushes a functional into the dual cone along the unit's Gram representer.
  std::vector<CMatrix> repair(std::vector<CMatrix> f, int n) const;

  ConePtr cone_;
  ConeOracleOptions opts_;
  Gram gram_;
  RVector unit_weights_;  // e as a nonnegative generator combination; empty if none
};

MembershipResult lp_member(const GeneratorCone& cone, const VElement& y, double eps);
MembershipResult omax_member(const GeneratorCone& cone, const HermLevel& x, double eps);

// Archimedean closure ------------------------------------------------------------

std::vector<double> default_eps_schedule();

/// Smallest-first scan: Inside at the smallest eps that certifies; a validated
/// Outside at any eps is returned immediately.
MembershipResult closure_member(const MembershipOracle& oracle, const HermLevel& x,
                                const std::vector<double>& schedule = default_eps_schedule(),
                                const std::vector<HermLevel>& dirs = {});

// Properness -----------------------------------------------------------------------

struct ProbeBudget {
  int directions = 2000;  // random directions after the basis sweep
  bool basis = true;
  int ascent_starts = 4;
  int ascent_steps = 200;
  double eps = 1e-6;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct ProbeResult {
  bool lineality_found = false;
  std::optional<HermLevel> direction;  // unit norm
  MembershipResult plus;
  MembershipResult minus;
  int probes = 0;
  double best_margin = -std::numeric_limits<double>::infinity();
};

using MemberFn = std::function<MembershipResult(const HermLevel&, double)>;

ProbeResult properness_probe(const MemberFn& member, const SpacePtr& space, int level, const ProbeBudget& budget);

// Utilities -------------------------------------------------------------------------

/// splitmix64 step.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Unit-norm random Hermitian stack at level n (real when n = 1).
HermLevel random_direction(const SpacePtr& space, int n, std::uint64_t seed);

}  // namespace opsys
