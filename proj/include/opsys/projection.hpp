#pragma once

// Abstract projections and relations: the cone C_n(p), the concrete
// compression lemma, relation checks pxp = tau p, and d-minimal refutation
// through compressions to level d.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opsys/cone.hpp"

namespace opsys {

constexpr double kDefaultTMax = 1073741824.0;  // 2^30

// Compression lemma -------------------------------------------------------------

struct LemmaVerdict {
  bool witness = false;
  double t = 0.0;
};

/// Smallest power of two t in [2^-20, t_max] with T + eps P + t P^perp >= -1e-10.
LemmaVerdict lemma_compression_witness(const CMatrix& p, const CMatrix& t, double eps, double t_max = kDefaultTMax);
/// Smallest eigenvalue of P T P restricted to range(P) (+inf when P = 0).
double compressed_min_eig(const CMatrix& p, const CMatrix& t);

// C_n(p) -----------------------------------------------------------------------------

/// How the doubled index is laid out: Block puts the two copies of x in
/// separate n x n blocks, Interleaved uses x (x) [[1,1],[1,1]].
enum class TensorLayout { Block, Interleaved };

struct CnpOptions {
  double t_max = kDefaultTMax;
  TensorLayout layout = TensorLayout::Block;
  bool check_precondition = true;
};

/// [[x, x], [x, x]] in the chosen layout.
HermLevel cnp_lift(const HermLevel& x, TensorLayout layout = TensorLayout::Block);
/// diag(I_n (x) p^perp, I_n (x) p) in the chosen layout.
HermLevel cnp_padding(const VElement& p, int n, TensorLayout layout = TensorLayout::Block);

/// Throws Precondition when the oracle certifies p or e - p Outside at level 1.
void check_projection_bounds(const MembershipOracle& oracle, const VElement& p);

/// x + sum_i t_i dirs_i in C_n(p) at eps: some t >= 0 with
/// [[x,x],[x,x]] + eps diag(I (x) p, I (x) p^perp) + t diag(I (x) p^perp, I (x) p)
/// in the oracle's level-2n cone. The padding enters the level-2n query as a
/// free direction next to the lifted dirs, so Outside separators are t-free.
/// Certificates are ProjectionLift wrappers: `t` is the padding weight in the
/// form above and `inner` the level-2n certificate.
MembershipResult cnp_member(const MembershipOracle& oracle_2n, const HermLevel& x, const VElement& p, double eps,
                            const CnpOptions& opts = {}, const std::vector<HermLevel>& dirs = {});
bool cnp_validate(const MembershipOracle& oracle_2n, const HermLevel& x, const VElement& p, double eps,
                  const CnpOptions& opts, const std::vector<HermLevel>& dirs, const MembershipResult& r);

// Relations ------------------------------------------------------------------------------

enum class Holds { Yes, No, Unknown };
const char* to_string(Holds h);

struct RelationEntry {
  double eps = 0.0;
  int sign = 1;
  Verdict verdict = Verdict::Unknown;
  double t = 0.0;  // witness when Inside
  MembershipResult result;
};

struct RelationVerdict {
  Holds holds = Holds::Unknown;
  std::vector<RelationEntry> entries;
  std::vector<std::pair<double, double>> witnesses;  // (eps, t)
};

/// p (x - tau e) p = 0 abstractly: for each eps and sign s, some t with
/// s(x - tau e) + eps p + t p^perp Inside at level 1.
RelationVerdict relation_check(const MembershipOracle& oracle, const VElement& p, const VElement& x, double tau,
                               const std::vector<double>& schedule = default_eps_schedule(),
                               double t_max = kDefaultTMax);

// d-minimal refutation ---------------------------------------------------------------------

struct SearchBudget {
  int restarts = 32;
  int steps = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  bool axis = true;
  /// Seed the search with compressions read off a level-n separator when
  /// the oracle reaches level n.
  bool hints = true;
};

struct CompressionCert {
  CMatrix alpha;             // n x d, operator norm 1
  HermLevel compressed;      // alpha^* x alpha
  MembershipResult violation;  // Outside at level d for the compressed target
};

struct DminOutcome {
  std::optional<CompressionCert> refutation;
  int tested = 0;
  bool refuted() const { return refutation.has_value(); }
};

/// The level-d query answering whether alpha^*(x + sum t_i D_i + eps I (x) e) alpha
/// is in the cone: returns (target, dirs) such that oracle.member(target, eps, dirs)
/// decides exactly that.
std::pair<HermLevel, std::vector<HermLevel>> compressed_query(const HermLevel& x, double eps, const CMatrix& alpha,
                                                              const std::vector<HermLevel>& dirs);

/// Tests one compression (rescaled to operator norm 1); a validated Outside at
/// level d is returned as a refutation.
std::optional<CompressionCert> try_compression(const MembershipOracle& oracle_d, const HermLevel& x, double eps,
                                               CMatrix alpha, const std::vector<HermLevel>& dirs);

/// Compressions read off a level-n Outside result: the top-d eigenvectors of
/// the unit's pairing matrix sum_k e_k F_k. Empty when r carries no functional.
std::vector<CMatrix> separator_compressions(const MembershipResult& r, const HermLevel& x, int d);

/// Every n-choose-d coordinate compression (at most `cap`), or [I_n, 0] when n <= d.
std::vector<CMatrix> axis_compressions(int n, int d, int cap = 256);

bool validate_compression(const MembershipOracle& oracle_d, const HermLevel& x, double eps,
                          const std::vector<HermLevel>& dirs, const CompressionCert& c);

DminOutcome dmin_refute(const MembershipOracle& oracle_d, const HermLevel& x, double eps, int d,
                        const SearchBudget& budget = {}, const std::vector<HermLevel>& dirs = {});

/// `samples` seeded random compressions plus every axis-aligned one.
DminOutcome dmin_sampled_certify(const MembershipOracle& oracle_d, const HermLevel& x, double eps, int d, int samples,
                                 std::uint64_t seed, const std::vector<HermLevel>& dirs = {});

}  // namespace opsys
