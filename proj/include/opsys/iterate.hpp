#pragma once

// The inductive construction D(0) -> D(1) -> ...: projection stages C_n(p_j)
// alternate with d-minimalisation, each stage an oracle composed over the
// previous one. A ledger of Inside certificates is carried forward and
// re-certified at every stage.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "opsys/cone.hpp"
#include "opsys/projection.hpp"

namespace opsys {

enum class StepKind { Base, Projection, DMin };
const char* to_string(StepKind k);

struct Step {
  StepKind kind = StepKind::Base;
  int label = -1;  // Projection: 0-based label of p_j
};

/// k = 2m -> Projection onto label (m mod label_count); odd k -> DMin.
Step step_schedule(int k, const StarSpace& space);

/// x in C_n(p) of the previous stage, through cnp_member at level 2n.
class ProjectionStageOracle final : public MembershipOracle {
 public:
  /// Checks 0 <= p <= e against `prev` once.
  ProjectionStageOracle(OraclePtr prev, int label, CnpOptions opts = {});

  const SpacePtr& space() const override { return prev_->space(); }
  std::string name() const override;
  MembershipResult member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs = {}) const override;
  bool validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                const MembershipResult& r) const override;
  int max_level() const override { return prev_->max_level() / 2; }

  const VElement& projection() const { return p_; }
  const OraclePtr& previous() const { return prev_; }

 private:
  OraclePtr prev_;
  int label_;
  VElement p_;
  CnpOptions opts_;
};

/// (C_n)^{d-min} of the previous stage. Levels <= d are unchanged. Above d,
/// Inside comes from the previous stage at the same level and Outside from a
/// compression to level d that the previous stage refutes.
class DMinStageOracle final : public MembershipOracle {
 public:
  DMinStageOracle(OraclePtr prev, int d, SearchBudget quick = quick_budget());

  const SpacePtr& space() const override { return prev_->space(); }
  std::string name() const override { return "dmin"; }
  MembershipResult member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs = {}) const override;
  bool validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                const MembershipResult& r) const override;
  int max_level() const override;

  const OraclePtr& previous() const { return prev_; }
  static SearchBudget quick_budget();

 private:
  OraclePtr prev_;
  int d_;
  SearchBudget quick_;
};

/// Remembers verdicts of an underlying oracle, keyed on the exact query.
class MemoOracle final : public MembershipOracle {
 public:
  explicit MemoOracle(OraclePtr inner) : inner_(std::move(inner)) {}

  const SpacePtr& space() const override { return inner_->space(); }
  std::string name() const override { return inner_->name(); }
  MembershipResult member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs = {}) const override;
  bool validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                const MembershipResult& r) const override {
    return inner_->validate(x, eps, dirs, r);
  }
  int max_level() const override { return inner_->max_level(); }

  const OraclePtr& inner() const { return inner_; }
  std::size_t hits() const;

 private:
  OraclePtr inner_;
  mutable std::mutex mu_;
  mutable std::map<std::string, MembershipResult> memo_;
  mutable std::size_t hits_ = 0;
};

// Reports -------------------------------------------------------------------------

struct LedgerEntry {
  std::string name;
  int stage = 0;        // stage that first certified it
  HermLevel x;
  double eps = 0.0;
  MembershipResult result;  // latest certificate
  std::vector<std::pair<int, double>> history;  // (stage, eps) of every certificate
};

struct RelationSpot {
  int label_p = 0;
  int label_x = 0;
  Holds holds = Holds::Unknown;
  int inside = 0;
  int outside = 0;
};

struct StageReport {
  int index = 0;
  Step step;
  bool lineality_found = false;
  int probes = 0;
  double best_margin = 0.0;
  std::optional<HermLevel> lineality_direction;
  int ledger_size = 0;
  int recertified = 0;
  int admitted = 0;  // candidates first certified at this stage
  int nesting_failures = 0;
  std::vector<std::string> nesting_failed;
  std::vector<RelationSpot> relations;
  double seconds = 0.0;
};

struct IterationConfig {
  SpaceKind kind = SpaceKind::Sic;
  int d = 2;
  TSequence tseq = TSequence::affine(8.07, 1.0);
  int n_max = 5;
  int stages = 6;
  ProbeBudget probe = iteration_probe_budget();
  /// Relation spot checks per stage (pairs sampled with the seed).
  int relation_samples = 2;
  std::vector<double> schedule = default_eps_schedule();
  /// Generators appended to the initial cone (planted lineality tests).
  std::vector<VElement> extra_generators;
  std::uint64_t seed = 1;
  int threads = 1;

  static ProbeBudget iteration_probe_budget();
};

struct IterationReport {
  IterationConfig config;
  int stages_completed = 0;
  bool lineality_found = false;
  int lineality_stage = -1;
  std::optional<std::string> error;
  std::vector<StageReport> stages;
  /// Every element certified Inside, with its most recent certificate.
  std::vector<LedgerEntry> ledger;
  /// Candidates never certified Inside.
  std::vector<std::string> pending;
  /// Stage 0 is the initial cone; stage k the oracle after k steps.
  std::vector<OraclePtr> oracles;
  ConePtr cone;
};

IterationReport run_iteration(const IterationConfig& config);

/// Inside if some stage (scanned from 0) certifies x Inside at eps; Outside
/// if the final stage certifies it Outside; Unknown otherwise.
MembershipResult limit_member(const IterationReport& report, const HermLevel& x, double eps);

}  // namespace opsys
