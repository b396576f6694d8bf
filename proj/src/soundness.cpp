#include "opsys/soundness.hpp"

#include <algorithm>

namespace opsys {

SoundnessReport soundness_check(const std::vector<LedgerEntry>& ledger, const QuantumInstance& inst) {
  SoundnessReport rep;
  if (ledger.empty()) {
    rep.warnings.push_back("empty ledger: nothing to replay");
    return rep;
  }
  const SpacePtr& space = ledger.front().x.space();
  if (space->kind() != inst.kind || space->d() != inst.d)
    throw Error(ErrorKind::InvalidInput, "instance and ledger differ in kind or d");
  const std::vector<CMatrix> images = pi_images(*space, inst);
  for (const auto& ent : ledger) {
    if (!ent.x.space()->same_as(*space)) throw Error(ErrorKind::InvalidInput, "ledger mixes spaces");
    SoundnessEntry se;
    se.name = ent.name;
    se.stage = ent.stage;
    se.eps = ent.eps;
    for (const auto& h : ent.history) se.eps = std::min(se.eps, h.second);
    const CMatrix m = pi_map(images, ent.x);
    se.min_eig = min_eigenvalue(m + se.eps * CMatrix::Identity(m.rows(), m.cols()));
    se.bound = -1e-6 * (1.0 + ent.x.norm());
    se.passed = se.min_eig >= se.bound;
    if (!se.passed) {
      rep.passed = false;
      ++rep.violations;
    }
    rep.entries.push_back(std::move(se));
  }
  return rep;
}

SoundnessReport soundness_check(const IterationReport& report, const QuantumInstance& inst) {
  if (report.config.kind != inst.kind || report.config.d != inst.d)
    throw Error(ErrorKind::InvalidInput, "instance and iteration differ in kind or d");
  return soundness_check(report.ledger, inst);
}

}  // namespace opsys
