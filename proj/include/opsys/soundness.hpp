#pragma once

// Replays certified elements of an iteration through the concrete map pi.

#include <string>
#include <vector>

#include "opsys/iterate.hpp"
#include "opsys/quantum.hpp"

namespace opsys {

struct SoundnessEntry {
  std::string name;
  int stage = 0;
  double eps = 0.0;      // smallest eps any stage certified it at
  double min_eig = 0.0;  // of pi(x) + eps I
  double bound = 0.0;    // -1e-6 (1 + |x|)
  bool passed = true;
};

struct SoundnessReport {
  bool passed = true;
  int violations = 0;
  std::vector<SoundnessEntry> entries;
  std::vector<std::string> warnings;
};

/// Every ledger element x certified at eps must satisfy
/// lambda_min(pi(x) + eps I) >= -1e-6 (1 + |x|).
SoundnessReport soundness_check(const std::vector<LedgerEntry>& ledger, const QuantumInstance& inst);
SoundnessReport soundness_check(const IterationReport& report, const QuantumInstance& inst);

}  // namespace opsys
