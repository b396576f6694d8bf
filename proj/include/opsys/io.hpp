#pragma once

// JSON forms of spaces, elements, certificates, instances and reports.
// Field order is fixed so equal values serialise to equal bytes.

#include <json.hpp>

#include "opsys/iterate.hpp"
#include "opsys/projection.hpp"
#include "opsys/quantum.hpp"
#include "opsys/soundness.hpp"

namespace opsys {

using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;
extern const char* const kToolVersion;

Json to_json(const StarSpace& space);
SpacePtr space_from_json(const Json& j);

Json to_json(const CMatrix& m);  // rows of [re, im] pairs
CMatrix cmatrix_from_json(const Json& j);
Json to_json(const RVector& v);
Json to_json(const RMatrix& m);

Json to_json(const VElement& v);
Json to_json(const HermLevel& x);
HermLevel herm_level_from_json(const Json& j);

Json to_json(const TSequence& t);
TSequence tseq_from_json(const Json& j);

Json to_json(const Gram& g);
Json to_json(const Thresholds& t);
Json to_json(const GeneratorCone& c);

Json to_json(const Certificate& c);
Json to_json(const MembershipResult& r);
Json to_json(const ProbeResult& r);
Json to_json(const RelationVerdict& r);
Json to_json(const DminOutcome& r);

Json to_json(const QuantumInstance& inst);
QuantumInstance instance_from_json(const Json& j);
Json to_json(const VerificationReport& r);
Json to_json(const PiReport& r);

Json to_json(const IterationConfig& c);
/// Verdict fields only; per-stage seconds go under "timing".
Json to_json(const IterationReport& r);
std::vector<LedgerEntry> ledger_from_json(const Json& report);
Json to_json(const SoundnessReport& r);

/// {"schema", "tool", "version", "command", "config", "seed", "result", "wall_time_s"}.
Json envelope(const std::string& command, Json config, std::uint64_t seed, Json result, double wall_time_s);

}  // namespace opsys
