#pragma once

// Concrete quantum instances: SIC frames by frame-potential descent, MUBs for
// prime d, verification, and the map pi sending abstract labels to projections.

#include <cstdint>
#include <string>
#include <vector>

#include "opsys/cone.hpp"

namespace opsys {

/// SIC: d^2 unit vectors. MUB: d+1 bases, vectors listed basis-major so that
/// vector (x-1)*d + (i-1) is phi_i^x. `projections` follow the same order.
struct QuantumInstance {
  SpaceKind kind = SpaceKind::Sic;
  int d = 0;
  std::vector<CVector> vectors;
  std::vector<CMatrix> projections;
  double overlap_error = 0.0;
  std::uint64_t seed = 0;

  /// Rebuilds projections and overlap_error from `vectors`.
  void refresh();
};

class SearchFailed : public Error {
 public:
  SearchFailed(QuantumInstance best, const std::string& what)
      : Error(ErrorKind::SearchFailed, what), best_(std::move(best)) {}
  const QuantumInstance& best() const { return best_; }

 private:
  QuantumInstance best_;
};

struct SicSearchOptions {
  int restarts = 20;
  int max_iters = 20000;
  double step = 0.05;
  /// Overlap error below which descent hands over to a Levenberg-Marquardt
  /// polish of the overlap equations.
  double polish_from = 1e-3;
  double threshold = 1e-6;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Off-diagonal frame potential sum_{a != b} |<phi_a, phi_b>|^4.
double frame_potential(const std::vector<CVector>& vectors);

QuantumInstance sic_search(int d, const SicSearchOptions& opts = {});
QuantumInstance mub_generate(int d);
bool is_prime(int d);

struct VerificationReport {
  bool passed = true;
  std::vector<std::pair<std::string, double>> checks;  // name, worst deviation
  std::vector<std::string> failures;
};

VerificationReport verify_instance(const QuantumInstance& inst, double tol);

/// Images of the space's basis coordinates: SIC p_k -> P_k; MUB e -> I and
/// p_i^x -> P_i^x for i < d.
std::vector<CMatrix> pi_images(const StarSpace& space, const QuantumInstance& inst);
/// sum_k A_k (x) pi(coordinate k), an nd x nd matrix.
CMatrix pi_map(const std::vector<CMatrix>& images, const HermLevel& x);

struct PiGeneratorEntry {
  std::string name;
  double min_eig = 0.0;
  /// Cross generators only: smallest t making the image PSD, and the t used.
  double min_t = 0.0;
  double t_used = 0.0;
  bool cross = false;
};

struct PiReport {
  bool passed = true;
  double worst = 0.0;
  int violations = 0;
  std::vector<PiGeneratorEntry> entries;
};

PiReport pi_positivity_check(const StarSpace& space, const QuantumInstance& inst, const TSequence& tseq, int n_max,
                             double tol);

/// Membership in the concrete cone: x is positive when pi(x) is PSD.
/// Inside certificates carry the PSD matrix; Outside ones a PSD functional W
/// (blocks[0]) with its coordinate form F_k = tr_2((I (x) pi_k) W) following.
class ConcreteOracle final : public MembershipOracle {
 public:
  ConcreteOracle(SpacePtr space, std::vector<CMatrix> images, double tol = 1e-10);
  ConcreteOracle(SpacePtr space, const QuantumInstance& inst);

  const SpacePtr& space() const override { return space_; }
  std::string name() const override { return "concrete"; }
  MembershipResult member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs = {}) const override;
  bool validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                const MembershipResult& r) const override;

  const std::vector<CMatrix>& images() const { return images_; }
  CMatrix map(const HermLevel& x) const { return pi_map(images_, x); }
  /// F_k = tr_2((I (x) pi_k) W) for an nd x nd functional W.
  std::vector<CMatrix> coordinate_functional(const CMatrix& w, int n) const;

 private:
  SpacePtr space_;
  std::vector<CMatrix> images_;
  double tol_;
};

}  // namespace opsys
