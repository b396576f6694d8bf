#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "opsys/iterate.hpp"
#include "opsys/soundness.hpp"

using namespace opsys;

namespace {

IterationConfig short_run(int stages) {
  IterationConfig c;
  c.stages = stages;
  c.seed = 7;
  return c;
}

// Independent check: eigenvalues of pi(x) + eps I through Eigen directly.
double pi_min_eig(const QuantumInstance& inst, const HermLevel& x, double eps) {
  const int n = x.level();
  const int d = inst.d;
  CMatrix m = CMatrix::Zero(n * d, n * d);
  for (int k = 0; k < x.dim(); ++k) {
    const CMatrix& a = x.block(k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m.block(i * d, j * d, d, d) += a(i, j) * inst.projections[k];
  }
  m += eps * CMatrix::Identity(n * d, n * d);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  return es.eigenvalues()(0);
}

}  // namespace

TEST_CASE("step schedule") {
  const auto sic = StarSpace::sic(2);
  CHECK(step_schedule(0, *sic).kind == StepKind::Projection);
  CHECK(step_schedule(0, *sic).label == 0);
  CHECK(step_schedule(1, *sic).kind == StepKind::DMin);
  CHECK(step_schedule(2, *sic).label == 1);
  CHECK(step_schedule(6, *sic).label == 3);
  CHECK(step_schedule(8, *sic).kind == StepKind::Projection);
  CHECK(step_schedule(8, *sic).label == 0);
  const auto mub = StarSpace::mub(2);
  CHECK(step_schedule(10, *mub).label == 5);
  CHECK(step_schedule(12, *mub).label == 0);
  CHECK_THROWS_AS((void)step_schedule(-1, *sic), Error);
}

TEST_CASE("stages must be positive") {
  CHECK_THROWS_AS((void)run_iteration(short_run(0)), Error);
}

TEST_CASE("d-min stage over the concrete model") {
  const auto space = StarSpace::sic(2);
  const auto inst = sic_search(2);
  auto conc = std::make_shared<ConcreteOracle>(space, inst);
  const DMinStageOracle dm(conc, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  int outside = 0;
  for (int c = 0; c < 8; ++c) {
    // Level 3 elements; diagonal so the axis compressions see every violation.
    std::vector<CMatrix> blocks;
    for (int k = 0; k < space->dim(); ++k) {
      CMatrix b = CMatrix::Zero(3, 3);
      for (int i = 0; i < 3; ++i) b(i, i) = 1.0 + 0.3 * g(rng);
      blocks.push_back(b);
    }
    if (c % 2 == 1) blocks[0](c % 3, c % 3) = -4.0;
    const HermLevel x(space, blocks);
    const bool psd = pi_min_eig(inst, x, 0.0) >= 0.0;
    const auto r = dm.member(x, 1e-6);
    CAPTURE(c);
    CHECK(r.verdict == (psd ? Verdict::Inside : Verdict::Outside));
    CHECK(dm.validate(x, 1e-6, {}, r));
    outside += r.outside();
  }
  CHECK(outside >= 1);
  // Levels <= d are passed through unchanged.
  const HermLevel u = HermLevel::unit(space, 2);
  CHECK(dm.member(u, 1e-6).verdict == conc->member(u, 1e-6).verdict);
  CHECK(dm.member(-u, 1e-6).verdict == conc->member(-u, 1e-6).verdict);
}

TEST_CASE("d-min stage leaves levels up to d unchanged") {
  const auto space = StarSpace::sic(2);
  auto cone = std::make_shared<GeneratorCone>(build_initial_cone(space, TSequence::affine(8.07, 1.0), 3));
  auto base = std::make_shared<ConeOracle>(cone);
  auto proj = std::make_shared<ProjectionStageOracle>(base, 0);
  const DMinStageOracle dm(proj, 2);
  for (int n : {1, 2})
    for (std::uint64_t s = 1; s <= 3; ++s) {
      const HermLevel y = random_direction(space, n, s) + HermLevel::unit(space, n) * 0.6;
      CAPTURE(n);
      CAPTURE(s);
      CHECK(dm.member(y, 1e-4).verdict == proj->member(y, 1e-4).verdict);
    }
}

TEST_CASE("projection stage rejects non-projections") {
  const auto space = StarSpace::sic(2);
  auto cone = std::make_shared<GeneratorCone>(build_initial_cone(space, TSequence::affine(8.07, 1.0), 3));
  auto base = std::make_shared<ConeOracle>(cone);
  const ProjectionStageOracle ps(base, 1);
  CHECK(ps.max_level() == std::numeric_limits<int>::max() / 2);
  CHECK(ps.member(HermLevel::unit(space, 1), 1e-6).inside());
  CHECK(ps.member(-HermLevel::unit(space, 1), 1e-6).outside());
}

TEST_CASE("short iteration is nested, proper and sound") {
  const auto rep = run_iteration(short_run(2));
  REQUIRE_FALSE(rep.error);
  CHECK(rep.stages_completed == 2);
  CHECK_FALSE(rep.lineality_found);
  REQUIRE(rep.stages.size() == 3);
  CHECK(rep.stages[1].step.kind == StepKind::Projection);
  CHECK(rep.stages[2].step.kind == StepKind::DMin);
  for (const auto& st : rep.stages) {
    CHECK_FALSE(st.lineality_found);
    CHECK(st.nesting_failures == 0);
  }
  CHECK(rep.ledger.size() >= 13);
  for (const auto& ent : rep.ledger) CHECK(ent.history.back().first == 2);

  const auto inst = sic_search(2);
  const auto sr = soundness_check(rep, inst);
  CHECK(sr.passed);
  CHECK(sr.violations == 0);
  CHECK(sr.entries.size() == rep.ledger.size());
  for (std::size_t i = 0; i < rep.ledger.size(); ++i)
    CHECK(pi_min_eig(inst, rep.ledger[i].x, sr.entries[i].eps) >= -1e-6 * (1 + rep.ledger[i].x.norm()));

  // Limits: a generator is in from stage 0, -e is out at the final stage.
  const auto g = limit_member(rep, HermLevel::from_element(rep.cone->generators().back()), 1e-6);
  CHECK(g.inside());
  CHECK(g.diagnostics.at("stage") == 0.0);
  const auto m = limit_member(rep, -HermLevel::unit(rep.cone->space(), 1), 1e-6);
  CHECK(m.outside());

  // Same config, same verdicts.
  const auto again = run_iteration(short_run(2));
  REQUIRE(again.ledger.size() == rep.ledger.size());
  for (std::size_t i = 0; i < rep.ledger.size(); ++i) {
    CHECK(again.ledger[i].name == rep.ledger[i].name);
    CHECK(again.ledger[i].history == rep.ledger[i].history);
  }
  for (std::size_t s = 0; s < rep.stages.size(); ++s) {
    CHECK(again.stages[s].best_margin == rep.stages[s].best_margin);
    CHECK(again.stages[s].relations.size() == rep.stages[s].relations.size());
  }
}

TEST_CASE("soundness flags a planted bad entry") {
  const auto space = StarSpace::sic(2);
  const auto inst = sic_search(2);
  std::vector<LedgerEntry> ledger;
  ledger.push_back(LedgerEntry{"e", 0, HermLevel::unit(space, 1), 1e-6, {}, {{0, 1e-6}}});
  ledger.push_back(LedgerEntry{"bad", 1, -HermLevel::unit(space, 1), 1e-6, {}, {{1, 1e-6}}});
  const auto sr = soundness_check(ledger, inst);
  CHECK_FALSE(sr.passed);
  CHECK(sr.violations == 1);
  CHECK(sr.entries[0].passed);
  CHECK_FALSE(sr.entries[1].passed);

  const auto empty = soundness_check(std::vector<LedgerEntry>{}, inst);
  CHECK(empty.passed);
  CHECK(empty.warnings.size() == 1);

  CHECK_THROWS_AS((void)soundness_check(ledger, mub_generate(2)), Error);
}

TEST_CASE("planted lineality stops the iteration") {
  IterationConfig c = short_run(2);
  const auto space = StarSpace::sic(2);
  const VElement y0 = random_direction(space, 1, 77).to_element();
  c.extra_generators = {y0, -y0};
  c.probe.directions = 50;
  c.probe.ascent_starts = 4;
  c.probe.ascent_steps = 200;
  const auto rep = run_iteration(c);
  CHECK(rep.lineality_found);
  CHECK(rep.lineality_stage <= 1);
  REQUIRE(rep.stages.back().lineality_direction);
  const RVector found = rep.stages.back().lineality_direction->to_element().coeffs();
  const double cosang = std::abs(found.dot(y0.coeffs())) / (found.norm() * y0.coeffs().norm());
  CHECK(cosang >= std::cos(1e-3));
}
