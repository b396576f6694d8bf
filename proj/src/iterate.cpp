#include "opsys/iterate.hpp"

#include <algorithm>
#include <chrono>
#include <random>

namespace opsys {

const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::Base: return "base";
    case StepKind::Projection: return "projection";
    case StepKind::DMin: return "dmin";
  }
  return "?";
}

Step step_schedule(int k, const StarSpace& space) {
  if (k < 0) throw Error(ErrorKind::InvalidParameter, "stage index must be >= 0");
  Step s;
  if (k % 2 == 1) {
    s.kind = StepKind::DMin;
    return s;
  }
  s.kind = StepKind::Projection;
  s.label = (k / 2) % space.label_count();
  return s;
}

// Projection stage ------------------------------------------------------------------

ProjectionStageOracle::ProjectionStageOracle(OraclePtr prev, int label, CnpOptions opts)
    : prev_(std::move(prev)),
      label_(label),
      p_(VElement::label(prev_->space(), label)),
      opts_(opts) {
  if (opts_.check_precondition) check_projection_bounds(*prev_, p_);
  opts_.check_precondition = false;
}

std::string ProjectionStageOracle::name() const { return "projection(" + space()->label_name(label_) + ")"; }

MembershipResult ProjectionStageOracle::member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs) const {
  if (x.level() > max_level()) {
    MembershipResult r;
    r.epsilon_used = eps;
    r.diagnostics["level_out_of_range"] = x.level();
    return r;
  }
  return cnp_member(*prev_, x, p_, eps, opts_, dirs);
}

bool ProjectionStageOracle::validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                                     const MembershipResult& r) const {
  return cnp_validate(*prev_, x, p_, eps, opts_, dirs, r);
}

// d-min stage -----------------------------------------------------------------------

SearchBudget DMinStageOracle::quick_budget() {
  SearchBudget b;
  b.restarts = 0;
  b.steps = 0;
  b.axis = true;
  b.hints = true;
  return b;
}

DMinStageOracle::DMinStageOracle(OraclePtr prev, int d, SearchBudget quick)
    : prev_(std::move(prev)), d_(d), quick_(quick) {
  if (d < 1) throw Error(ErrorKind::InvalidParameter, "d must be >= 1");
}

int DMinStageOracle::max_level() const {
  return prev_->max_level() >= d_ ? std::numeric_limits<int>::max() : prev_->max_level();
}

MembershipResult DMinStageOracle::member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs) const {
  const int n = x.level();
  if (n <= d_) return prev_->member(x, eps, dirs);

  MembershipResult r;
  r.epsilon_used = eps;
  std::vector<CMatrix> alphas;
  if (n <= prev_->max_level()) {
    r = prev_->member(x, eps, dirs);
    if (r.inside()) return r;
    if (quick_.hints) alphas = separator_compressions(r, x, d_);
  }
  if (quick_.axis)
    for (auto& a : axis_compressions(n, d_)) alphas.push_back(std::move(a));

  MembershipResult out;
  out.epsilon_used = eps;
  out.diagnostics = r.diagnostics;
  int tested = 0;
  auto accept = [&](CompressionCert c) {
    auto cert = std::make_shared<Certificate>();
    cert->kind = CertKind::CompressionLift;
    cert->alpha = c.alpha;
    cert->inner = c.violation.certificate;
    if (c.violation.certificate) {
      MembershipResult inner = c.violation;
      const Certificate& ic = *inner.certificate;
      std::vector<CMatrix> f;
      if (ic.kind == CertKind::Separator || ic.kind == CertKind::CompressionLift ||
          (ic.kind == CertKind::ProjectionLift && !ic.blocks.empty()))
        f = ic.blocks;
      else if (ic.kind == CertKind::ConcreteWitness && ic.blocks.size() > 1)
        f.assign(ic.blocks.begin() + 1, ic.blocks.end());
      if (!f.empty()) cert->blocks = lift_functional(f, c.alpha);
    }
    out.verdict = Verdict::Outside;
    out.certificate = cert;
    out.diagnostics["compressions_tried"] = tested;
    return out;
  };
  for (auto& a : alphas) {
    ++tested;
    if (auto c = try_compression(*prev_, x, eps, std::move(a), dirs)) return accept(std::move(*c));
  }
  if (quick_.restarts > 0) {
    SearchBudget b = quick_;
    b.axis = false;
    b.hints = false;
    DminOutcome o = dmin_refute(*prev_, x, eps, d_, b, dirs);
    tested += o.tested;
    if (o.refutation) return accept(std::move(*o.refutation));
  }
  out.diagnostics["compressions_tried"] = tested;
  return out;
}

bool DMinStageOracle::validate(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs,
                               const MembershipResult& r) const {
  if (x.level() <= d_ || r.inside()) return prev_->validate(x, eps, dirs, r);
  if (!r.outside() || !r.certificate || r.certificate->kind != CertKind::CompressionLift) return false;
  const Certificate& c = *r.certificate;
  if (!c.inner || c.alpha.rows() != x.level() || c.alpha.cols() != d_) return false;
  MembershipResult v;
  v.verdict = Verdict::Outside;
  v.epsilon_used = eps;
  v.certificate = c.inner;
  return validate_compression(*prev_, x, eps, dirs, CompressionCert{c.alpha, compress(x, c.alpha), v});
}

// Memo --------------------------------------------------------------------------------

namespace {

void append_bytes(std::string& key, const void* p, std::size_t n) { key.append(static_cast<const char*>(p), n); }

void append_level(std::string& key, const HermLevel& x) {
  const int n = x.level();
  append_bytes(key, &n, sizeof n);
  for (const auto& b : x.blocks()) append_bytes(key, b.data(), sizeof(Complex) * static_cast<std::size_t>(b.size()));
}

}  // namespace

MembershipResult MemoOracle::member(const HermLevel& x, double eps, const std::vector<HermLevel>& dirs) const {
  std::string key;
  append_bytes(key, &eps, sizeof eps);
  append_level(key, x);
  for (const auto& d : dirs) append_level(key, d);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) {
      ++hits_;
      return it->second;
    }
  }
  MembershipResult r = inner_->member(x, eps, dirs);
  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(std::move(key), r);
  return r;
}

std::size_t MemoOracle::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}

// Iteration -------------------------------------------------------------------------

ProbeBudget IterationConfig::iteration_probe_budget() {
  ProbeBudget b;
  b.directions = 8;
  b.basis = true;
  b.ascent_starts = 1;
  b.ascent_steps = 2;
  b.eps = 1e-6;
  return b;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Level-1 ledger seeds: e, each p_k and p_k^perp, and a seeded sample of the
// remaining generators.
std::vector<std::pair<std::string, HermLevel>> ledger_seeds(const GeneratorCone& cone, std::uint64_t seed) {
  const auto& space = cone.space();
  std::vector<std::pair<std::string, HermLevel>> out;
  out.emplace_back("e", HermLevel::unit(space, 1));
  for (int k = 0; k < space->label_count(); ++k) {
    out.emplace_back(space->label_name(k), HermLevel::from_element(VElement::label(space, k)));
    out.emplace_back(space->label_name(k) + "^perp", HermLevel::from_element(VElement::label_perp(space, k)));
  }
  std::vector<int> idx;
  for (int j = 0; j < cone.size(); ++j)
    if (cone.names()[j].rfind("x", 0) == 0 || cone.names()[j].rfind("y", 0) == 0) idx.push_back(j);
  std::mt19937_64 rng(derive_seed(seed, 0x1ed9e7));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<std::size_t>(idx.size(), 4));
  std::sort(idx.begin(), idx.end());
  for (int j : idx) out.emplace_back(cone.names()[j], HermLevel::from_element(cone.generators()[j]));
  return out;
}

// Elements outside the initial cone that later stages may admit: cross
// elements past the truncation n_max, and generators pushed down by e.
std::vector<std::pair<std::string, HermLevel>> ledger_candidates(const GeneratorCone& cone, const TSequence& tseq,
                                                                 int n_max, std::uint64_t seed) {
  const auto& space = cone.space();
  const VElement e = VElement::unit(space);
  const int labels = space->label_count();
  std::mt19937_64 rng(derive_seed(seed, 0xca9d));
  std::vector<std::pair<std::string, HermLevel>> out;
  for (int s = 0; s < 2; ++s) {
    const int a = static_cast<int>(rng() % static_cast<std::uint64_t>(labels));
    int b = a;
    while (space->labels_conflict(a, b)) b = static_cast<int>(rng() % static_cast<std::uint64_t>(labels));
    const int n = 2 * n_max;
    const double sign = s == 0 ? 1.0 : -1.0;
    const VElement x = (VElement::label(space, a) - e * space->constant()) * sign +
                       VElement::label(space, b) * (1.0 / n) + VElement::label_perp(space, b) * (10.0 * tseq(n_max));
    out.emplace_back(std::string(sign > 0 ? "+" : "-") + "[" + space->label_name(a) + "," + space->label_name(b) +
                         ",n=" + std::to_string(n) + "]",
                     HermLevel::from_element(x));
  }
  for (int s = 0; s < 2; ++s) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(cone.size()));
    out.emplace_back(cone.names()[j] + "-e/20", HermLevel::from_element(cone.generators()[j] - e * 0.05));
  }
  return out;
}

}  // namespace

IterationReport run_iteration(const IterationConfig& config) {
  if (config.stages < 1) throw Error(ErrorKind::InvalidParameter, "stages must be >= 1");
  if (config.schedule.empty()) throw Error(ErrorKind::InvalidParameter, "empty eps schedule");
  IterationReport rep;
  rep.config = config;
  const SpacePtr space = StarSpace::build(config.kind, config.d);
  config.tseq.validate(config.n_max);

  GeneratorCone cone = build_initial_cone(space, config.tseq, config.n_max);
  if (!config.extra_generators.empty()) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < config.extra_generators.size(); ++i) names.push_back("extra" + std::to_string(i + 1));
    cone = cone.with_extra(config.extra_generators, names);
  }
  rep.cone = std::make_shared<const GeneratorCone>(std::move(cone));
  rep.oracles.push_back(std::make_shared<MemoOracle>(std::make_shared<ConeOracle>(rep.cone)));

  ProbeBudget probe = config.probe;
  probe.threads = config.threads;

  // The same probe directions at every stage.
  probe.seed = derive_seed(config.seed, 0x9b0be);
  auto run_probe = [&](StageReport& st, const MembershipOracle& o, int stage) {
    const ProbeResult pr = properness_probe(
        [&o](const HermLevel& y, double eps) { return o.member(y, eps); }, space, 1, probe);
    st.lineality_found = pr.lineality_found;
    st.probes = pr.probes;
    st.best_margin = pr.best_margin;
    st.lineality_direction = pr.direction;
    if (pr.lineality_found) {
      rep.lineality_found = true;
      rep.lineality_stage = stage;
    }
  };

  auto candidates = ledger_candidates(*rep.cone, config.tseq, config.n_max, config.seed);
  auto admit = [&](StageReport& st, const MembershipOracle& o, int stage) {
    std::vector<std::pair<std::string, HermLevel>> rest;
    for (auto& [name, x] : candidates) {
      MembershipResult r = closure_member(o, x, config.schedule);
      if (r.inside()) {
        const double eps = r.epsilon_used;
        rep.ledger.push_back(LedgerEntry{name, stage, x, eps, std::move(r), {{stage, eps}}});
        ++st.admitted;
      } else {
        rest.emplace_back(std::move(name), std::move(x));
      }
    }
    candidates = std::move(rest);
  };

  // Stage 0: the initial cone.
  {
    const auto t0 = std::chrono::steady_clock::now();
    StageReport st;
    st.index = 0;
    const MembershipOracle& o = *rep.oracles.front();
    for (auto& [name, x] : ledger_seeds(*rep.cone, config.seed)) {
      MembershipResult r = closure_member(o, x, config.schedule);
      if (!r.inside()) continue;
      const double eps = r.epsilon_used;
      rep.ledger.push_back(LedgerEntry{name, 0, x, eps, std::move(r), {{0, eps}}});
    }
    admit(st, o, 0);
    st.ledger_size = static_cast<int>(rep.ledger.size());
    run_probe(st, o, 0);
    st.seconds = seconds_since(t0);
    rep.stages.push_back(std::move(st));
    if (rep.lineality_found) {
      for (auto& c : candidates) rep.pending.push_back(c.first);
      return rep;
    }
  }

  std::mt19937_64 rng(derive_seed(config.seed, 0x5e1a7));
  for (int k = 0; k < config.stages; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    StageReport st;
    st.index = k + 1;
    st.step = step_schedule(k, *space);
    OraclePtr next;
    try {
      if (st.step.kind == StepKind::Projection)
        next = std::make_shared<ProjectionStageOracle>(rep.oracles.back(), st.step.label);
      else
        next = std::make_shared<DMinStageOracle>(rep.oracles.back(), config.d);
    } catch (const Error& e) {
      rep.error = "stage " + std::to_string(k + 1) + ": " + e.what();
      break;
    }
    next = std::make_shared<MemoOracle>(next);
    rep.oracles.push_back(next);
    const MembershipOracle& o = *next;

    // Nesting: everything certified so far is certified again here.
    for (auto& ent : rep.ledger) {
      MembershipResult r = closure_member(o, ent.x, config.schedule);
      if (r.inside()) {
        ent.eps = r.epsilon_used;
        ent.result = std::move(r);
        ent.history.emplace_back(k + 1, ent.eps);
        ++st.recertified;
      } else {
        ++st.nesting_failures;
        st.nesting_failed.push_back(ent.name);
      }
    }

    admit(st, o, k + 1);

    // Relation spot checks p x p = constant * p for sampled label pairs.
    const int labels = space->label_count();
    for (int s = 0; s < config.relation_samples; ++s) {
      int a = st.step.kind == StepKind::Projection && s == 0
                  ? st.step.label
                  : static_cast<int>(rng() % static_cast<std::uint64_t>(labels));
      int b = static_cast<int>(rng() % static_cast<std::uint64_t>(labels));
      int guard = 0;
      while ((b == a || space->labels_conflict(a, b)) && guard++ < 4 * labels)
        b = static_cast<int>(rng() % static_cast<std::uint64_t>(labels));
      if (b == a || space->labels_conflict(a, b)) continue;
      RelationSpot spot;
      spot.label_p = a;
      spot.label_x = b;
      try {
        const RelationVerdict rv = relation_check(o, VElement::label(space, a), VElement::label(space, b),
                                                  space->constant(), config.schedule);
        spot.holds = rv.holds;
        for (const auto& e : rv.entries) {
          spot.inside += e.verdict == Verdict::Inside;
          spot.outside += e.verdict == Verdict::Outside;
        }
      } catch (const Error&) {
        spot.holds = Holds::Unknown;
      }
      st.relations.push_back(spot);
    }

    st.ledger_size = static_cast<int>(rep.ledger.size());
    run_probe(st, o, k + 1);
    st.seconds = seconds_since(t0);
    rep.stages.push_back(std::move(st));
    rep.stages_completed = k + 1;
    if (rep.lineality_found) break;
  }
  for (auto& c : candidates) rep.pending.push_back(c.first);
  return rep;
}

MembershipResult limit_member(const IterationReport& report, const HermLevel& x, double eps) {
  if (report.oracles.empty()) throw Error(ErrorKind::InvalidParameter, "iteration has no stages");
  MembershipResult last;
  for (std::size_t k = 0; k < report.oracles.size(); ++k) {
    MembershipResult r = report.oracles[k]->member(x, eps);
    if (r.inside()) {
      r.diagnostics["stage"] = static_cast<double>(k);
      return r;
    }
    if (k + 1 == report.oracles.size()) last = std::move(r);
  }
  if (last.outside()) {
    last.diagnostics["stage"] = static_cast<double>(report.oracles.size() - 1);
    return last;
  }
  MembershipResult u;
  u.epsilon_used = eps;
  return u;
}

}  // namespace opsys
