#include "opsys/io.hpp"

namespace opsys {

const char* const kToolVersion = "1.0.0";

namespace {

Json verdict_counts(const std::vector<RelationEntry>& entries) {
  Json j = Json::array();
  for (const auto& e : entries) {
    Json o;
    o["eps"] = e.eps;
    o["sign"] = e.sign;
    o["verdict"] = to_string(e.verdict);
    o["t"] = e.t;
    j.push_back(std::move(o));
  }
  return j;
}

Json diagnostics_json(const std::map<std::string, double>& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidInput, what);
}

}  // namespace

Json to_json(const StarSpace& space) {
  Json j;
  j["kind"] = to_string(space.kind());
  j["d"] = space.d();
  return j;
}

SpacePtr space_from_json(const Json& j) {
  require(j.is_object() && j.contains("kind") && j.contains("d"), "space needs kind and d");
  return StarSpace::build(space_kind_from_string(j.at("kind").get<std::string>()), j.at("d").get<int>());
}

Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(Json::array({m(i, k).real(), m(i, k).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix cmatrix_from_json(const Json& j) {
  require(j.is_array(), "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    require(j[i].is_array() && static_cast<Eigen::Index>(j[i].size()) == cols, "ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) {
      const Json& z = j[i][k];
      if (z.is_number()) {
        m(i, k) = Complex(z.get<double>(), 0.0);
      } else {
        require(z.is_array() && z.size() == 2, "complex entries are [re, im] pairs");
        m(i, k) = Complex(z[0].get<double>(), z[1].get<double>());
      }
    }
  }
  return m;
}

Json to_json(const RVector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Json to_json(const RMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const VElement& v) {
  Json j;
  j["space"] = to_json(*v.space());
  j["coeffs"] = to_json(v.coeffs());
  return j;
}

Json to_json(const HermLevel& x) {
  Json j;
  j["space"] = to_json(*x.space());
  j["level"] = x.level();
  Json blocks = Json::array();
  for (const auto& b : x.blocks()) blocks.push_back(to_json(b));
  j["blocks"] = std::move(blocks);
  return j;
}

HermLevel herm_level_from_json(const Json& j) {
  require(j.is_object() && j.contains("space") && j.contains("blocks"), "element needs space and blocks");
  const SpacePtr space = space_from_json(j.at("space"));
  std::vector<CMatrix> blocks;
  for (const auto& b : j.at("blocks")) blocks.push_back(cmatrix_from_json(b));
  require(static_cast<int>(blocks.size()) == space->dim(), "element needs one block per coordinate");
  HermLevel x(space, std::move(blocks));
  if (j.contains("level")) require(j.at("level").get<int>() == x.level(), "level does not match blocks");
  return x;
}

Json to_json(const TSequence& t) {
  Json j;
  j["rule"] = t.rule_name();
  j["params"] = t.params();
  return j;
}

TSequence tseq_from_json(const Json& j) {
  const std::string rule = j.at("rule").get<std::string>();
  const auto p = j.at("params").get<std::vector<double>>();
  if (rule == "affine" && p.size() == 2) return TSequence::affine(p[0], p[1]);
  if (rule == "geometric" && p.size() == 2) return TSequence::geometric(p[0], p[1]);
  if (rule == "explicit") return TSequence::explicit_list(p);
  throw Error(ErrorKind::InvalidInput, "bad t-sequence '" + rule + "'");
}

Json to_json(const Gram& g) {
  Json j;
  j["space"] = to_json(*g.space);
  j["rank"] = g.rank;
  j["matrix"] = to_json(g.matrix);
  return j;
}

Json to_json(const Thresholds& t) {
  Json j;
  j["d"] = t.d;
  j["lambda"] = t.lambda;
  j["beta"] = t.beta;
  j["alpha_c"] = t.alpha_c;
  j["gamma"] = t.gamma;
  j["bound1"] = t.bound1;
  j["bound2"] = t.bound2;
  j["bound3"] = t.bound3;
  j["t_star"] = t.t_star;
  return j;
}

Json to_json(const GeneratorCone& c) {
  Json j;
  j["space"] = to_json(*c.space());
  j["n_max"] = c.n_max();
  if (c.tseq()) j["tseq"] = to_json(*c.tseq());
  j["size"] = c.size();
  Json gens = Json::array();
  for (int k = 0; k < c.size(); ++k) {
    Json g;
    g["name"] = c.names()[k];
    g["coeffs"] = to_json(c.generators()[k].coeffs());
    gens.push_back(std::move(g));
  }
  j["generators"] = std::move(gens);
  return j;
}

Json to_json(const Certificate& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  if (c.weights.size() > 0) j["weights"] = to_json(c.weights);
  if (!c.blocks.empty()) {
    Json b = Json::array();
    for (const auto& m : c.blocks) b.push_back(to_json(m));
    j["blocks"] = std::move(b);
  }
  if (c.dir_weights.size() > 0) j["dir_weights"] = to_json(c.dir_weights);
  if (c.alpha.size() > 0) j["alpha"] = to_json(c.alpha);
  if (c.kind == CertKind::ProjectionLift) j["t"] = c.t;
  if (c.inner) j["inner"] = to_json(*c.inner);
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

Json to_json(const MembershipResult& r) {
  Json j;
  j["verdict"] = to_string(r.verdict);
  j["epsilon_used"] = r.epsilon_used;
  j["certificate"] = r.certificate ? to_json(*r.certificate) : Json(nullptr);
  j["diagnostics"] = diagnostics_json(r.diagnostics);
  return j;
}

Json to_json(const ProbeResult& r) {
  Json j;
  j["result"] = r.lineality_found ? "LinealityFound" : "NoneFound";
  j["probes"] = r.probes;
  j["best_margin"] = r.best_margin;
  if (r.direction) {
    j["direction"] = to_json(*r.direction);
    j["plus"] = to_json(r.plus);
    j["minus"] = to_json(r.minus);
  }
  return j;
}

Json to_json(const RelationVerdict& r) {
  Json j;
  j["holds"] = to_string(r.holds);
  j["entries"] = verdict_counts(r.entries);
  Json w = Json::array();
  for (const auto& [eps, t] : r.witnesses) w.push_back(Json::array({eps, t}));
  j["witnesses"] = std::move(w);
  return j;
}

Json to_json(const DminOutcome& r) {
  Json j;
  j["refuted"] = r.refuted();
  j["tested"] = r.tested;
  if (r.refutation) {
    j["alpha"] = to_json(r.refutation->alpha);
    j["compressed"] = to_json(r.refutation->compressed);
    j["violation"] = to_json(r.refutation->violation);
  }
  return j;
}

Json to_json(const QuantumInstance& inst) {
  Json j;
  j["d"] = inst.d;
  j["kind"] = to_string(inst.kind);
  Json vecs = Json::array();
  for (const auto& v : inst.vectors) {
    Json vj = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) vj.push_back(Json::array({v(i).real(), v(i).imag()}));
    vecs.push_back(std::move(vj));
  }
  j["vectors"] = std::move(vecs);
  Json meta;
  meta["overlap_error"] = inst.overlap_error;
  meta["seed"] = inst.seed;
  j["meta"] = std::move(meta);
  return j;
}

QuantumInstance instance_from_json(const Json& j) {
  require(j.is_object() && j.contains("d") && j.contains("kind") && j.contains("vectors"),
          "instance needs d, kind and vectors");
  QuantumInstance inst;
  inst.d = j.at("d").get<int>();
  inst.kind = space_kind_from_string(j.at("kind").get<std::string>());
  require(inst.d >= 2, "instance d must be >= 2");
  const std::size_t want = inst.kind == SpaceKind::Sic ? static_cast<std::size_t>(inst.d * inst.d)
                                                       : static_cast<std::size_t>(inst.d * (inst.d + 1));
  require(j.at("vectors").size() == want, "wrong number of vectors");
  for (const auto& vj : j.at("vectors")) {
    require(vj.is_array() && vj.size() == static_cast<std::size_t>(inst.d), "vector length must be d");
    CVector v(inst.d);
    for (int i = 0; i < inst.d; ++i) {
      require(vj[i].is_array() && vj[i].size() == 2, "complex entries are [re, im] pairs");
      v(i) = Complex(vj[i][0].get<double>(), vj[i][1].get<double>());
    }
    inst.vectors.push_back(std::move(v));
  }
  if (j.contains("meta") && j.at("meta").contains("seed")) inst.seed = j.at("meta").at("seed").get<std::uint64_t>();
  inst.refresh();
  return inst;
}

Json to_json(const VerificationReport& r) {
  Json j;
  j["passed"] = r.passed;
  Json checks = Json::object();
  for (const auto& [name, dev] : r.checks) checks[name] = dev;
  j["checks"] = std::move(checks);
  j["failures"] = r.failures;
  return j;
}

Json to_json(const PiReport& r) {
  Json j;
  j["passed"] = r.passed;
  j["worst"] = r.worst;
  j["violations"] = r.violations;
  Json es = Json::array();
  for (const auto& e : r.entries) {
    Json o;
    o["name"] = e.name;
    o["min_eig"] = e.min_eig;
    if (e.cross) {
      o["min_t"] = e.min_t;
      o["t_used"] = e.t_used;
    }
    es.push_back(std::move(o));
  }
  j["entries"] = std::move(es);
  return j;
}

Json to_json(const IterationConfig& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["d"] = c.d;
  j["tseq"] = to_json(c.tseq);
  j["n_max"] = c.n_max;
  j["stages"] = c.stages;
  Json p;
  p["directions"] = c.probe.directions;
  p["basis"] = c.probe.basis;
  p["ascent_starts"] = c.probe.ascent_starts;
  p["ascent_steps"] = c.probe.ascent_steps;
  p["eps"] = c.probe.eps;
  j["probe"] = std::move(p);
  j["relation_samples"] = c.relation_samples;
  j["schedule"] = c.schedule;
  Json extra = Json::array();
  for (const auto& v : c.extra_generators) extra.push_back(to_json(v.coeffs()));
  j["extra_generators"] = std::move(extra);
  j["seed"] = c.seed;
  return j;
}

Json to_json(const IterationReport& r) {
  const SpacePtr space = StarSpace::build(r.config.kind, r.config.d);
  Json j;
  j["config"] = to_json(r.config);
  j["stages_completed"] = r.stages_completed;
  j["lineality_found"] = r.lineality_found;
  j["lineality_stage"] = r.lineality_stage;
  j["error"] = r.error ? Json(*r.error) : Json(nullptr);
  Json stages = Json::array();
  Json timing = Json::array();
  for (const auto& s : r.stages) {
    Json o;
    o["index"] = s.index;
    o["step"] = to_string(s.step.kind);
    if (s.step.kind == StepKind::Projection) o["projection"] = space->label_name(s.step.label);
    o["probe"] = s.lineality_found ? "LinealityFound" : "NoneFound";
    o["probes"] = s.probes;
    o["best_margin"] = s.best_margin;
    if (s.lineality_direction) o["lineality_direction"] = to_json(s.lineality_direction->to_element().coeffs());
    o["ledger_size"] = s.ledger_size;
    o["recertified"] = s.recertified;
    o["admitted"] = s.admitted;
    o["nesting_failures"] = s.nesting_failures;
    o["nesting_failed"] = s.nesting_failed;
    Json rel = Json::array();
    for (const auto& q : s.relations) {
      Json x;
      x["p"] = space->label_name(q.label_p);
      x["x"] = space->label_name(q.label_x);
      x["holds"] = to_string(q.holds);
      x["inside"] = q.inside;
      x["outside"] = q.outside;
      rel.push_back(std::move(x));
    }
    o["relations"] = std::move(rel);
    stages.push_back(std::move(o));
    timing.push_back(s.seconds);
  }
  j["stages"] = std::move(stages);
  Json ledger = Json::array();
  for (const auto& e : r.ledger) {
    Json o;
    o["name"] = e.name;
    o["stage"] = e.stage;
    o["eps"] = e.eps;
    Json h = Json::array();
    for (const auto& [st, eps] : e.history) h.push_back(Json::array({st, eps}));
    o["history"] = std::move(h);
    o["x"] = to_json(e.x);
    o["certificate"] = e.result.certificate ? Json(to_string(e.result.certificate->kind)) : Json(nullptr);
    ledger.push_back(std::move(o));
  }
  j["ledger"] = std::move(ledger);
  j["pending"] = r.pending;
  j["timing"] = {{"stage_seconds", std::move(timing)}};
  return j;
}

std::vector<LedgerEntry> ledger_from_json(const Json& report) {
  const Json* root = &report;
  if (root->contains("result")) root = &root->at("result");
  require(root->contains("ledger"), "report has no ledger");
  std::vector<LedgerEntry> out;
  for (const auto& o : root->at("ledger")) {
    LedgerEntry e{o.at("name").get<std::string>(), o.at("stage").get<int>(), herm_level_from_json(o.at("x")),
                  o.at("eps").get<double>(), {}, {}};
    for (const auto& h : o.at("history")) e.history.emplace_back(h[0].get<int>(), h[1].get<double>());
    out.push_back(std::move(e));
  }
  return out;
}

Json to_json(const SoundnessReport& r) {
  Json j;
  j["passed"] = r.passed;
  j["violations"] = r.violations;
  j["warnings"] = r.warnings;
  Json es = Json::array();
  for (const auto& e : r.entries) {
    Json o;
    o["name"] = e.name;
    o["stage"] = e.stage;
    o["eps"] = e.eps;
    o["min_eig"] = e.min_eig;
    o["bound"] = e.bound;
    o["passed"] = e.passed;
    es.push_back(std::move(o));
  }
  j["entries"] = std::move(es);
  return j;
}

Json envelope(const std::string& command, Json config, std::uint64_t seed, Json result, double wall_time_s) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["tool"] = "opsys";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config"] = std::move(config);
  j["seed"] = seed;
  j["result"] = std::move(result);
  j["wall_time_s"] = wall_time_s;
  return j;
}

}  // namespace opsys
