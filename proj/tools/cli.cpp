#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "opsys/io.hpp"

namespace opsys::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Params {
  // common
  std::string out = "-";
  std::string format = "json";
  std::string config;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string solver = "ipm";

  // space and cone
  std::string kind = "sic";
  int d = 2;
  std::string rule = "affine";
  std::optional<double> t0;
  double slope = 1.0;
  std::string tvalues;
  int nmax = 10;

  // elements
  std::string x_file;
  std::string coeffs;
  std::string label;
  double scale = 1.0;
  double shift = 0.0;
  int level = 1;
  double eps = 1e-6;
  bool closure = false;
  std::string oracle = "cone";
  std::string instance;

  // relation / cnp
  std::string p;
  std::string x_label;
  std::optional<double> tau;
  std::string layout = "block";

  // budgets
  int directions = 2000;
  int ascent_starts = 4;
  int ascent_steps = 200;
  int restarts = 32;
  int steps = 200;
  bool no_hints = false;
  int stages = 6;
  int relation_samples = 2;
  int max_iters = 20000;
  double threshold = 1e-6;
  double tol = 1e-8;
  std::string report;
};

using Handler = std::function<int(const Params&, Json& result, std::string& csv)>;

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> options;  // option groups to attach
  bool csv = false;
  Handler run;
};

// Parsing helpers ----------------------------------------------------------------

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + tok + "'");
    }
  }
  return v;
}

SpacePtr make_space(const Params& p) {
  try {
    return StarSpace::build(space_kind_from_string(p.kind), p.d);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

TSequence make_tseq(const Params& p) {
  const double t0 = p.t0 ? *p.t0 : t_thresholds(p.d).t_star;
  if (p.rule == "affine") return TSequence::affine(t0, p.slope);
  if (p.rule == "geometric") return TSequence::geometric(t0, p.slope);
  if (p.rule == "explicit") return TSequence::explicit_list(parse_list(p.tvalues));
  throw UsageError("unknown --rule '" + p.rule + "'");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    throw UsageError("'" + path + "' is not JSON: " + e.what());
  }
}

// Unwraps a report envelope to its result.
const Json& payload(const Json& j) { return j.contains("result") && j.contains("schema") ? j.at("result") : j; }

int resolve_label(const StarSpace& space, const std::string& s) {
  for (int k = 0; k < space.label_count(); ++k)
    if (space.label_name(k) == s) return k;
  try {
    std::size_t used = 0;
    const int k = std::stoi(s, &used);
    if (used == s.size() && k >= 0 && k < space.label_count()) return k;
  } catch (const std::exception&) {
  }
  throw UsageError("unknown label '" + s + "'");
}

HermLevel make_element(const Params& p, const SpacePtr& space) {
  const int sources = !p.x_file.empty() + !p.coeffs.empty() + !p.label.empty();
  if (sources > 1) throw UsageError("give at most one of --x, --coeffs, --label");
  std::optional<HermLevel> x;
  if (!p.x_file.empty()) {
    x = herm_level_from_json(payload(read_json_file(p.x_file)));
    if (x->space()->kind() != space->kind() || x->space()->d() != space->d())
      throw UsageError("element space does not match --kind/--d");
  } else if (!p.coeffs.empty()) {
    const auto c = parse_list(p.coeffs);
    if (static_cast<int>(c.size()) != space->dim())
      throw UsageError("--coeffs needs " + std::to_string(space->dim()) + " values");
    x = HermLevel::from_element(VElement(space, Eigen::Map<const RVector>(c.data(), space->dim())));
  } else if (!p.label.empty()) {
    x = HermLevel::from_element(VElement::label(space, resolve_label(*space, p.label)));
  } else {
    x = HermLevel::unit(space, 1);
  }
  if (p.level < 1) throw UsageError("--level must be >= 1");
  if (x->level() == 1 && p.level > 1) {
    x = HermLevel::tensor(CMatrix::Identity(p.level, p.level), x->to_element());
  } else if (p.level > 1 && x->level() != p.level) {
    throw UsageError("--level does not match the element's level");
  }
  HermLevel r = *x * p.scale;
  if (p.shift != 0.0) r = r + HermLevel::unit(space, r.level()) * p.shift;
  return r;
}

QuantumInstance make_instance(const Params& p, SpaceKind kind, int d) {
  if (!p.instance.empty()) {
    const Json j = read_json_file(p.instance);
    const Json& body = payload(j);
    QuantumInstance inst = instance_from_json(body.contains("instance") ? body.at("instance") : body);
    if (inst.kind != kind || inst.d != d) throw UsageError("instance does not match --kind/--d");
    return inst;
  }
  if (kind == SpaceKind::Mub) return mub_generate(d);
  SicSearchOptions o;
  o.seed = p.seed;
  o.threads = p.threads;
  return sic_search(d, o);
}

ConeOracleOptions cone_options(const Params& p) {
  ConeOracleOptions o;
  if (p.solver == "ipm") o.solver = OmaxSolver::InteriorPoint;
  else if (p.solver == "dykstra") o.solver = OmaxSolver::Dykstra;
  else throw UsageError("unknown --solver '" + p.solver + "'");
  return o;
}

OraclePtr make_oracle(const Params& p, const SpacePtr& space) {
  if (p.oracle == "cone") {
    auto cone = std::make_shared<GeneratorCone>(build_initial_cone(space, make_tseq(p), p.nmax));
    return std::make_shared<ConeOracle>(cone, cone_options(p));
  }
  if (p.oracle == "concrete") return std::make_shared<ConcreteOracle>(space, make_instance(p, space->kind(), space->d()));
  throw UsageError("unknown --oracle '" + p.oracle + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Subcommands --------------------------------------------------------------------

int cmd_gram(const Params& p, Json& res, std::string& csv) {
  const auto space = make_space(p);
  const Gram g = gram_matrix(space);
  res = to_json(g);
  const RMatrix t = label_inner_products(*space);
  res["label_inner_products"] = to_json(t);
  std::ostringstream os;
  for (Eigen::Index i = 0; i < g.matrix.rows(); ++i) {
    for (Eigen::Index k = 0; k < g.matrix.cols(); ++k) os << (k ? "," : "") << fmt(g.matrix(i, k));
    os << "\n";
  }
  csv = os.str();
  return kOk;
}

int cmd_thresholds(const Params& p, Json& res, std::string& csv) {
  if (p.d < 2) throw UsageError("--d must be >= 2");
  const Thresholds t = t_thresholds(p.d);
  res = to_json(t);
  std::ostringstream os;
  os << "key,value\n";
  for (const auto& [k, v] : res.items()) os << k << "," << (v.is_number_float() ? fmt(v.get<double>()) : v.dump()) << "\n";
  csv = os.str();
  return kOk;
}

int cmd_build_cone(const Params& p, Json& res, std::string&) {
  const auto space = make_space(p);
  const GeneratorCone cone = build_initial_cone(space, make_tseq(p), p.nmax);
  res = to_json(cone);
  res["level"] = 1;
  return kOk;
}

int cmd_member(const Params& p, Json& res, std::string&) {
  const auto space = make_space(p);
  const OraclePtr oracle = make_oracle(p, space);
  const HermLevel x = make_element(p, space);
  const MembershipResult r = p.closure ? closure_member(*oracle, x) : oracle->member(x, p.eps);
  const bool validated = r.verdict == Verdict::Unknown || oracle->validate(x, r.epsilon_used, {}, r);
  res["oracle"] = oracle->name();
  res["level"] = x.level();
  res["x"] = to_json(x);
  res["membership"] = to_json(r);
  res["validated"] = validated;
  return validated ? kOk : kVerificationFailed;
}

int cmd_relation(const Params& p, Json& res, std::string&) {
  const auto space = make_space(p);
  const OraclePtr oracle = make_oracle(p, space);
  if (p.p.empty() || p.x_label.empty()) throw UsageError("relation needs --p and --xl");
  const int lp = resolve_label(*space, p.p);
  const int lx = resolve_label(*space, p.x_label);
  const double tau = p.tau ? *p.tau : (lp == lx ? 1.0 : space->constant());
  const RelationVerdict v =
      relation_check(*oracle, VElement::label(space, lp), VElement::label(space, lx), tau);
  res["p"] = space->label_name(lp);
  res["x"] = space->label_name(lx);
  res["tau"] = tau;
  res["relation"] = to_json(v);
  return kOk;
}

int cmd_cnp(const Params& p, Json& res, std::string&) {
  const auto space = make_space(p);
  const OraclePtr oracle = make_oracle(p, space);
  if (p.p.empty()) throw UsageError("cnp needs --p");
  const VElement proj = VElement::label(space, resolve_label(*space, p.p));
  const HermLevel x = make_element(p, space);
  CnpOptions o;
  if (p.layout == "block") o.layout = TensorLayout::Block;
  else if (p.layout == "interleaved") o.layout = TensorLayout::Interleaved;
  else throw UsageError("unknown --layout '" + p.layout + "'");
  const MembershipResult r = cnp_member(*oracle, x, proj, p.eps, o);
  const bool validated = r.verdict == Verdict::Unknown || cnp_validate(*oracle, x, proj, p.eps, o, {}, r);
  res["p"] = p.p;
  res["x"] = to_json(x);
  res["membership"] = to_json(r);
  res["validated"] = validated;
  return validated ? kOk : kVerificationFailed;
}

int cmd_dmin_refute(const Params& p, Json& res, std::string&) {
  const auto space = make_space(p);
  const OraclePtr oracle = make_oracle(p, space);
  const HermLevel x = make_element(p, space);
  SearchBudget b;
  b.restarts = p.restarts;
  b.steps = p.steps;
  b.seed = p.seed;
  b.threads = p.threads;
  b.hints = !p.no_hints;
  const DminOutcome r = dmin_refute(*oracle, x, p.eps, space->d(), b);
  const bool validated = !r.refuted() || validate_compression(*oracle, x, p.eps, {}, *r.refutation);
  res["x"] = to_json(x);
  res["outcome"] = to_json(r);
  res["validated"] = validated;
  return validated ? kOk : kVerificationFailed;
}

int cmd_probe(const Params& p, Json& res, std::string& csv) {
  const auto space = make_space(p);
  const OraclePtr oracle = make_oracle(p, space);
  ProbeBudget b;
  b.directions = p.directions;
  b.ascent_starts = p.ascent_starts;
  b.ascent_steps = p.ascent_steps;
  b.eps = p.eps;
  b.seed = p.seed;
  b.threads = p.threads;
  const MemberFn fn = [&](const HermLevel& y, double eps) { return oracle->member(y, eps); };
  const ProbeResult r = properness_probe(fn, space, p.level, b);
  res = to_json(r);
  std::ostringstream os;
  os << "level,probes,best_margin,result\n"
     << p.level << "," << r.probes << "," << fmt(r.best_margin) << "," << (r.lineality_found ? "LinealityFound" : "NoneFound")
     << "\n";
  csv = os.str();
  return r.lineality_found ? kLinealityFound : kOk;
}

int cmd_iterate(const Params& p, Json& res, std::string& csv) {
  IterationConfig c;
  c.kind = make_space(p)->kind();
  c.d = p.d;
  c.tseq = make_tseq(p);
  c.n_max = p.nmax;
  c.stages = p.stages;
  c.relation_samples = p.relation_samples;
  c.seed = p.seed;
  c.threads = p.threads;
  c.probe.threads = p.threads;
  const IterationReport r = run_iteration(c);
  res = to_json(r);
  std::ostringstream os;
  os << "stage,step,probe,probes,best_margin,ledger_size,recertified,admitted,nesting_failures,seconds\n";
  for (const auto& s : r.stages)
    os << s.index << "," << to_string(s.step.kind) << "," << (s.lineality_found ? "LinealityFound" : "NoneFound") << ","
       << s.probes << "," << fmt(s.best_margin) << "," << s.ledger_size << "," << s.recertified << "," << s.admitted
       << "," << s.nesting_failures << "," << fmt(s.seconds) << "\n";
  csv = os.str();
  if (r.lineality_found) return kLinealityFound;
  if (r.error) return kVerificationFailed;
  for (const auto& s : r.stages)
    if (s.nesting_failures > 0) return kVerificationFailed;
  return kOk;
}

int cmd_sic_search(const Params& p, Json& res, std::string&) {
  SicSearchOptions o;
  o.restarts = p.restarts;
  o.max_iters = p.max_iters;
  o.threshold = p.threshold;
  o.seed = p.seed;
  o.threads = p.threads;
  try {
    const QuantumInstance inst = sic_search(p.d, o);
    res["found"] = true;
    res["instance"] = to_json(inst);
    return kOk;
  } catch (const SearchFailed& e) {
    res["found"] = false;
    res["message"] = e.what();
    res["instance"] = to_json(e.best());
    return kVerificationFailed;
  }
}

int cmd_mub_gen(const Params& p, Json& res, std::string&) {
  res["instance"] = to_json(mub_generate(p.d));
  return kOk;
}

int cmd_verify(const Params& p, Json& res, std::string&) {
  const auto space = make_space(p);
  const QuantumInstance inst = make_instance(p, space->kind(), p.d);
  const VerificationReport v = verify_instance(inst, p.tol);
  res = to_json(v);
  res["overlap_error"] = inst.overlap_error;
  return v.passed ? kOk : kVerificationFailed;
}

int cmd_pi_check(const Params& p, Json& res, std::string& csv) {
  const auto space = make_space(p);
  const QuantumInstance inst = make_instance(p, space->kind(), p.d);
  const PiReport r = pi_positivity_check(*space, inst, make_tseq(p), p.nmax, p.tol);
  res = to_json(r);
  std::ostringstream os;
  os << "generator,min_eig,min_t,t_used\n";
  for (const auto& e : r.entries)
    os << e.name << "," << fmt(e.min_eig) << "," << (e.cross ? fmt(e.min_t) : "") << "," << (e.cross ? fmt(e.t_used) : "")
       << "\n";
  csv = os.str();
  return r.passed ? kOk : kVerificationFailed;
}

int cmd_soundness(const Params& p, Json& res, std::string& csv) {
  if (p.report.empty()) throw UsageError("soundness needs --report");
  const Json rep = read_json_file(p.report);
  const Json& body = payload(rep);
  if (!body.contains("config")) throw UsageError("report has no iteration config");
  const SpaceKind kind = space_kind_from_string(body.at("config").at("kind").get<std::string>());
  const int d = body.at("config").at("d").get<int>();
  const auto ledger = ledger_from_json(body);
  const QuantumInstance inst = make_instance(p, kind, d);
  const SoundnessReport s = soundness_check(ledger, inst);
  res = to_json(s);
  std::ostringstream os;
  os << "name,stage,eps,min_eig,bound,passed\n";
  for (const auto& e : s.entries)
    os << e.name << "," << e.stage << "," << fmt(e.eps) << "," << fmt(e.min_eig) << "," << fmt(e.bound) << ","
       << (e.passed ? "true" : "false") << "\n";
  csv = os.str();
  return s.passed ? kOk : kVerificationFailed;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> cmds = {
      {"gram", "Gram matrix of the space's basis", {"space"}, true, cmd_gram},
      {"thresholds", "t-threshold bounds for dimension d", {"dim"}, true, cmd_thresholds},
      {"build-cone", "initial generator cone", {"space", "cone"}, false, cmd_build_cone},
      {"member", "membership of an element (any level)", {"space", "cone", "oracle", "element"}, false, cmd_member},
      {"relation", "relation check p x p = tau p", {"space", "cone", "oracle", "relation"}, false, cmd_relation},
      {"cnp", "membership in C_n(p)", {"space", "cone", "oracle", "element", "cnp"}, false, cmd_cnp},
      {"dmin-refute", "compression search against a level-d oracle", {"space", "cone", "oracle", "element", "search"},
       false, cmd_dmin_refute},
      {"probe", "properness probe of the initial cone", {"space", "cone", "oracle", "probe"}, true, cmd_probe},
      {"iterate", "projection / d-min iteration", {"space", "cone", "iterate"}, true, cmd_iterate},
      {"sic-search", "numerical SIC search", {"dim", "sic"}, false, cmd_sic_search},
      {"mub-gen", "MUBs for prime d", {"dim"}, false, cmd_mub_gen},
      {"verify", "verify a SIC or MUB instance", {"space", "instance", "tol"}, false, cmd_verify},
      {"pi-check", "positivity of generator images under pi", {"space", "cone", "instance", "tol"}, true, cmd_pi_check},
      {"soundness", "soundness of an iteration ledger", {"instance", "report"}, true, cmd_soundness},
  };
  return cmds;
}

// Option wiring ---------------------------------------------------------------------

struct Flag {
  std::string name;
  const bool* value;
};

void attach(CLI::App& sub, const Command& cmd, Params& p, std::vector<Flag>& flags) {
  sub.add_option("--out", p.out, "report path, - for stdout");
  sub.add_option("--format", p.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub.add_option("--config", p.config, "key=value file or earlier JSON report");
  sub.add_option("--seed", p.seed, "PRNG seed (default $OPSYS_SEED or 1)");
  sub.add_option("--threads", p.threads, "worker threads")->check(CLI::PositiveNumber);
  sub.add_option("--solver", p.solver, "ipm or dykstra")->check(CLI::IsMember({"ipm", "dykstra"}));
  auto has = [&](const char* g) { return std::find(cmd.options.begin(), cmd.options.end(), g) != cmd.options.end(); };
  if (has("space") || has("dim")) sub.add_option("-d,--d", p.d, "dimension")->check(CLI::Range(2, 64));
  if (has("space")) sub.add_option("--kind", p.kind, "sic or mub")->check(CLI::IsMember({"sic", "mub"}));
  if (has("cone")) {
    sub.add_option("--rule", p.rule, "affine, geometric or explicit");
    sub.add_option("--t0", p.t0, "t_1 (default t_star(d))");
    sub.add_option("--slope", p.slope, "affine slope or geometric ratio");
    sub.add_option("--tvalues", p.tvalues, "explicit t_1,t_2,...");
    sub.add_option("--nmax", p.nmax, "truncation N_max")->check(CLI::PositiveNumber);
  }
  if (has("oracle")) {
    sub.add_option("--oracle", p.oracle, "cone or concrete")->check(CLI::IsMember({"cone", "concrete"}));
    sub.add_option("--instance", p.instance, "instance JSON for the concrete oracle");
    sub.add_option("--eps", p.eps, "Archimedean slack");
  }
  if (has("element")) {
    sub.add_option("--x", p.x_file, "element JSON");
    sub.add_option("--coeffs", p.coeffs, "level-1 coordinates c1,c2,...");
    sub.add_option("--label", p.label, "projection label (name or index)");
    sub.add_option("--scale", p.scale, "multiply the element");
    sub.add_option("--shift", p.shift, "add shift * I (x) e");
    sub.add_option("--level", p.level, "lift a level-1 element to I_n (x) x");
  }
  if (cmd.name == "member") {
    sub.add_flag("--closure", p.closure, "scan the default eps schedule");
    flags.push_back({"closure", &p.closure});
  }
  if (has("relation")) {
    sub.add_option("--p", p.p, "projection label");
    sub.add_option("--xl", p.x_label, "label of x");
    sub.add_option("--tau", p.tau, "relation constant (default 1 or the space constant)");
  }
  if (has("cnp")) {
    sub.add_option("--p", p.p, "projection label");
    sub.add_option("--layout", p.layout, "block or interleaved");
  }
  if (has("search")) {
    sub.add_option("--restarts", p.restarts, "random restarts")->check(CLI::NonNegativeNumber);
    sub.add_option("--steps", p.steps, "ascent steps per restart")->check(CLI::NonNegativeNumber);
    sub.add_flag("--no-hints", p.no_hints, "skip separator hints");
    flags.push_back({"no-hints", &p.no_hints});
  }
  if (has("probe")) {
    sub.add_option("--level", p.level, "probe level")->check(CLI::PositiveNumber);
    sub.add_option("--directions", p.directions, "random directions")->check(CLI::NonNegativeNumber);
    sub.add_option("--ascent-starts", p.ascent_starts, "local ascent starts")->check(CLI::NonNegativeNumber);
    sub.add_option("--ascent-steps", p.ascent_steps, "steps per ascent")->check(CLI::NonNegativeNumber);
  }
  if (has("iterate")) {
    sub.add_option("--stages", p.stages, "iteration stages")->check(CLI::PositiveNumber);
    sub.add_option("--relation-samples", p.relation_samples, "relation spot checks per stage")
        ->check(CLI::NonNegativeNumber);
  }
  if (has("sic")) {
    sub.add_option("--restarts", p.restarts, "random restarts")->check(CLI::PositiveNumber);
    sub.add_option("--max-iters", p.max_iters, "descent iterations per restart")->check(CLI::PositiveNumber);
    sub.add_option("--threshold", p.threshold, "target overlap error");
  }
  if (has("instance")) sub.add_option("--instance", p.instance, "instance JSON (default: generated)");
  if (has("tol")) sub.add_option("--tol", p.tol, "tolerance");
  if (has("report")) sub.add_option("--report", p.report, "iteration report JSON");
}

struct Parsed {
  std::unique_ptr<CLI::App> app;
  std::unique_ptr<Params> params;
  std::vector<Flag> flags;
  const Command* cmd = nullptr;
  CLI::App* sub = nullptr;
};

Parsed parse(const std::vector<std::string>& args, std::uint64_t default_seed, int default_threads) {
  Parsed r;
  r.params = std::make_unique<Params>();
  r.params->seed = default_seed;
  r.params->threads = default_threads;
  r.app = std::make_unique<CLI::App>("Operator-system cone tools", "opsys");
  r.app->require_subcommand(1);
  r.app->set_version_flag("--version", kToolVersion);
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands()) {
    CLI::App* s = r.app->add_subcommand(c.name, c.help);
    s->option_defaults()->always_capture_default();
    attach(*s, c, *r.params, r.flags);
    subs.emplace_back(s, &c);
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  r.app->parse(rev);
  for (auto& [s, c] : subs)
    if (s->parsed()) {
      r.sub = s;
      r.cmd = c;
    }
  return r;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::map<std::string, std::string> kv;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const std::exception& e) {
      throw UsageError("config '" + path + "' is not JSON: " + e.what());
    }
    const Json& cfg = j.contains("config") ? j.at("config") : j;
    for (const auto& [k, v] : cfg.items()) kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return kv;
  }
  std::istringstream lines(text);
  std::string line;
  int no = 0;
  while (std::getline(lines, line)) {
    ++no;
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

CLI::Option* find_option(CLI::App& sub, const std::string& key) {
  if (CLI::Option* o = sub.get_option_no_throw("--" + key)) return o;
  if (key.size() == 1) return sub.get_option_no_throw("-" + key);
  return nullptr;
}

Json record_config(const Parsed& ps) {
  Json cfg = Json::object();
  for (const CLI::Option* o : ps.sub->get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string name = o->get_lnames().front();
    if ( name == "help" || name == "out" || name == "config" || name == "format") continue;
    auto fl = std::find_if(ps.flags.begin(), ps.flags.end(), [&](const Flag& f) { return f.name == name; });
    if (fl != ps.flags.end()) {
      cfg[name] = *fl->value ? "true" : "false";
    } else if (o->count() > 0) {
      std::string v;
      for (const auto& s : o->results()) v += (v.empty() ? "" : ",") + s;
      cfg[name] = v;
    } else {
      cfg[name] = o->get_default_str();
    }
  }
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  const auto t_start = std::chrono::steady_clock::now();
  std::uint64_t default_seed = 1;
  if (const char* env = std::getenv("OPSYS_SEED")) {
    try {
      std::size_t used = 0;
      default_seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      err << "error: OPSYS_SEED is not an unsigned integer\n";
      return kUsage;
    }
  }
  const int default_threads = std::max(1u, std::thread::hardware_concurrency());

  Parsed ps;
  std::vector<std::string> args = args_in;
  try {
    ps = parse(args, default_seed, default_threads);
    if (!ps.params->config.empty()) {
      // Config values fill only options absent from the command line.
      for (const auto& [key, value] : read_config(ps.params->config)) {
        if (key == "config" || key == "out" || key == "format") continue;
        CLI::Option* o = find_option(*ps.sub, key);
        if (!o) throw UsageError("unknown config key '" + key + "'");
        const bool is_flag =
            std::any_of(ps.flags.begin(), ps.flags.end(), [&](const Flag& f) { return f.name == key; });
        if (o->count() > 0 || (is_flag && *std::find_if(ps.flags.begin(), ps.flags.end(), [&](const Flag& f) {
                                              return f.name == key;
                                            })->value))
          continue;
        if (is_flag) {
          if (value == "true" || value == "1") args.push_back("--" + key);
          else if (value != "false" && value != "0") throw UsageError("config key '" + key + "' expects true/false");
        } else if (!value.empty()) {
          args.push_back("--" + o->get_lnames().front());
          args.push_back(value);
        }
      }
      ps = parse(args, default_seed, default_threads);
    }
  } catch (const CLI::CallForHelp&) {
    out << (ps.app ? ps.app->help() : std::string("opsys <command> --help\n"));
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::Success&) {
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  const Params& p = *ps.params;
  if (p.format == "csv" && !ps.cmd->csv) {
    err << "usage error: --format csv is not available for " << ps.cmd->name << "\n";
    return kUsage;
  }

  Json result = Json::object();
  std::string csv;
  int code = kOk;
  try {
    code = ps.cmd->run(p, result, csv);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    const bool usage = e.kind() == ErrorKind::InvalidInput || e.kind() == ErrorKind::InvalidParameter ||
                       e.kind() == ErrorKind::InvalidDimension || e.kind() == ErrorKind::UnsupportedDimension ||
                       e.kind() == ErrorKind::Precondition || e.kind() == ErrorKind::DimensionMismatch;
    err << (usage ? "usage error: " : "error: ") << e.what() << "\n";
    return usage ? kUsage : kVerificationFailed;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  std::string text;
  if (p.format == "csv") {
    std::ostringstream os;
    os << "# opsys " << kToolVersion << " " << ps.cmd->name << " seed=" << p.seed << " wall_time_s=" << fmt(wall)
       << "\n"
       << csv;
    text = os.str();
  } else {
    text = envelope(ps.cmd->name, record_config(ps), p.seed, std::move(result), wall).dump(2) + "\n";
  }
  if (p.out == "-") {
    out << text;
  } else {
    std::ofstream f(p.out);
    if (!f) {
      err << "usage error: cannot write '" << p.out << "'\n";
      return kUsage;
    }
    f << text;
  }
  return code;
}

}  // namespace opsys::cli
