#include "mixfree/io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "mixfree/error.hpp"
#include "mixfree/rng.hpp"

namespace mixfree {

using nlohmann::json;

nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": malformed JSON: " + e.what());
  }
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

void require_known_keys(const json& object, std::initializer_list<const char*> allowed,
                        const std::string& path) {
  if (!object.is_object()) throw ConfigError("'" + path + "' must be an object");
  for (auto it = object.begin(); it != object.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + path + "." + it.key() + "'");
  }
}

namespace {

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError("missing key '" + path + "." + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    throw ConfigError("'" + path + "' must be a number or \"inf\"");
  }
  if (!j.is_number()) throw ConfigError("'" + path + "' must be a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ConfigError("'" + path + "' must be a nonnegative integer");
  return j.get<std::size_t>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError("'" + path + "' must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Matrix matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError("'" + path + "' must be a nonempty array of rows");
  const auto first = numbers(j[0], path + "[0]");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = numbers(j[r], path + "[" + std::to_string(r) + "]");
    if (row.size() != first.size()) throw ConfigError("'" + path + "' rows differ in length");
    for (std::size_t c = 0; c < row.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

NoiseLaw law(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError("'" + path + "' must list [value, probability] pairs");
  NoiseLaw out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto pair = numbers(j[i], path + "[" + std::to_string(i) + "]");
    if (pair.size() != 2) throw ConfigError("'" + path + "' entries must be [value, probability]");
    out.push_back({pair[0], pair[1]});
  }
  return out;
}

NoiseSpec noise_from_json(const json& j, int states) {
  const std::string path = "problem.noise";
  require_known_keys(j, {"kind", "bound", "law", "laws", "preset", "scale"}, path);
  const NoiseKind kind = noise_kind_from_string(field(j, "kind", path).get<std::string>());
  std::optional<double> bound;
  if (j.contains("bound")) bound = number(j.at("bound"), path + ".bound");
  const int given = static_cast<int>(j.contains("law")) + static_cast<int>(j.contains("laws")) +
                    static_cast<int>(j.contains("preset"));
  if (given != 1) throw ConfigError("'" + path + "' needs exactly one of law, laws, preset");
  if (j.contains("scale") && !j.contains("preset"))
    throw ConfigError("'" + path + ".scale' only applies to presets");

  std::vector<NoiseLaw> per_state;
  if (j.contains("law")) {
    per_state.assign(states, law(j.at("law"), path + ".law"));
  } else if (j.contains("laws")) {
    const json& ls = j.at("laws");
    if (!ls.is_array() || static_cast<int>(ls.size()) != states)
      throw ConfigError("'" + path + ".laws' needs one law per state (" + std::to_string(states) + ")");
    for (std::size_t s = 0; s < ls.size(); ++s) per_state.push_back(law(ls[s], path + ".laws[" + std::to_string(s) + "]"));
  } else {
    const auto preset = j.at("preset").get<std::string>();
    const double sigma = j.contains("scale") ? number(j.at("scale"), path + ".scale") : 1.0;
    for (int s = 0; s < states; ++s) {
      if (preset == "none") {
        per_state.push_back({{0.0, 1.0}});
      } else if (preset == "rademacher") {
        per_state.push_back({{-sigma, 0.5}, {sigma, 0.5}});
      } else if (preset == "parity_two_point") {
        // Both laws have mean 0 and variance sigma^2.
        if (std::popcount(static_cast<unsigned>(s)) % 2 == 0)
          per_state.push_back({{-sigma, 0.5}, {sigma, 0.5}});
        else
          per_state.push_back({{2.0 * sigma, 0.2}, {-0.5 * sigma, 0.8}});
      } else {
        throw ConfigError("unknown noise preset '" + preset + "' at '" + path + ".preset'");
      }
    }
  }
  switch (kind) {
    case NoiseKind::BoundedIid:
      for (const auto& l : per_state)
        if (l.size() != per_state.front().size())
          throw ConfigError("bounded-iid noise shares one law across states");
      return NoiseSpec::bounded_iid(per_state.front(), bound);
    case NoiseKind::MartingaleDifference: return NoiseSpec::martingale_difference(per_state, bound);
    case NoiseKind::StateDependentBias: return NoiseSpec::state_dependent_bias(per_state, bound);
  }
  throw ConfigError("unknown noise kind");
}

Matrix embedding_from_json(const json& j, int states) {
  const std::string path = "problem.embedding";
  if (j.is_array()) {
    Matrix m = matrix(j, path);
    if (m.rows() != states) throw ConfigError("'" + path + "' needs one row per state");
    return m;
  }
  require_known_keys(j, {"type"}, path);
  const auto type = field(j, "type", path).get<std::string>();
  if (type == "one_hot") return Matrix::Identity(states, states);
  if (type == "sign_bits") {
    int bits = 0;
    while ((1 << bits) < states) ++bits;
    if ((1 << bits) != states || bits == 0)
      throw ConfigError("sign_bits embedding needs a power-of-two state count >= 2");
    Matrix m(states, bits);
    for (int s = 0; s < states; ++s)
      for (int b = 0; b < bits; ++b) m(s, b) = ((s >> b) & 1) ? 1.0 : -1.0;
    return m;
  }
  throw ConfigError("unknown embedding type '" + type + "'");
}

}  // namespace

MarkovChainModel chain_from_json(const json& j, std::optional<double> level, const std::string& path) {
  if (!j.is_object()) throw ConfigError("'" + path + "' must be an object");
  const auto type = field(j, "type", path).get<std::string>();
  if (type == "matrix") {
    require_known_keys(j, {"type", "transition"}, path);
    if (level) throw ConfigError("'" + path + "' has no dependence knob for mixing levels");
    return MarkovChainModel::from_transition(matrix(field(j, "transition", path), path + ".transition"));
  }
  if (type == "two_state") {
    require_known_keys(j, {"type", "p", "q"}, path);
    if (level) throw ConfigError("'" + path + "' has no dependence knob; use symmetric_two_state");
    return MarkovChainModel::two_state(number(field(j, "p", path), path + ".p"),
                                       number(field(j, "q", path), path + ".q"));
  }
  if (type == "symmetric_two_state") {
    require_known_keys(j, {"type", "dependence"}, path);
    const double dep = level ? *level : number(field(j, "dependence", path), path + ".dependence");
    return MarkovChainModel::symmetric_two_state(dep);
  }
  if (type == "refresh") {
    require_known_keys(j, {"type", "pi", "stay"}, path);
    const auto pi = numbers(field(j, "pi", path), path + ".pi");
    const double stay = level ? *level : number(field(j, "stay", path), path + ".stay");
    return MarkovChainModel::refresh(Eigen::Map<const Vector>(pi.data(), static_cast<Eigen::Index>(pi.size())), stay);
  }
  if (type == "product") {
    require_known_keys(j, {"type", "base", "copies"}, path);
    const auto copies = count(field(j, "copies", path), path + ".copies");
    return MarkovChainModel::product(chain_from_json(field(j, "base", path), level, path + ".base"),
                                     static_cast<int>(copies));
  }
  throw ConfigError("unknown chain type '" + type + "' at '" + path + ".type'");
}

RegressionProblem problem_from_json(const json& j, std::optional<double> level) {
  require_known_keys(j, {"chain", "embedding", "target", "noise"}, "problem");
  MarkovChainModel chain = chain_from_json(field(j, "chain", "problem"), level);
  const int s = chain.states();
  Matrix emb = embedding_from_json(field(j, "embedding", "problem"), s);
  NoiseSpec noise = noise_from_json(field(j, "noise", "problem"), s);
  const json& t = field(j, "target", "problem");
  require_known_keys(t, {"mode", "param", "table"}, "problem.target");
  const auto mode = field(t, "mode", "problem.target").get<std::string>();
  if (mode == "linear") {
    if (t.contains("table")) throw ConfigError("unknown key 'problem.target.table' for linear mode");
    const auto param = numbers(field(t, "param", "problem.target"), "problem.target.param");
    return RegressionProblem::linear(std::move(chain), std::move(emb),
                                     Eigen::Map<const Vector>(param.data(), static_cast<Eigen::Index>(param.size())),
                                     std::move(noise));
  }
  if (mode == "tabular") {
    if (t.contains("param")) throw ConfigError("unknown key 'problem.target.param' for tabular mode");
    return RegressionProblem::tabular(std::move(chain), std::move(emb),
                                      numbers(field(t, "table", "problem.target"), "problem.target.table"),
                                      std::move(noise));
  }
  throw ConfigError("unknown target mode '" + mode + "' at 'problem.target.mode'");
}

HypothesisClass class_from_json(const json& j, const RegressionProblem& problem) {
  require_known_keys(j, {"type", "members", "starGrid"}, "class");
  const auto type = field(j, "type", "class").get<std::string>();
  if (type == "linear") {
    if (j.contains("members")) throw ConfigError("unknown key 'class.members' for a linear class");
    return HypothesisClass::linear(problem.dim());
  }
  if (type == "finite") {
    const json& ms = field(j, "members", "class");
    if (!ms.is_array()) throw ConfigError("'class.members' must be an array of tables");
    std::vector<StateFunction> members;
    for (std::size_t i = 0; i < ms.size(); ++i)
      members.push_back(numbers(ms[i], "class.members[" + std::to_string(i) + "]"));
    HypothesisClass cls = HypothesisClass::finite(std::move(members));
    if (j.contains("starGrid")) cls.set_star_grid(static_cast<int>(count(j.at("starGrid"), "class.starGrid")));
    return cls;
  }
  throw ConfigError("unknown class type '" + type + "' at 'class.type'");
}

BoundConfig bound_config_from_json(const json& j) {
  BoundConfig b;
  if (j.is_null()) return b;
  const std::string path = "bound";
  require_known_keys(j, {"n", "delta", "q", "p", "epsilon", "c", "c1", "c2", "c3", "cAlpha", "k",
                         "weakVarianceMode", "weakVarianceReplicates", "certMethod",
                         "certDirections", "certRefinementRounds"},
                     path);
  auto num = [&](const char* key, double& out) {
    if (j.contains(key)) out = number(j.at(key), path + "." + key);
  };
  if (j.contains("n")) b.n = count(j.at("n"), "bound.n");
  num("delta", b.delta);
  num("q", b.q);
  num("p", b.p);
  num("epsilon", b.epsilon);
  num("c", b.c);
  num("c1", b.c1);
  num("c2", b.c2);
  num("c3", b.c3);
  num("cAlpha", b.c_alpha);
  if (j.contains("k")) b.k = count(j.at("k"), "bound.k");
  if (j.contains("weakVarianceMode"))
    b.weak_variance_mode = weak_variance_mode_from_string(j.at("weakVarianceMode").get<std::string>());
  if (j.contains("weakVarianceReplicates"))
    b.weak_variance_replicates = count(j.at("weakVarianceReplicates"), "bound.weakVarianceReplicates");
  if (j.contains("certMethod")) b.cert_method = cert_method_from_string(j.at("certMethod").get<std::string>());
  if (j.contains("certDirections")) b.certify.directions = count(j.at("certDirections"), "bound.certDirections");
  if (j.contains("certRefinementRounds"))
    b.certify.refinement_rounds = static_cast<int>(count(j.at("certRefinementRounds"), "bound.certRefinementRounds"));
  if (!(b.delta > 0.0 && b.delta < 1.0)) throw ConfigError("'bound.delta' must lie in (0, 1)");
  if (!(b.q >= 1.0)) throw ConfigError("'bound.q' must be at least 1");
  if (!(b.p >= 1.0)) throw ConfigError("'bound.p' must lie in [1, inf]");
  return b;
}

ExperimentConfig experiment_from_json(const json& root) {
  require_known_keys(root, {"description", "problem", "class", "bound", "seed", "simulate", "sweep",
                            "coverage", "diagnose", "certify"},
                     "config");
  ExperimentConfig c;
  c.problem = field(root, "problem", "config");
  c.cls = root.contains("class") ? root.at("class") : json{{"type", "linear"}};
  c.bound = bound_config_from_json(root.contains("bound") ? root.at("bound") : json());
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned()) throw ConfigError("'config.seed' must be an unsigned integer");
    c.seed = root.at("seed").get<std::uint64_t>();
  }
  c.bound.seed = c.seed;
  auto section = [&](const char* key, json& out, std::initializer_list<const char*> allowed) {
    if (!root.contains(key)) return;
    out = root.at(key);
    require_known_keys(out, allowed, key);
  };
  section("simulate", c.simulate, {"n", "blockLength", "level"});
  section("sweep", c.sweep, {"nGrid", "mixingLevels", "replicates", "plot"});
  section("coverage", c.coverage,
          {"kind", "dependence", "n", "k", "delta", "replicates", "level", "calibrationReplicates",
           "validationReplicates"});
  section("diagnose", c.diagnose, {"level", "n", "epsilon", "replicates", "linearDirections"});
  section("certify", c.certify, {"method", "p"});
  // Build once so that config errors surface before any work starts.
  const RegressionProblem problem = problem_from_json(c.problem);
  class_from_json(c.cls, problem);
  return c;
}

ProblemFactory problem_factory(const ExperimentConfig& config) {
  const json spec = config.problem;
  return [spec](double level) { return problem_from_json(spec, level); };
}

ClassFactory class_factory(const ExperimentConfig& config) {
  const json spec = config.cls;
  return [spec](const RegressionProblem& p) { return class_from_json(spec, p); };
}

SweepConfig sweep_config(const ExperimentConfig& config) {
  if (config.sweep.is_null()) throw ConfigError("missing key 'config.sweep'");
  const json& s = config.sweep;
  SweepConfig sc;
  sc.make_problem = problem_factory(config);
  sc.make_class = class_factory(config);
  const json& grid = field(s, "nGrid", "sweep");
  if (!grid.is_array() || grid.empty()) throw ConfigError("'sweep.nGrid' must be a nonempty array");
  for (std::size_t i = 0; i < grid.size(); ++i) sc.n_grid.push_back(count(grid[i], "sweep.nGrid"));
  sc.mixing_levels = numbers(field(s, "mixingLevels", "sweep"), "sweep.mixingLevels");
  sc.replicates = s.contains("replicates") ? count(s.at("replicates"), "sweep.replicates") : 1;
  sc.master_seed = config.seed;
  sc.bound = config.bound;
  return sc;
}

namespace {

std::optional<double> optional_number(const json& j, const char* key, const std::string& path) {
  if (j.is_null() || !j.contains(key)) return std::nullopt;
  return number(j.at(key), path + "." + key);
}

std::optional<std::size_t> optional_count(const json& j, const char* key, const std::string& path) {
  if (j.is_null() || !j.contains(key)) return std::nullopt;
  return count(j.at(key), path + "." + key);
}

}  // namespace

std::string coverage_kind(const ExperimentConfig& config) {
  if (config.coverage.is_null()) throw ConfigError("missing key 'config.coverage'");
  if (!config.coverage.contains("kind")) return "blockedBernstein";
  const json& k = config.coverage.at("kind");
  if (!k.is_string()) throw ConfigError("'coverage.kind' must be a string");
  const auto kind = k.get<std::string>();
  if (kind != "blockedBernstein" && kind != "riskBound")
    throw ConfigError("unknown coverage kind '" + kind + "' at 'coverage.kind'");
  return kind;
}

BlockedBernsteinConfig blocked_bernstein_config(const ExperimentConfig& config) {
  const json& c = config.coverage;
  BlockedBernsteinConfig bc;
  bc.dependence = optional_number(c, "dependence", "coverage").value_or(bc.dependence);
  bc.n = optional_count(c, "n", "coverage").value_or(bc.n);
  bc.k = optional_count(c, "k", "coverage").value_or(bc.k);
  bc.delta = optional_number(c, "delta", "coverage").value_or(bc.delta);
  bc.replicates = optional_count(c, "replicates", "coverage").value_or(bc.replicates);
  bc.seed = config.seed;
  return bc;
}

RiskCoverageConfig risk_coverage_config(const ExperimentConfig& config) {
  const json& c = config.coverage;
  RiskCoverageConfig rc;
  rc.make_problem = problem_factory(config);
  rc.make_class = class_factory(config);
  rc.level = optional_number(c, "level", "coverage").value_or(0.0);
  rc.n = optional_count(c, "n", "coverage").value_or(config.bound.n);
  rc.delta = optional_number(c, "delta", "coverage").value_or(rc.delta);
  rc.calibration_replicates =
      optional_count(c, "calibrationReplicates", "coverage").value_or(rc.calibration_replicates);
  rc.validation_replicates =
      optional_count(c, "validationReplicates", "coverage").value_or(rc.validation_replicates);
  rc.calibration_seed = derive_seed(config.seed, 1);
  rc.validation_seed = derive_seed(config.seed, 2);
  rc.bound = config.bound;
  return rc;
}

DiagnosticsConfig diagnostics_config(const ExperimentConfig& config) {
  const json& d = config.diagnose;
  DiagnosticsConfig dc;
  dc.make_problem = problem_factory(config);
  dc.make_class = class_factory(config);
  dc.level = optional_number(d, "level", "diagnose").value_or(0.0);
  dc.n = optional_count(d, "n", "diagnose").value_or(config.bound.n);
  dc.epsilon = optional_number(d, "epsilon", "diagnose").value_or(config.bound.epsilon);
  dc.replicates = optional_count(d, "replicates", "diagnose").value_or(dc.replicates);
  dc.linear_directions = optional_count(d, "linearDirections", "diagnose").value_or(dc.linear_directions);
  dc.seed = config.seed;
  dc.bound = config.bound;
  return dc;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw ConfigError("malformed number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw ConfigError("malformed integer '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "nGrid,mixingLevel,replicate,excessRisk,k,nQuad,nMult,kMix,rStar,riskBound")
    throw ConfigError("sweep CSV header mismatch");
  std::vector<SweepRow> rows;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c = split_line(line);
      if (c.size() != 10) throw ConfigError("sweep CSV row has " + std::to_string(c.size()) + " columns");
      rows.push_back({parse_size(c[0]), parse_double(c[1]), parse_size(c[2]), parse_double(c[3]),
                      parse_size(c[4]), parse_size(c[5]), parse_size(c[6]), parse_size(c[7]),
                      parse_double(c[8]), parse_double(c[9])});
    }
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("malformed sweep CSV: ") + e.what());
  }
  return rows;
}

std::vector<CoverageRow> read_coverage_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "trial,blockedMean,bound,exceeded")
    throw ConfigError("coverage CSV header mismatch");
  std::vector<CoverageRow> rows;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c = split_line(line);
      if (c.size() != 4 || (c[3] != "0" && c[3] != "1")) throw ConfigError("malformed coverage CSV row");
      rows.push_back({parse_size(c[0]), parse_double(c[1]), parse_double(c[2]), c[3] == "1"});
    }
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("malformed coverage CSV: ") + e.what());
  }
  return rows;
}

}  // namespace mixfree
