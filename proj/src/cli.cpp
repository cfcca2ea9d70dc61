#include "mixfree/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "mixfree/error.hpp"
#include "mixfree/io.hpp"
#include "mixfree/kernels.hpp"
#include "mixfree/rng.hpp"

namespace mixfree {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  std::ofstream f(dir / name);
  if (!f) throw ConfigError("cannot write '" + (dir / name).string() + "'");
  return f;
}

void write_json(const fs::path& dir, const std::string& name, const json& j) {
  auto f = open_out(dir, name);
  f << j.dump(2) << '\n';
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (j.is_null() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

std::optional<double> level_of(const json& section) {
  if (section.is_null() || !section.contains("level")) return std::nullopt;
  return get_or<double>(section, "level", 0.0);
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out, bool quiet) {
  const json& s = cfg.simulate;
  const auto n = get_or<std::size_t>(s, "n", cfg.bound.n);
  const auto k = get_or<std::size_t>(s, "blockLength", 0);
  const RegressionProblem problem = problem_from_json(cfg.problem, level_of(s));
  const HypothesisClass cls = class_from_json(cfg.cls, problem);
  const PopulationQuantities pop = population_quantities(problem, cls);
  const Trajectory traj = k > 0 ? kwise_independent_surrogate(problem, n, k, cfg.seed)
                                : sample_trajectory(problem, n, cfg.seed);
  {
    auto f = open_out(dir, "trajectory.csv");
    write_trajectory_csv(traj, f);
  }
  const ERMResult erm = fit_erm(traj, cls, problem, pop);
  json j = {{"seed", cfg.seed}, {"n", n}, {"k", k}, {"empiricalRisk", erm.empirical_risk},
            {"excessRisk", *erm.excess_l2_squared}, {"tieBroken", erm.tie_broken}};
  if (erm.fitted_param) j["fittedParam"] = std::vector<double>(erm.fitted_param->begin(), erm.fitted_param->end());
  if (erm.fitted_index) j["fittedIndex"] = *erm.fitted_index;
  write_json(dir, "erm.json", j);
  if (!quiet) out << "simulated n=" << n << ", excess risk " << *erm.excess_l2_squared << '\n';
  return 0;
}

int cmd_bound(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out, bool quiet) {
  const RegressionProblem problem = problem_from_json(cfg.problem);
  const HypothesisClass cls = class_from_json(cfg.cls, problem);
  const BoundReport rep = compute_bound_report(problem, cls, cfg.bound);
  write_json(dir, "bound_report.json", to_json(rep));
  auto f = open_out(dir, "bound_terms.csv");
  write_terms_csv(rep, f);
  if (!quiet)
    out << "rStar=" << rep.r_star << " nQuad=" << rep.n_quad << " nMult=" << rep.n_mult
        << " kMix=" << rep.k_mix << " riskBound=" << rep.risk_bound << '\n';
  return 0;
}

int cmd_certify(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out, bool quiet) {
  const RegressionProblem problem = problem_from_json(cfg.problem);
  const HypothesisClass cls = class_from_json(cfg.cls, problem);
  const PopulationQuantities pop = population_quantities(problem, cls);
  double p = cfg.bound.p;
  CertMethod method = cls.is_linear() ? CertMethod::LinearExact : cfg.bound.cert_method;
  if (!cfg.certify.is_null()) {
    if (cfg.certify.contains("p")) {
      const json& pj = cfg.certify.at("p");
      p = pj.is_string() && pj.get<std::string>() == "inf" ? kInf : get_or<double>(cfg.certify, "p", p);
    }
    if (cfg.certify.contains("method"))
      method = cert_method_from_string(get_or<std::string>(cfg.certify, "method", ""));
  }
  CertifyOptions opts = cfg.bound.certify;
  opts.seed = derive_seed(cfg.seed, 0xce);
  const ClassCertificate c = certify_weak_subgaussian(cls, problem, pop, p, method, opts);
  json j = {{"L", c.L}, {"eta", c.eta}, {"p", std::isinf(c.p) ? json("inf") : json(c.p)},
            {"method", to_string(c.method)}, {"lowerBound", c.lower_bound},
            {"upperEstimate", std::isinf(c.upper_estimate) ? json("inf") : json(c.upper_estimate)},
            {"witnesses", c.directions}};
  write_json(dir, "certificate.json", j);
  if (!quiet) out << "L=" << c.L << " eta=" << c.eta << " (" << to_string(c.method) << ")\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out, bool quiet) {
  const SweepConfig sc = sweep_config(cfg);
  const SweepResult res = run_sweep(sc);
  {
    auto f = open_out(dir, "sweep.csv");
    write_sweep_csv(res, f);
  }
  write_json(dir, "sweep_summary.json", sweep_summary_json(res));
  if (get_or<bool>(cfg.sweep, "plot", true)) {
    auto f = open_out(dir, "sweep.svg");
    write_sweep_svg(res, f);
  }
  if (!quiet) {
    for (const auto& l : res.levels)
      if (l.fit)
        out << "level " << l.level << ": exponent " << l.fit->exponent << ", R^2 " << l.fit->r_squared << '\n';
    if (res.mixing_free)
      out << "leading-constant ratio " << res.mixing_free->ratio << " vs block-length ratio "
          << res.mixing_free->naive_ratio << '\n';
    else if (!res.mixing_free_error.empty())
      out << res.mixing_free_error << '\n';
  }
  return 0;
}

int cmd_coverage(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out, bool quiet) {
  const CoverageResult res = coverage_kind(cfg) == "riskBound"
                                 ? risk_bound_coverage(risk_coverage_config(cfg))
                                 : blocked_bernstein_coverage(blocked_bernstein_config(cfg));
  {
    auto f = open_out(dir, "coverage.csv");
    write_coverage_csv(res, f);
  }
  write_json(dir, "coverage.json", to_json(res));
  if (!quiet)
    out << "exceedance " << res.frequency << " (threshold " << res.threshold << ")"
        << (res.passed ? "" : " ABOVE THRESHOLD") << '\n';
  return 0;
}

int cmd_diagnose(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out, bool quiet) {
  const DiagnosticsReport rep = process_diagnostics(diagnostics_config(cfg));
  write_json(dir, "diagnostics.json", to_json(rep));
  if (!quiet)
    out << "Q_n positive fraction " << rep.positive_fraction << " over " << rep.pairs
        << " pairs; calibrated multiplier constant " << rep.calibrated_constant << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Excess-risk experiments for ERM on Markov-chain data"};
  std::string command, config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("command", command, "simulate | bound | certify | sweep | coverage | diagnose")
      ->required()
      ->check(CLI::IsMember({"simulate", "bound", "certify", "sweep", "coverage", "diagnose"}));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "override the config seed");
  app.add_flag("--quiet", quiet, "suppress the summary line");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    ExperimentConfig cfg = experiment_from_json(load_json_file(config_path));
    if (seed) {
      cfg.seed = *seed;
      cfg.bound.seed = *seed;
    }
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out_dir + "'");
    if (!quiet) out << "kernels: " << kernels::isa_name(kernels::active().isa) << '\n';
    if (command == "simulate") return cmd_simulate(cfg, dir, out, quiet);
    if (command == "bound") return cmd_bound(cfg, dir, out, quiet);
    if (command == "certify") return cmd_certify(cfg, dir, out, quiet);
    if (command == "sweep") return cmd_sweep(cfg, dir, out, quiet);
    if (command == "coverage") return cmd_coverage(cfg, dir, out, quiet);
    return cmd_diagnose(cfg, dir, out, quiet);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mixfree
