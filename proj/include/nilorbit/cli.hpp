#pragma once

// Command-line front end. Exit codes: 0 pass, 1 usage or I/O, 2 contract
// violation, 3 verification failure.

#include <nilorbit/io.hpp>
#include <nilorbit/sampling.hpp>
#include <nilorbit/verify.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>

namespace nilorbit {

enum ExitCode : int { kExitPass = 0, kExitUsage = 1, kExitContract = 2, kExitFailed = 3 };

struct RunConfig {
  std::string command;
  std::string family;
  std::vector<double> alpha{0.0};
  std::string out;                 // output directory; empty prints JSON to stdout
  std::uint64_t seed = 20240611;
  unsigned threads = 0;
  int random_tuples = 20;
  Tolerances tol;
};

inline std::map<std::string, double Tolerances::*> tolerance_fields() {
  return {{"extension_gap", &Tolerances::extension_gap}, {"extension_order", &Tolerances::extension_order},
          {"horizontality", &Tolerances::horizontality}, {"single_valued", &Tolerances::single_valued},
          {"pairing", &Tolerances::pairing},             {"decay_delta", &Tolerances::decay_delta},
          {"decay_beta", &Tolerances::decay_beta},       {"threshold_c", &Tolerances::threshold_c},
          {"ad_factor", &Tolerances::ad_factor},         {"schmid_beta", &Tolerances::schmid_beta},
          {"weight_beta", &Tolerances::weight_beta},     {"log_order", &Tolerances::log_order},
          {"higgs_factor", &Tolerances::higgs_factor}};
}

class UsageError : public Error {
 public:
  using Error::Error;
};

inline void apply_tolerance_override(Tolerances& tol, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw UsageError("tolerance override must be name=value: " + spec);
  const std::string name = spec.substr(0, eq);
  const auto fields = tolerance_fields();
  const auto it = fields.find(name);
  if (it == fields.end()) throw UsageError("unknown tolerance: " + name);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(spec.substr(eq + 1), &used);
    if (used != spec.size() - eq - 1) throw std::invalid_argument(spec);
  } catch (const std::exception&) {
    throw UsageError("tolerance value is not a number: " + spec);
  }
  if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("tolerances must be positive: " + spec);
  tol.*(it->second) = v;
}

struct CheckResult {
  std::string name;
  std::string status;   // pass, fail, skipped
  Json details = Json::object();
};

struct CommandResult {
  Json report;
  CsvTable samples = sample_table();
  bool pass = true;
};

namespace cli_detail {

inline std::vector<double> alpha_for(const RunConfig& cfg, std::size_t p) {
  if (cfg.alpha.size() == p) return cfg.alpha;
  if (cfg.alpha.size() == 1) return std::vector<double>(p, cfg.alpha.front());
  throw UsageError("--alpha needs one value or one per generator (" + std::to_string(p) + ")");
}

inline Json z_to_json(const LogPoint& z) {
  Json j = Json::array();
  for (const auto& c : z) j.push_back(complex_to_json(c));
  return j;
}

inline CheckResult check_decompose(const MonodromyDecomposition& dec) {
  bool window = true;
  for (const auto& b : dec.blocks)
    for (std::size_t j = 0; j < b.betas.size(); ++j)
      window = window && b.betas[j] > dec.alpha[j] - 1.0 && b.betas[j] <= dec.alpha[j];
  const bool ok = dec.reconstruction_residual <= 1e-8 && dec.commutator_residual <= 1e-9 && window;
  return {"decompose", ok ? "pass" : "fail",
          Json{{"reconstruction_residual", dec.reconstruction_residual},
               {"commutator_residual", dec.commutator_residual},
               {"exponents_in_window", window},
               {"blocks", dec.blocks.size()}}};
}

inline CheckResult check_dual(const VHSFamily& fam, const MonodromyDecomposition& dec, const Tolerances& tol) {
  std::vector<double> neg;
  for (double a : dec.alpha) neg.push_back(-a);
  const auto dual = decompose(dual_monodromy(fam.monodromy), neg);
  const auto rep = check_dual_pairing(dec, dual, tol.pairing);
  std::vector<LogPoint> ray;
  for (double x : {-0.1, -1.0, -4.0, -10.0}) ray.push_back(diagonal(fam.generators(), Complex(x, 0.3)));
  const double twisted = twisted_pairing_residual(dec, dual, ray);
  const bool ok = rep.ok && twisted <= tol.pairing;
  return {"dual_pairing", ok ? "pass" : "fail",
          Json{{"off_block_max", rep.off_block_max},
               {"matched_pairs", rep.matched_pairs},
               {"matched_min_singular", rep.matched_min_singular},
               {"twisted_pairing_residual", twisted}}};
}

inline CheckResult check_sv(const VHSFamily& fam, std::shared_ptr<const MonodromyDecomposition> dec,
                            const Tolerances& tol) {
  const auto rep = check_single_valuedness(fam, dec, tol);
  return {"single_valuedness", rep.pass ? "pass" : "fail",
          Json{{"max_residual", rep.max_residual}, {"entries", rep.entries}}};
}

inline CheckResult check_ext(const VHSFamily& fam, const MonodromyDecomposition& dec, const Tolerances& tol) {
  const auto psi = untwisted_map(fam, dec);
  const auto rep = check_extension(psi, zero_w(fam.nw), tol);
  Json rays = Json::array();
  for (const auto& r : rep.rays) {
    Json jr{{"angle", r.angle}, {"converged", r.converged}, {"successive_gap", r.successive_gap}};
    if (r.exact) {
      jr["order"] = nullptr;
    } else {
      jr["order"] = r.order;
    }
    if (!r.error.empty()) jr["error"] = r.error;
    rays.push_back(jr);
  }
  Json d{{"max_pairwise_gap", rep.max_pairwise_gap}, {"ranks_match", rep.ranks_match}, {"rays", rays}};
  if (rep.limit) d["limit"] = flag_to_json(*rep.limit);
  return {"extension", rep.pass ? "pass" : "fail", d};
}

inline CheckResult check_hor(const VHSFamily& fam, const OrbitData& orb, const Tolerances& tol) {
  const auto rep = check_orbit_horizontality(orb, fam.box.x_max, fam.box.rho, tol);
  return {"horizontality", rep.pass ? "pass" : "fail",
          Json{{"max_residual", rep.max_residual}, {"worst_z", z_to_json(rep.worst_z)}}};
}

inline CheckResult skipped(const std::string& name) {
  return {name, "skipped", Json{{"reason", "one-variable check; family has several log coordinates"}}};
}

inline CheckResult check_threshold(const VHSFamily& fam, const OrbitData& orb, const Tolerances& tol,
                                   CsvTable* samples) {
  if (fam.generators() != 1) return skipped("orbit_threshold");
  const auto rep = orbit_threshold(orb, fam.phd);
  if (samples)
    for (std::size_t i = 0; i < rep.xs.size(); ++i) add_sample(*samples, "margin", rep.xs[i], std::nullopt, 0.0, rep.margins[i]);
  const bool ok = rep.found && rep.c_hat <= tol.threshold_c && rep.monotone && rep.extra_period_ok;
  return {"orbit_threshold", ok ? "pass" : "fail",
          Json{{"found", rep.found},
               {"c_hat", rep.c_hat},
               {"monotone", rep.monotone},
               {"extra_period_ok", rep.extra_period_ok},
               {"margin_log_slope", rep.linear_slope}}};
}

inline CheckResult check_decay(const VHSFamily& fam, const MonodromyDecomposition& dec, const OrbitData& orb,
                               const RunConfig& cfg, CsvTable* samples) {
  if (fam.generators() != 1) return skipped("distance_decay");
  const double y = 0.7;
  const auto fit = distance_decay(fam, dec, orb, -30.0, -5.0, 60, y, cfg.threads);
  if (samples)
    for (const auto& [x, d] : fit.samples) add_sample(*samples, "distance", x, y, 0.0, d);
  const bool ok = fit.zero || (fit.delta > 0.0 && fit.delta >= fit.slack - cfg.tol.decay_delta);
  Json d{{"zero", fit.zero}, {"slack", fit.slack}};
  if (!fit.zero) {
    d["delta"] = fit.delta;
    d["beta"] = fit.beta;
    d["residual"] = fit.residual;
  }
  return {"distance_decay", ok ? "pass" : "fail", d};
}

inline CheckResult check_schmid(const VHSFamily& fam, CsvTable* samples) {
  if (fam.generators() != 1) return skipped("schmid_growth");
  const double y = 0.7;
  const auto fit = schmid_growth_check(fam, -400.0, -40.0, 40, y);
  if (samples)
    for (const auto& [x, v] : fit.samples) add_sample(*samples, "ad_norm", x, y, 0.0, v);
  const bool ok = std::isfinite(fit.beta_hat) && fit.beta_hat > -1e-6;
  return {"schmid_growth", ok ? "pass" : "fail", Json{{"beta_hat", fit.beta_hat}, {"residual", fit.residual}}};
}

inline CheckResult check_weights(const VHSFamily& fam, std::shared_ptr<const MonodromyDecomposition> dec,
                                 const Tolerances& tol) {
  const auto rep = check_grading(fam, dec, tol);
  Json entries = Json::array();
  for (const auto& e : rep.entries) {
    Json je{{"block", e.block}, {"beta", e.beta}, {"constant", e.est.constant}, {"beta_hat", e.est.beta_hat},
            {"logorder_hat", e.est.logorder_hat}, {"stderr", e.est.stderr_beta},
            {"window", Json::array({e.est.t_min, e.est.t_max})}};
    entries.push_back(je);
  }
  return {"grading", rep.pass ? "pass" : "fail",
          Json{{"ranks_match", rep.ranks_match}, {"max_beta_error", rep.max_beta_error}, {"entries", entries}}};
}

inline CheckResult check_higgs_bound(const VHSFamily& fam, const Tolerances& tol, CsvTable* samples) {
  const auto rep = check_higgs(fam, tol);
  if (samples)
    for (const auto& [x, v] : rep.samples) add_sample(*samples, "higgs", x, std::nullopt, 0.0, v);
  return {"higgs", rep.pass ? "pass" : "fail", Json{{"reference", rep.reference}, {"max_ratio", rep.max_ratio}}};
}

inline CheckResult check_random_monodromy(const RunConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> rd(1, 8), pd(1, 3);
  std::uniform_real_distribution<double> ad(-0.5, 0.5);
  double worst_rec = 0.0, worst_comm = 0.0;
  bool window = true;
  for (int k = 0; k < cfg.random_tuples; ++k) {
    const Index r = rd(rng);
    const std::size_t p = static_cast<std::size_t>(pd(rng));
    const auto tuple = random_monodromy(r, p, rng);
    std::vector<double> alpha;
    for (std::size_t j = 0; j < p; ++j) alpha.push_back(ad(rng));
    const auto dec = decompose(tuple, alpha);
    worst_rec = std::max(worst_rec, dec.reconstruction_residual);
    worst_comm = std::max(worst_comm, dec.commutator_residual);
    for (const auto& b : dec.blocks)
      for (std::size_t j = 0; j < p; ++j) window = window && b.betas[j] > alpha[j] - 1.0 && b.betas[j] <= alpha[j];
  }
  const bool ok = worst_rec <= 1e-8 && worst_comm <= 1e-9 && window;
  return {"random_monodromy", ok ? "pass" : "fail",
          Json{{"seed", cfg.seed},
               {"tuples", cfg.random_tuples},
               {"max_reconstruction_residual", worst_rec},
               {"max_commutator_residual", worst_comm},
               {"exponents_in_window", window}}};
}

inline Json check_to_json(const CheckResult& c) {
  Json j{{"name", c.name}, {"status", c.status}};
  for (const auto& [k, v] : c.details.items()) j[k] = v;
  return j;
}

inline CommandResult assemble(const RunConfig& cfg, const VHSFamily& fam, const std::vector<CheckResult>& checks,
                              Json extra = Json::object()) {
  CommandResult res;
  res.report = Json{{"schema_version", kSchemaVersion}, {"command", cfg.command}, {"family", fam.name},
                    {"generators", fam.generators()}, {"rank", fam.dim()}};
  for (const auto& [k, v] : extra.items()) res.report[k] = v;
  Json jc = Json::array();
  for (const auto& c : checks) {
    jc.push_back(check_to_json(c));
    if (c.status == "fail") res.pass = false;
  }
  res.report["checks"] = jc;
  res.report["pass"] = res.pass;
  return res;
}

}  // namespace cli_detail

inline CommandResult run_command(const RunConfig& cfg) {
  using namespace cli_detail;
  const VHSFamily fam = load_family(cfg.family);
  auto dec = std::make_shared<const MonodromyDecomposition>(decompose(fam.monodromy, alpha_for(cfg, fam.generators())));
  CommandResult res;
  if (cfg.command == "decompose") {
    auto dc = check_decompose(*dec);
    res = assemble(cfg, fam, {dc}, Json{{"decomposition", decomposition_to_json(*dec)}});
    return res;
  }
  if (cfg.command == "untwist") return assemble(cfg, fam, {check_ext(fam, *dec, cfg.tol), check_sv(fam, dec, cfg.tol)});
  const OrbitData orb = orbit_of(fam, *dec);
  CsvTable samples = sample_table();
  if (cfg.command == "orbit-check") {
    res = assemble(cfg, fam, {check_hor(fam, orb, cfg.tol), check_threshold(fam, orb, cfg.tol, &samples)});
  } else if (cfg.command == "decay") {
    res = assemble(cfg, fam, {check_decay(fam, *dec, orb, cfg, &samples), check_schmid(fam, &samples)});
  } else if (cfg.command == "weights") {
    res = assemble(cfg, fam, {check_weights(fam, dec, cfg.tol)});
  } else if (cfg.command == "suite") {
    res = assemble(cfg, fam,
                   {check_decompose(*dec), check_random_monodromy(cfg), check_sv(fam, dec, cfg.tol),
                    check_dual(fam, *dec, cfg.tol), check_ext(fam, *dec, cfg.tol), check_hor(fam, orb, cfg.tol),
                    check_threshold(fam, orb, cfg.tol, &samples), check_decay(fam, *dec, orb, cfg, &samples),
                    check_schmid(fam, &samples), check_weights(fam, dec, cfg.tol),
                    check_higgs_bound(fam, cfg.tol, &samples)},
                   Json{{"seed", cfg.seed}});
  } else {
    throw UsageError("unknown command: " + cfg.command);
  }
  res.samples = samples;
  return res;
}

/// Parses arguments, runs the command and writes reports.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Numerical checks for variations of Hodge structure near a normal crossing boundary", "nilorbit"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  std::vector<std::string> tol_overrides;
  app.add_option("--family", cfg.family, "registry name or path to a JSON manifest")->required();
  app.add_option("--alpha", cfg.alpha, "exponent window upper end(s), comma separated")->delimiter(',');
  app.add_option("--out", cfg.out, "directory for <command>.json and <command>_samples.csv");
  app.add_option("--seed", cfg.seed, "seed for randomized checks");
  app.add_option("--threads", cfg.threads, "worker threads (0 = available parallelism)");
  app.add_option("--tol", tol_overrides, "tolerance override name=value (repeatable)");
  app.add_option("--random-tuples", cfg.random_tuples, "random monodromy tuples in the suite")
      ->check(CLI::NonNegativeNumber);
  for (const char* name : {"decompose", "untwist", "orbit-check", "decay", "weights", "suite"})
    app.add_subcommand(name, std::string("run ") + name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    for (const auto& t : tol_overrides) apply_tolerance_override(cfg.tol, t);
    const CommandResult res = run_command(cfg);
    const std::string json = res.report.dump(2) + "\n";
    if (cfg.out.empty()) {
      out << json;
    } else {
      const std::filesystem::path dir(cfg.out);
      write_text_file(dir / (cfg.command + ".json"), json);
      if (!res.samples.empty()) write_text_file(dir / (cfg.command + "_samples.csv"), res.samples.str());
    }
    if (!res.pass) err << "verification failed\n";
    return res.pass ? kExitPass : kExitFailed;
  } catch (const UnknownFamily& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitContract;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace nilorbit
