#include "sblasso/cli.hpp"

#include "sblasso/io.hpp"
#include "sblasso/prox.hpp"
#include "sblasso/simd/kernels.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <thread>

#ifndef SBLASSO_VERSION
#define SBLASSO_VERSION "0.0.0"
#endif

namespace sblasso {

using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw DomainError(what + ": '" + s + "' is not a finite number");
}

bool needs_seed(const RunConfig& c) {
  return c.subcommand == "simulate" || ((c.subcommand == "fit" || c.subcommand == "trajectory") && c.mode == "sbl");
}

void validate(const RunConfig& c) {
  LikelihoodSpec::parse(c.family);
  const HyperPrior prior = HyperPrior::parse(c.prior);
  const FitMode mode = parse_fit_mode(c.mode);
  parse_ablation(c.ablation);
  if (prior.unbounded_objective() && !c.allow_unbounded_prior) {
    throw UnboundedObjectiveError("prior '" + c.prior +
                                  "' leaves the objective unbounded; pass --allow-unbounded-prior to use it anyway");
  }
  const bool has_grid = c.tau_max.has_value();
  if (c.tau && has_grid) throw DomainError("--tau and --tau-grid are mutually exclusive");
  if (c.tau) require(*c.tau > 0.0, "--tau must be positive");
  if (has_grid) TauGrid{*c.tau_max, *c.tau_min, c.tau_points}.values();
  require(c.max_iter >= 1, "--max-iter must be at least 1");
  require(c.tol > 0.0, "--tol must be positive");
  require(c.mc_samples >= 2 && c.mc_samples % 2 == 0, "--mc-samples must be an even number of at least 2");
  require(c.level > 0.0 && c.level < 1.0, "--level must lie in (0,1)");
  require(c.threads >= 0, "--threads must be non-negative");
  if (needs_seed(c) && !c.seed) throw DomainError("--seed is required for " + c.subcommand + " in this mode");

  if (c.subcommand == "fit" || c.subcommand == "trajectory") {
    require(!c.data_path.empty(), "--data is required for " + c.subcommand);
    if (mode == FitMode::lasso_baseline) {
      require(LikelihoodSpec::parse(c.family).family == Family::normal, "lasso-baseline mode needs --family normal");
    }
  }
  if (c.subcommand == "fit") require(c.tau.has_value(), "fit needs --tau");
  if (c.subcommand == "trajectory") {
    require(has_grid, "trajectory needs --tau-grid max,min,n");
    require(!c.out.empty(), "trajectory needs --out");
  }
  if (c.subcommand == "simulate") {
    require(c.tau.has_value(), "simulate needs --tau");
    require(c.reps >= 1, "--reps must be at least 1");
    require(c.n >= 1 && c.p >= 1, "--n and --p must be positive");
    require(c.active.size() <= std::size_t(c.p), "--active has more values than --p");
    require(c.noise_sd > 0.0, "--noise-sd must be positive");
    if (mode == FitMode::lasso_baseline) {
      require(LikelihoodSpec::parse(c.family).family == Family::normal, "lasso-baseline mode needs --family normal");
    }
  }
  if (c.subcommand == "prox") validated(ProxQuery{c.x0, c.lambda0, c.s_x, c.s_lambda});
  if (!c.trace.empty()) require(c.subcommand == "fit" && mode != FitMode::lasso_baseline,
                                "--trace is only available for fit in map or sbl mode");
}

VistaConfig vista_config(const RunConfig& c) {
  VistaConfig v;
  v.tau = c.tau.value_or(1.0);
  v.max_iter = c.max_iter;
  v.tol = c.tol;
  v.ablation = parse_ablation(c.ablation);
  v.allow_nonconvex_prox = c.allow_nonconvex_prox;
  v.allow_unbounded_prior = c.allow_unbounded_prior;
  return v;
}

json config_json(const RunConfig& c) {
  json j = {{"subcommand", c.subcommand}, {"family", c.family},   {"prior", c.prior},
            {"mode", c.mode},             {"mc_samples", c.mc_samples}, {"max_iter", c.max_iter},
            {"tol", c.tol},               {"ablation", c.ablation}, {"level", c.level}};
  if (!c.data_path.empty()) {
    j["data"] = c.data_path;
    j["response"] = c.response;
    j["unpenalized"] = c.unpenalized;
  }
  if (c.tau) j["tau"] = *c.tau;
  if (c.tau_max) j["tau_grid"] = {{"max", *c.tau_max}, {"min", *c.tau_min}, {"n", c.tau_points}};
  if (c.subcommand == "simulate") {
    j["reps"] = c.reps;
    j["n"] = c.n;
    j["p"] = c.p;
    j["active"] = c.active;
    j["noise_sd"] = c.noise_sd;
  }
  if (c.subcommand == "prox") {
    j["x0"] = c.x0;
    j["lambda0"] = c.lambda0;
    j["s_x"] = c.s_x;
    j["s_lambda"] = c.s_lambda;
    j["oracle"] = c.oracle;
  }
  return j;
}

void write_manifest(const RunConfig& c, const std::vector<std::string>& outputs) {
  if (c.out.empty()) return;
  json m = {{"tool", "sblasso"},
            {"version", SBLASSO_VERSION},
            {"argv", c.argv},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"config", config_json(c)},
            {"outputs", outputs}};
  write_json(c.out + ".manifest.json", m);
}

void emit(const RunConfig& c, const json& j) {
  if (c.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(c.out, j);
  }
}

int run_fit(const RunConfig& c) {
  const LikelihoodSpec lik = LikelihoodSpec::parse(c.family);
  const GlmProblem problem = load_csv(c.data_path, c.response, lik, c.unpenalized);
  const HyperPrior prior = HyperPrior::parse(c.prior);
  const VistaConfig cfg = vista_config(c);
  const FitMode mode = parse_fit_mode(c.mode);
  const std::uint64_t seed = c.seed.value_or(0);
  std::vector<std::string> outputs;
  json j;
  if (mode == FitMode::map) {
    const MapFit fit = fit_map(problem, prior, cfg, nullptr, !c.trace.empty());
    j = map_fit_json(problem, fit, cfg.tau, seed);
    if (!c.trace.empty()) write_trace_csv(c.trace, fit.run.trace);
  } else if (mode == FitMode::sbl) {
    SblOptions so;
    so.mc_samples = c.mc_samples;
    so.seed = seed;
    const SblFit fit = fit_sbl(problem, prior, cfg, so, nullptr, !c.trace.empty());
    j = sbl_fit_json(problem, fit, cfg.tau, seed, c.level);
    if (!c.trace.empty()) write_trace_csv(c.trace, fit.run.trace);
  } else {
    const auto recs = lasso_baseline(problem, {cfg.tau}, c.max_iter);
    j = lasso_fit_json(problem, recs.front());
  }
  emit(c, j);
  if (!c.out.empty()) outputs.push_back(c.out);
  if (!c.trace.empty()) outputs.push_back(c.trace);
  write_manifest(c, outputs);
  return 0;
}

int run_trajectory_cmd(const RunConfig& c) {
  const LikelihoodSpec lik = LikelihoodSpec::parse(c.family);
  const GlmProblem problem = load_csv(c.data_path, c.response, lik, c.unpenalized);
  const HyperPrior prior = HyperPrior::parse(c.prior);
  TrajectoryOptions opt;
  opt.mode = parse_fit_mode(c.mode);
  opt.cfg = vista_config(c);
  opt.mc_samples = c.mc_samples;
  opt.seed = c.seed.value_or(0);
  opt.warm_start = !c.cold_start;
  opt.credible_level = c.level;
  const TauGrid grid{*c.tau_max, *c.tau_min, c.tau_points};
  const auto recs = run_trajectory(problem, prior, grid, opt);
  write_trajectory_csv(c.out, problem, recs);
  write_manifest(c, {c.out});
  return 0;
}

int run_simulate(const RunConfig& c) {
  SimOptions opt;
  opt.likelihood = LikelihoodSpec::parse(c.family);
  opt.mode = parse_fit_mode(c.mode);
  opt.n_reps = c.reps;
  opt.tau = *c.tau;
  opt.seed = *c.seed;
  opt.n = c.n;
  opt.p = c.p;
  opt.active_values = c.active;
  opt.noise_sd = c.noise_sd;
  opt.mc_samples = c.mc_samples;
  opt.threads = c.threads > 0 ? c.threads : int(std::max(1u, std::thread::hardware_concurrency()));
  opt.credible_level = c.level;
  opt.cfg = vista_config(c);
  opt.prior = HyperPrior::parse(c.prior);

  std::vector<std::string> outputs;
  if (!c.data_out.empty()) {
    WorkingExampleOptions wo;
    wo.n = c.n;
    wo.p = c.p;
    wo.active_values = c.active;
    wo.noise_sd = c.noise_sd;
    wo.seed = replicate_seed(opt.seed, 0);
    wo.likelihood = opt.likelihood;
    save_csv(c.data_out, generate_working_example(wo).problem);
    outputs.push_back(c.data_out);
  }
  const SimMetrics m = simulate_table(opt);
  emit(c, metrics_json(opt, m, c.timing));
  if (!c.out.empty()) outputs.insert(outputs.begin(), c.out);
  write_manifest(c, outputs);
  return 0;
}

int run_prox(const RunConfig& c) {
  const ProxQuery q{c.x0, c.lambda0, c.s_x, c.s_lambda};
  const ProxResult r = prox_vc_l1(q);
  json j = {{"x0", c.x0},
            {"lambda0", c.lambda0},
            {"s_x", c.s_x},
            {"s_lambda", c.s_lambda},
            {"x_star", r.x_star},
            {"lambda_star", r.lambda_star},
            {"tie", r.tie},
            {"cost", prox_cost(r.x_star, r.lambda_star, q)}};
  if (r.tie) {
    // The other optimum sits at lambda = 0 with x left unshrunk.
    const ProxQuery v = validated(q);
    j["optima"] = json::array({{{"x", r.x_star}, {"lambda", r.lambda_star}, {"cost", prox_cost(r.x_star, r.lambda_star, v)}},
                               {{"x", v.x0}, {"lambda", 0.0}, {"cost", prox_cost(v.x0, 0.0, v)}}});
  }
  if (c.oracle) {
    const LatticeMinimum lm = prox_lattice_minimum(q);
    j["oracle"] = {{"lattice_cost", lm.cost},
                   {"lattice_x", lm.x},
                   {"lattice_lambda", lm.lambda},
                   {"cost_gap", prox_cost(r.x_star, r.lambda_star, q) - lm.cost},
                   {"within_spacing", std::fabs(lm.x - r.x_star) <= lm.spacing_x * (1 + 1e-9) &&
                                          std::fabs(lm.lambda - r.lambda_star) <= lm.spacing_lambda * (1 + 1e-9)}};
  }
  emit(c, j);
  write_manifest(c, {c.out});
  return 0;
}

}  // namespace

std::optional<RunConfig> parse_args(const std::vector<std::string>& args) {
  RunConfig c;
  c.argv = args;
  CLI::App app{"Sparse regression with learned l1 weights and the Sparse Bayesian Lasso", "sblasso"};
  app.set_version_flag("--version", SBLASSO_VERSION);
  app.require_subcommand(1);

  std::string tau_grid, active, unpenalized, seed_text;
  auto add_model = [&](CLI::App* s) {
    s->add_option("--family", c.family, "normal | bernoulli | poisson | nb | cauchy");
    s->add_option("--prior", c.prior, "half-cauchy:a | half-gaussian:m,b | exponential:a | power-inverse:a | uniform");
    s->add_flag("--allow-unbounded-prior", c.allow_unbounded_prior, "permit uniform and power-inverse priors");
    s->add_flag("--allow-nonconvex-prox", c.allow_nonconvex_prox, "do not clamp the prox step product below 1");
    s->add_option("--mode", c.mode, "map | sbl | lasso-baseline");
    s->add_option("--mc-samples", c.mc_samples, "Monte Carlo draws (even; antithetic pairs)");
    s->add_option("--seed", seed_text, "random seed");
    s->add_option("--max-iter", c.max_iter);
    s->add_option("--tol", c.tol);
    s->add_option("--ablation", c.ablation, "full | no-precond | no-nesterov | plain-gradient");
    s->add_option("--level", c.level, "credible level");
    s->add_option("--out", c.out, "output file");
  };
  auto add_data = [&](CLI::App* s) {
    s->add_option("--data", c.data_path, "CSV with a header row");
    s->add_option("--response", c.response, "response column name or 0-based index");
    s->add_option("--unpenalized", unpenalized, "comma-separated columns left unpenalized");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit one tau");
  add_data(fit);
  add_model(fit);
  fit->add_option("--tau", c.tau);
  fit->add_option("--trace", c.trace, "per-iteration CSV (iter, cost, step, nnz)");

  CLI::App* traj = app.add_subcommand("trajectory", "warm-started fits along a log-spaced tau grid");
  add_data(traj);
  add_model(traj);
  traj->add_option("--tau-grid", tau_grid, "max,min,n");
  traj->add_option("--tau", c.tau);
  traj->add_flag("--cold-start", c.cold_start, "solve every grid point from scratch");

  CLI::App* sim = app.add_subcommand("simulate", "replicated working-example study");
  add_model(sim);
  sim->add_option("--tau", c.tau);
  sim->add_option("--tau-grid", tau_grid);
  sim->add_option("--reps", c.reps);
  sim->add_option("--n", c.n);
  sim->add_option("--p", c.p);
  sim->add_option("--active", active, "comma-separated nonzero coefficients");
  sim->add_option("--noise-sd", c.noise_sd);
  sim->add_option("--threads", c.threads, "worker threads (0: all cores)");
  sim->add_option("--data-out", c.data_out, "write the first replicate's dataset as CSV");
  sim->add_flag("--timing", c.timing, "include wall_seconds in the metrics");

  CLI::App* prox = app.add_subcommand("prox", "evaluate the joint (x, lambda) prox");
  prox->add_option("--x0", c.x0)->required();
  prox->add_option("--lambda0", c.lambda0)->required();
  prox->add_option("--sx", c.s_x)->required();
  prox->add_option("--slambda", c.s_lambda)->required();
  prox->add_flag("--oracle", c.oracle, "compare against a 2001x2001 lattice");
  prox->add_option("--out", c.out);

  std::string manifest;
  CLI::App* rerun = app.add_subcommand("rerun", "repeat the run recorded in a manifest");
  rerun->add_option("manifest", manifest)->required();

  std::vector<std::string> full{"sblasso"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> ptrs;
  for (auto& s : full) ptrs.push_back(s.data());
  try {
    app.parse(int(ptrs.size()), ptrs.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::CallForVersion&) {
    std::cout << SBLASSO_VERSION << '\n';
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw DomainError(std::string("usage: ") + e.what());
  }

  if (rerun->parsed()) {
    const json m = read_json(manifest);
    if (!m.contains("argv") || !m["argv"].is_array()) throw DomainError(manifest + ": no argv recorded");
    return parse_args(m["argv"].get<std::vector<std::string>>());
  }
  for (CLI::App* s : {fit, traj, sim, prox}) {
    if (s->parsed()) c.subcommand = s->get_name();
  }
  if (!seed_text.empty()) {
    require(seed_text.find_first_not_of("0123456789") == std::string::npos, "--seed must be a non-negative integer");
    c.seed = std::stoull(seed_text);
  }
  if (!tau_grid.empty()) {
    const auto parts = split_list(tau_grid);
    require(parts.size() == 3, "--tau-grid expects max,min,n");
    c.tau_max = parse_number(parts[0], "--tau-grid max");
    c.tau_min = parse_number(parts[1], "--tau-grid min");
    const double n = parse_number(parts[2], "--tau-grid n");
    require(n == std::floor(n) && n >= 2 && n <= 1e6, "--tau-grid n must be an integer of at least 2");
    c.tau_points = int(n);
  }
  if (!active.empty()) {
    c.active.clear();
    for (const auto& a : split_list(active)) c.active.push_back(parse_number(a, "--active"));
  }
  c.unpenalized = split_list(unpenalized);
  if (c.subcommand == "simulate") require(!c.tau_max, "simulate takes --tau, not --tau-grid");
  validate(c);
  return c;
}

int run(const RunConfig& c) {
  if (c.subcommand == "fit") return run_fit(c);
  if (c.subcommand == "trajectory") return run_trajectory_cmd(c);
  if (c.subcommand == "simulate") return run_simulate(c);
  if (c.subcommand == "prox") return run_prox(c);
  throw DomainError("unknown subcommand '" + c.subcommand + "'");
}

int cli_main(const std::vector<std::string>& args) {
  auto fail = [](const char* kind, const std::string& msg, int code) {
    std::cerr << json{{"error", kind}, {"message", msg}}.dump() << '\n';
    return code;
  };
  try {
    const auto cfg = parse_args(args);
    if (!cfg) return 0;
    return run(*cfg);
  } catch (const UnboundedObjectiveError& e) {
    return fail("unbounded_objective", e.what(), 3);
  } catch (const NumericError& e) {
    return fail("numeric_error", e.what(), 4);
  } catch (const DomainError& e) {
    return fail("domain_error", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("error", e.what(), 1);
  }
}

}  // namespace sblasso
