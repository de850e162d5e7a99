#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ebsa/checks.hpp"
#include "ebsa/corpus.hpp"
#include "ebsa/ebsa.hpp"
#include "ebsa/errors.hpp"
#include "ebsa/metrics.hpp"
#include "ebsa/problem_file.hpp"
#include "ebsa/report_io.hpp"
#include "ebsa/rng.hpp"

namespace {

using namespace ebsa;

void add_solver_flags(CLI::App* cmd, SolverConfig& cfg,
                      std::string& config_path) {
  cmd->add_option("--eps", cfg.eps, "overall tolerance / slack overwrite guard");
  cmd->add_option("--r1", cfg.r1, "initial smoothing parameter");
  cmd->add_option("--rho1", cfg.rho1, "initial lower-level penalty");
  cmd->add_option("--c1", cfg.c1, "initial upper-level penalty");
  cmd->add_option("--beta", cfg.beta, "line-search backtracking ratio");
  cmd->add_option("--delta0", cfg.delta0, "sufficient-decrease factor");
  cmd->add_option("--delta1", cfg.delta1, "schedule shrink factor");
  cmd->add_option("--delta2", cfg.delta2, "failed-cycle shrink factor");
  cmd->add_option("--rho-bar", cfg.rho_bar, "floor for rho");
  cmd->add_option("--gamma1", cfg.gamma1, "initial inner tolerance");
  cmd->add_option("--gamma-floor", cfg.gamma_floor,
                  "smallest tolerance an inner solve is asked for");
  cmd->add_option("--eps1", cfg.eps1, "initial multiplier-test tolerance");
  cmd->add_option("--tau1", cfg.tau1, "initial direction-norm threshold");
  cmd->add_option("--s1", cfg.s1, "initial slack fill value");
  cmd->add_option("--lambda-max", cfg.lambda_max, "multiplier clamp (upper)");
  cmd->add_option("--mu-min", cfg.mu_min, "equality multiplier clamp (lower)");
  cmd->add_option("--mu-max", cfg.mu_max, "equality multiplier clamp (upper)");
  cmd->add_option("--max-outer", cfg.max_outer, "hard outer-pass cap");
  cmd->add_option("--max-backtracks", cfg.max_backtracks,
                  "line-search trial cap");
  cmd->add_option("--max-step4-failures", cfg.max_step4_failures,
                  "consecutive failed feasibility cycles allowed");
  cmd->add_option("--max-inner-failures", cfg.max_inner_failures,
                  "consecutive failed inner solves allowed");
  cmd->add_option("--max-sens-fallbacks", cfg.max_sens_fallbacks,
                  "consecutive singular sensitivity systems allowed");
  cmd->add_option("--inner-max-iterations", cfg.inner.max_iterations,
                  "inner Newton iteration cap");
  cmd->add_option("--inner-armijo-slope", cfg.inner.armijo_slope,
                  "inner sufficient-decrease slope");
  cmd->add_option("--inner-backtrack", cfg.inner.backtrack,
                  "inner backtracking ratio");
  cmd->add_option("--inner-max-backtracks", cfg.inner.max_backtracks,
                  "inner line-search trial cap");
  cmd->add_option("--inner-levenberg-tau0", cfg.inner.levenberg_tau0,
                  "first diagonal shift on a bad inner step");
  cmd->add_option("--inner-max-shift-retries", cfg.inner.max_shift_retries,
                  "diagonal shift retries");
  cmd->add_option("--res-tol", cfg.stop.res_tol, "residual stopping tolerance");
  cmd->add_option("--k-cap", cfg.stop.k_cap, "iteration-count stopping rule");
  cmd->add_option("--flat-after", cfg.stop.flat_after,
                  "flat-residual rule activation");
  cmd->add_option("--flat-tol", cfg.stop.flat_tol, "flat-residual threshold");
  cmd->add_option("--diverged-after", cfg.stop.diverged_after,
                  "divergence rule activation");
  cmd->add_option("--diverged-res", cfg.stop.diverged_res,
                  "divergence residual threshold");
  cmd->add_option("--slow-after", cfg.stop.slow_after,
                  "slow-progress rule activation");
  cmd->add_option("--slow-tol", cfg.stop.slow_tol, "slow-progress threshold");
  cmd->add_option("--lowres-after", cfg.stop.lowres_after,
                  "low-residual rule activation");
  cmd->add_option("--lowres-res", cfg.stop.lowres_res,
                  "low-residual threshold");
  cmd->add_option("--config", config_path,
                  "key=value file mirroring these flag names");
}

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  for (const std::string& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

// Turns key=value lines into flags appended to args, skipping keys the
// command line already sets, so explicit flags always win.
void splice_config_args(const CLI::App* cmd, const std::string& path,
                        std::vector<std::string>& args) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const std::string flag = "--" + key;
    if (key.empty() || cmd->get_option_no_throw(flag) == nullptr)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown key '" + key + "' for '" +
                               cmd->get_name() + "'");
    if (flag_given(args, flag)) continue;
    args.push_back(flag);
    args.push_back(value);
  }
}

struct StartPoint {
  Vector x0, y0;
};

StartPoint perturbed_start(const BilevelProblem& prob, std::uint64_t seed,
                           int rep) {
  NormalRng rng(mix_seed(seed, prob.name, rep));
  StartPoint st{prob.x0, prob.y0};
  for (double& v : st.x0) v += 0.01 * rng.next();
  for (double& v : st.y0) v += 0.01 * rng.next();
  return st;
}

RunRecord make_record(const BilevelProblem& prob, std::uint64_t seed, int rep,
                      const StartPoint& start, const SolveReport& rep_out) {
  RunRecord rec;
  rec.problem = prob.name;
  rec.seed = seed;
  rec.rep = rep;
  rec.x0 = start.x0;
  rec.y0 = start.y0;
  rec.status = to_string(rep_out.status);
  rec.stop_rule = rep_out.stop_rule;
  rec.outer_iterations = rep_out.k;
  rec.res = rep_out.res;
  rec.x_final = rep_out.x;
  rec.y_final = rep_out.y;
  rec.F_val = prob.F(rep_out.x, rep_out.y);
  rec.f_val = prob.f(rep_out.x, rep_out.y);
  rec.wall_seconds = rep_out.totals.wall_seconds;

  InfeaseBreakdown inf = infeasibility(prob, rep_out.x, rep_out.y);
  rec.infease_total = inf.total;
  rec.optimality_gap = inf.optimality_gap;
  rec.gap_valid = inf.gap_valid;
  rec.applicable = inf.applicable;

  if (prob.reference) {
    rec.has_reference = true;
    Ratios rr = ratios(rec.F_val, rec.f_val, prob.reference->F_star,
                       prob.reference->f_star);
    rec.R_F = rr.R_F;
    rec.R_f = rr.R_f;
  } else {
    rec.R_F = std::numeric_limits<double>::quiet_NaN();
    rec.R_f = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

const BilevelProblem* resolve_problem(const std::string& name,
                                      std::vector<BilevelProblem>& loaded) {
  for (const std::string& n : corpus_names())
    if (n == name) return &corpus_get(name);
  if (std::filesystem::exists(name)) {
    loaded.push_back(load_problem_file(name));
    return &loaded.back();
  }
  return nullptr;
}

int cmd_solve(const std::string& name, std::uint64_t seed,
              const std::string& out_dir, bool trace,
              const SolverConfig& cfg) {
  std::vector<BilevelProblem> loaded;
  const BilevelProblem* prob = nullptr;
  try {
    prob = resolve_problem(name, loaded);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  if (!prob) {
    std::fprintf(stderr, "error: unknown problem '%s'\n", name.c_str());
    return 1;
  }

  StartPoint start = perturbed_start(*prob, seed, 0);
  SolveReport rep = solve(*prob, cfg, start.x0, start.y0);
  RunRecord rec = make_record(*prob, seed, 0, start, rep);

  std::filesystem::create_directories(out_dir);
  nlohmann::json j;
  j["command"] = "solve";
  j["problem"] = prob->name;
  j["seed"] = seed;
  j["config"] = config_json(cfg);
  j["record"] = run_record_json(rec);
  j["result"] = solve_report_json(rep);
  write_text_file(out_dir + "/report.json", j.dump(2) + "\n");
  if (trace)
    write_trace_csv(out_dir + "/trace_" + prob->name + "_0.csv", rep);

  std::printf("%s: status=%s stop=%s k=%d res=%.3e F=%.9g infease=%.3e%s\n",
              prob->name.c_str(), rec.status.c_str(), rec.stop_rule.c_str(),
              rec.outer_iterations, rec.res, rec.F_val, rec.infease_total,
              rec.applicable ? "" : " (not applicable)");
  return rep.status == SolveStatus::ResConverged ? 0 : 2;
}

int cmd_batch(int reps, std::uint64_t seed, int workers,
              const std::string& filter, const std::string& out_dir,
              bool trace, const SolverConfig& cfg) {
  std::vector<std::string> names;
  for (const std::string& n : corpus_names())
    if (filter.empty() || n.find(filter) != std::string::npos)
      names.push_back(n);
  if (names.empty()) {
    std::fprintf(stderr, "error: filter '%s' matches no corpus problem\n",
                 filter.c_str());
    return 1;
  }
  if (reps < 1 || workers < 1) {
    std::fprintf(stderr, "error: reps and workers must be at least 1\n");
    return 1;
  }

  struct Task {
    std::string name;
    int rep;
  };
  std::vector<Task> tasks;
  for (const std::string& n : names)
    for (int rep = 0; rep < reps; ++rep) tasks.push_back({n, rep});

  std::vector<RunRecord> records(tasks.size());
  std::vector<SolveReport> reports(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      try {
        const BilevelProblem& prob = corpus_get(t.name);
        StartPoint start = perturbed_start(prob, seed, t.rep);
        reports[i] = solve(prob, cfg, start.x0, start.y0);
        records[i] = make_record(prob, seed, t.rep, start, reports[i]);
      } catch (const std::exception& e) {
        records[i].problem = t.name;
        records[i].rep = t.rep;
        records[i].seed = seed;
        records[i].status = std::string("error: ") + e.what();
        records[i].gap_valid = false;
        records[i].applicable = false;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  std::filesystem::create_directories(out_dir);
  write_summary_csv(out_dir + "/summary.csv", records);
  write_fig_files(out_dir, records);
  if (trace)
    for (std::size_t i = 0; i < tasks.size(); ++i)
      write_trace_csv(out_dir + "/trace_" + tasks[i].name + "_" +
                          std::to_string(tasks[i].rep) + ".csv",
                      reports[i]);

  nlohmann::json j;
  j["command"] = "batch";
  j["seed"] = seed;
  j["reps"] = reps;
  j["filter"] = filter;
  j["config"] = config_json(cfg);
  nlohmann::json recs = nlohmann::json::array();
  int applicable = 0;
  for (const RunRecord& r : records) {
    recs.push_back(run_record_json(r));
    applicable += r.applicable ? 1 : 0;
  }
  j["records"] = recs;
  j["applicable_count"] = applicable;
  j["problem_count"] = names.size();
  write_text_file(out_dir + "/report.json", j.dump(2) + "\n");

  std::printf("batch: %zu problems x %d reps, %d/%zu runs applicable\n",
              names.size(), reps, applicable, records.size());
  return 0;
}

int cmd_check(double tol, std::uint64_t seed, int points) {
  CheckSuiteResult result = run_corpus_checks(tol, seed, points);
  if (result.all_pass) {
    std::printf("check: %zu entries, all within tol %.1e\n",
                result.entries.size(), tol);
    return 0;
  }
  std::printf("check: FAILURES\n%s",
              format_check_table(result, true).c_str());
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel solver harness: smoothed lower-level KKT system with "
               "an augmented-Lagrangian outer loop"};
  app.require_subcommand(1);

  std::vector<std::string> args(argv + 1, argv + argc);

  // The config file is resolved by hand before the parse so its values can be
  // spliced in as flags; anything given explicitly keeps precedence.
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) {
        std::fprintf(stderr, "error: --config needs a file path\n");
        return 1;
      }
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }

  SolverConfig cfg;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  bool trace = false;

  CLI::App* solve_cmd =
      app.add_subcommand("solve", "solve one problem (corpus name or file)");
  std::string problem;
  solve_cmd->add_option("problem", problem, "corpus name or problem file path")
      ->required();
  solve_cmd->add_option("--seed", seed, "seed for the start perturbation");
  solve_cmd->add_option("--out", out_dir, "output directory");
  solve_cmd->add_flag("--trace", trace, "write per-iteration CSV trace");
  add_solver_flags(solve_cmd, cfg, config_path);

  CLI::App* batch_cmd =
      app.add_subcommand("batch", "run the corpus repeatedly and aggregate");
  int reps = 5;
  int workers = 1;
  std::string filter;
  batch_cmd->add_option("--reps", reps, "repetitions per problem");
  batch_cmd->add_option("--seed", seed, "base seed");
  batch_cmd->add_option("--workers", workers, "parallel solve workers");
  batch_cmd->add_option("--filter", filter, "substring filter on names");
  batch_cmd->add_option("--out", out_dir, "output directory");
  batch_cmd->add_flag("--trace", trace, "write per-iteration CSV traces");
  add_solver_flags(batch_cmd, cfg, config_path);

  CLI::App* check_cmd =
      app.add_subcommand("check", "validate corpus derivatives and identities");
  double tol = 1e-5;
  int points = 25;
  check_cmd->add_option("--tol", tol, "relative error tolerance");
  check_cmd->add_option("--seed", seed, "probe-point seed");
  check_cmd->add_option("--points", points, "probe points per problem");

  if (!config_path.empty() && !args.empty()) {
    const CLI::App* cmd = nullptr;
    if (args.front() == "solve") cmd = solve_cmd;
    if (args.front() == "batch") cmd = batch_cmd;
    if (args.front() == "check") cmd = check_cmd;
    if (cmd != nullptr) {
      try {
        splice_config_args(cmd, config_path, args);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
      }
    }
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve_cmd->parsed())
      return cmd_solve(problem, seed, out_dir, trace, cfg);
    if (batch_cmd->parsed())
      return cmd_batch(reps, seed, workers, filter, out_dir, trace, cfg);
    if (check_cmd->parsed()) return cmd_check(tol, seed, points);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
