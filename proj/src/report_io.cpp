#include "ebsa/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "ebsa/errors.hpp"

namespace ebsa {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_vec(const Vector& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

nlohmann::json config_json(const SolverConfig& cfg) {
  nlohmann::json j;
  j["eps"] = cfg.eps;
  j["r1"] = cfg.r1;
  j["rho1"] = cfg.rho1;
  j["c1"] = cfg.c1;
  j["beta"] = cfg.beta;
  j["delta0"] = cfg.delta0;
  j["delta1"] = cfg.delta1;
  j["delta2"] = cfg.delta2;
  j["rho_bar"] = cfg.rho_bar;
  j["gamma1"] = cfg.gamma1;
  j["gamma_floor"] = cfg.gamma_floor;
  j["eps1"] = cfg.eps1;
  j["tau1"] = cfg.tau1;
  j["s1"] = cfg.s1;
  j["lambda_max"] = cfg.lambda_max;
  j["mu_min"] = cfg.mu_min;
  j["mu_max"] = cfg.mu_max;
  j["max_outer"] = cfg.max_outer;
  j["max_backtracks"] = cfg.max_backtracks;
  j["max_step4_failures"] = cfg.max_step4_failures;
  j["max_inner_failures"] = cfg.max_inner_failures;
  j["max_sens_fallbacks"] = cfg.max_sens_fallbacks;
  j["inner_max_iterations"] = cfg.inner.max_iterations;
  j["inner_armijo_slope"] = cfg.inner.armijo_slope;
  j["inner_backtrack"] = cfg.inner.backtrack;
  j["inner_max_backtracks"] = cfg.inner.max_backtracks;
  j["inner_levenberg_tau0"] = cfg.inner.levenberg_tau0;
  j["inner_max_shift_retries"] = cfg.inner.max_shift_retries;
  j["res_tol"] = cfg.stop.res_tol;
  j["k_cap"] = cfg.stop.k_cap;
  j["flat_after"] = cfg.stop.flat_after;
  j["flat_tol"] = cfg.stop.flat_tol;
  j["diverged_after"] = cfg.stop.diverged_after;
  j["diverged_res"] = cfg.stop.diverged_res;
  j["slow_after"] = cfg.stop.slow_after;
  j["slow_tol"] = cfg.stop.slow_tol;
  j["lowres_after"] = cfg.stop.lowres_after;
  j["lowres_res"] = cfg.stop.lowres_res;
  return j;
}

nlohmann::json run_record_json(const RunRecord& rec) {
  nlohmann::json j;
  j["problem"] = rec.problem;
  j["seed"] = rec.seed;
  j["rep"] = rec.rep;
  j["x0"] = rec.x0;
  j["y0"] = rec.y0;
  j["status"] = rec.status;
  j["stop_rule"] = rec.stop_rule;
  j["outer_iterations"] = rec.outer_iterations;
  j["res"] = rec.res;
  j["F"] = rec.F_val;
  j["f"] = rec.f_val;
  j["has_reference"] = rec.has_reference;
  j["R_F"] = rec.R_F;
  j["R_f"] = rec.R_f;
  j["infease_total"] = rec.infease_total;
  j["optimality_gap"] = rec.optimality_gap;
  j["gap_valid"] = rec.gap_valid;
  j["applicable"] = rec.applicable;
  j["wall_seconds"] = rec.wall_seconds;
  j["x"] = rec.x_final;
  j["y"] = rec.y_final;
  return j;
}

nlohmann::json solve_report_json(const SolveReport& rep) {
  nlohmann::json j;
  j["status"] = to_string(rep.status);
  j["stop_rule"] = rep.stop_rule;
  j["x"] = rep.x;
  j["y"] = rep.y;
  j["s"] = rep.s;
  j["lambda"] = rep.lambda;
  j["mu"] = rep.mu;
  j["res"] = rep.res;
  j["r"] = rep.r;
  j["rho"] = rep.rho;
  j["c"] = rep.c;
  j["gamma"] = rep.gamma;
  j["tau"] = rep.tau;
  j["eps_k"] = rep.eps_k;
  j["k"] = rep.k;
  nlohmann::json totals;
  totals["passes"] = rep.totals.passes;
  totals["feasible_passes"] = rep.totals.feasible_passes;
  totals["infeasible_passes"] = rep.totals.infeasible_passes;
  totals["multiplier_updates"] = rep.totals.multiplier_updates;
  totals["inner_iterations"] = rep.totals.inner_iterations;
  totals["inner_failures"] = rep.totals.inner_failures;
  totals["sensitivity_fallbacks"] = rep.totals.sensitivity_fallbacks;
  totals["wall_seconds"] = rep.totals.wall_seconds;
  j["totals"] = totals;
  nlohmann::json hist = nlohmann::json::array();
  for (const HistoryRow& row : rep.history) {
    nlohmann::json h;
    h["k"] = row.k;
    h["res"] = row.res;
    h["dnorm"] = row.dnorm;
    h["sigma"] = row.sigma;
    h["theta"] = row.theta;
    h["r"] = row.r;
    h["rho"] = row.rho;
    h["c"] = row.c;
    h["gamma"] = row.gamma;
    h["alpha"] = row.alpha;
    h["feasible"] = row.feasible;
    h["wall_seconds"] = row.wall_seconds;
    hist.push_back(h);
  }
  j["history"] = hist;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open for writing: " + path);
  os << content;
}

void write_trace_csv(const std::string& path, const SolveReport& rep) {
  std::string out =
      "k,res,dnorm,sigma,theta,r,rho,c,gamma,alpha,feasible,wall_seconds\n";
  for (const HistoryRow& row : rep.history) {
    out += std::to_string(row.k);
    out += ',';
    out += fmt(row.res);
    out += ',';
    out += fmt(row.dnorm);
    out += ',';
    out += fmt(row.sigma);
    out += ',';
    out += fmt(row.theta);
    out += ',';
    out += fmt(row.r);
    out += ',';
    out += fmt(row.rho);
    out += ',';
    out += fmt(row.c);
    out += ',';
    out += fmt(row.gamma);
    out += ',';
    out += fmt(row.alpha);
    out += ',';
    out += row.feasible ? '1' : '0';
    out += ',';
    out += fmt(row.wall_seconds);
    out += '\n';
  }
  write_text_file(path, out);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

struct Agg {
  std::vector<double> F, f, R_F, R_f, infease, gap, seconds, res;
  std::vector<double> iters;
  int applicable_count = 0;
  bool has_reference = false;
  bool all_gaps_valid = true;
};

std::string record_row(const RunRecord& r) {
  std::string out;
  out += r.problem;
  out += ',' + std::to_string(r.rep);
  out += ',' + std::to_string(r.seed);
  out += ',' + r.status;
  out += ',' + r.stop_rule;
  out += ',' + std::to_string(r.outer_iterations);
  out += ',' + fmt(r.res);
  out += ',' + fmt(r.F_val);
  out += ',' + fmt(r.f_val);
  out += ',' + fmt(r.R_F);
  out += ',' + fmt(r.R_f);
  out += ',' + fmt(r.infease_total);
  out += ',' + fmt(r.optimality_gap);
  out += ',' + std::string(r.gap_valid ? "1" : "0");
  out += ',' + std::string(r.applicable ? "1" : "0");
  out += ',';  // applicable_count only on aggregate rows
  out += ',' + fmt(r.wall_seconds);
  out += ",\"" + join_vec(r.x0) + "\"";
  out += ",\"" + join_vec(r.y0) + "\"";
  out += ",\"" + join_vec(r.x_final) + "\"";
  out += ",\"" + join_vec(r.y_final) + "\"";
  out += '\n';
  return out;
}

std::string agg_row(const std::string& problem, const char* kind,
                    const Agg& agg, bool best) {
  auto pick = [best](const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (best) return *std::min_element(v.begin(), v.end());
    return median(v);
  };
  std::string out;
  out += problem;
  out += ',';
  out += kind;
  out += ",,,,";  // seed, status, stop_rule unset on aggregates
  out += fmt(pick(agg.iters));
  out += ',' + fmt(pick(agg.res));
  out += ',' + fmt(pick(agg.F));
  out += ',' + fmt(pick(agg.f));
  out += ',' + fmt(pick(agg.R_F));
  out += ',' + fmt(pick(agg.R_f));
  out += ',' + fmt(pick(agg.infease));
  out += ',' + fmt(pick(agg.gap));
  out += ',' + std::string(agg.all_gaps_valid ? "1" : "0");
  out += ',';
  out += ',' + std::to_string(agg.applicable_count);
  out += ',' + fmt(pick(agg.seconds));
  out += ",,,,\n";
  return out;
}

}  // namespace

void write_summary_csv(const std::string& path,
                       const std::vector<RunRecord>& records) {
  std::string out =
      "problem,rep,seed,status,stop_rule,outer_iterations,res,F,f,R_F,R_f,"
      "infease_total,optimality_gap,gap_valid,applicable,applicable_count,"
      "wall_seconds,x0,y0,x,y\n";
  std::vector<std::string> order;
  std::map<std::string, Agg> by_problem;
  for (const RunRecord& r : records) {
    out += record_row(r);
    if (by_problem.find(r.problem) == by_problem.end())
      order.push_back(r.problem);
    Agg& a = by_problem[r.problem];
    a.F.push_back(r.F_val);
    a.f.push_back(r.f_val);
    if (r.has_reference) {
      a.has_reference = true;
      a.R_F.push_back(r.R_F);
      a.R_f.push_back(r.R_f);
    }
    a.infease.push_back(r.infease_total);
    a.gap.push_back(r.optimality_gap);
    a.seconds.push_back(r.wall_seconds);
    a.res.push_back(r.res);
    a.iters.push_back(static_cast<double>(r.outer_iterations));
    a.applicable_count += r.applicable ? 1 : 0;
    a.all_gaps_valid = a.all_gaps_valid && r.gap_valid;
  }
  for (const std::string& name : order) {
    out += agg_row(name, "best", by_problem[name], true);
    out += agg_row(name, "median", by_problem[name], false);
  }
  write_text_file(path, out);
}

void write_fig_files(const std::string& dir,
                     const std::vector<RunRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, Agg> by_problem;
  for (const RunRecord& r : records) {
    if (by_problem.find(r.problem) == by_problem.end())
      order.push_back(r.problem);
    Agg& a = by_problem[r.problem];
    if (r.has_reference) {
      a.R_F.push_back(r.R_F);
      a.R_f.push_back(r.R_f);
    }
    if (r.gap_valid) a.infease.push_back(r.infease_total);
    a.seconds.push_back(r.wall_seconds);
  }
  auto write_series = [&dir](const std::string& name,
                             std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
      out += std::to_string(i + 1) + " " + fmt(values[i]) + "\n";
    write_text_file(dir + "/" + name, out);
  };
  std::vector<double> rF, rf, inf, tim;
  for (const std::string& name : order) {
    const Agg& a = by_problem[name];
    if (!a.R_F.empty()) {
      rF.push_back(median(a.R_F));
      rf.push_back(median(a.R_f));
    }
    if (!a.infease.empty()) inf.push_back(median(a.infease));
    tim.push_back(median(a.seconds));
  }
  write_series("fig_rF.dat", rF);
  write_series("fig_rf.dat", rf);
  write_series("fig_infease.dat", inf);
  write_series("fig_time.dat", tim);
}

}  // namespace ebsa
