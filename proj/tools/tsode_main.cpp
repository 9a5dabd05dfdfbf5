// Command-line front end: solve a problem, dump its code list, run the
// structural checks, or sweep tolerances into a CSV.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsode/tsode.hpp"

namespace {

std::map<std::string, double> parse_params(const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const std::string& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw tsode::Error("--param expects name=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return out;
}

std::vector<double> parse_tols(const std::string& list) {
  std::vector<double> tols;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) tols.push_back(std::stod(item));
  if (tols.empty()) throw tsode::Error("--tols expects a comma-separated list");
  return tols;
}

int cmd_solve(const tsode::ProblemInstance& inst, double atol, double rtol,
              std::optional<int> order, std::optional<double> t_end) {
  tsode::SolveConfig cfg;
  cfg.atol = atol;
  cfg.rtol = rtol;
  cfg.order_override = order;
  cfg.t_begin = inst.t_begin;
  cfg.t_end = t_end.value_or(inst.t_end);
  tsode::Solution sol = tsode::solve(inst.cl, inst.ics, cfg);

  std::printf("problem        %s  (%d states, %d lines)\n", inst.name.c_str(), inst.cl.n_state,
              int(inst.cl.lines.size()));
  std::printf("order          %d\n", sol.p);
  std::printf("span           [%g, %g]\n", cfg.t_begin, cfg.t_end);
  std::printf("steps          %lld accepted, %lld rejected\n", sol.accepted, sol.failed);
  std::printf("build time     %.3e s\n", inst.build_seconds);
  std::printf("integration    %.3e s\n", sol.integ_seconds);
  std::printf("final state\n");
  for (std::size_t i = 0; i < sol.final_state.size(); ++i)
    std::printf("  x%-4zu %.17g\n", i + 1, sol.final_state[i]);
  for (const auto& [qname, fn] : inst.conserved) {
    const double q0 = fn(inst.ics);
    const double q1 = fn(sol.final_state);
    std::printf("drift          |%s(end) - %s(0)| = %.3e\n", qname.c_str(), qname.c_str(),
                std::fabs(q1 - q0));
  }
  if (inst.exact) {
    const std::vector<double> ref = inst.exact(cfg.t_end);
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      err = std::max(err, std::fabs(sol.final_state[i] - ref[i]));
    std::printf("exact error    %.3e\n", err);
  }
  return 0;
}

int cmd_dump(const tsode::ProblemInstance& inst, const std::string& format) {
  if (format == "json")
    std::cout << inst.cl.dump_json() << "\n";
  else
    std::cout << inst.cl.dump();
  return 0;
}

int cmd_analyze(const tsode::ProblemInstance& inst) {
  tsode::DaeView view = tsode::dae_view(inst.cl);
  tsode::SigmaMatrix s = view.sigma();
  tsode::Offsets off = tsode::codelist_offsets(view);

  tsode::KernelWorkspace ws(inst.cl, 1);
  ws.run(inst.ics, inst.t_begin);
  tsode::DenseMatrix J = tsode::system_jacobian(view, off, ws);
  tsode::ValidityReport rep = tsode::check_valid(s, off, &J);

  std::printf("problem   %s\n", inst.name.c_str());
  std::printf("size      %d rows\n", view.size());
  std::printf("verdict   %s\n", rep.verdict.c_str());
  tsode::Transversal t = tsode::hvt(s);
  std::printf("hvt value %lld\n", t.value);
  std::printf("offsets   all d = 1; c = 0 on differential rows, 1 elsewhere\n");
  std::printf("jacobian  unit lower triangular: %s\n",
              tsode::is_unit_lower_triangular(J) ? "yes" : "no");
  if (view.size() <= 14) {
    std::vector<std::string> names = view.var_names();
    std::cout << tsode::render_sigma(s, &off, &names, &names);
  }
  return 0;
}

int cmd_sweep(const tsode::ProblemInstance& inst, const std::string& tols_csv,
              const std::string& csv_path, double ref_tol) {
  const std::vector<double> tols = parse_tols(tols_csv);
  std::fprintf(stderr, "building reference at tol %.1e and sweeping %zu tolerances\n", ref_tol,
               tols.size());
  const std::vector<tsode::RunReport> rows = tsode::run_suite(inst, tols, ref_tol);
  std::fprintf(stderr, "list build time %.3e s\n", inst.build_seconds);
  if (csv_path.empty()) {
    tsode::write_csv(std::cout, rows);
  } else {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw tsode::Error("cannot open '" + csv_path + "' for writing");
    tsode::write_csv(f, rows);
    std::fprintf(stderr, "wrote %s\n", csv_path.c_str());
  }
  for (const tsode::RunReport& r : rows)
    if (!r.ok) std::fprintf(stderr, "tol %.1e failed: %s\n", r.tol, r.error.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Taylor-series ODE solver on compiled code lists"};
  app.require_subcommand(1);

  std::string problem = "spring-pendulum";
  int N = 20;
  std::vector<std::string> params;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", problem, "problem name")->capture_default_str();
    sub->add_option("--N", N, "grid size for grid problems")->capture_default_str();
    sub->add_option("--param", params, "override a parameter, name=value");
  };

  CLI::App* sc_solve = app.add_subcommand("solve", "integrate and print the final state");
  double tol = 1e-10, atol = -1.0, rtol = -1.0;
  std::optional<int> order;
  std::optional<double> t_end;
  add_common(sc_solve);
  sc_solve->add_option("--tol", tol, "sets atol and rtol together")->capture_default_str();
  sc_solve->add_option("--atol", atol, "absolute tolerance");
  sc_solve->add_option("--rtol", rtol, "relative tolerance");
  sc_solve->add_option("--order", order, "fixed Taylor order instead of the tolerance rule");
  sc_solve->add_option("--t-end", t_end, "integrate to this time instead of the default");

  CLI::App* sc_dump = app.add_subcommand("dump-cl", "print the compiled code list");
  std::string format = "table";
  add_common(sc_dump);
  sc_dump->add_option("--format", format, "table or json")
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();

  CLI::App* sc_analyze = app.add_subcommand("analyze", "run the structural checks");
  add_common(sc_analyze);

  CLI::App* sc_sweep = app.add_subcommand("sweep", "tolerance sweep, CSV output");
  std::string tols_csv = "1e-3,1e-5,1e-7,1e-9,1e-11,1e-13";
  std::string csv_path;
  double ref_tol = 3e-14;
  add_common(sc_sweep);
  sc_sweep->add_option("--tols", tols_csv, "comma-separated tolerance list")
      ->capture_default_str();
  sc_sweep->add_option("--csv", csv_path, "write CSV here instead of stdout");
  sc_sweep->add_option("--ref-tol", ref_tol, "tolerance of the reference run")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    tsode::ProblemDef def = tsode::problem_by_name(problem, N);
    tsode::ProblemInstance inst = def.instantiate(parse_params(params));
    if (app.got_subcommand(sc_solve)) {
      const double a = atol > 0 ? atol : tol;
      const double r = rtol > 0 ? rtol : tol;
      return cmd_solve(inst, a, r, order, t_end);
    }
    if (app.got_subcommand(sc_dump)) return cmd_dump(inst, format);
    if (app.got_subcommand(sc_analyze)) return cmd_analyze(inst);
    if (app.got_subcommand(sc_sweep)) return cmd_sweep(inst, tols_csv, csv_path, ref_tol);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
