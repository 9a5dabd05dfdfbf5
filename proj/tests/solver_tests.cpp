#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tsode/integrate.hpp"
#include "tsode/problems.hpp"

using namespace tsode;

TEST_CASE("order rule tracks the tolerance") {
  CHECK(choose_order(1e-10, 1e-10) == 13);
  CHECK(choose_order(1.0, 1.0) == 4);       // clamp from below
  CHECK(choose_order(1e-13, 1e-13) == 16);
  CHECK(choose_order(1e-6, 1e-12) == choose_order(1e-12, 1e-12));  // min wins
  CHECK(choose_order(1e-300, 1e-300) == 40);  // clamp from above
  CHECK_THROWS_AS(choose_order(0.0, 1e-6), Error);
}

TEST_CASE("step proposal uses the top two orders") {
  const std::vector<double> c{0.0, 0.0, 0.0, 0.0, 1e-4};  // p = 4
  const std::vector<std::span<const double>> rows{c};
  const std::vector<double> scale{1.0};
  const double h = propose_step(rows, scale, 4, 0.8, 1.0);
  CHECK_THAT(h, Catch::Matchers::WithinRel(0.8 * std::pow(kStepErrBudget * 1e4, 0.25), 1e-12));

  auto [ok, err] = step_accept(rows, h, scale, 4);
  CHECK(ok);
  CHECK(err <= kStepErrBudget);
  CHECK_THAT(err, Catch::Matchers::WithinRel(1e-4 * std::pow(h, 4.0), 1e-12));

  auto [bad, err2] = step_accept(rows, 20.0, scale, 4);
  CHECK_FALSE(bad);
  CHECK(err2 > 1.0);
}

TEST_CASE("vanishing top orders double the previous step") {
  const std::vector<double> c{3.0, 1.0, 0.0, 0.0, 0.0};
  const std::vector<std::span<const double>> rows{c};
  const std::vector<double> scale{1.0};
  CHECK(propose_step(rows, scale, 4, 0.8, 0.7) == 1.4);
}

TEST_CASE("closed-form problem is hit to within a factor of the tolerance") {
  ProblemInstance inst = problem_expneg().instantiate();
  for (double tol : {1e-6, 1e-9, 1e-12}) {
    CAPTURE(tol);
    SolveConfig cfg;
    cfg.atol = cfg.rtol = tol;
    cfg.t_begin = 0.0;
    cfg.t_end = 1.0;
    const Solution sol = solve(inst.cl, inst.ics, cfg);
    CHECK(std::fabs(sol.final_state[0] - std::log(2.0)) <= 10.0 * tol);
  }
}

TEST_CASE("backward integration returns to the start") {
  ProblemInstance inst = problem_expneg().instantiate();
  SolveConfig fwd;
  fwd.atol = fwd.rtol = 1e-12;
  fwd.t_begin = 0.0;
  fwd.t_end = 1.0;
  const Solution out = solve(inst.cl, inst.ics, fwd);

  SolveConfig back = fwd;
  back.t_begin = 1.0;
  back.t_end = 0.0;
  const Solution ret = solve(inst.cl, out.final_state, back);
  CHECK(std::fabs(ret.final_state[0] - 0.0) <= 1e-10);
  for (const StepRecord& r : ret.records) CHECK(r.h < 0.0);
}

TEST_CASE("the final step lands exactly on t_end") {
  ProblemInstance inst = problem_expneg().instantiate();
  SolveConfig cfg;
  cfg.atol = cfg.rtol = 1e-9;
  cfg.t_begin = 0.0;
  cfg.t_end = 0.37;
  const Solution sol = solve(inst.cl, inst.ics, cfg);
  const auto m = sol.mesh();
  CHECK(m.back().first == 0.37);
  CHECK(m.front().first == 0.0);
  CHECK(m.size() == sol.segments.size() + 1);
}

TEST_CASE("dense output is exact at mesh points and accurate between") {
  ProblemInstance inst = problem_expneg().instantiate();
  SolveConfig cfg;
  cfg.atol = cfg.rtol = 1e-11;
  cfg.t_begin = 0.0;
  cfg.t_end = 1.0;
  const Solution sol = solve(inst.cl, inst.ics, cfg);
  for (const Segment& seg : sol.segments)
    CHECK(dense_eval(sol, seg.t0)[0] == seg.coeffs[0][0]);
  CHECK(dense_eval(sol, 1.0) == sol.final_state);
  for (double t : {0.1, 0.25, 0.5, 0.77, 0.93})
    CHECK(std::fabs(dense_eval(sol, t)[0] - std::log1p(t)) <= 1e-9);
  CHECK_THROWS_AS(dense_eval(sol, -0.01), Error);
  CHECK_THROWS_AS(dense_eval(sol, 1.01), Error);
}

TEST_CASE("energy is conserved on the spring pendulum at tight tolerance") {
  ProblemInstance inst = problem_spring_pendulum().instantiate();
  SolveConfig cfg;
  cfg.atol = cfg.rtol = 1e-12;
  cfg.t_begin = inst.t_begin;
  cfg.t_end = inst.t_end;
  const Solution sol = solve(inst.cl, inst.ics, cfg);
  const auto& [name, energy] = inst.conserved[0];
  CHECK(name == "energy");
  CHECK(std::fabs(energy(sol.final_state) - energy(inst.ics)) <= 1e-8);
}

TEST_CASE("momenta are conserved on the seven-body problem") {
  ProblemInstance inst = problem_pleiades().instantiate();
  SolveConfig cfg;
  cfg.atol = cfg.rtol = 1e-10;
  cfg.t_begin = inst.t_begin;
  cfg.t_end = inst.t_end;
  const Solution sol = solve(inst.cl, inst.ics, cfg);
  for (const auto& [name, q] : inst.conserved) {
    CAPTURE(name);
    CHECK(std::fabs(q(sol.final_state) - q(inst.ics)) <= 1e-7);
  }
}

TEST_CASE("an equilibrium start solves in one doubled step") {
  ProblemInstance inst = problem_brusselator(8).instantiate();
  std::vector<double> flat;
  for (int i = 0; i < 8; ++i) {
    flat.push_back(1.0);
    flat.push_back(3.0);
  }
  SolveConfig cfg;
  cfg.atol = cfg.rtol = 1e-10;
  cfg.t_begin = 0.0;
  cfg.t_end = 10.0;
  const Solution sol = solve(inst.cl, flat, cfg);
  CHECK(sol.accepted == 1);
  CHECK(sol.failed == 0);
  CHECK(sol.final_state == flat);
}

TEST_CASE("order override and bounds") {
  ProblemInstance inst = problem_expneg().instantiate();
  SolveConfig cfg;
  cfg.atol = cfg.rtol = 1e-9;
  cfg.t_begin = 0.0;
  cfg.t_end = 1.0;
  cfg.order_override = 20;
  const Solution sol = solve(inst.cl, inst.ics, cfg);
  CHECK(sol.p == 20);
  for (const Segment& seg : sol.segments) CHECK(int(seg.coeffs[0].size()) == 21);

  cfg.order_override = 1;
  CHECK_THROWS_AS(solve(inst.cl, inst.ics, cfg), Error);
}

TEST_CASE("configuration errors are rejected up front") {
  ProblemInstance inst = problem_expneg().instantiate();
  SolveConfig cfg;
  cfg.t_begin = cfg.t_end = 0.0;
  CHECK_THROWS_AS(solve(inst.cl, inst.ics, cfg), Error);

  SolveConfig span;
  span.t_end = 1.0;
  CHECK_THROWS_AS(solve(inst.cl, std::vector<double>{}, span), Error);

  SolveConfig steps;
  steps.t_end = 1.0;
  steps.max_steps = 0;
  CHECK_THROWS_AS(solve(inst.cl, inst.ics, steps), Error);

  SolveConfig nan;
  nan.t_end = 1.0;
  CHECK_THROWS_AS(solve(inst.cl, std::vector<double>{std::nan("")}, nan), Error);
}

TEST_CASE("tighter tolerances do not lose accuracy") {
  ProblemInstance inst = problem_expneg().instantiate();
  double prev_err = 1.0;
  for (double tol : {1e-4, 1e-7, 1e-10, 1e-13}) {
    SolveConfig cfg;
    cfg.atol = cfg.rtol = tol;
    cfg.t_begin = 0.0;
    cfg.t_end = 1.0;
    const Solution sol = solve(inst.cl, inst.ics, cfg);
    const double err = std::fabs(sol.final_state[0] - std::log(2.0));
    CHECK(err <= std::max(prev_err, 10.0 * tol));
    prev_err = err;
  }
}
