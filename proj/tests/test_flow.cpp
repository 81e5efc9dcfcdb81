#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gradflow/cumulant.hpp"
#include "gradflow/flow.hpp"
#include "gradflow/measure.hpp"

using namespace gradflow;

namespace {

const Grid kGrid(2000);

LogDensity density(const char* name) { return from_potential(builtin(name), kGrid); }

double sup_gap(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

LogDensity run_fr(const LogDensity& rho0, const TargetField& field, double eps, double t) {
  FlowState s(FlowKind::kFR, rho0, eps);
  const auto steps = std::llround(t / eps);
  for (long long k = 0; k < steps; ++k) fr_step(s, field.v);
  return s.density();
}

void check_non_increasing(const FlowTrace& trace) {
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    CHECK(trace.rows[i].kl <= trace.rows[i - 1].kl + 1e-12);
  }
}

FlowRunConfig config(FlowKind kind, const char* target, const char* init, double eps, double horizon) {
  FlowRunConfig c;
  c.kind = kind;
  c.target = builtin(target);
  c.init = builtin(init);
  c.step_size = eps;
  c.horizon = horizon;
  return c;
}

}  // namespace

TEST_CASE("flow kind names") {
  for (auto k : {FlowKind::kFR, FlowKind::kW, FlowKind::kWFR, FlowKind::kFRExact}) {
    CHECK(parse_flow_kind(to_string(k)) == k);
  }
  CHECK(to_string(FlowKind::kFRExact) == "FR_exact");
  CHECK_THROWS_AS(parse_flow_kind("JKO"), std::invalid_argument);
}

TEST_CASE("the target is a fixed point of FR and WFR") {
  for (const char* target : {"V1", "V2"}) {
    const LogDensity pi = density(target);
    const TargetField f = TargetField::sample(builtin(target), kGrid);
    FlowState fr(FlowKind::kFR, pi, 1e-3);
    fr_step(fr, f.v);
    CHECK(sup_gap(fr.x(), pi.logp()) <= 1e-14);
    FlowState wfr(FlowKind::kWFR, pi, 1e-6);
    wfr_step(wfr, f.v, f.grad, f.lap);
    CHECK(sup_gap(wfr.x(), pi.logp()) <= 20 * 1e-6 * kGrid.spacing() * kGrid.spacing());
    CHECK(fr.time() == 1e-3);
  }
}

TEST_CASE("the target is a fixed point of W up to stencil error") {
  const double eps = 1e-6, h2 = kGrid.spacing() * kGrid.spacing();
  for (const char* target : {"V1", "V2"}) {
    const LogDensity pi = density(target);
    const TargetField f = TargetField::sample(builtin(target), kGrid);
    FlowState w(FlowKind::kW, pi, eps);
    w_step(w, f.grad, f.lap);
    CHECK(sup_gap(w.x(), pi.logp()) <= 50 * eps * h2);
  }
}

TEST_CASE("one FR step from uniform lowers the KL") {
  const LogDensity pi = density("V2"), u = density("Vd");
  const TargetField f = TargetField::sample(builtin("V2"), kGrid);
  FlowState s(FlowKind::kFR, u, 1e-6);
  fr_step(s, f.v);
  CHECK(kl(s.density(), pi) < kl(u, pi));
  CHECK(std::abs(s.mass() - 1) <= 1e-12);
}

TEST_CASE("WFR without transport terms is FR bit for bit") {
  const LogDensity u = density("Vd");
  const TargetField f = TargetField::sample(builtin("V1"), kGrid);
  const std::vector<double> zero(kGrid.size(), 0.0);
  FlowState fr(FlowKind::kFR, u, 1e-3), wfr(FlowKind::kWFR, u, 1e-3);
  fr_step(fr, f.v);
  wfr_step(wfr, f.v, zero, zero);
  REQUIRE(fr.x().size() == wfr.x().size());
  for (std::size_t i = 0; i < fr.x().size(); ++i) CHECK(fr.x()[i] == wfr.x()[i]);
}

TEST_CASE("FR Euler error is first order") {
  // Measured: gap(t=1) / eps = 1.2302 for eps in {1e-5, 5e-6}.
  const double c_measured = 1.2302;
  const LogDensity pi = density("V1"), rho0 = density("Va");
  const TargetField f = TargetField::sample(builtin("V1"), kGrid);
  const LogDensity exact = fr_exact(rho0, pi, 1.0);
  const double gap1 = sup_gap(run_fr(rho0, f, 1e-5, 1.0).logp(), exact.logp());
  const double gap2 = sup_gap(run_fr(rho0, f, 5e-6, 1.0).logp(), exact.logp());
  CHECK(gap1 <= 5 * 1e-5 * c_measured);
  CHECK(gap1 / gap2 == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("FR runs with halved steps converge to each other") {
  const LogDensity rho0 = density("Va");
  const TargetField f = TargetField::sample(builtin("V1"), kGrid);
  const auto a = run_fr(rho0, f, 1e-4, 1.0), b = run_fr(rho0, f, 5e-5, 1.0), c = run_fr(rho0, f, 2.5e-5, 1.0);
  const double ratio = sup_gap(a.logp(), b.logp()) / sup_gap(b.logp(), c.logp());
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("W from uniform toward pi2 conserves mass and lowers KL") {
  const LogDensity pi = density("V2");
  const TargetField f = TargetField::sample(builtin("V2"), kGrid);
  FlowState s(FlowKind::kW, density("Vd"), 1e-6);
  CHECK_FALSE(s.renormalizes());
  double prev = kl(s.density(), pi);
  for (int k = 1; k <= 100000; ++k) {
    w_step(s, f.grad, f.lap);
    if (k % 5000 == 0) {
      const double now = kl(s.density(), pi);
      CHECK(now < prev);
      prev = now;
    }
  }
  CHECK(s.mass_drift() <= 1e-3);
  CHECK(s.mass_drift() == doctest::Approx(std::abs(1 - s.mass())));
  CHECK(s.time() == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("renormalized W keeps unit mass and records drift") {
  const TargetField f = TargetField::sample(builtin("V2"), kGrid);
  FlowState s(FlowKind::kW, density("Vd"), 1e-6, true);
  for (int k = 0; k < 2000; ++k) w_step(s, f.grad, f.lap);
  CHECK(std::abs(s.mass() - 1) <= 1e-12);
  CHECK(s.mass_drift() > 0.0);
}

TEST_CASE("WFR and FR from pi_b stay close at early times") {
  // Measured relative gap: 1.9% at t = 0.15, 4.7% at t = 0.5.
  auto c = config(FlowKind::kFR, "V1", "Vb", 2.5e-6, 0.5);
  c.record_dt = 0.05;
  const FlowTrace fr = run(c);
  c.kind = FlowKind::kWFR;
  const FlowTrace wfr = run(c);
  REQUIRE(fr.rows.size() == wfr.rows.size());
  for (std::size_t i = 0; i < fr.rows.size(); ++i) {
    const double rel = std::abs(wfr.rows[i].kl / fr.rows[i].kl - 1);
    CHECK(rel <= (fr.rows[i].t <= 0.15 + 1e-9 ? 0.02 : 0.05));
  }
  check_non_increasing(fr);
  check_non_increasing(wfr);
}

TEST_CASE("exact FR solution") {
  const LogDensity pi = density("V1"), rho0 = density("Va");
  CHECK(sup_gap(fr_exact(rho0, pi, 0.0).logp(), rho0.logp()) == 0.0);
  CHECK(sup_gap(fr_exact(rho0, pi, 30.0).logp(), pi.logp()) <= 1e-10);
  for (double s : {0.1, 0.7, 2.0}) {
    for (double t : {0.2, 1.5}) {
      const auto two = fr_exact(fr_exact(rho0, pi, s), pi, t);
      CHECK(sup_gap(two.logp(), fr_exact(rho0, pi, s + t).logp()) <= 1e-12);
    }
  }
  CHECK(std::abs(fr_exact(rho0, pi, 0.9).mass() - 1) <= 1e-12);
  CHECK_THROWS_AS(fr_exact(rho0, pi, -1.0), std::invalid_argument);
}

TEST_CASE("annealing path") {
  const LogDensity pi = density("V1"), rho0 = density("Va");
  CHECK(sup_gap(annealing_path(rho0, pi, 0.0).logp(), rho0.logp()) == 0.0);
  CHECK(sup_gap(annealing_path(rho0, pi, 1.0).logp(), pi.logp()) == 0.0);
  const auto mid = from_potential(interpolate(builtin("Va"), builtin("V1"), 0.5), kGrid);
  CHECK(sup_gap(annealing_path(rho0, pi, 0.5).logp(), mid.logp()) <= 1e-12);
  const double t = 1.3;
  CHECK(sup_gap(annealing_path(rho0, pi, -std::expm1(-t)).logp(), fr_exact(rho0, pi, t).logp()) <= 1e-13);
  CHECK_THROWS_AS(annealing_path(rho0, pi, 1.5), std::invalid_argument);
}

TEST_CASE("closed-form runs need no step size") {
  auto c = config(FlowKind::kFRExact, "V1", "Va", 0.0, 2.0);
  c.q_list = {2.0, 4.0};
  const FlowTrace t = run(c);
  REQUIRE(t.rows.size() == 201);
  CHECK(t.rows.back().t == 2.0);
  CHECK(t.rows[0].kl == doctest::Approx(kl(density("Va"), density("V1"))));
  check_non_increasing(t);
  for (const auto& r : t.rows) {
    CHECK(r.renyi.size() == 2);
    CHECK(std::abs(r.renyi[0] - std::log1p(r.chi2)) <= 1e-10 * std::max(1.0, r.renyi[0]));
  }
  validate(t);
}

TEST_CASE("FR from pi_a reaches the predicted asymptote") {
  auto c = config(FlowKind::kFR, "V1", "Va", 2.5e-6, 7.5);
  c.record_dt = 0.25;
  std::uint64_t steps = 0;
  double worst_mass = 0.0;
  c.on_step = [&](const FlowState& s) {
    if (++steps % 1000 == 0) worst_mass = std::max(worst_mass, std::abs(s.mass() - 1));
  };
  const FlowTrace t = run(c);
  CHECK(steps == 3000000);
  CHECK(worst_mass <= 1e-12);
  const double kappa2 = build_table(density("Va"), density("V1")).kappa(2);
  CHECK(std::abs(t.rows.back().kl / (0.5 * kappa2 * std::exp(-15.0)) - 1) <= 0.05);
  check_non_increasing(t);
}

TEST_CASE("numeric FR follows the closed form within the Euler envelope") {
  auto c = config(FlowKind::kFR, "V2", "Vd", 1e-6, 3.0);
  c.record_dt = 0.25;
  const FlowTrace t = run(c);
  const LogDensity pi = density("V2"), rho0 = density("Vd");
  const double kl0 = kl(rho0, pi);
  for (const auto& r : t.rows) {
    const double exact = kl(fr_exact(rho0, pi, r.t), pi);
    CHECK(std::abs(r.kl - exact) <= 10 * 1e-6 * r.t * (1 + kl0));
  }
  check_non_increasing(t);
}

TEST_CASE("runs are deterministic and record exact step times") {
  auto c = config(FlowKind::kWFR, "V2", "Vc", 4e-6, 0.05);
  c.extra_record_times = {0.0123456, 0.037};
  const FlowTrace a = run(c), b = run(c);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].t == b.rows[i].t);
    CHECK(a.rows[i].kl == b.rows[i].kl);
    CHECK(a.rows[i].chi2 == b.rows[i].chi2);
  }
  bool saw_extra = false;
  for (const auto& r : a.rows) {
    const double k = std::round(r.t / 4e-6);
    CHECK(r.t == k * 4e-6);
    saw_extra = saw_extra || r.t == 3086 * 4e-6;
  }
  CHECK(saw_extra);
  validate(a);
}

TEST_CASE("stability guard and divergence reporting") {
  const double h2 = kGrid.spacing() * kGrid.spacing();
  CHECK(cfl_limit(kGrid) == 0.5 * h2);
  CHECK_THROWS_AS(check_cfl(FlowKind::kW, h2, kGrid, false), std::invalid_argument);
  CHECK_THROWS_AS(check_cfl(FlowKind::kWFR, h2, kGrid, false), std::invalid_argument);
  CHECK_NOTHROW(check_cfl(FlowKind::kW, h2, kGrid, true));
  CHECK_NOTHROW(check_cfl(FlowKind::kFR, 1.0, kGrid, false));
  CHECK_NOTHROW(check_cfl(FlowKind::kW, 2.5e-6, kGrid, false));

  auto c = config(FlowKind::kW, "V2", "Vc", 4 * h2, 0.05);
  CHECK_THROWS_AS(run(c), std::invalid_argument);
  c.force_cfl = true;
  try {
    run(c);
    FAIL("expected a divergence");
  } catch (const FlowRunError& e) {
    CHECK(e.partial().failed);
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 0.05);
    CHECK_FALSE(e.partial().rows.empty());
  }
}

TEST_CASE("state preconditions") {
  const LogDensity u = density("Vd");
  const TargetField f = TargetField::sample(builtin("V1"), kGrid);
  CHECK_THROWS_AS(FlowState(FlowKind::kFRExact, u, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(FlowState(FlowKind::kFR, u, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(FlowState(FlowKind::kFR, u, 1e-3, false), std::invalid_argument);
  FlowState w(FlowKind::kW, u, 1e-7);
  CHECK_THROWS_AS(fr_step(w, f.v), std::invalid_argument);
  FlowState fr(FlowKind::kFR, u, 1e-3);
  CHECK_THROWS_AS(w_step(fr, f.grad, f.lap), std::invalid_argument);
  CHECK_THROWS_AS(wfr_step(fr, f.v, f.grad, f.lap), std::invalid_argument);
  CHECK_THROWS_AS(fr_step(fr, std::vector<double>(10, 0.0)), std::invalid_argument);
}
