#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "gradflow/potential.hpp"

using namespace gradflow;
using std::numbers::pi;

namespace {

Potential random_trig(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-3.0, 3.0);
  std::uniform_int_distribution<int> freq(1, 4), count(0, 4), kind(0, 1);
  std::vector<TrigTerm> terms;
  const int m = count(rng);
  for (int j = 0; j < m; ++j) {
    terms.push_back({amp(rng), kind(rng) ? TrigKind::kSin : TrigKind::kCos, freq(rng)});
  }
  return Potential::trig(terms);
}

}  // namespace

TEST_CASE("builtin potentials at reference points") {
  CHECK(builtin("V1").value(0.0) == doctest::Approx(2.5));
  CHECK(builtin("Vc").value(pi) == doctest::Approx(-6.0));
  for (double x : {-3.0, -1.0, 0.0, 0.4, 2.9}) {
    CHECK(builtin("Vd").value(x) == 0.0);
    CHECK(builtin("Va").value(x) == doctest::Approx(-builtin("V1").value(x)));
    CHECK(builtin("Vb").value(x) == doctest::Approx(2.5 * std::cos(2 * x)));
    CHECK(builtin("V2").value(x) == doctest::Approx(-6 * std::cos(x)));
    CHECK(builtin("Vc").value(x) == doctest::Approx(-builtin("V2").value(x)));
  }
  CHECK(builtin_names().size() == 6);
  CHECK_THROWS_AS(builtin("V3"), std::invalid_argument);
}

TEST_CASE("analytic derivatives on the grid") {
  const Grid g(2000);
  const auto grad2 = builtin("V2").eval_grad(g);
  const auto lap1 = builtin("V1").eval_laplacian(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.point(i);
    CHECK(grad2[i] == doctest::Approx(6 * std::sin(x)).epsilon(1e-14).scale(1.0));
    CHECK(lap1[i] == doctest::Approx(-10 * std::cos(2 * x) - 0.5 * std::sin(x)).epsilon(1e-14).scale(1.0));
  }
}

TEST_CASE("analytic gradient agrees with the stencil") {
  const Grid g(2000);
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const Potential p = builtin(name);
    const auto fd = periodic_gradient(g, p.eval(g));
    const auto exact = p.eval_grad(g);
    const auto third = p.derivative().derivative().eval_grad(g);
    double err = 0.0, max_third = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      err = std::max(err, std::abs(fd[i] - exact[i]));
      max_third = std::max(max_third, std::abs(third[i]));
    }
    // Central differences are off by (third derivative) h^2/6 to leading order.
    const double h2 = g.spacing() * g.spacing();
    CHECK(err <= max_third * h2 / 6 * (1 + 1e-3) + 1e-12);
    if (max_third <= 6.0) CHECK(err <= 1e-5);
  }
}

TEST_CASE("differentiation is closed on term lists") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Potential p = random_trig(rng);
    const Potential dp = p.derivative();
    const Potential ddp = dp.derivative();
    for (double x : {-2.5, -0.3, 0.0, 1.1, 3.0}) {
      CHECK(dp.value(x) == doctest::Approx(p.gradient(x)).epsilon(1e-13).scale(1.0));
      CHECK(dp.gradient(x) == doctest::Approx(p.laplacian(x)).epsilon(1e-13).scale(1.0));
      CHECK(ddp.value(x) == doctest::Approx(p.laplacian(x)).epsilon(1e-13).scale(1.0));
    }
  }
}

TEST_CASE("zero-term list is the uniform potential") {
  const Grid g(32);
  const Potential zero = Potential::trig({});
  for (double v : zero.eval(g)) CHECK(v == 0.0);
  for (double v : zero.eval_laplacian(g)) CHECK(v == 0.0);
}

TEST_CASE("config specs round-trip") {
  const Grid g(256);
  const auto from_terms = parse_potential(nlohmann::json::parse(
      R"({"terms": [{"a": 2.5, "kind": "cos", "k": 2}, {"a": 0.5, "kind": "sin", "k": 1}]})"));
  CHECK(from_terms.eval(g) == builtin("V1").eval(g));
  CHECK(parse_potential({{"builtin", "V2"}}).eval(g) == builtin("V2").eval(g));
  CHECK(parse_potential({{"builtin", "V2"}}).name() == "V2");
  CHECK(parse_potential({{"builtin", "V2"}, {"name", "well"}}).name() == "well");

  for (const auto& name : builtin_names()) {
    const Potential p = builtin(name);
    const Potential back = parse_potential(to_json(p));
    CHECK(back.eval(g) == p.eval(g));
    CHECK(back.name() == p.name());
  }

  CHECK_THROWS(parse_potential(nlohmann::json::parse(R"({"terms": [{"a": 1, "kind": "tan", "k": 1}]})")));
  CHECK_THROWS(parse_potential(nlohmann::json::parse(R"({"terms": [{"a": 1, "kind": "cos", "k": 0}]})")));
  CHECK_THROWS(parse_potential(nlohmann::json::parse(R"({"builtin": "nope"})")));
  CHECK_THROWS(parse_potential(nlohmann::json::parse(R"([1, 2])")));
}

TEST_CASE("tabulated potentials use stencil derivatives") {
  const Grid g(2000);
  const Potential p = Potential::tabulated(builtin("V1").eval(g), "table");
  CHECK(p.is_numeric());
  const auto grad = p.eval_grad(g);
  const auto exact = builtin("V1").eval_grad(g);
  for (std::size_t i = 0; i < g.size(); i += 97) CHECK(std::abs(grad[i] - exact[i]) <= 1e-4);
  CHECK_THROWS(p.value(0.0));
  CHECK_THROWS(p.eval(Grid(100)));
  const Potential back = parse_potential(to_json(p));
  CHECK(back.eval(g) == p.eval(g));
}

TEST_CASE("interpolation is the linear energy path") {
  const Potential v0 = builtin("Va"), v1 = builtin("V1");
  for (double tau : {0.0, 0.3, 1.0}) {
    const Potential mid = interpolate(v0, v1, tau);
    for (double x : {-1.0, 0.5, 2.0}) {
      CHECK(mid.value(x) == doctest::Approx(tau * v1.value(x) + (1 - tau) * v0.value(x)).scale(1.0));
    }
  }
  const Grid g(64);
  const Potential tab = combine(2.0, Potential::tabulated(builtin("V2").eval(g)), -1.0, builtin("Vc"));
  const auto v = tab.eval(g);
  const auto expected = builtin("V2").eval(g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(v[i] == doctest::Approx(3 * expected[i]).scale(1.0));
}
