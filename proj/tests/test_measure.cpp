#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gradflow/cumulant.hpp"
#include "gradflow/measure.hpp"

using namespace gradflow;
using std::numbers::pi;

namespace {

Potential random_trig(std::mt19937_64& rng, double scale = 3.0) {
  std::uniform_real_distribution<double> amp(-scale, scale);
  std::uniform_int_distribution<int> freq(1, 4), count(1, 4), kind(0, 1);
  std::vector<TrigTerm> terms;
  const int m = count(rng);
  for (int j = 0; j < m; ++j) {
    terms.push_back({amp(rng), kind(rng) ? TrigKind::kSin : TrigKind::kCos, freq(rng)});
  }
  return Potential::trig(terms);
}

// The energy -log(density), normalized so that its Boltzmann weight has mass 1.
Potential normalized_energy(const LogDensity& d) {
  std::vector<double> v(d.logp().begin(), d.logp().end());
  for (double& x : v) x = -x;
  return Potential::tabulated(v);
}

}  // namespace

const Grid kGrid(2000);

TEST_CASE("uniform density") {
  const LogDensity u = from_potential(builtin("Vd"), kGrid);
  for (double v : u.logp()) CHECK(v == doctest::Approx(-std::log(2 * pi)).epsilon(1e-15));
  CHECK(log_normalizer(builtin("Vd"), kGrid) == doctest::Approx(std::log(2 * pi)).epsilon(1e-15));
}

TEST_CASE("log normalizer of V2") {
  // log(2 pi I0(6)) from a 10^6-point quadrature.
  const double oracle = 6.046062191485323;
  CHECK(std::abs(log_normalizer(builtin("V2"), kGrid) - oracle) <= 1e-8);
  CHECK(std::abs(from_potential(builtin("V2"), kGrid).log_normalizer() - oracle) <= 1e-8);
}

TEST_CASE("pi1 has exactly two modes of different height") {
  const LogDensity p1 = from_potential(builtin("V1"), kGrid);
  const auto lp = p1.logp();
  const std::size_t n = lp.size();
  std::vector<double> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    if (lp[i] > lp[(i + n - 1) % n] && lp[i] > lp[(i + 1) % n]) peaks.push_back(lp[i]);
  }
  REQUIRE(peaks.size() == 2);
  CHECK(std::abs(peaks[0] - peaks[1]) > 0.5);
}

TEST_CASE("normalization holds for random and extreme potentials") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const LogDensity d = from_potential(random_trig(rng, trial < 40 ? 3.0 : 300.0), kGrid);
    CHECK(std::abs(d.mass() - 1.0) <= 1e-12);
  }
  const LogDensity steep = from_potential(Potential::trig({{700.0, TrigKind::kCos, 1}}), kGrid);
  CHECK(std::abs(steep.mass() - 1.0) <= 1e-12);
  for (double v : steep.logp()) CHECK(std::isfinite(v));
}

TEST_CASE("log normalizer along the energy path") {
  const LogDensity p1 = from_potential(builtin("V1"), kGrid);
  const LogDensity pa = from_potential(builtin("Va"), kGrid);
  CHECK(log_normalizer(interpolate(builtin("Va"), builtin("V1"), 1.0), kGrid) ==
        doctest::Approx(p1.log_normalizer()).epsilon(1e-14));

  const Potential e0 = normalized_energy(pa), e1 = normalized_energy(p1);
  const CumulantTable table = build_table(pa, p1);
  const double log_z1 = log_normalizer(e1, kGrid);
  CHECK(std::abs(log_z1) <= 1e-12);
  for (double tau : {0.0, 0.25, 0.5, 0.9}) {
    const double log_ztau = log_normalizer(interpolate(e0, e1, tau), kGrid);
    CHECK(std::abs(log_ztau - log_z1 - cgf_eval(table, 1.0 - tau)) <= 1e-8);
  }
}

TEST_CASE("divergences against fine reference values") {
  const LogDensity u = from_potential(builtin("Vd"), kGrid);
  const LogDensity p2 = from_potential(builtin("V2"), kGrid);
  // 10^6-point quadratures of the defining integrals.
  const double kl_oracle = 4.208185125075979;
  const double chi2_oracle = 4519.465481478671;
  CHECK(std::abs(kl(u, p2) / kl_oracle - 1) <= 1e-8);
  CHECK(std::abs(chi2(u, p2) / chi2_oracle - 1) <= 1e-8);
  CHECK(std::abs(renyi(1 + 1e-6, u, p2) / kl(u, p2) - 1) <= 1e-4);
}

TEST_CASE("divergences of a density with itself vanish") {
  for (const char* name : {"V1", "V2", "Vd"}) {
    const LogDensity p = from_potential(builtin(name), kGrid);
    CHECK(kl(p, p) == 0.0);
    CHECK(std::abs(chi2(p, p)) <= 1e-13);
    for (double q : {1.5, 2.0, 4.0}) CHECK(std::abs(renyi(q, p, p)) <= 1e-13);
  }
}

TEST_CASE("identity of indiscernibles on the grid") {
  const LogDensity p = from_potential(builtin("V1"), kGrid);
  const LogDensity near = from_potential(combine(1.0, builtin("V1"), 1e-3, builtin("Vb")), kGrid);
  double sup = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sup = std::max(sup, std::abs(p.logp()[i] - near.logp()[i]));
  REQUIRE(sup > 1e-12);
  CHECK(kl(near, p) > 0.0);
  CHECK(chi2(near, p) > 0.0);
  CHECK(renyi(2.0, near, p) > 0.0);
}

TEST_CASE("random pairs: Gibbs inequality, chi2 identity, monotone in q") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const LogDensity rho = from_potential(random_trig(rng), kGrid);
    const LogDensity target = from_potential(random_trig(rng), kGrid);
    const double k = kl(rho, target);
    CHECK(k >= 0.0);
    CHECK(chi2(rho, target) >= 0.0);
    const double r2 = renyi(2.0, rho, target);
    CHECK(std::abs(r2 - std::log1p(chi2(rho, target))) <= 1e-10 * std::max(1.0, r2));
    double prev = k;
    for (double q : {1.25, 1.5, 2.0, 3.0, 4.0}) {
      const double r = renyi(q, rho, target);
      CHECK(r >= prev - 1e-12 * std::max(1.0, r));
      prev = r;
    }
  }
}

TEST_CASE("divergence errors") {
  const LogDensity a = from_potential(builtin("V1"), kGrid);
  const LogDensity b = from_potential(builtin("V1"), Grid(1000));
  CHECK_THROWS_AS(kl(a, b), std::invalid_argument);
  CHECK_THROWS_AS(chi2(a, b), std::invalid_argument);
  CHECK_THROWS_AS(renyi(2.0, a, b), std::invalid_argument);
  CHECK_THROWS_AS(renyi(1.0, a, a), std::invalid_argument);
  CHECK_THROWS_AS(renyi(0.5, a, a), std::invalid_argument);
}

TEST_CASE("assumption diagnostics") {
  const LogDensity p1 = from_potential(builtin("V1"), kGrid);
  const LogDensity pa = from_potential(builtin("Va"), kGrid);
  const AssumptionReport same = check_assumptions(p1, p1, 0.0);
  CHECK(std::abs(same.a2_log_margin) <= 1e-14);
  CHECK(std::abs(same.b_constant) <= 1e-14);
  CHECK(same.a2_holds);
  CHECK(same.a1_holds);

  const AssumptionReport r = check_assumptions(pa, p1, 0.0);
  double min_ratio = 1e300;
  for (std::size_t i = 0; i < pa.size(); ++i) min_ratio = std::min(min_ratio, pa.logp()[i] - p1.logp()[i]);
  CHECK(r.b_constant > 0.0);
  CHECK(std::isfinite(r.b_constant));
  CHECK(r.b_constant == -min_ratio);
  CHECK(r.a2_holds);
  CHECK(r.a2_log_margin == -r.b_constant);

  const AssumptionReport alpha = check_assumptions(pa, p1, 0.5);
  CHECK(alpha.a2_holds);
  CHECK(std::isfinite(alpha.a2_log_margin));
  CHECK_THROWS_AS(check_assumptions(pa, p1, -1.0), std::invalid_argument);
}

TEST_CASE("csv export and fingerprints") {
  const Grid g(8);
  const LogDensity d = from_potential(builtin("V2"), g);
  std::ostringstream out;
  write_csv(out, d);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,logp,p");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 8);

  CHECK(fingerprint(d) == fingerprint(from_potential(builtin("V2"), g)));
  CHECK(fingerprint(d) != fingerprint(from_potential(builtin("Vc"), g)));
  CHECK_THROWS(LogDensity::from_unnormalized(g, std::vector<double>(8, std::nan(""))));
}
