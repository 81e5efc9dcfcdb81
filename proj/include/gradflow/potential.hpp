#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradflow/grid.hpp"
#include "json.hpp"

namespace gradflow {

enum class TrigKind { kCos, kSin };

struct TrigTerm {
  double amplitude = 0.0;
  TrigKind kind = TrigKind::kCos;
  int frequency = 1;

  bool operator==(const TrigTerm&) const = default;
};

// Energy V(x) = sum_j a_j cos(k_j x) or a_j sin(k_j x). An empty term list is
// V == 0. A potential may instead be tabulated on one grid ("numeric"); its
// derivatives then come from the periodic stencils.
class Potential {
 public:
  Potential() = default;

  static Potential trig(std::vector<TrigTerm> terms, std::string name = {});
  static Potential tabulated(std::vector<double> values, std::string name = {});

  bool is_numeric() const { return tabulated_.has_value(); }
  const std::vector<TrigTerm>& terms() const { return terms_; }
  // Empty for trig potentials.
  std::span<const double> table() const {
    return tabulated_ ? std::span<const double>(*tabulated_) : std::span<const double>{};
  }
  const std::string& name() const { return name_; }
  Potential with_name(std::string name) const;

  // Pointwise analytic values; throw std::logic_error on numeric potentials.
  double value(double x) const;
  double gradient(double x) const;
  double laplacian(double x) const;

  // Term-wise derivative; V' of a cos term is a sin term and vice versa.
  Potential derivative() const;

  std::vector<double> eval(const Grid& grid) const;
  std::vector<double> eval_grad(const Grid& grid) const;
  std::vector<double> eval_laplacian(const Grid& grid) const;

 private:
  std::vector<TrigTerm> terms_;
  std::optional<std::vector<double>> tabulated_;
  std::string name_;
};

// a*P + b*Q. Trig lists concatenate; tabulated operands must share a length.
Potential combine(double a, const Potential& p, double b, const Potential& q);

// tau*V_target + (1 - tau)*V_init, the energy of the linear annealing path.
Potential interpolate(const Potential& init, const Potential& target, double tau);

// V1 = 2.5cos(2x)+0.5sin(x), V2 = -6cos(x), Va = -V1, Vb = 2.5cos(2x),
// Vc = 6cos(x), Vd = 0. Throws std::invalid_argument on an unknown name.
Potential builtin(std::string_view name);
std::vector<std::string> builtin_names();

// Accepts {"builtin": "V1"}, {"terms": [{"a": 2.5, "kind": "cos", "k": 2}, ...]}
// or {"tabulated": [v0, ..., v_{n-1}]}; an optional "name" overrides the label.
Potential parse_potential(const nlohmann::json& spec);
nlohmann::json to_json(const Potential& p);

}  // namespace gradflow
