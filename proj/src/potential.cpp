#include "gradflow/potential.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace gradflow {
namespace {

double term_value(const TrigTerm& t, double x) {
  const double arg = t.frequency * x;
  return t.amplitude * (t.kind == TrigKind::kCos ? std::cos(arg) : std::sin(arg));
}

TrigTerm term_derivative(const TrigTerm& t) {
  const double k = t.frequency;
  if (t.kind == TrigKind::kCos) return {-t.amplitude * k, TrigKind::kSin, t.frequency};
  return {t.amplitude * k, TrigKind::kCos, t.frequency};
}

const std::vector<double>& require_table(const std::optional<std::vector<double>>& table,
                                         const Grid& grid) {
  if (table->size() != grid.size()) {
    throw std::invalid_argument("tabulated potential has " + std::to_string(table->size()) +
                                " values but the grid has " + std::to_string(grid.size()) +
                                " points");
  }
  return *table;
}

}  // namespace

Potential Potential::trig(std::vector<TrigTerm> terms, std::string name) {
  for (const auto& t : terms) {
    if (t.frequency < 1) throw std::invalid_argument("trig term frequency must be >= 1");
    if (!std::isfinite(t.amplitude)) throw std::invalid_argument("trig term amplitude must be finite");
  }
  Potential p;
  p.terms_ = std::move(terms);
  p.name_ = std::move(name);
  return p;
}

Potential Potential::tabulated(std::vector<double> values, std::string name) {
  if (values.size() < Grid::kMinPoints) {
    throw std::invalid_argument("tabulated potential needs at least 8 values");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("tabulated potential has a non-finite value");
  }
  Potential p;
  p.tabulated_ = std::move(values);
  p.name_ = std::move(name);
  return p;
}

Potential Potential::with_name(std::string name) const {
  Potential p = *this;
  p.name_ = std::move(name);
  return p;
}

double Potential::value(double x) const {
  if (is_numeric()) throw std::logic_error("pointwise evaluation of a tabulated potential");
  double v = 0.0;
  for (const auto& t : terms_) v += term_value(t, x);
  return v;
}

double Potential::gradient(double x) const { return derivative().value(x); }

double Potential::laplacian(double x) const { return derivative().derivative().value(x); }

Potential Potential::derivative() const {
  if (is_numeric()) throw std::logic_error("symbolic derivative of a tabulated potential");
  std::vector<TrigTerm> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(term_derivative(t));
  return trig(std::move(out));
}

std::vector<double> Potential::eval(const Grid& grid) const {
  if (is_numeric()) return require_table(tabulated_, grid);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = value(grid.point(i));
  return out;
}

std::vector<double> Potential::eval_grad(const Grid& grid) const {
  if (is_numeric()) return periodic_gradient(grid, require_table(tabulated_, grid));
  return derivative().eval(grid);
}

std::vector<double> Potential::eval_laplacian(const Grid& grid) const {
  if (is_numeric()) return periodic_laplacian(grid, require_table(tabulated_, grid));
  return derivative().derivative().eval(grid);
}

Potential combine(double a, const Potential& p, double b, const Potential& q) {
  if (p.is_numeric() || q.is_numeric()) {
    // A trig operand is sampled on the grid the table lives on.
    const std::size_t n = p.is_numeric() ? p.table().size() : q.table().size();
    if (p.is_numeric() && q.is_numeric() && q.table().size() != n) {
      throw std::invalid_argument("cannot combine tabulated potentials of different lengths");
    }
    const Grid grid(n);
    const std::vector<double> tp = p.eval(grid);
    const std::vector<double> tq = q.eval(grid);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < tp.size(); ++i) values[i] = a * tp[i] + b * tq[i];
    return Potential::tabulated(std::move(values));
  }
  std::vector<TrigTerm> terms;
  for (auto t : p.terms()) {
    t.amplitude *= a;
    terms.push_back(t);
  }
  for (auto t : q.terms()) {
    t.amplitude *= b;
    terms.push_back(t);
  }
  return Potential::trig(std::move(terms));
}

Potential interpolate(const Potential& init, const Potential& target, double tau) {
  return combine(1.0 - tau, init, tau, target);
}

Potential builtin(std::string_view name) {
  using K = TrigKind;
  const std::string label(name);
  if (name == "V1") return Potential::trig({{2.5, K::kCos, 2}, {0.5, K::kSin, 1}}, label);
  if (name == "V2") return Potential::trig({{-6.0, K::kCos, 1}}, label);
  if (name == "Va") return Potential::trig({{-2.5, K::kCos, 2}, {-0.5, K::kSin, 1}}, label);
  if (name == "Vb") return Potential::trig({{2.5, K::kCos, 2}}, label);
  if (name == "Vc") return Potential::trig({{6.0, K::kCos, 1}}, label);
  if (name == "Vd") return Potential::trig({}, label);
  throw std::invalid_argument("unknown builtin potential '" + label + "'");
}

std::vector<std::string> builtin_names() { return {"V1", "V2", "Va", "Vb", "Vc", "Vd"}; }

Potential parse_potential(const nlohmann::json& spec) {
  if (!spec.is_object()) throw std::invalid_argument("potential spec must be an object");
  const int forms = static_cast<int>(spec.contains("builtin")) +
                    static_cast<int>(spec.contains("terms")) +
                    static_cast<int>(spec.contains("tabulated"));
  if (forms != 1) {
    throw std::invalid_argument("potential spec needs exactly one of 'builtin', 'terms', 'tabulated'");
  }
  std::string name = spec.value("name", std::string{});

  if (spec.contains("builtin")) {
    if (!spec["builtin"].is_string()) throw std::invalid_argument("'builtin' must be a string");
    const auto id = spec["builtin"].get<std::string>();
    return builtin(id).with_name(name.empty() ? id : name);
  }
  if (spec.contains("tabulated")) {
    const auto& arr = spec["tabulated"];
    if (!arr.is_array()) throw std::invalid_argument("'tabulated' must be an array of numbers");
    std::vector<double> values;
    for (const auto& v : arr) {
      if (!v.is_number()) throw std::invalid_argument("'tabulated' must be an array of numbers");
      values.push_back(v.get<double>());
    }
    return Potential::tabulated(std::move(values), name);
  }

  const auto& arr = spec["terms"];
  if (!arr.is_array()) throw std::invalid_argument("'terms' must be an array");
  std::vector<TrigTerm> terms;
  for (const auto& item : arr) {
    if (!item.is_object() || !item.contains("a") || !item.contains("kind") || !item.contains("k")) {
      throw std::invalid_argument("each term needs 'a', 'kind' and 'k'");
    }
    if (!item["a"].is_number() || !item["k"].is_number_integer() || !item["kind"].is_string()) {
      throw std::invalid_argument("term fields: 'a' number, 'kind' string, 'k' integer");
    }
    const auto kind = item["kind"].get<std::string>();
    TrigTerm t;
    t.amplitude = item["a"].get<double>();
    t.frequency = item["k"].get<int>();
    if (kind == "cos") {
      t.kind = TrigKind::kCos;
    } else if (kind == "sin") {
      t.kind = TrigKind::kSin;
    } else {
      throw std::invalid_argument("term kind must be 'cos' or 'sin', got '" + kind + "'");
    }
    terms.push_back(t);
  }
  return Potential::trig(std::move(terms), name);
}

nlohmann::json to_json(const Potential& p) {
  nlohmann::json out;
  if (p.is_numeric()) {
    out["tabulated"] = std::vector<double>(p.table().begin(), p.table().end());
    if (!p.name().empty()) out["name"] = p.name();
    return out;
  }
  out["terms"] = nlohmann::json::array();
  for (const auto& t : p.terms()) {
    out["terms"].push_back({{"a", t.amplitude},
                            {"kind", t.kind == TrigKind::kCos ? "cos" : "sin"},
                            {"k", t.frequency}});
  }
  if (!p.name().empty()) out["name"] = p.name();
  return out;
}

}  // namespace gradflow
