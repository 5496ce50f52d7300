// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_MODEL_HPP
#define WAVEMOMENTS_MODEL_HPP

/** @file
 * Composite latent models: a sum of independent components.
 *
 * Parameter layout per component (the model vector theta concatenates them):
 *   WN(sigma2)   white noise
 *   QN(q2)       quantization noise, X_t = U_t - U_{t-1}, Var(U) = q2
 *   RW(gamma2)   random walk with N(0, gamma2) increments
 *   DR(omega)    deterministic drift omega * t
 *   AR1(rho, nu2)
 *   ARMA(ar_1..ar_p, ma_1..ma_q, nu2)
 *     X_t = sum ar_i X_{t-i} + e_t + sum ma_k e_{t-k},  e_t ~ N(0, nu2)
 *
 * Text form, e.g. "WN(sigma2=3) + AR1(rho=0.99, nu2=0.1)" or, for a fit
 * template without values, "RW + ARMA(2,1)".
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wavemoments/error.hpp"

namespace wavemoments {

enum class ComponentKind { wn, qn, rw, dr, ar1, arma };

/// How a parameter is constrained, and therefore transformed for search.
enum class ParamRole { variance, ar, ma, real };

inline std::string to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::wn: return "WN";
    case ComponentKind::qn: return "QN";
    case ComponentKind::rw: return "RW";
    case ComponentKind::dr: return "DR";
    case ComponentKind::ar1: return "AR1";
    case ComponentKind::arma: return "ARMA";
  }
  return "?";
}

struct ModelComponent {
  ComponentKind kind = ComponentKind::wn;
  int p = 0;  // ARMA orders; AR1 is p = 1, q = 0
  int q = 0;
  std::vector<double> params;

  std::size_t size() const {
    switch (kind) {
      case ComponentKind::ar1: return 2;
      case ComponentKind::arma: return static_cast<std::size_t>(p + q + 1);
      default: return 1;
    }
  }

  ParamRole role(std::size_t i) const {
    switch (kind) {
      case ComponentKind::dr: return ParamRole::real;
      case ComponentKind::ar1: return i == 0 ? ParamRole::ar : ParamRole::variance;
      case ComponentKind::arma:
        if (i < static_cast<std::size_t>(p)) return ParamRole::ar;
        if (i < static_cast<std::size_t>(p + q)) return ParamRole::ma;
        return ParamRole::variance;
      default: return ParamRole::variance;
    }
  }

  std::string param_name(std::size_t i) const {
    switch (kind) {
      case ComponentKind::wn: return "sigma2";
      case ComponentKind::qn: return "q2";
      case ComponentKind::rw: return "gamma2";
      case ComponentKind::dr: return "omega";
      case ComponentKind::ar1: return i == 0 ? "rho" : "nu2";
      case ComponentKind::arma:
        if (i < static_cast<std::size_t>(p)) return "ar" + std::to_string(i + 1);
        if (i < static_cast<std::size_t>(p + q)) {
          return "ma" + std::to_string(i - static_cast<std::size_t>(p) + 1);
        }
        return "nu2";
    }
    return "?";
  }

  /// Non-stationary components need a filter that annihilates them.
  bool stationary() const {
    return kind != ComponentKind::rw && kind != ComponentKind::dr;
  }

  /// AR coefficients (AR1 or ARMA), empty otherwise.
  std::vector<double> ar() const {
    if (kind == ComponentKind::ar1) return {params[0]};
    if (kind == ComponentKind::arma) {
      return {params.begin(), params.begin() + p};
    }
    return {};
  }
  std::vector<double> ma() const {
    if (kind == ComponentKind::arma) {
      return {params.begin() + p, params.begin() + p + q};
    }
    return {};
  }
  double innovation_variance() const { return params.back(); }
};

// ---------------------------------------------------------------------------
// Stationarity via partial autocorrelations

/// Maps partial autocorrelations in (-1, 1) to AR coefficients
/// (Durbin-Levinson).  Every such input gives a stationary AR polynomial.
inline std::vector<double> ar_from_pacf(const std::vector<double>& pacf) {
  std::vector<double> phi;
  for (std::size_t k = 0; k < pacf.size(); ++k) {
    std::vector<double> next(k + 1);
    next[k] = pacf[k];
    for (std::size_t i = 0; i < k; ++i) next[i] = phi[i] - pacf[k] * phi[k - 1 - i];
    phi = std::move(next);
  }
  return phi;
}

/// Inverse of ar_from_pacf; returns nullopt if the polynomial
/// 1 - sum phi_i z^i has a root on or inside the unit circle.
inline std::optional<std::vector<double>> pacf_from_ar(std::vector<double> phi) {
  const std::size_t p = phi.size();
  std::vector<double> pacf(p);
  for (std::size_t k = p; k-- > 0;) {
    const double a = phi[k];
    if (!(std::abs(a) < 1.0)) return std::nullopt;
    pacf[k] = a;
    std::vector<double> prev(k);
    for (std::size_t i = 0; i < k; ++i) {
      prev[i] = (phi[i] + a * phi[k - 1 - i]) / (1.0 - a * a);
    }
    phi = std::move(prev);
  }
  return pacf;
}

inline bool is_stationary_ar(const std::vector<double>& phi) {
  return pacf_from_ar(phi).has_value();
}

/// MA polynomial 1 + sum theta_k z^k is invertible iff the AR polynomial with
/// coefficients -theta is stationary.
inline bool is_invertible_ma(const std::vector<double>& theta) {
  std::vector<double> neg(theta.size());
  std::transform(theta.begin(), theta.end(), neg.begin(),
                 [](double x) { return -x; });
  return is_stationary_ar(neg);
}

// ---------------------------------------------------------------------------

struct ModelSpec {
  std::vector<ModelComponent> components;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& c : components) n += c.size();
    return n;
  }

  std::vector<double> theta() const {
    std::vector<double> t;
    for (const auto& c : components) t.insert(t.end(), c.params.begin(), c.params.end());
    return t;
  }

  void set_theta(const std::vector<double>& theta) {
    if (theta.size() != size()) {
      throw ConfigError("parameter vector has " + std::to_string(theta.size()) +
                            " entries, model needs " + std::to_string(size()),
                        "dimension_mismatch");
    }
    std::size_t k = 0;
    for (auto& c : components) {
      c.params.assign(theta.begin() + static_cast<std::ptrdiff_t>(k),
                      theta.begin() + static_cast<std::ptrdiff_t>(k + c.size()));
      k += c.size();
    }
  }

  ModelSpec with_theta(const std::vector<double>& theta) const {
    ModelSpec m = *this;
    m.set_theta(theta);
    return m;
  }

  std::vector<ParamRole> roles() const {
    std::vector<ParamRole> r;
    for (const auto& c : components) {
      for (std::size_t i = 0; i < c.size(); ++i) r.push_back(c.role(i));
    }
    return r;
  }

  /// Parameter labels such as "AR1.rho"; repeated component kinds get a
  /// "#k" suffix from the second occurrence on.
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    std::vector<int> seen(6, 0);
    for (const auto& c : components) {
      const int n = ++seen[static_cast<int>(c.kind)];
      std::string prefix = to_string(c.kind);
      if (c.kind == ComponentKind::arma) {
        prefix += "(" + std::to_string(c.p) + "," + std::to_string(c.q) + ")";
      }
      if (n > 1) prefix += "#" + std::to_string(n);
      for (std::size_t i = 0; i < c.size(); ++i) {
        out.push_back(prefix + "." + c.param_name(i));
      }
    }
    return out;
  }

  bool stationary() const {
    return std::all_of(components.begin(), components.end(),
                       [](const ModelComponent& c) { return c.stationary(); });
  }
};

/// Throws ConfigError when a parameter violates its constraint.
inline void validate(const ModelSpec& m) {
  if (m.components.empty()) {
    throw ConfigError("model has no components", "bad_model");
  }
  for (const auto& c : m.components) {
    if (c.params.size() != c.size()) {
      throw ConfigError(to_string(c.kind) + " has unset parameters",
                        "bad_model");
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double v = c.params[i];
      if (!std::isfinite(v)) {
        throw ConfigError(to_string(c.kind) + "." + c.param_name(i) +
                              " is not finite",
                          "bad_model");
      }
      if (c.role(i) == ParamRole::variance && !(v > 0.0)) {
        throw ConfigError(to_string(c.kind) + "." + c.param_name(i) +
                              " must be positive",
                          "bad_model");
      }
    }
    if (!is_stationary_ar(c.ar())) {
      throw ConfigError(to_string(c.kind) + " AR part is not stationary",
                        "bad_model");
    }
    if (!is_invertible_ma(c.ma())) {
      throw ConfigError(to_string(c.kind) + " MA part is not invertible",
                        "bad_model");
    }
  }
}

// ---------------------------------------------------------------------------
// Text format

namespace detail {

class SpecLexer {
 public:
  explicit SpecLexer(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  bool accept(char ch) {
    if (peek() == ch) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char ch) {
    if (!accept(ch)) fail(std::string("expected '") + ch + "'");
  }
  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }
  bool at_number() {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
           c == '.';
  }
  double number() {
    skip_ws();
    const std::string rest(s_.substr(pos_));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    pos_ += used;
    return v;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("model spec '" + std::string(s_) + "': " + what +
                          " at position " + std::to_string(pos_),
                      "bad_model_spec");
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

struct RawArg {
  std::string key;             // empty for positional
  std::vector<double> values;  // empty when only a name was given
  bool list = false;
};

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::vector<RawArg> parse_args(SpecLexer& lx) {
  std::vector<RawArg> args;
  if (!lx.accept('(')) return args;
  if (lx.accept(')')) return args;
  do {
    RawArg a;
    if (lx.at_number()) {
      a.values.push_back(lx.number());
    } else if (lx.peek() == '[') {
      lx.expect('[');
      a.list = true;
      if (!lx.accept(']')) {
        do a.values.push_back(lx.number());
        while (lx.accept(','));
        lx.expect(']');
      }
    } else {
      a.key = lower(lx.identifier());
      if (lx.accept('=')) {
        if (lx.accept('[')) {
          a.list = true;
          if (!lx.accept(']')) {
            do a.values.push_back(lx.number());
            while (lx.accept(','));
            lx.expect(']');
          }
        } else {
          a.values.push_back(lx.number());
        }
      }
    }
    args.push_back(std::move(a));
  } while (lx.accept(','));
  lx.expect(')');
  return args;
}

/// Fills named slots from keyed or positional arguments.  Returns true when
/// every slot received a value, false when none did; mixed is an error.
inline bool fill_slots(SpecLexer& lx, const std::vector<RawArg>& args,
                       const std::vector<std::vector<std::string>>& slot_names,
                       std::vector<double>& out) {
  out.assign(slot_names.size(), std::numeric_limits<double>::quiet_NaN());
  std::size_t positional = 0;
  for (const auto& a : args) {
    std::size_t slot = slot_names.size();
    if (a.key.empty()) {
      slot = positional++;
    } else {
      for (std::size_t s = 0; s < slot_names.size(); ++s) {
        if (std::find(slot_names[s].begin(), slot_names[s].end(), a.key) !=
            slot_names[s].end()) {
          slot = s;
        }
      }
      if (slot == slot_names.size()) lx.fail("unknown parameter '" + a.key + "'");
    }
    if (slot >= slot_names.size()) lx.fail("too many arguments");
    if (a.values.size() > 1 || a.list) lx.fail("unexpected list");
    if (!a.values.empty()) out[slot] = a.values[0];
  }
  const auto n_set = std::count_if(out.begin(), out.end(),
                                   [](double v) { return !std::isnan(v); });
  if (n_set == 0) {
    out.clear();
    return false;
  }
  if (static_cast<std::size_t>(n_set) != out.size()) {
    lx.fail("either all or none of the parameters must have values");
  }
  return true;
}

inline ModelComponent parse_component(SpecLexer& lx) {
  const std::string name = lx.identifier();
  const std::string up = [&] {
    std::string u = name;
    std::transform(u.begin(), u.end(), u.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return u;
  }();
  const auto args = parse_args(lx);
  ModelComponent c;
  if (up == "WN") {
    c.kind = ComponentKind::wn;
    fill_slots(lx, args, {{"sigma2", "s2", "variance"}}, c.params);
  } else if (up == "QN") {
    c.kind = ComponentKind::qn;
    fill_slots(lx, args, {{"q2", "q"}}, c.params);
  } else if (up == "RW") {
    c.kind = ComponentKind::rw;
    fill_slots(lx, args, {{"gamma2", "sigma2"}}, c.params);
  } else if (up == "DR" || up == "DRIFT") {
    c.kind = ComponentKind::dr;
    fill_slots(lx, args, {{"omega", "slope"}}, c.params);
  } else if (up == "AR1") {
    c.kind = ComponentKind::ar1;
    c.p = 1;
    fill_slots(lx, args, {{"rho", "phi"}, {"nu2", "sigma2", "upsilon2"}},
               c.params);
  } else if (up == "ARMA" || up == "AR" || up == "MA") {
    c.kind = ComponentKind::arma;
    std::vector<double> ar, ma;
    std::optional<double> var;
    std::vector<int> orders;
    for (const auto& a : args) {
      if (a.key.empty() && !a.list && a.values.size() == 1) {
        const double v = a.values[0];
        if (v < 0 || v != std::floor(v)) lx.fail("ARMA orders must be integers");
        orders.push_back(static_cast<int>(v));
      } else if (a.key == "ar" || a.key == "phi") {
        ar = a.values;
      } else if (a.key == "ma" || a.key == "theta") {
        ma = a.values;
      } else if (a.key == "nu2" || a.key == "sigma2" || a.key == "upsilon2") {
        if (!a.values.empty()) var = a.values[0];
      } else if (a.key == "p" || a.key == "q") {
        // named orders without values are not meaningful
        if (a.values.size() != 1) lx.fail("order needs a value");
        orders.push_back(static_cast<int>(a.values[0]));
      } else {
        lx.fail("unknown ARMA argument '" + a.key + "'");
      }
    }
    if (up == "AR") {
      if (orders.size() > 1) lx.fail("AR takes one order");
      c.p = orders.empty() ? static_cast<int>(ar.size()) : orders[0];
      c.q = 0;
    } else if (up == "MA") {
      if (orders.size() > 1) lx.fail("MA takes one order");
      c.p = 0;
      c.q = orders.empty() ? static_cast<int>(ma.size()) : orders[0];
    } else if (!orders.empty()) {
      if (orders.size() != 2) lx.fail("ARMA needs two orders (p,q)");
      c.p = orders[0];
      c.q = orders[1];
    } else {
      c.p = static_cast<int>(ar.size());
      c.q = static_cast<int>(ma.size());
    }
    const bool any = !ar.empty() || !ma.empty() || var.has_value();
    if (any) {
      if (static_cast<int>(ar.size()) != c.p || static_cast<int>(ma.size()) != c.q) {
        lx.fail("ARMA coefficient lists do not match the orders");
      }
      if (!var) lx.fail("ARMA needs nu2 when coefficients are given");
      c.params = ar;
      c.params.insert(c.params.end(), ma.begin(), ma.end());
      c.params.push_back(*var);
    }
    if (c.p + c.q == 0 && !any && orders.empty()) {
      lx.fail("ARMA needs orders or coefficients");
    }
  } else {
    lx.fail("unknown component '" + name + "'");
  }
  return c;
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    std::ostringstream t;
    t << std::setprecision(prec) << v;
    if (std::stod(t.str()) == v) return t.str();
  }
  return os.str();
}

}  // namespace detail

/// Result of parsing: the structure, and whether values were supplied.
struct ParsedModel {
  ModelSpec model;
  bool has_values = false;
};

inline ParsedModel parse_model(std::string_view text) {
  detail::SpecLexer lx(text);
  ParsedModel out;
  std::size_t with = 0, without = 0;
  do {
    auto c = detail::parse_component(lx);
    (c.params.empty() ? without : with)++;
    out.model.components.push_back(std::move(c));
  } while (lx.accept('+'));
  if (!lx.done()) lx.fail("unexpected trailing input");
  if (with > 0 && without > 0) {
    lx.fail("either all or no components must carry values");
  }
  out.has_values = with > 0;
  if (out.has_values) validate(out.model);
  return out;
}

/// Parses a model that must carry parameter values.
inline ModelSpec parse_model_with_values(std::string_view text) {
  auto parsed = parse_model(text);
  if (!parsed.has_values) {
    throw ConfigError("model spec '" + std::string(text) +
                          "' needs parameter values",
                      "bad_model_spec");
  }
  return parsed.model;
}

/// Canonical text form; parse_model(format_model(m)) reproduces m.
inline std::string format_model(const ModelSpec& m) {
  std::string out;
  for (std::size_t k = 0; k < m.components.size(); ++k) {
    const auto& c = m.components[k];
    if (k) out += " + ";
    out += to_string(c.kind);
    if (c.kind == ComponentKind::arma) {
      out += "(" + std::to_string(c.p) + "," + std::to_string(c.q);
      if (!c.params.empty()) {
        auto list = [&](int from, int n) {
          std::string s = "[";
          for (int i = 0; i < n; ++i) {
            if (i) s += ",";
            s += detail::format_number(c.params[static_cast<std::size_t>(from + i)]);
          }
          return s + "]";
        };
        if (c.p) out += ", ar=" + list(0, c.p);
        if (c.q) out += ", ma=" + list(c.p, c.q);
        out += ", nu2=" + detail::format_number(c.params.back());
      }
      out += ")";
      continue;
    }
    if (c.params.empty()) continue;
    out += "(";
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) out += ", ";
      out += c.param_name(i) + "=" + detail::format_number(c.params[i]);
    }
    out += ")";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unconstrained coordinates for optimization: log for variances, atanh of
// partial autocorrelations for AR/MA blocks, identity for drift.

/// Largest |u| used for partial autocorrelation coordinates of a block of
/// n coefficients.  Keeps the mapped polynomial verifiably stationary in
/// double precision; the bound tightens with n because round-off in the
/// inverse recursion grows with the order.
inline double pacf_coordinate_limit(std::size_t n) {
  if (n <= 2) return 7.0;
  if (n <= 4) return 5.0;
  return 4.0;
}

inline std::vector<double> to_unconstrained(const ModelSpec& m) {
  validate(m);
  std::vector<double> u;
  for (const auto& c : m.components) {
    const auto ar = c.ar();
    const auto ma = c.ma();
    auto push_pacf = [&u](const std::vector<double>& coeffs) {
      const auto pacf = pacf_from_ar(coeffs);
      const double lim = pacf_coordinate_limit(coeffs.size());
      for (double v : pacf.value()) u.push_back(std::clamp(std::atanh(v), -lim, lim));
    };
    if (!ar.empty()) push_pacf(ar);
    if (!ma.empty()) {
      std::vector<double> neg(ma.size());
      std::transform(ma.begin(), ma.end(), neg.begin(), [](double x) { return -x; });
      push_pacf(neg);
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.role(i) == ParamRole::variance) u.push_back(std::log(c.params[i]));
      if (c.role(i) == ParamRole::real) u.push_back(c.params[i]);
    }
  }
  return u;
}

/// Inverse of to_unconstrained for the structure of `shape`.
inline ModelSpec from_unconstrained(const ModelSpec& shape,
                                    const std::vector<double>& u) {
  if (u.size() != shape.size()) {
    throw ConfigError("unconstrained vector has wrong dimension",
                      "dimension_mismatch");
  }
  ModelSpec m = shape;
  std::size_t k = 0;
  auto pacf_block = [&](int n) {
    std::vector<double> pacf(static_cast<std::size_t>(n));
    const double lim = pacf_coordinate_limit(pacf.size());
    for (int i = 0; i < n; ++i) {
      const double v = std::clamp(u[k++], -lim, lim);
      pacf[static_cast<std::size_t>(i)] = std::tanh(v);
    }
    return ar_from_pacf(pacf);
  };
  for (auto& c : m.components) {
    c.params.assign(c.size(), 0.0);
    std::vector<double> ar, ma;
    if (c.kind == ComponentKind::ar1) ar = pacf_block(1);
    if (c.kind == ComponentKind::arma) {
      ar = pacf_block(c.p);
      ma = pacf_block(c.q);
      for (double& x : ma) x = -x;
    }
    std::size_t ia = 0, im = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      switch (c.role(i)) {
        case ParamRole::ar: c.params[i] = ar[ia++]; break;
        case ParamRole::ma: c.params[i] = ma[im++]; break;
        case ParamRole::variance: c.params[i] = std::exp(std::clamp(u[k++], -690.0, 690.0)); break;
        case ParamRole::real: c.params[i] = u[k++]; break;
      }
    }
  }
  return m;
}

/// Reorders repeated components of the same kind (and ARMA orders) by
/// decreasing first parameter.  Sums of identical kinds are exchangeable, so
/// fitted results are reported in this canonical order.
inline void canonicalize(ModelSpec& m) {
  auto same_shape = [](const ModelComponent& a, const ModelComponent& b) {
    return a.kind == b.kind && a.p == b.p && a.q == b.q;
  };
  const std::size_t n = m.components.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (m.components[i].params.empty()) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      auto& a = m.components[i];
      auto& b = m.components[j];
      if (same_shape(a, b) && !b.params.empty() && b.params[0] > a.params[0]) {
        std::swap(a, b);
      }
    }
  }
}

}  // namespace wavemoments

#endif  // WAVEMOMENTS_MODEL_HPP
