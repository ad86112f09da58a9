#pragma once

// Truncated multivariate Taylor arithmetic ("jets").
//
// A jet of order k in N variables stores the Taylor coefficients
//     c_alpha = (d^alpha f)(p) / alpha!        for all |alpha| <= k
// of a scalar function f at a point p. Products are plain truncated
// convolutions in this convention; jet_partial() multiplies the factorial
// back out and returns the raw partial derivative.
//
// Coefficients are ordered by total degree (graded), so the layout of order
// k-1 is a prefix of the layout of order k. Truncation is a resize.
//
// The coefficient type is a template parameter so that jets can be nested
// (BasicJet<BasicJet<double>>): the outer level differentiates with respect
// to one set of variables while every outer coefficient carries its own
// expansion in another set. The nonholonomic reduction relies on this to get
// third derivatives of quantities that are themselves second derivatives.
//
// A jet without a layout is a constant: it has a value and no variables, and
// mixes freely with jets of any layout.

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sodegeo {

inline constexpr int kMaxJetOrder = 3;

/// |cos| (for tan, sec) or |sin| (for cot, csc) below this is treated as a pole.
inline constexpr double kPoleTolerance = 1e-12;

/// Evaluation left the domain of an elementary function (pole, division by
/// zero, log/sqrt of a non-positive value).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class JetLayout {
 public:
  struct ProductTerm {
    std::uint32_t lhs;
    std::uint32_t rhs;
    std::uint32_t out;
  };
  struct DerivativeTerm {
    std::uint32_t out;  // position in the order-1 layout
    std::uint32_t src;  // position in this layout
    double factor;      // alpha_v(src)
  };

  /// Shared, immutable layout for (nvars, order). Thread safe.
  static std::shared_ptr<const JetLayout> get(int nvars, int order) {
    if (nvars < 0) throw std::invalid_argument("jet layout: negative variable count");
    if (order < 0 || order > kMaxJetOrder) {
      throw std::invalid_argument("jet layout: order must be in [0, " +
                                  std::to_string(kMaxJetOrder) + "], got " +
                                  std::to_string(order));
    }
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{nvars, order}];
    if (!slot) slot = std::shared_ptr<const JetLayout>(new JetLayout(nvars, order));
    return slot;
  }

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  std::size_t size() const { return vars_.size(); }

  /// Variables of the monomial at `pos`, sorted ascending (length = degree).
  const std::vector<int>& monomial(std::size_t pos) const { return vars_[pos]; }
  int degree(std::size_t pos) const { return static_cast<int>(vars_[pos].size()); }

  /// Exponent vector of the monomial at `pos`.
  std::vector<int> exponents(std::size_t pos) const {
    std::vector<int> alpha(static_cast<std::size_t>(nvars_), 0);
    for (int v : vars_[pos]) ++alpha[static_cast<std::size_t>(v)];
    return alpha;
  }

  /// alpha! for the monomial at `pos`.
  double factorial(std::size_t pos) const { return factorials_[pos]; }

  /// Position of the multi-index given as an exponent vector.
  std::size_t position(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) != nvars_) {
      throw std::invalid_argument("multi-index has " + std::to_string(alpha.size()) +
                                  " entries, jet has " + std::to_string(nvars_) + " variables");
    }
    std::vector<int> vars;
    for (int v = 0; v < nvars_; ++v) {
      if (alpha[static_cast<std::size_t>(v)] < 0) throw std::invalid_argument("negative multi-index entry");
      for (int r = 0; r < alpha[static_cast<std::size_t>(v)]; ++r) vars.push_back(v);
    }
    if (static_cast<int>(vars.size()) > order_) {
      throw std::out_of_range("multi-index of degree " + std::to_string(vars.size()) +
                              " exceeds jet order " + std::to_string(order_));
    }
    return position_of_vars(vars);
  }

  std::size_t position_of_vars(const std::vector<int>& sorted_vars) const {
    auto it = index_.find(key(sorted_vars));
    if (it == index_.end()) throw std::out_of_range("monomial not in jet layout");
    return it->second;
  }

  std::span<const ProductTerm> products() const { return products_; }
  std::span<const DerivativeTerm> derivative_terms(int var) const {
    return derivative_terms_[static_cast<std::size_t>(var)];
  }

 private:
  JetLayout(int nvars, int order) : nvars_(nvars), order_(order) {
    for (int d = 0; d <= order_; ++d) {
      std::vector<int> tuple;
      enumerate_degree(d, 0, tuple);
    }
    for (std::size_t pos = 0; pos < vars_.size(); ++pos) {
      index_.emplace(key(vars_[pos]), static_cast<std::uint32_t>(pos));
      double f = 1.0;
      auto alpha = exponents(pos);
      for (int a : alpha) {
        for (int r = 2; r <= a; ++r) f *= r;
      }
      factorials_.push_back(f);
    }
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      for (std::size_t j = 0; j < vars_.size(); ++j) {
        if (degree(i) + degree(j) > order_) continue;
        std::vector<int> merged;
        std::merge(vars_[i].begin(), vars_[i].end(), vars_[j].begin(), vars_[j].end(),
                   std::back_inserter(merged));
        products_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                             static_cast<std::uint32_t>(position_of_vars(merged))});
      }
    }
    derivative_terms_.resize(static_cast<std::size_t>(nvars_));
    for (int v = 0; v < nvars_; ++v) {
      for (std::size_t q = 0; q < vars_.size(); ++q) {
        if (degree(q) + 1 > order_) continue;
        std::vector<int> up = vars_[q];
        up.insert(std::upper_bound(up.begin(), up.end(), v), v);
        std::size_t src = position_of_vars(up);
        double factor = static_cast<double>(std::count(up.begin(), up.end(), v));
        derivative_terms_[static_cast<std::size_t>(v)].push_back(
            {static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(src), factor});
      }
    }
  }

  void enumerate_degree(int remaining, int first, std::vector<int>& tuple) {
    if (remaining == 0) {
      vars_.push_back(tuple);
      return;
    }
    for (int v = first; v < nvars_; ++v) {
      tuple.push_back(v);
      enumerate_degree(remaining - 1, v, tuple);
      tuple.pop_back();
    }
  }

  std::uint64_t key(const std::vector<int>& sorted_vars) const {
    std::uint64_t k = 0;
    const auto base = static_cast<std::uint64_t>(nvars_) + 1;
    for (int v : sorted_vars) k = k * base + static_cast<std::uint64_t>(v) + 1;
    return k;
  }

  int nvars_;
  int order_;
  std::vector<std::vector<int>> vars_;
  std::vector<double> factorials_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::vector<ProductTerm> products_;
  std::vector<std::vector<DerivativeTerm>> derivative_terms_;
};

template <class T>
class BasicJet;

namespace detail {
template <class T>
struct is_jet : std::false_type {};
template <class T>
struct is_jet<BasicJet<T>> : std::true_type {};

inline bool is_exact_zero(double x) { return x == 0.0; }
template <class T>
bool is_exact_zero(const BasicJet<T>& j) {
  return j.is_constant() && is_exact_zero(j.value());
}
}  // namespace detail

/// Innermost double value of a (possibly nested) jet.
inline double scalar_value(double x) { return x; }
template <class T>
double scalar_value(const BasicJet<T>& j) {
  return scalar_value(j.value());
}

template <class T>
class BasicJet {
 public:
  using value_type = T;
  static constexpr int kConstantOrder = INT_MAX;

  BasicJet() : coeffs_{T(0.0)} {}
  BasicJet(double c) : coeffs_{T(c)} {}  // NOLINT(google-explicit-constructor)
  template <class U = T, class = std::enable_if_t<detail::is_jet<U>::value>>
  BasicJet(const T& c) : coeffs_{c} {}  // NOLINT(google-explicit-constructor)

  BasicJet(std::shared_ptr<const JetLayout> layout, std::vector<T> coeffs)
      : layout_(std::move(layout)), coeffs_(std::move(coeffs)) {
    if (!layout_) {
      if (coeffs_.size() != 1) throw std::invalid_argument("constant jet needs exactly one coefficient");
    } else if (coeffs_.size() != layout_->size()) {
      throw std::invalid_argument("jet coefficient count does not match layout");
    }
  }

  static BasicJet constant(const T& c) {
    BasicJet j;
    j.coeffs_[0] = c;
    return j;
  }

  /// Coordinate function v_index at `value`, in a layout of (nvars, order).
  static BasicJet variable(int index, const T& value, int nvars, int order) {
    if (index < 0 || index >= nvars) {
      throw std::out_of_range("jet variable index " + std::to_string(index) +
                              " out of range for " + std::to_string(nvars) + " variables");
    }
    auto layout = JetLayout::get(nvars, order);
    std::vector<T> c(layout->size(), T(0.0));
    c[0] = value;
    if (order >= 1) c[static_cast<std::size_t>(1 + index)] = T(1.0);
    return BasicJet(std::move(layout), std::move(c));
  }

  /// Zero jet sharing a layout.
  static BasicJet zero(std::shared_ptr<const JetLayout> layout) {
    if (!layout) return BasicJet();
    std::vector<T> c(layout->size(), T(0.0));
    return BasicJet(std::move(layout), std::move(c));
  }

  bool is_constant() const { return !layout_; }
  const std::shared_ptr<const JetLayout>& layout() const { return layout_; }
  int nvars() const { return layout_ ? layout_->nvars() : 0; }
  int order() const { return layout_ ? layout_->order() : kConstantOrder; }
  std::size_t size() const { return coeffs_.size(); }

  const T& value() const { return coeffs_[0]; }
  const T& coeff(std::size_t pos) const { return coeffs_[pos]; }
  T& coeff(std::size_t pos) { return coeffs_[pos]; }
  std::span<const T> coeffs() const { return coeffs_; }

  /// Raw partial derivative d^alpha f (not the Taylor coefficient).
  T partial(std::span<const int> alpha) const {
    int degree = 0;
    for (int a : alpha) degree += a;
    if (!layout_) {
      return degree == 0 ? coeffs_[0] : T(0.0);
    }
    if (degree > layout_->order()) {
      throw std::out_of_range("partial of degree " + std::to_string(degree) +
                              " requested from a jet of order " + std::to_string(layout_->order()));
    }
    std::size_t pos = layout_->position(alpha);
    return coeffs_[pos] * layout_->factorial(pos);
  }
  T partial(std::initializer_list<int> alpha) const {
    std::vector<int> a(alpha);
    return partial(std::span<const int>(a));
  }

  /// First partial with respect to variable v.
  T gradient(int v) const {
    if (!layout_) return T(0.0);
    if (layout_->order() < 1) throw std::out_of_range("gradient requested from an order-0 jet");
    return coeffs_[static_cast<std::size_t>(1 + v)];
  }

  /// Jet of the partial derivative df/dv_var; the order drops by one.
  BasicJet derivative(int var) const {
    if (!layout_) return BasicJet();
    if (var < 0 || var >= layout_->nvars()) throw std::out_of_range("derivative variable out of range");
    if (layout_->order() == 0) {
      throw std::logic_error("jet order exhausted: cannot differentiate an order-0 jet");
    }
    auto lower = JetLayout::get(layout_->nvars(), layout_->order() - 1);
    std::vector<T> c(lower->size(), T(0.0));
    for (const auto& t : layout_->derivative_terms(var)) {
      c[t.out] = coeffs_[t.src] * t.factor;
    }
    return BasicJet(std::move(lower), std::move(c));
  }

  BasicJet truncated(int order) const {
    if (!layout_ || order >= layout_->order()) return *this;
    auto lower = JetLayout::get(layout_->nvars(), order);
    std::vector<T> c(coeffs_.begin(), coeffs_.begin() + static_cast<std::ptrdiff_t>(lower->size()));
    return BasicJet(std::move(lower), std::move(c));
  }

  /// Same expansion with the constant term replaced.
  BasicJet with_value(const T& v) const {
    BasicJet r = *this;
    r.coeffs_[0] = v;
    return r;
  }

  BasicJet operator-() const {
    BasicJet r = *this;
    for (auto& c : r.coeffs_) c = -c;
    return r;
  }

  BasicJet& operator+=(const BasicJet& b) { return *this = *this + b; }
  BasicJet& operator-=(const BasicJet& b) { return *this = *this - b; }
  BasicJet& operator*=(const BasicJet& b) { return *this = *this * b; }
  BasicJet& operator/=(const BasicJet& b) { return *this = *this / b; }

  friend BasicJet operator+(const BasicJet& a, const BasicJet& b) {
    if (a.is_constant()) return b.with_value(b.value() + a.value());
    if (b.is_constant()) return a.with_value(a.value() + b.value());
    auto layout = common_layout(a, b);
    std::vector<T> c(layout->size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.coeffs_[i] + b.coeffs_[i];
    return BasicJet(std::move(layout), std::move(c));
  }

  friend BasicJet operator-(const BasicJet& a, const BasicJet& b) {
    if (b.is_constant()) return a.with_value(a.value() - b.value());
    if (a.is_constant()) {
      BasicJet r = -b;
      r.coeffs_[0] = r.coeffs_[0] + a.value();
      return r;
    }
    auto layout = common_layout(a, b);
    std::vector<T> c(layout->size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.coeffs_[i] - b.coeffs_[i];
    return BasicJet(std::move(layout), std::move(c));
  }

  friend BasicJet operator*(const BasicJet& a, const BasicJet& b) {
    if (a.is_constant()) return b.scaled(a.value());
    if (b.is_constant()) return a.scaled(b.value());
    auto layout = common_layout(a, b);
    std::vector<T> c(layout->size(), T(0.0));
    for (const auto& t : layout->products()) {
      const T& x = a.coeffs_[t.lhs];
      const T& y = b.coeffs_[t.rhs];
      if constexpr (detail::is_jet<T>::value) {
        if (detail::is_exact_zero(x) || detail::is_exact_zero(y)) continue;
      }
      c[t.out] += x * y;
    }
    return BasicJet(std::move(layout), std::move(c));
  }

  friend BasicJet operator/(const BasicJet& a, const BasicJet& b) { return a * reciprocal(b); }

  BasicJet scaled(const T& s) const {
    if (detail::is_exact_zero(s)) return BasicJet();
    BasicJet r = *this;
    for (auto& c : r.coeffs_) c = c * s;
    return r;
  }

 private:
  static std::shared_ptr<const JetLayout> common_layout(const BasicJet& a, const BasicJet& b) {
    if (a.layout_ == b.layout_) return a.layout_;
    if (a.layout_->nvars() != b.layout_->nvars()) {
      throw std::invalid_argument("jets over different variable counts (" +
                                  std::to_string(a.layout_->nvars()) + " vs " +
                                  std::to_string(b.layout_->nvars()) + ") cannot be combined");
    }
    return a.layout_->order() <= b.layout_->order() ? a.layout_ : b.layout_;
  }

  std::shared_ptr<const JetLayout> layout_;
  std::vector<T> coeffs_;
};

using Jet = BasicJet<double>;

// ---------------------------------------------------------------------------
// Elementary functions. Each is defined for double and lifted to jets by
// truncated Taylor composition f(g0 + d) = sum_k f^(k)(g0) d^k / k!.

inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double sec(double x) { return 1.0 / std::cos(x); }
inline double csc(double x) { return 1.0 / std::sin(x); }
inline double cot(double x) { return std::cos(x) / std::sin(x); }

namespace detail {

inline constexpr std::array<double, 4> kInvFactorial = {1.0, 1.0, 0.5, 1.0 / 6.0};

template <class T, class DerivFn>
BasicJet<T> compose(const BasicJet<T>& g, DerivFn&& derivatives) {
  const int n = g.is_constant() ? 0 : g.order();
  std::array<T, 4> d = derivatives(g.value(), n);
  if (g.is_constant() || n == 0) {
    if (g.is_constant()) return BasicJet<T>::constant(d[0]);
    return BasicJet<T>::zero(g.layout()).with_value(d[0]);
  }
  BasicJet<T> delta = g.with_value(T(0.0));
  BasicJet<T> result = BasicJet<T>::zero(g.layout()).with_value(d[0]);
  BasicJet<T> power = delta;
  for (int k = 1; k <= n; ++k) {
    result += power.scaled(d[static_cast<std::size_t>(k)] * kInvFactorial[static_cast<std::size_t>(k)]);
    if (k < n) power = power * delta;
  }
  return result;
}

inline void check_cos_pole(double x, const char* fn) {
  if (std::abs(std::cos(x)) < kPoleTolerance) {
    throw DomainError(std::string(fn) + " has a pole at " + std::to_string(x));
  }
}
inline void check_sin_pole(double x, const char* fn) {
  if (std::abs(std::sin(x)) < kPoleTolerance) {
    throw DomainError(std::string(fn) + " has a pole at " + std::to_string(x));
  }
}

}  // namespace detail

inline double reciprocal(double x) {
  if (x == 0.0) throw DomainError("division by zero");
  return 1.0 / x;
}

template <class T>
BasicJet<T> reciprocal(const BasicJet<T>& g) {
  if (scalar_value(g) == 0.0) throw DomainError("division by zero");
  return detail::compose(g, [](const T& x, int n) {
    T r = reciprocal(x);
    std::array<T, 4> d{r, T(0.0), T(0.0), T(0.0)};
    if (n >= 1) d[1] = -(r * r);
    if (n >= 2) d[2] = 2.0 * (r * r * r);
    if (n >= 3) d[3] = -6.0 * (r * r * r * r);
    return d;
  });
}

template <class T>
BasicJet<T> sin(const BasicJet<T>& g) {
  return detail::compose(g, [](const T& x, int n) {
    T s = sin(x);
    T c = n >= 1 ? cos(x) : T(0.0);
    return std::array<T, 4>{s, c, -s, -c};
  });
}

template <class T>
BasicJet<T> cos(const BasicJet<T>& g) {
  return detail::compose(g, [](const T& x, int n) {
    T c = cos(x);
    T s = n >= 1 ? sin(x) : T(0.0);
    return std::array<T, 4>{c, -s, -c, s};
  });
}

inline double tan(double x) {
  detail::check_cos_pole(x, "tan");
  return std::tan(x);
}

template <class T>
BasicJet<T> tan(const BasicJet<T>& g) {
  detail::check_cos_pole(scalar_value(g), "tan");
  return detail::compose(g, [](const T& x, int) {
    T t = tan(x);
    T s2 = 1.0 + t * t;
    return std::array<T, 4>{t, s2, 2.0 * (t * s2), 2.0 * (s2 * (1.0 + 3.0 * (t * t)))};
  });
}

template <class T>
BasicJet<T> sec(const BasicJet<T>& g) {
  detail::check_cos_pole(scalar_value(g), "sec");
  return detail::compose(g, [](const T& x, int) {
    T s = sec(x);
    T t = tan(x);
    T t2 = t * t;
    return std::array<T, 4>{s, s * t, s * (2.0 * t2 + 1.0), (s * t) * (6.0 * t2 + 5.0)};
  });
}

template <class T>
BasicJet<T> cot(const BasicJet<T>& g) {
  detail::check_sin_pole(scalar_value(g), "cot");
  return detail::compose(g, [](const T& x, int) {
    T k = cot(x);
    T c2 = 1.0 + k * k;
    return std::array<T, 4>{k, -c2, 2.0 * (k * c2), -2.0 * (c2 * (1.0 + 3.0 * (k * k)))};
  });
}

template <class T>
BasicJet<T> csc(const BasicJet<T>& g) {
  detail::check_sin_pole(scalar_value(g), "csc");
  return detail::compose(g, [](const T& x, int) {
    T c = csc(x);
    T k = cot(x);
    T k2 = k * k;
    return std::array<T, 4>{c, -(c * k), c * (2.0 * k2 + 1.0), -((c * k) * (6.0 * k2 + 5.0))};
  });
}

inline double sqrt(double x) {
  if (x < 0.0) throw DomainError("sqrt of negative value " + std::to_string(x));
  return std::sqrt(x);
}

template <class T>
BasicJet<T> sqrt(const BasicJet<T>& g) {
  double v = scalar_value(g);
  if (v < 0.0 || (v == 0.0 && !g.is_constant())) {
    throw DomainError("sqrt of non-positive value " + std::to_string(v));
  }
  return detail::compose(g, [](const T& x, int n) {
    T r = sqrt(x);
    std::array<T, 4> d{r, T(0.0), T(0.0), T(0.0)};
    if (n >= 1) {
      T inv = reciprocal(r);
      d[1] = 0.5 * inv;
      T inv_x = inv * inv;
      d[2] = -0.25 * (inv * inv_x);
      d[3] = 0.375 * (inv * inv_x * inv_x);
    }
    return d;
  });
}

inline double exp(double x) { return std::exp(x); }

template <class T>
BasicJet<T> exp(const BasicJet<T>& g) {
  return detail::compose(g, [](const T& x, int) {
    T e = exp(x);
    return std::array<T, 4>{e, e, e, e};
  });
}

inline double log(double x) {
  if (x <= 0.0) throw DomainError("log of non-positive value " + std::to_string(x));
  return std::log(x);
}

template <class T>
BasicJet<T> log(const BasicJet<T>& g) {
  if (scalar_value(g) <= 0.0) throw DomainError("log of non-positive value " + std::to_string(scalar_value(g)));
  return detail::compose(g, [](const T& x, int n) {
    std::array<T, 4> d{log(x), T(0.0), T(0.0), T(0.0)};
    if (n >= 1) {
      T r = reciprocal(x);
      d[1] = r;
      d[2] = -(r * r);
      d[3] = 2.0 * (r * r * r);
    }
    return d;
  });
}

inline double atan(double x) { return std::atan(x); }

template <class T>
BasicJet<T> atan(const BasicJet<T>& g) {
  return detail::compose(g, [](const T& x, int n) {
    std::array<T, 4> d{atan(x), T(0.0), T(0.0), T(0.0)};
    if (n >= 1) {
      T q = reciprocal(1.0 + x * x);
      d[1] = q;
      d[2] = -2.0 * (x * (q * q));
      d[3] = (6.0 * (x * x) - 2.0) * (q * q * q);
    }
    return d;
  });
}

inline double pow_int(double x, int n) {
  if (n < 0) return reciprocal(pow_int(x, -n));
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

template <class T>
BasicJet<T> pow_int(const BasicJet<T>& x, int n) {
  if (n < 0) return reciprocal(pow_int(x, -n));
  BasicJet<T> result(1.0);
  BasicJet<T> base = x;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Flat API over double-coefficient jets.

enum class JetOp {
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPowInt,
  kSin,
  kCos,
  kTan,
  kCot,
  kSec,
  kCsc,
  kSqrt,
  kExp,
  kLog,
  kArctan,
};

inline Jet jet_seed(int var_index, double value, int nvars, int order) {
  if (order < 1 || order > kMaxJetOrder) {
    throw std::invalid_argument("jet_seed: order must be in [1, 3]");
  }
  return Jet::variable(var_index, value, nvars, order);
}

inline double jet_partial(const Jet& j, std::span<const int> alpha) { return j.partial(alpha); }

inline Jet jet_apply(JetOp op, std::span<const Jet> args, int exponent = 0) {
  auto need = [&](std::size_t n) {
    if (args.size() != n) {
      throw std::invalid_argument("jet_apply: expected " + std::to_string(n) + " argument(s), got " +
                                  std::to_string(args.size()));
    }
  };
  switch (op) {
    case JetOp::kAdd: need(2); return args[0] + args[1];
    case JetOp::kSub: need(2); return args[0] - args[1];
    case JetOp::kMul: need(2); return args[0] * args[1];
    case JetOp::kDiv: need(2); return args[0] / args[1];
    case JetOp::kNeg: need(1); return -args[0];
    case JetOp::kPowInt: need(1); return pow_int(args[0], exponent);
    case JetOp::kSin: need(1); return sin(args[0]);
    case JetOp::kCos: need(1); return cos(args[0]);
    case JetOp::kTan: need(1); return tan(args[0]);
    case JetOp::kCot: need(1); return cot(args[0]);
    case JetOp::kSec: need(1); return sec(args[0]);
    case JetOp::kCsc: need(1); return csc(args[0]);
    case JetOp::kSqrt: need(1); return sqrt(args[0]);
    case JetOp::kExp: need(1); return exp(args[0]);
    case JetOp::kLog: need(1); return log(args[0]);
    case JetOp::kArctan: need(1); return atan(args[0]);
  }
  throw std::invalid_argument("jet_apply: unknown op");
}

}  // namespace sodegeo
