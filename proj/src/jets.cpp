#include "hh/jets.hpp"

#include <algorithm>
#include <cmath>

namespace hh {

namespace {

const Chart kCharts[] = {
    {ChartName::QPXY, {"q", "p", "x", "y"}},
    {ChartName::QPXZ, {"q", "p", "x", "z"}},
    {ChartName::QPWY, {"q", "p", "w", "y"}},
    {ChartName::QPWZ, {"q", "p", "w", "z"}},
    {ChartName::QT_XY, {"q", "t", "x", "y"}},
};

// packed key i0 + 5 i1 + 25 i2 + 125 i3 -> table position
struct IndexTables {
  std::vector<MultiIndex> indices;
  std::array<size_t, Jet::kMaxOrder + 1> counts{};
  std::array<int, 625> pos{};
  std::vector<double> factorial;  // factorial of each multi-index

  IndexTables() {
    pos.fill(-1);
    for (int grade = 0; grade <= Jet::kMaxOrder; ++grade) {
      for (int i0 = grade; i0 >= 0; --i0)
        for (int i1 = grade - i0; i1 >= 0; --i1)
          for (int i2 = grade - i0 - i1; i2 >= 0; --i2) {
            int i3 = grade - i0 - i1 - i2;
            indices.push_back({i0, i1, i2, i3});
          }
      counts[grade] = indices.size();
    }
    factorial.resize(indices.size());
    auto fact = [](int n) { double f = 1; for (int k = 2; k <= n; ++k) f *= k; return f; };
    for (size_t t = 0; t < indices.size(); ++t) {
      const MultiIndex& mi = indices[t];
      pos[mi[0] + 5 * mi[1] + 25 * mi[2] + 125 * mi[3]] = static_cast<int>(t);
      factorial[t] = fact(mi[0]) * fact(mi[1]) * fact(mi[2]) * fact(mi[3]);
    }
  }
};

const IndexTables& tables() {
  static const IndexTables t;
  return t;
}

int grade_of(const MultiIndex& mi) { return mi[0] + mi[1] + mi[2] + mi[3]; }

}  // namespace

const Chart& chart_of(ChartName name) { return kCharts[static_cast<int>(name)]; }

const char* chart_id(ChartName name) {
  switch (name) {
    case ChartName::QPXY: return "qpxy";
    case ChartName::QPXZ: return "qpxz";
    case ChartName::QPWY: return "qpwy";
    case ChartName::QPWZ: return "qpwz";
    case ChartName::QT_XY: return "qtxy";
  }
  return "?";
}

const std::vector<MultiIndex>& Jet::index_table() { return tables().indices; }

size_t Jet::coeff_count(int order) {
  if (order < 0 || order > kMaxOrder) throw OrderExceeded("jet order out of range");
  return tables().counts[order];
}

int Jet::position_of(const MultiIndex& mi) {
  for (int k : mi)
    if (k < 0 || k > kMaxOrder) return -1;
  if (grade_of(mi) > kMaxOrder) return -1;
  return tables().pos[mi[0] + 5 * mi[1] + 25 * mi[2] + 125 * mi[3]];
}

Jet::Jet(ChartName chart, int order) : chart_(chart), order_(order) {
  c_.assign(coeff_count(order), 0.0);
}

Jet Jet::constant(double v, ChartName chart, int order) {
  Jet j(chart, order);
  j.c_[0] = v;
  return j;
}

Jet Jet::coordinate(int i, double at, ChartName chart, int order) {
  if (i < 0 || i > 3) throw Error("coordinate index out of range");
  Jet j(chart, order);
  j.c_[0] = at;
  if (order >= 1) {
    MultiIndex mi{0, 0, 0, 0};
    mi[i] = 1;
    j.c_[position_of(mi)] = 1.0;
  }
  return j;
}

double Jet::coeff(const MultiIndex& mi) const {
  int pos = position_of(mi);
  if (pos < 0 || static_cast<size_t>(pos) >= c_.size())
    throw OrderExceeded("multi-index outside jet order");
  return c_[pos];
}

double Jet::partial(const MultiIndex& mi) const {
  int pos = position_of(mi);
  if (pos < 0 || static_cast<size_t>(pos) >= c_.size())
    throw OrderExceeded("multi-index outside jet order");
  return c_[pos] * tables().factorial[pos];
}

Jet Jet::partial_jet(int dir) const {
  if (order_ == 0) throw OrderExceeded("cannot differentiate an order-0 jet");
  Jet out(chart_, order_ - 1);
  const auto& idx = tables().indices;
  for (size_t t = 0; t < out.c_.size(); ++t) {
    MultiIndex mi = idx[t];
    mi[dir] += 1;
    out.c_[t] = c_[position_of(mi)] * mi[dir];
  }
  return out;
}

Jet Jet::truncated(int order) const {
  if (order > order_) throw OrderExceeded("cannot extend jet order");
  Jet out(chart_, order);
  std::copy(c_.begin(), c_.begin() + out.c_.size(), out.c_.begin());
  return out;
}

void Jet::check_compatible(const Jet& o) const {
  if (chart_ != o.chart_) throw ChartMismatch("jet charts differ");
  if (order_ != o.order_) throw ChartMismatch("jet orders differ");
}

Jet Jet::operator-() const {
  Jet out = *this;
  for (double& v : out.c_) v = -v;
  return out;
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(o);
  for (size_t t = 0; t < c_.size(); ++t) c_[t] += o.c_[t];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(o);
  for (size_t t = 0; t < c_.size(); ++t) c_[t] -= o.c_[t];
  return *this;
}

Jet operator+(const Jet& a, const Jet& b) { Jet r = a; r += b; return r; }
Jet operator-(const Jet& a, const Jet& b) { Jet r = a; r -= b; return r; }

Jet operator*(const Jet& a, const Jet& b) {
  a.check_compatible(b);
  Jet out(a.chart_, a.order_);
  const auto& idx = tables().indices;
  const size_t n = a.c_.size();
  for (size_t s = 0; s < n; ++s) {
    if (a.c_[s] == 0.0) continue;
    const MultiIndex& ms = idx[s];
    const int gs = grade_of(ms);
    for (size_t t = 0; t < n; ++t) {
      if (b.c_[t] == 0.0) continue;
      const MultiIndex& mt = idx[t];
      if (gs + grade_of(mt) > a.order_) continue;
      MultiIndex mr{ms[0] + mt[0], ms[1] + mt[1], ms[2] + mt[2], ms[3] + mt[3]};
      out.c_[Jet::position_of(mr)] += a.c_[s] * b.c_[t];
    }
  }
  return out;
}

Jet operator/(const Jet& a, const Jet& b) {
  a.check_compatible(b);
  const double b0 = b.value();
  if (std::abs(b0) < kSingularGuard)
    throw DivisionBySingularValue("jet division: value on singular locus");
  // synthetic power-series division: c_g = (a_g - sum_{0<beta<=g} b_beta c_{g-beta}) / b_0
  Jet out(a.chart_, a.order_);
  const auto& idx = tables().indices;
  const size_t n = a.c_.size();
  for (size_t t = 0; t < n; ++t) {
    const MultiIndex& g = idx[t];
    double acc = a.c_[t];
    for (size_t s = 1; s < n; ++s) {
      if (b.c_[s] == 0.0) continue;
      const MultiIndex& bs = idx[s];
      MultiIndex rest{g[0] - bs[0], g[1] - bs[1], g[2] - bs[2], g[3] - bs[3]};
      if (rest[0] < 0 || rest[1] < 0 || rest[2] < 0 || rest[3] < 0) continue;
      acc -= b.c_[s] * out.c_[Jet::position_of(rest)];
    }
    out.c_[t] = acc / b0;
  }
  return out;
}

Jet operator+(const Jet& a, double s) { Jet r = a; r.coeff(size_t{0}) += s; return r; }
Jet operator+(double s, const Jet& a) { return a + s; }
Jet operator-(const Jet& a, double s) { return a + (-s); }
Jet operator-(double s, const Jet& a) { return (-a) + s; }
Jet operator*(const Jet& a, double s) {
  Jet r = a;
  for (size_t t = 0; t < r.size(); ++t) r.coeff(t) *= s;
  return r;
}
Jet operator*(double s, const Jet& a) { return a * s; }
Jet operator/(const Jet& a, double s) {
  if (std::abs(s) < kSingularGuard) throw DivisionBySingularValue("division by singular scalar");
  return a * (1.0 / s);
}
Jet operator/(double s, const Jet& a) { return jet_reciprocal(a) * s; }

namespace {

// f(a) = sum_m coef[m] * (a - a0)^m, truncated series composition
Jet compose_series(const Jet& a, const std::vector<double>& coef) {
  Jet abar = a;
  abar.coeff(size_t{0}) = 0.0;
  Jet out = Jet::constant(coef[0], a.chart(), a.order());
  Jet pw = Jet::constant(1.0, a.chart(), a.order());
  for (int m = 1; m <= a.order(); ++m) {
    pw = pw * abar;
    out += coef[m] * pw;
  }
  return out;
}

}  // namespace

Jet jet_reciprocal(const Jet& a) {
  return Jet::constant(1.0, a.chart(), a.order()) / a;
}

Jet jet_exp(const Jet& a) {
  std::vector<double> coef(a.order() + 1);
  double e = std::exp(a.value());
  double f = 1.0;
  for (int m = 0; m <= a.order(); ++m) {
    coef[m] = e / f;
    f *= (m + 1);
  }
  return compose_series(a, coef);
}

Jet jet_log(const Jet& a) {
  const double a0 = a.value();
  if (a0 < kSingularGuard) throw DomainError("log of non-positive jet value");
  std::vector<double> coef(a.order() + 1);
  coef[0] = std::log(a0);
  double invpow = 1.0 / a0;
  for (int m = 1; m <= a.order(); ++m) {
    coef[m] = ((m % 2) ? 1.0 : -1.0) * invpow / m;
    invpow /= a0;
  }
  return compose_series(a, coef);
}

Jet jet_sin(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const double table[4] = {s, c, -s, -c};
  std::vector<double> coef(a.order() + 1);
  double f = 1.0;
  for (int m = 0; m <= a.order(); ++m) {
    coef[m] = table[m % 4] / f;
    f *= (m + 1);
  }
  return compose_series(a, coef);
}

Jet jet_cos(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const double table[4] = {c, -s, -c, s};
  std::vector<double> coef(a.order() + 1);
  double f = 1.0;
  for (int m = 0; m <= a.order(); ++m) {
    coef[m] = table[m % 4] / f;
    f *= (m + 1);
  }
  return compose_series(a, coef);
}

Jet jet_pow_real(const Jet& a, double r) {
  const double a0 = a.value();
  if (a0 < kSingularGuard) throw DomainError("pow_real of non-positive jet value");
  std::vector<double> coef(a.order() + 1);
  double binom = 1.0;  // generalized binomial C(r, m)
  double apow = std::pow(a0, r);
  for (int m = 0; m <= a.order(); ++m) {
    coef[m] = binom * apow;
    binom *= (r - m) / (m + 1);
    apow /= a0;
  }
  return compose_series(a, coef);
}

Jet jet_sqrt(const Jet& a) {
  if (a.value() < kSingularGuard) throw DomainError("sqrt of non-positive jet value");
  return jet_pow_real(a, 0.5);
}

Jet jet_pow_int(const Jet& a, long n) {
  if (n == 0) return Jet::constant(1.0, a.chart(), a.order());
  bool neg = n < 0;
  unsigned long k = neg ? static_cast<unsigned long>(-n) : static_cast<unsigned long>(n);
  Jet acc = Jet::constant(1.0, a.chart(), a.order());
  Jet base = a;
  while (k) {
    if (k & 1) acc = acc * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return neg ? jet_reciprocal(acc) : acc;
}

Jet jet_implicit_solve(const std::function<Jet(const Jet&)>& f,
                       const std::function<Jet(const Jet&)>& df,
                       const Jet& u0, double tol) {
  Jet u = u0;
  for (int it = 0; it < 8; ++it) {
    Jet r = f(u);
    double worst = 0;
    for (size_t t = 0; t < r.size(); ++t) worst = std::max(worst, std::abs(r.coeff(t)));
    if (worst < tol) return u;
    u -= r / df(u);
  }
  Jet r = f(u);
  double worst = 0;
  for (size_t t = 0; t < r.size(); ++t) worst = std::max(worst, std::abs(r.coeff(t)));
  if (worst < 1e-8) return u;
  throw Error("implicit jet solve did not converge");
}

std::array<Jet, 4> coordinate_jets(const Point4& at, int order) {
  std::array<Jet, 4> out{Jet(), Jet(), Jet(), Jet()};
  for (int i = 0; i < 4; ++i) out[i] = Jet::coordinate(i, at.v[i], at.chart, order);
  return out;
}

}  // namespace hh
