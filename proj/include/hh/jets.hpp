#pragma once
// Truncated multivariate Taylor arithmetic in 4 coordinates ("jets").
// A jet stores Taylor coefficients c_alpha = (d^alpha f)(x0) / alpha! for all
// multi-indices |alpha| <= order, dense, in graded-lexicographic order, so
// jets of equal order compare positionally. Default order is 3; the closed
// curvature formulas need two derivatives of composite first-derivative
// quantities and the generic oracle needs two derivatives of the metric.

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hh {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};
struct DivisionBySingularValue : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct OrderExceeded : Error { using Error::Error; };
struct ChartMismatch : Error { using Error::Error; };
struct SingularPhi : Error { using Error::Error; };
struct SingularMetric : Error { using Error::Error; };
struct SingularLocus : Error { using Error::Error; };
struct SingularGauge : Error { using Error::Error; };
struct UnboundName : Error { using Error::Error; };
struct ParseFailure : Error {
  size_t offset;
  std::string expected;
  ParseFailure(size_t off, const std::string& exp, const std::string& what)
      : Error(what), offset(off), expected(exp) {}
};
struct ConstraintViolated : Error { using Error::Error; };
struct CalibrationAmbiguous : Error { using Error::Error; };
struct CalibrationFailed : Error { using Error::Error; };
struct UnsupportedFamily : Error { using Error::Error; };
struct Inconclusive : Error { using Error::Error; };

// Value below which jet division and singular-locus guards trip.
inline constexpr double kSingularGuard = 1e-9;

enum class ChartName { QPXY, QPXZ, QPWY, QPWZ, QT_XY };

struct Chart {
  ChartName name;
  std::array<std::string, 4> labels;
};

const Chart& chart_of(ChartName name);
const char* chart_id(ChartName name);

using MultiIndex = std::array<int, 4>;

struct Point4 {
  ChartName chart = ChartName::QPXY;
  std::array<double, 4> v{0, 0, 0, 0};
};

class Jet {
 public:
  static constexpr int kMaxOrder = 4;

  Jet() = default;
  Jet(ChartName chart, int order);

  static Jet constant(double v, ChartName chart, int order);
  // Coordinate function i at base value `at`: value = at, first partial 1.
  static Jet coordinate(int i, double at, ChartName chart, int order);

  ChartName chart() const { return chart_; }
  int order() const { return order_; }
  double value() const { return c_[0]; }
  size_t size() const { return c_.size(); }
  double coeff(size_t pos) const { return c_[pos]; }
  double& coeff(size_t pos) { return c_[pos]; }
  double coeff(const MultiIndex& mi) const;

  // Derivative value d^mi f (coefficient times multi-index factorial).
  double partial(const MultiIndex& mi) const;
  // First-derivative jet in direction dir, one order lower.
  Jet partial_jet(int dir) const;
  Jet truncated(int order) const;

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);

  friend Jet operator+(const Jet& a, const Jet& b);
  friend Jet operator-(const Jet& a, const Jet& b);
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(const Jet& a, double s);
  friend Jet operator+(double s, const Jet& a);
  friend Jet operator-(const Jet& a, double s);
  friend Jet operator-(double s, const Jet& a);
  friend Jet operator*(const Jet& a, double s);
  friend Jet operator*(double s, const Jet& a);
  friend Jet operator/(const Jet& a, double s);
  friend Jet operator/(double s, const Jet& a);

  // Multi-index table shared by all orders; indices of total degree <= k
  // occupy the first count(k) slots.
  static const std::vector<MultiIndex>& index_table();
  static size_t coeff_count(int order);
  static int position_of(const MultiIndex& mi);  // -1 if out of table

 private:
  void check_compatible(const Jet& o) const;
  ChartName chart_ = ChartName::QPXY;
  int order_ = 0;
  std::vector<double> c_{0.0};
};

Jet jet_exp(const Jet& a);
Jet jet_log(const Jet& a);
Jet jet_sin(const Jet& a);
Jet jet_cos(const Jet& a);
Jet jet_sqrt(const Jet& a);
Jet jet_pow_real(const Jet& a, double r);
Jet jet_pow_int(const Jet& a, long n);
Jet jet_reciprocal(const Jet& a);

// Newton solve f(u)=0 for a jet u, given f and df/du as jet functions and a
// value-level initial guess u0 (assumed close to the root).
Jet jet_implicit_solve(const std::function<Jet(const Jet&)>& f,
                       const std::function<Jet(const Jet&)>& df,
                       const Jet& u0, double tol = 1e-12);

// All 4 coordinate jets at a point.
std::array<Jet, 4> coordinate_jets(const Point4& at, int order);

}  // namespace hh
