#pragma once
// Null-string congruence machinery: residuals of the congruence equations,
// expansions M_A / N_A, optical scalars of the intersections, and the two
// consistency conditions of the twisting (q,p,w,z) ansatz.
//
// Optical scalars are returned as the representative right-hand sides of the
// proportionality relations; only their vanishing pattern is meaningful.
// Zero-pattern policy over a sample: |v| < 1e-7 everywhere -> zero,
// |v| > 1e-3 somewhere -> nonzero, otherwise inconclusive.

#include <optional>
#include <string>
#include <vector>

#include "hh/hhgeom.hpp"

namespace hh {

enum class CongruenceSide { SD, ASD_Z, ASD_W };

struct CongruenceReport {
  CongruenceSide side = CongruenceSide::ASD_Z;
  double residual1 = 0, residual2 = 0;   // null-string equation LHS
  std::array<double, 2> expansion{};     // M_A or N_A
  double theta = 0, rho = 0;             // representative optical scalars
};

// SD expansion M_B = -sqrt(2) m phi^-1 J_B.
std::array<double, 2> sd_expansion(const HHData& data, const Point4& at, double m);
std::array<double, 2> sd_expansion(const FieldSet& f, double m);

// ASD congruence generated by m ~ [z,1]; z given as a jet (catalog families
// carry derived generators) or as an expression on the hyperheavenly chart.
CongruenceReport congruence_report_z(const FieldSet& f, const Jet& z);
CongruenceReport congruence_report_z(const HHData& data, const ExprPtr& z, const Point4& at,
                                     const FieldBinding& binding = {});

// Mirror congruence generated by n ~ [1,w].
CongruenceReport congruence_report_w(const FieldSet& f, const Jet& w);
CongruenceReport congruence_report_w(const HHData& data, const ExprPtr& w, const Point4& at,
                                     const FieldBinding& binding = {});

// Twisting ansatz of the (q,p,w,z) analysis. All functions are expressions
// over {q,p,z} or {q,p,w} plus constants; evaluated as jets on the QPWZ chart.
struct TwistingAnsatz {
  ExprPtr F, Sigma;      // functions of (q,p,z)
  ExprPtr G, H;          // functions of (q,p,w)
  ExprPtr Omega, T;      // functions of (q,p,z), for the second condition
  ExprPtr R, E;          // functions of (q,p,w), for the second condition
  FieldBinding binding;  // constants
};

struct FirstConsistency {
  double residual = 0;           // F(...) - G(...)
  double fzz_hww_identity = 0;   // F_zz H_ww + Sigma_zz G_ww
  double cubic_identity = 0;     // G^3 H_ww + F^3 Sigma_zz
};

FirstConsistency first_consistency_residual(const TwistingAnsatz& a, const Point4& at);
double second_consistency_residual(const TwistingAnsatz& a, const Point4& at);

struct ProbeReport {
  int budget = 0;
  int evaluated = 0;
  double best_residual = 0;            // min over candidates of max-over-grid
  double best_min_phi = 0;             // min |phi| of the best candidate
  bool phi_floor = true;
  std::vector<double> trace;           // best residual after each improvement
};

// Random search over degree<=3 polynomial F(z), Sigma(z), H(w) minimizing the
// residual of the theta2=0 condition on a (z,w) grid. With the |phi| >= 0.1
// floor the residual is expected to stay above 1e-3; without the floor a
// descent move scales phi toward zero and the residual follows.
ProbeReport nonexistence_probe(int budget, uint64_t seed, bool phi_floor = true);

// Zero-pattern aggregation policy.
enum class ZeroPattern { Zero, NonZero, Inconclusive };
ZeroPattern classify_pattern(const std::vector<double>& samples,
                             double zero_tol = 1e-7, double nonzero_tol = 1e-3);
const char* zero_pattern_name(ZeroPattern z);

}  // namespace hh
