#include "hh/nullstrings.hpp"

#include <cmath>

namespace hh {

namespace {

enum { Dq = 0, Dp = 1, Dx = 2, Dy = 3 };
const double rt2 = std::sqrt(2.0);

double pd(const Jet& j, int dir) {
  MultiIndex m{0, 0, 0, 0};
  m[dir] = 1;
  return j.partial(m);
}

}  // namespace

std::array<double, 2> sd_expansion(const FieldSet& f, double m) {
  double phi = f.phi.value();
  if (std::abs(phi) < kSingularGuard) throw SingularPhi("phi vanishes at evaluation point");
  return {-rt2 * m / phi * pd(f.phi, Dx), -rt2 * m / phi * pd(f.phi, Dy)};
}

std::array<double, 2> sd_expansion(const HHData& data, const Point4& at, double m) {
  return sd_expansion(data.fields(at, 3), m);
}

CongruenceReport congruence_report_z(const FieldSet& f, const Jet& z) {
  const Jet& phi = f.phi;
  if (std::abs(phi.value()) < kSingularGuard) throw SingularPhi("phi vanishes at evaluation point");
  CongruenceReport rep;
  rep.side = CongruenceSide::ASD_Z;

  Jet zx = z.partial_jet(Dx), zy = z.partial_jet(Dy);
  rep.residual1 = zx.value() - z.value() * zy.value();

  Jet Z = f.B + 2.0 * z * f.Q + (z * z) * f.A;  // full jet; z derivatives included
  rep.residual2 = pd(z, Dq) - z.value() * pd(z, Dp) - pd(z, Dy) * Z.value() +
                  z.value() * pd(Z, Dy) - pd(Z, Dx);

  double ph = phi.value();
  double phx = pd(phi, Dx), phy = pd(phi, Dy), phq = pd(phi, Dq), php = pd(phi, Dp);
  rep.expansion[0] = rt2 / ph * (-ph * pd(z, Dy) + z.value() * phy - phx);
  Jet QzA = f.Q + z * f.A;
  double m2 = z.value() * php - ph * pd(z, Dp) - phq + ph * z.value() * pd(QzA, Dy) -
              ph * pd(QzA, Dx) + QzA.value() * (phx - ph * pd(z, Dy)) +
              (f.B.value() + z.value() * f.Q.value()) * phy;
  rep.expansion[1] = rt2 * ph * m2;

  rep.theta = ph * pd(z, Dy) - 2.0 * z.value() * phy + 2.0 * phx;
  rep.rho = pd(z, Dy);
  return rep;
}

CongruenceReport congruence_report_z(const HHData& data, const ExprPtr& z, const Point4& at,
                                     const FieldBinding& binding) {
  FieldSet f = data.fields(at, 3);
  EvalEnv env = EvalEnv::at_point(f.hh_point, 3, &binding.constants);
  return congruence_report_z(f, eval_expr(z, env));
}

CongruenceReport congruence_report_w(const FieldSet& f, const Jet& w) {
  const Jet& phi = f.phi;
  if (std::abs(phi.value()) < kSingularGuard) throw SingularPhi("phi vanishes at evaluation point");
  CongruenceReport rep;
  rep.side = CongruenceSide::ASD_W;

  Jet wx = w.partial_jet(Dx), wy = w.partial_jet(Dy);
  rep.residual1 = wy.value() - w.value() * wx.value();

  Jet W = f.A + 2.0 * w * f.Q + (w * w) * f.B;
  rep.residual2 = pd(w, Dp) - w.value() * pd(w, Dq) + pd(w, Dx) * W.value() -
                  w.value() * pd(W, Dx) + pd(W, Dy);

  double ph = phi.value();
  double phx = pd(phi, Dx), phy = pd(phi, Dy), phq = pd(phi, Dq), php = pd(phi, Dp);
  rep.expansion[0] = rt2 / ph * (ph * pd(w, Dx) - w.value() * phx + phy);
  Jet QwB = f.Q + w * f.B;
  double n2 = ph * pd(w, Dq) - w.value() * phq + php + ph * w.value() * pd(QwB, Dx) -
              ph * pd(QwB, Dy) + (phy - ph * pd(w, Dx)) * QwB.value() +
              (f.A.value() + w.value() * f.Q.value()) * phx;
  rep.expansion[1] = rt2 * ph * n2;

  rep.theta = ph * pd(w, Dx) - 2.0 * w.value() * phx + 2.0 * phy;
  rep.rho = pd(w, Dx);
  return rep;
}

CongruenceReport congruence_report_w(const HHData& data, const ExprPtr& w, const Point4& at,
                                     const FieldBinding& binding) {
  FieldSet f = data.fields(at, 3);
  EvalEnv env = EvalEnv::at_point(f.hh_point, 3, &binding.constants);
  return congruence_report_w(f, eval_expr(w, env));
}

// ------------------------- consistency conditions -------------------------

namespace {

struct AnsatzJets {
  Jet F, Sig, G, H, z, w;
  Jet x, y;  // from the joint coordinate map
  EvalEnv env;
};

AnsatzJets ansatz_jets(const TwistingAnsatz& a, const Point4& at, int order = 3) {
  if (at.chart != ChartName::QPWZ) throw ChartMismatch("consistency conditions evaluate on (q,p,w,z)");
  AnsatzJets out;
  out.env = EvalEnv::at_point(at, order, &a.binding.constants);
  out.F = eval_expr(a.F, out.env);
  out.Sig = eval_expr(a.Sigma, out.env);
  out.G = eval_expr(a.G, out.env);
  out.H = eval_expr(a.H, out.env);
  out.z = out.env.vars.at("z");
  out.w = out.env.vars.at("w");
  Jet onemzw = 1.0 - out.z * out.w;
  if (std::abs(onemzw.value()) < 0.05)
    throw SingularLocus("1 - z w vanishes at evaluation point");
  out.x = (out.H - out.w * out.Sig) / onemzw;
  out.y = (out.Sig - out.z * out.H) / onemzw;
  return out;
}

enum { Wq = 0, Wp = 1, Ww = 2, Wz = 3 };  // QPWZ directions

}  // namespace

FirstConsistency first_consistency_residual(const TwistingAnsatz& a, const Point4& at) {
  AnsatzJets j = ansatz_jets(a, at);
  FirstConsistency out;
  double Sz = j.Sig.partial(MultiIndex{0, 0, 0, 1});
  double Hw = j.H.partial(MultiIndex{0, 0, 1, 0});
  out.residual = j.F.value() * (j.x.value() - Sz) - j.G.value() * (Hw - j.y.value());
  double Fzz = j.F.partial(MultiIndex{0, 0, 0, 2});
  double Szz = j.Sig.partial(MultiIndex{0, 0, 0, 2});
  double Gww = j.G.partial(MultiIndex{0, 0, 2, 0});
  double Hww = j.H.partial(MultiIndex{0, 0, 2, 0});
  out.fzz_hww_identity = Fzz * Hww + Szz * Gww;
  double F0 = j.F.value(), G0 = j.G.value();
  out.cubic_identity = G0 * G0 * G0 * Hww + F0 * F0 * F0 * Szz;
  return out;
}

double second_consistency_residual(const TwistingAnsatz& a, const Point4& at) {
  AnsatzJets j = ansatz_jets(a, at);
  if (!a.Omega || !a.T || !a.R || !a.E)
    throw ConstraintViolated("second consistency condition needs Omega, T, R, E");
  double Om = eval_expr(a.Omega, j.env).value();
  double T = eval_expr(a.T, j.env).value();
  double R = eval_expr(a.R, j.env).value();
  double E = eval_expr(a.E, j.env).value();

  auto P = [](const Jet& v, int q_, int p_, int w_, int z_) {
    return v.partial(MultiIndex{q_, p_, w_, z_});
  };
  double Sz = P(j.Sig, 0, 0, 0, 1), Sp = P(j.Sig, 0, 1, 0, 0), Sq = P(j.Sig, 1, 0, 0, 0);
  double Szz = P(j.Sig, 0, 0, 0, 2), Szp = P(j.Sig, 0, 1, 0, 1), Szq = P(j.Sig, 1, 0, 0, 1);
  double Hw = P(j.H, 0, 0, 1, 0), Hp = P(j.H, 0, 1, 0, 0), Hq = P(j.H, 1, 0, 0, 0);
  double Hww = P(j.H, 0, 0, 2, 0), Hwq = P(j.H, 1, 0, 1, 0), Hwp = P(j.H, 0, 1, 1, 0);
  double Fz = P(j.F, 0, 0, 0, 1), Fp = P(j.F, 0, 1, 0, 0), Fq = P(j.F, 1, 0, 0, 0);
  double Gw = P(j.G, 0, 0, 1, 0), Gp = P(j.G, 0, 1, 0, 0), Gq = P(j.G, 1, 0, 0, 0);
  double F0 = j.F.value(), G0 = j.G.value();
  if (std::abs(F0) < kSingularGuard || std::abs(G0) < kSingularGuard)
    throw SingularLocus("F or G vanishes at evaluation point");

  double z = j.z.value(), w = j.w.value();
  double x = j.x.value(), y = j.y.value();
  double xS = x - Sz, yH = y - Hw;

  double t = T * xS * xS + (Om * Fz - z * Fp + Fq) * xS / F0 +
             0.5 * (Sp - Om * Szz + z * Szp - Szq);
  double e = E * yH * yH + (R * Gw + w * Gq - Gp) * yH / G0 -
             0.5 * (R * Hww + Hq + w * Hwq - Hwp);

  return (1.0 - w * z) * (t - e) - z * (R * yH + Hp - w * Hq) +
         w * (Om * xS + z * Sp - Sq);
}

// ------------------------------ probe ------------------------------

namespace {

struct SplitMix {
  uint64_t s;
  explicit SplitMix(uint64_t seed) : s(seed) {}
  uint64_t next() {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

struct ProbeCandidate {
  std::array<double, 4> F, S, H;  // polynomial coefficients, degree <= 3
};

// residual of the theta2=0 condition at grid point (z,w):
//   phi/(H_w - y) + 2 phi_z (1-wz)/(Sigma_z - x),  phi = F(z)(x - Sigma_z)
struct ProbeEval {
  double max_residual;
  double min_abs_phi;
};

ProbeEval probe_eval(const ProbeCandidate& c, const std::vector<std::pair<double, double>>& grid) {
  auto poly = [](const std::array<double, 4>& a, double t) {
    return ((a[3] * t + a[2]) * t + a[1]) * t + a[0];
  };
  auto dpoly = [](const std::array<double, 4>& a, double t) {
    return (3 * a[3] * t + 2 * a[2]) * t + a[1];
  };
  auto ddpoly = [](const std::array<double, 4>& a, double t) { return 6 * a[3] * t + 2 * a[2]; };
  double worst = 0, minphi = 1e300;
  for (auto [z, w] : grid) {
    double den = 1.0 - z * w;
    if (std::abs(den) < 0.2) continue;
    double F = poly(c.F, z), Fz = dpoly(c.F, z);
    double S = poly(c.S, z), Sz = dpoly(c.S, z), Szz = ddpoly(c.S, z);
    double H = poly(c.H, w), Hw = dpoly(c.H, w);
    double x = (H - w * S) / den;
    double y = (S - z * H) / den;
    double xs = x - Sz;
    double yh = Hw - y;
    if (std::abs(xs) < 1e-6 || std::abs(yh) < 1e-6) return {1e300, 0.0};
    double phi = F * xs;
    double phiz = Fz * xs + F * (w * xs / den - Szz);  // d/dz at fixed (q,p,w)
    double res = phi / yh + 2.0 * phiz * den / (-xs);
    // the second term of the condition carries (Sigma_z - x) = -xs
    worst = std::max(worst, std::abs(res));
    minphi = std::min(minphi, std::abs(phi));
  }
  return {worst, minphi};
}

}  // namespace

ProbeReport nonexistence_probe(int budget, uint64_t seed, bool phi_floor) {
  ProbeReport rep;
  rep.budget = budget;
  rep.phi_floor = phi_floor;
  rep.best_residual = std::numeric_limits<double>::infinity();
  if (budget <= 0) {
    rep.best_residual = 0;
    return rep;
  }

  std::vector<std::pair<double, double>> grid;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      double z = 0.3 + 1.4 * i / 5.0;
      double w = -1.7 + 1.0 * j / 5.0;  // keep 1 - z w away from 0
      grid.push_back({z, w});
    }

  SplitMix rng(seed);
  for (int k = 0; k < budget; ++k) {
    ProbeCandidate c;
    for (int t = 0; t < 4; ++t) {
      c.F[t] = rng.uniform(-1, 1);
      c.S[t] = rng.uniform(-1, 1);
      c.H[t] = rng.uniform(-1, 1);
    }
    ProbeEval ev = probe_eval(c, grid);
    rep.evaluated += 1;
    if (phi_floor && ev.min_abs_phi < 0.1) continue;  // violates the |phi| floor
    if (ev.max_residual < rep.best_residual) {
      rep.best_residual = ev.max_residual;
      rep.best_min_phi = ev.min_abs_phi;
      rep.trace.push_back(ev.max_residual);
    }
    if (!phi_floor) {
      // descent move: the residual is linear in the overall scale of F, so
      // shrinking F drives it to zero together with phi
      ProbeCandidate c2 = c;
      for (int step = 0; step < 8; ++step) {
        for (double& v : c2.F) v *= 0.1;
        ProbeEval e2 = probe_eval(c2, grid);
        if (e2.max_residual < rep.best_residual) {
          rep.best_residual = e2.max_residual;
          rep.best_min_phi = e2.min_abs_phi;
          rep.trace.push_back(e2.max_residual);
        }
      }
    }
  }
  if (!std::isfinite(rep.best_residual)) rep.best_residual = 1e300;
  return rep;
}

ZeroPattern classify_pattern(const std::vector<double>& samples, double zero_tol, double nonzero_tol) {
  bool all_small = true, any_big = false;
  for (double v : samples) {
    if (std::abs(v) >= zero_tol) all_small = false;
    if (std::abs(v) > nonzero_tol) any_big = true;
  }
  if (all_small) return ZeroPattern::Zero;
  if (any_big) return ZeroPattern::NonZero;
  return ZeroPattern::Inconclusive;
}

const char* zero_pattern_name(ZeroPattern z) {
  switch (z) {
    case ZeroPattern::Zero: return "zero";
    case ZeroPattern::NonZero: return "nonzero";
    case ZeroPattern::Inconclusive: return "inconclusive";
  }
  return "?";
}

}  // namespace hh
