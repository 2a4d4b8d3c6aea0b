#include "hh/classify.hpp"

#include <algorithm>
#include <cmath>

namespace hh {

namespace {

using cplx = std::complex<double>;

// Durand-Kerner on a monic polynomial given by coefficients low..high.
std::vector<cplx> poly_roots(std::vector<double> c) {
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  const int n = static_cast<int>(c.size()) - 1;
  std::vector<cplx> roots(n);
  if (n == 0) return roots;
  std::vector<cplx> a(c.begin(), c.end());
  for (auto& v : a) v /= c.back();
  auto eval = [&](cplx x) {
    cplx r = a[n];
    for (int k = n - 1; k >= 0; --k) r = r * x + a[k];
    return r;
  };
  // starting points on a slightly irrational circle
  double radius = 0;
  for (int k = 0; k < n; ++k) radius = std::max(radius, std::pow(std::abs(a[k]), 1.0 / (n - k)));
  radius = std::max(1.0, 2.0 * radius);
  for (int k = 0; k < n; ++k)
    roots[k] = radius * std::polar(1.0, 0.4 + 2.0 * M_PI * k / n);
  for (int it = 0; it < 500; ++it) {
    double moved = 0;
    for (int k = 0; k < n; ++k) {
      cplx denom = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != k) denom *= roots[k] - roots[j];
      if (std::abs(denom) < 1e-300) denom = 1e-300;
      cplx delta = eval(roots[k]) / denom;
      roots[k] -= delta;
      moved = std::max(moved, std::abs(delta));
    }
    if (moved < 1e-15) break;
  }
  return roots;
}

// An m-fold numerical root scatters like eps^(1/m) around the true value, so
// multiplicity detection must test the most degenerate hypotheses first, each
// with its own tolerance. base_tol is the merge radius for simple pairs.
double tol_for_mult(int m, double base_tol) {
  if (m <= 2) return base_tol;
  return std::max(base_tol, 40.0 * std::pow(2.2e-16, 1.0 / m));
}

cplx centroid(const std::vector<cplx>& v, const std::vector<int>& subset) {
  cplx s = 0;
  for (int i : subset) s += v[i];
  return s / double(subset.size());
}

bool within(const std::vector<cplx>& v, const std::vector<int>& subset, double base_tol) {
  cplx c = centroid(v, subset);
  double tol = tol_for_mult(static_cast<int>(subset.size()), base_tol) * (1.0 + std::abs(c));
  for (int i : subset)
    if (std::abs(v[i] - c) > tol) return false;
  return true;
}

std::vector<RootCluster> cluster(const std::vector<cplx>& roots, double base_tol) {
  const int n = static_cast<int>(roots.size());
  auto make = [&](const std::vector<std::vector<int>>& parts) {
    std::vector<RootCluster> out;
    for (const auto& part : parts)
      out.push_back({centroid(roots, part), static_cast<int>(part.size()), false});
    return out;
  };
  if (n == 0) return {};
  if (n == 1) return make({{0}});

  // enumerate partitions from most to least degenerate and keep the first
  // whose every block is coherent at its multiplicity tolerance
  std::vector<std::vector<std::vector<int>>> hypotheses;
  if (n == 4) {
    hypotheses.push_back({{0, 1, 2, 3}});
    for (int out = 0; out < 4; ++out) {
      std::vector<int> tri;
      for (int i = 0; i < 4; ++i)
        if (i != out) tri.push_back(i);
      hypotheses.push_back({tri, {out}});
    }
    hypotheses.push_back({{0, 1}, {2, 3}});
    hypotheses.push_back({{0, 2}, {1, 3}});
    hypotheses.push_back({{0, 3}, {1, 2}});
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        std::vector<int> rest;
        for (int i = 0; i < 4; ++i)
          if (i != a && i != b) rest.push_back(i);
        hypotheses.push_back({{a, b}, {rest[0]}, {rest[1]}});
      }
    hypotheses.push_back({{0}, {1}, {2}, {3}});
  } else if (n == 3) {
    hypotheses.push_back({{0, 1, 2}});
    hypotheses.push_back({{0, 1}, {2}});
    hypotheses.push_back({{0, 2}, {1}});
    hypotheses.push_back({{1, 2}, {0}});
    hypotheses.push_back({{0}, {1}, {2}});
  } else {
    hypotheses.push_back({{0, 1}});
    hypotheses.push_back({{0}, {1}});
  }
  for (const auto& hyp : hypotheses) {
    bool ok = true;
    for (const auto& part : hyp)
      if (!within(roots, part, base_tol)) { ok = false; break; }
    if (ok) return make(hyp);
  }
  return make({{0}, {1}, {2}, {3}});  // unreachable: singletons always pass
}

// Newton-polish an m-fold cluster center on the (m-1)-th derivative, where the
// root is simple and well conditioned.
cplx polish_center(const std::vector<double>& coeffs, cplx c, int mult) {
  std::vector<double> d = coeffs;
  for (int k = 1; k < mult; ++k) {
    std::vector<double> nd(d.size() - 1);
    for (size_t t = 1; t < d.size(); ++t) nd[t - 1] = d[t] * double(t);
    d = nd;
  }
  if (d.size() < 2) return c;
  auto eval = [&](const std::vector<double>& p, cplx x) {
    cplx r = 0;
    for (size_t k = p.size(); k-- > 0;) r = r * x + p[k];
    return r;
  };
  std::vector<double> dd(d.size() - 1);
  for (size_t t = 1; t < d.size(); ++t) dd[t - 1] = d[t] * double(t);
  for (int it = 0; it < 8; ++it) {
    cplx den = eval(dd, c);
    if (std::abs(den) < 1e-300) break;
    cplx step = eval(d, c) / den;
    c -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(c))) break;
  }
  return c;
}

std::vector<int> pattern_of(const std::vector<RootCluster>& clusters) {
  std::vector<int> m;
  for (const auto& c : clusters) m.push_back(c.multiplicity);
  std::sort(m.rbegin(), m.rend());
  return m;
}

}  // namespace

const char* petrov_name(PetrovType t) {
  switch (t) {
    case PetrovType::I: return "I";
    case PetrovType::II: return "II";
    case PetrovType::D: return "D";
    case PetrovType::III: return "III";
    case PetrovType::N: return "N";
    case PetrovType::O: return "O";
  }
  return "?";
}

const char* ricci_label_name(RicciLabel l) {
  switch (l) {
    case RicciLabel::Zero: return "zero";
    case RicciLabel::FourEigenvectorsTwoDouble: return "four-eigenvector/two-double-eigenvalue";
    case RicciLabel::TwoEigenvectorsQuadruple: return "two-eigenvector/quadruple-eigenvalue";
    case RicciLabel::Other: return "other";
  }
  return "?";
}

std::vector<RootCluster> quartic_roots(const std::array<double, 5>& cin) {
  double scale = 0;
  for (double v : cin) scale = std::max(scale, std::abs(v));
  if (scale < 1e-300) throw ConstraintViolated("AllZero: quartic has no coefficients");
  std::vector<double> c(cin.begin(), cin.end());
  for (double& v : c) v /= scale;
  // degree reduction: leading coefficients below threshold are zero
  int deg = 4;
  while (deg > 0 && std::abs(c[deg]) < 1e-9) --deg;
  c.resize(deg + 1);
  std::vector<RootCluster> out;
  if (deg < 4) out.push_back({cplx(0, 0), 4 - deg, true});
  if (deg > 0) {
    auto finite = cluster(poly_roots(c), 1e-6);
    for (RootCluster& r : finite) r.value = polish_center(c, r.value, r.multiplicity);
    out.insert(out.end(), finite.begin(), finite.end());
  }
  return out;
}

PetrovType petrov_from_coeffs(const std::array<double, 5>& C, const ConventionTable& conv) {
  double scale = 0;
  for (double v : C) scale = std::max(scale, std::abs(v));
  if (scale < 1e-12) return PetrovType::O;

  std::array<double, 5> c;
  for (int k = 0; k < 5; ++k) c[k] = conv.quartic_weights[k] * C[k] / scale;

  auto clusters = quartic_roots(c);
  std::vector<int> pat = pattern_of(clusters);

  PetrovType by_pattern;
  if (pat == std::vector<int>{1, 1, 1, 1}) by_pattern = PetrovType::I;
  else if (pat == std::vector<int>{2, 1, 1}) by_pattern = PetrovType::II;
  else if (pat == std::vector<int>{2, 2}) by_pattern = PetrovType::D;
  else if (pat == std::vector<int>{3, 1}) by_pattern = PetrovType::III;
  else if (pat == std::vector<int>{4}) by_pattern = PetrovType::N;
  else throw Inconclusive("root clustering produced an impossible multiplicity pattern");

  // cross-check 1: specialness invariant I^3 = 27 J^2 on normalized plain
  // components (independent of the quartic solver path)
  double n1 = C[0] / scale, n2 = C[1] / scale, n3 = C[2] / scale, n4 = C[3] / scale, n5 = C[4] / scale;
  double I = n1 * n5 - 4.0 * n2 * n4 + 3.0 * n3 * n3;
  double J = n5 * (n3 * n1 - n2 * n2) - n4 * (n4 * n1 - n3 * n2) + n3 * (n4 * n2 - n3 * n3);
  double special_residual = I * I * I - 27.0 * J * J;
  bool special = std::abs(special_residual) < 1e-7;
  if ((by_pattern == PetrovType::I) == special)
    throw Inconclusive("multiplicity pattern disagrees with the I^3-27J^2 specialness test");

  // cross-check 2: aligned-spinor degeneracy split
  if (std::abs(n5) < 1e-9 && std::abs(n4) < 1e-9 && std::abs(n3) > 1e-9) {
    double disc = 2.0 * n2 * n2 - 3.0 * n3 * n1;
    double denom = std::max({n2 * n2, std::abs(n3 * n1), 1e-12});
    bool is_d = std::abs(disc) <= 1e-6 * denom;
    if (is_d != (by_pattern == PetrovType::D))
      throw Inconclusive("aligned degeneracy test disagrees with root clustering");
  }
  return by_pattern;
}

// ------------------------------ eigenstructure ------------------------------

EigenSummary eigen_summary(const std::array<std::array<double, 4>, 4>& m_in) {
  EigenSummary out;
  double scale = 0;
  for (auto& row : m_in)
    for (double v : row) scale = std::max(scale, std::abs(v));
  out.scale = scale;
  if (scale < 1e-30) {
    out.eigenvalues.push_back({cplx(0, 0), 4, false});
    out.eigenvector_count = 4;
    return out;
  }
  double a[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a[i][j] = m_in[i][j] / scale;

  // characteristic polynomial by Faddeev-LeVerrier:
  // p(l) = l^4 - c1 l^3 - c2 l^2 - c3 l - c4 built from traces of powers
  double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
  double a2[4][4] = {}, a3[4][4] = {}, a4[4][4] = {};
  for (int i = 0; i < 4; ++i) t1 += a[i][i];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) a2[i][j] += a[i][k] * a[k][j];
  for (int i = 0; i < 4; ++i) t2 += a2[i][i];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) a3[i][j] += a2[i][k] * a[k][j];
  for (int i = 0; i < 4; ++i) t3 += a3[i][i];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) a4[i][j] += a3[i][k] * a[k][j];
  for (int i = 0; i < 4; ++i) t4 += a4[i][i];
  // Newton's identities: e1=t1, e2=(e1 t1 - t2)/2, ...
  double e1 = t1;
  double e2 = (e1 * t1 - t2) / 2.0;
  double e3 = (e2 * t1 - e1 * t2 + t3) / 3.0;
  double e4 = (e3 * t1 - e2 * t2 + e1 * t3 - t4) / 4.0;
  // char poly: l^4 - e1 l^3 + e2 l^2 - e3 l + e4. Defective multiple
  // eigenvalues scatter like eps^(1/multiplicity), so cluster loosely.
  std::vector<double> cp = {e4, -e3, e2, -e1, 1.0};
  auto clusters = cluster(poly_roots(cp), 5e-4);

  int total_geo = 0;
  for (RootCluster& c : clusters) {
    // rank of (a - lambda I) via complex Gaussian elimination
    cplx g[4][4];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) g[i][j] = cplx(a[i][j], 0) - (i == j ? c.value : cplx(0, 0));
    int rank = 0;
    int row = 0;
    for (int col = 0; col < 4 && row < 4; ++col) {
      int piv = -1;
      double best = 1e-6;  // rank tolerance on the normalized matrix
      for (int r = row; r < 4; ++r)
        if (std::abs(g[r][col]) > best) { best = std::abs(g[r][col]); piv = r; }
      if (piv < 0) continue;
      std::swap_ranges(g[piv], g[piv] + 4, g[row]);
      for (int r = 0; r < 4; ++r) {
        if (r == row) continue;
        cplx fac = g[r][col] / g[row][col];
        for (int k2 = 0; k2 < 4; ++k2) g[r][k2] -= fac * g[row][k2];
      }
      ++row;
      ++rank;
    }
    total_geo += 4 - rank;
    c.multiplicity = c.multiplicity;  // keep algebraic multiplicity
  }
  out.eigenvalues = clusters;
  out.eigenvector_count = total_geo;
  return out;
}

RicciTypeReport ricci_type(const CurvaturePacket& packet, const OracleCurvature& oracle,
                           const std::optional<RicciFamilyContext>& family_context) {
  RicciTypeReport rep;
  if (family_context) {
    rep.alpha = family_context->alpha;
    rep.beta = family_context->beta;
  }

  double cscale = 0;
  for (auto& row : packet.Cab)
    for (double v : row) cscale = std::max(cscale, std::abs(v));

  EigenSummary es = eigen_summary(oracle.mixed_traceless_ricci());
  rep.eigenvalues = es.eigenvalues;
  rep.eigenvector_count = es.eigenvector_count;

  if (es.scale / std::max(packet.scale, 1e-30) < 1e-9 && cscale / std::max(packet.scale, 1e-30) < 1e-9) {
    rep.label = RicciLabel::Zero;
  } else {
    std::vector<int> pat = pattern_of(es.eigenvalues);
    if (pat == std::vector<int>{2, 2} && es.eigenvector_count == 4)
      rep.label = RicciLabel::FourEigenvectorsTwoDouble;
    else if (pat == std::vector<int>{4} && es.eigenvector_count == 2)
      rep.label = RicciLabel::TwoEigenvectorsQuadruple;
    else
      rep.label = RicciLabel::Other;
  }

  if (family_context) {
    const double tol = 1e-7;
    bool a0 = std::abs(*rep.alpha) < tol, b0 = std::abs(*rep.beta) < tol;
    RicciLabel want = !a0   ? RicciLabel::FourEigenvectorsTwoDouble
                      : !b0 ? RicciLabel::TwoEigenvectorsQuadruple
                            : RicciLabel::Zero;
    rep.consistent = (want == rep.label);
  }
  return rep;
}

}  // namespace hh
