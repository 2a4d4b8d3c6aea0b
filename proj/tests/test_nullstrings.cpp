#include <cmath>

#include "doctest.h"
#include "hh/nullstrings.hpp"

using namespace hh;

namespace {

FieldBinding no_binding;

HHData flat_data() {
  return HHData::from_exprs(parse_field("1"), parse_field("0"), parse_field("0"),
                            parse_field("0"), no_binding);
}

// phi = x, A = A(q,p,x), Q = (y/x)A + x^2 T0, B = (y^2/x^2)A + 2xy T0 + x Om(-y/x)
HHData pk_data(const std::string& Atext, const std::string& Omtext, double T0) {
  ExprPtr A = parse_field(Atext);
  ExprPtr Om = ast_subst(parse_field(Omtext), "z", parse_field("-(y/x)"));
  ExprPtr T = ast_num(T0);
  ExprPtr Q = ast_add(ast_mul(ast_div(ast_name("y"), ast_name("x")), A),
                      ast_mul(ast_pow_int(ast_name("x"), 2), T));
  ExprPtr B = ast_add(
      ast_add(ast_mul(ast_div(ast_pow_int(ast_name("y"), 2), ast_pow_int(ast_name("x"), 2)), A),
              ast_mul(ast_num(2), ast_mul(ast_mul(ast_name("y"), ast_name("x")), T))),
      ast_mul(ast_name("x"), Om));
  return HHData::from_exprs(parse_field("x"), A, Q, B, no_binding);
}

}  // namespace

TEST_CASE("sd expansion") {
  SUBCASE("phi = x at x=2 with m=1") {
    HHData d = HHData::from_exprs(parse_field("x"), parse_field("0"), parse_field("0"),
                                  parse_field("0"), no_binding);
    auto M = sd_expansion(d, {ChartName::QPXY, {0.1, 0.2, 2.0, 0.3}}, 1.0);
    CHECK(M[0] == doctest::Approx(-std::sqrt(2.0) / 2.0));
    CHECK(M[1] == doctest::Approx(0.0));
  }
  SUBCASE("constant phi flags nonexpanding") {
    HHData d = HHData::from_exprs(parse_field("2"), parse_field("q"), parse_field("p"),
                                  parse_field("y"), no_binding);
    auto M = sd_expansion(d, {ChartName::QPXY, {0.1, 0.2, 0.5, 0.3}}, 1.0);
    CHECK(M[0] == 0.0);
    CHECK(M[1] == 0.0);
  }
  SUBCASE("components read off the phi jet") {
    HHData d = HHData::from_exprs(parse_field("1 + x*y/2 + q*x^2/3"), parse_field("0"),
                                  parse_field("0"), parse_field("0"), no_binding);
    Point4 at{ChartName::QPXY, {0.4, -0.2, 0.8, 0.6}};
    FieldSet f = d.fields(at);
    auto M = sd_expansion(f, 2.0);
    double phi = f.phi.value();
    CHECK(M[0] == doctest::Approx(-std::sqrt(2.0) * 2.0 / phi * f.phi.partial({0, 0, 1, 0})));
    CHECK(M[1] == doctest::Approx(-std::sqrt(2.0) * 2.0 / phi * f.phi.partial({0, 0, 0, 1})));
  }
}

TEST_CASE("z-side congruence reports") {
  SUBCASE("flat metric with constant z: everything zero") {
    CongruenceReport r = congruence_report_z(flat_data(), parse_field("1/2"),
                                             {ChartName::QPXY, {0.1, 0.2, 0.3, 0.4}});
    CHECK(r.residual1 == doctest::Approx(0.0));
    CHECK(r.residual2 == doctest::Approx(0.0));
    CHECK(r.expansion[0] == doctest::Approx(0.0));
    CHECK(r.expansion[1] == doctest::Approx(0.0));
    CHECK(r.theta == doctest::Approx(0.0));
    CHECK(r.rho == doctest::Approx(0.0));
  }
  SUBCASE("z = 0 on a family with B_x = 0") {
    // B = B(q,p,y): theta ~ phi_x, M2 ~ -phi Q_x + phi_x Q + phi_y B - phi_q
    HHData d = HHData::from_exprs(parse_field("1 + x/2 + y/3 + q/5"),
                                  parse_field("q + x*y"), parse_field("p + x^2/4 + y/7"),
                                  parse_field("1/3 + q*y + y^2/2"), no_binding);
    Point4 at{ChartName::QPXY, {0.3, -0.5, 0.9, 0.7}};
    CongruenceReport r = congruence_report_z(d, parse_field("0"), at);
    CHECK(r.residual1 == doctest::Approx(0.0));
    CHECK(r.residual2 == doctest::Approx(0.0));
    FieldSet f = d.fields(at);
    double phx = f.phi.partial({0, 0, 1, 0}), phy = f.phi.partial({0, 0, 0, 1});
    double phq = f.phi.partial({1, 0, 0, 0});
    CHECK(r.theta == doctest::Approx(2.0 * phx));
    double m2_expect = -f.phi.value() * f.Q.partial({0, 0, 1, 0}) + phx * f.Q.value() +
                       phy * f.B.value() - phq;
    CHECK(r.expansion[1] == doctest::Approx(std::sqrt(2.0) * f.phi.value() * m2_expect));
  }
  SUBCASE("para-Kahler family with z = -y/x: nonexpanding twisting congruence") {
    HHData d = pk_data("x^2/2 + q*x + p", "z^2 + q*z + p", 1.0);
    for (double yv : {-0.8, 0.5}) {
      Point4 at{ChartName::QPXY, {0.4, -0.3, 1.2, yv}};
      CongruenceReport r = congruence_report_z(d, parse_field("-(y/x)"), at);
      CHECK(std::abs(r.residual1) < 1e-10);
      CHECK(std::abs(r.residual2) < 1e-10);
      CHECK(std::abs(r.expansion[0]) < 1e-10);
      CHECK(std::abs(r.expansion[1]) < 1e-10);
      CHECK(std::abs(r.theta) > 1e-3);
      CHECK(std::abs(r.rho) > 1e-3);
    }
  }
}

TEST_CASE("w-side congruence reports") {
  SUBCASE("w = 0 on a family with A_y = 0") {
    HHData d = HHData::from_exprs(parse_field("1 + y/2 + x/3"), parse_field("q + x^2/5"),
                                  parse_field("p/2 + x*y/3"), parse_field("q*y + x"), no_binding);
    Point4 at{ChartName::QPXY, {0.2, 0.4, 0.6, -0.5}};
    CongruenceReport r = congruence_report_w(d, parse_field("0"), at);
    CHECK(r.residual1 == doctest::Approx(0.0));
    CHECK(r.residual2 == doctest::Approx(0.0));
    FieldSet f = d.fields(at);
    CHECK(r.theta == doctest::Approx(2.0 * f.phi.partial({0, 0, 0, 1})));
  }
  SUBCASE("w = 0 on the [++,--]-type family: N2 tracks x^2 T_z") {
    // with T = T(q,p,z) the w-side expansion N2 equals x^2 T_z; our T is a
    // constant, so the congruence is nonexpanding
    HHData d = pk_data("x^2/2 + q*x + p", "z^2 + q*z + p", -1.0);
    Point4 at{ChartName::QPXY, {0.4, -0.3, 1.1, 0.6}};
    CongruenceReport r = congruence_report_w(d, parse_field("0"), at);
    CHECK(std::abs(r.residual1) < 1e-12);
    CHECK(std::abs(r.residual2) < 1e-12);
    CHECK(std::abs(r.expansion[0]) < 1e-12);
    CHECK(std::abs(r.expansion[1]) < 1e-12);
    CHECK(std::abs(r.theta) < 1e-12);
    CHECK(std::abs(r.rho) < 1e-12);
  }
  SUBCASE("flat metric, constant w") {
    CongruenceReport r = congruence_report_w(flat_data(), parse_field("2"),
                                             {ChartName::QPXY, {0.1, 0.2, 0.3, 0.4}});
    CHECK(r.residual1 == doctest::Approx(0.0));
    CHECK(r.residual2 == doctest::Approx(0.0));
    CHECK(r.theta == doctest::Approx(0.0));
  }
}

TEST_CASE("first consistency condition") {
  SUBCASE("class I normal form: exactly zero") {
    TwistingAnsatz a;
    a.F = parse_field("1");
    a.Sigma = parse_field("0");
    a.G = parse_field("w");
    a.H = parse_field("w");
    for (double zv : {0.3, -0.8}) {
      Point4 at{ChartName::QPWZ, {0.2, -0.4, 0.7, zv}};
      FirstConsistency r = first_consistency_residual(a, at);
      CHECK(r.residual == doctest::Approx(0.0));
      CHECK(r.fzz_hww_identity == doctest::Approx(0.0));
      CHECK(r.cubic_identity == doctest::Approx(0.0));
    }
  }
  SUBCASE("class IIa normal form: Sigma=F=A sqrt(z), -G=H=A sqrt(w)") {
    FieldBinding b;
    for (double A : {0.7, -1.3}) {
      TwistingAnsatz a;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g*sqrt(z)", A);
      a.F = parse_field(buf);
      a.Sigma = parse_field(buf);
      std::snprintf(buf, sizeof buf, "%.17g*sqrt(w)", A);
      a.H = parse_field(buf);
      std::snprintf(buf, sizeof buf, "-(%.17g*sqrt(w))", A);
      a.G = parse_field(buf);
      for (double zv : {0.4, 1.3}) {
        for (double wv : {0.2, 0.9}) {
          Point4 at{ChartName::QPWZ, {0.1, 0.6, wv, zv}};
          FirstConsistency r = first_consistency_residual(a, at);
          CHECK(std::abs(r.residual) < 1e-10);
          CHECK(std::abs(r.fzz_hww_identity) < 1e-10);
          CHECK(std::abs(r.cubic_identity) < 1e-10);
        }
      }
    }
  }
  SUBCASE("class IIb normal form: F=1, G=-w, Sigma=A z^2, H=A/w") {
    TwistingAnsatz a;
    a.F = parse_field("1");
    a.Sigma = parse_field("0.8*z^2");
    a.G = parse_field("-w");
    a.H = parse_field("0.8/w");
    Point4 at{ChartName::QPWZ, {0.3, -0.2, 0.9, 0.5}};
    FirstConsistency r = first_consistency_residual(a, at);
    CHECK(std::abs(r.residual) < 1e-12);
    CHECK(std::abs(r.fzz_hww_identity) < 1e-12);
    CHECK(std::abs(r.cubic_identity) < 1e-12);
  }
  SUBCASE("random quadratic data stays away from zero on a grid") {
    TwistingAnsatz a;
    a.F = parse_field("1 + z/2 + q/3");
    a.Sigma = parse_field("z^2/2 + p*z");
    a.G = parse_field("w - p/2");
    a.H = parse_field("w^2/3 + q*w");
    double minres = 1e300;
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        double zv = -1.0 + 2.0 * i / 9.0, wv = -1.0 + 2.0 * j / 9.0;
        if (std::abs(1 - zv * wv) < 0.2) continue;
        Point4 at{ChartName::QPWZ, {0.25, -0.35, wv, zv}};
        minres = std::min(minres, std::abs(first_consistency_residual(a, at).residual));
      }
    CHECK(minres > 1e-3);
  }
}

TEST_CASE("second consistency condition") {
  SUBCASE("class I with T = V - Omega, E = w^2 V + R/w") {
    TwistingAnsatz a;
    a.F = parse_field("1");
    a.Sigma = parse_field("0");
    a.G = parse_field("w");
    a.H = parse_field("w");
    a.Omega = parse_field("z^2 + q*z + p");
    a.R = parse_field("w^3/2 + p*w + q");
    ExprPtr V = parse_field("q*p + 1/2");
    a.T = ast_sub(V, a.Omega);
    a.E = ast_add(ast_mul(ast_pow_int(ast_name("w"), 2), V), ast_div(a.R, ast_name("w")));
    for (double zv : {0.4, -0.9}) {
      for (double wv : {0.6, 1.4}) {
        Point4 at{ChartName::QPWZ, {0.3, -0.6, wv, zv}};
        CHECK(std::abs(second_consistency_residual(a, at)) < 1e-10);
      }
    }
    SUBCASE("mismatched T breaks it") {
      a.T = ast_add(a.T, parse_field("1/10"));
      Point4 at{ChartName::QPWZ, {0.3, -0.6, 0.6, 0.4}};
      CHECK(std::abs(second_consistency_residual(a, at)) > 1e-3);
    }
  }
  SUBCASE("class IIb closed forms") {
    // T = V - A_p/(2A^2), E = V w^2 with A=A(q,p)
    ExprPtr A = parse_field("1 + q/2 + p/3");
    ExprPtr Ap = ast_derivative(A, "p");
    ExprPtr V = parse_field("q - p/4");
    TwistingAnsatz a;
    a.F = parse_field("1");
    a.Sigma = ast_mul(A, parse_field("z^2"));
    a.G = parse_field("-w");
    a.H = ast_div(A, ast_name("w"));
    a.Omega = parse_field("z^3/3 + q*z");
    a.R = parse_field("w^2 + p*w");
    a.T = ast_sub(V, ast_div(Ap, ast_mul(ast_num(2), ast_pow_int(A, 2))));
    a.E = ast_mul(V, ast_pow_int(ast_name("w"), 2));
    for (double zv : {0.5, -0.7}) {
      for (double wv : {0.8, 1.2}) {
        Point4 at{ChartName::QPWZ, {0.2, 0.4, wv, zv}};
        CHECK(std::abs(second_consistency_residual(a, at)) < 1e-9);
      }
    }
  }
  SUBCASE("class IIa closed forms") {
    // T = Vz + 3A_p z^{3/2}/A^2 + 3A_q sqrt(z)/A^2 + Omega/(2A sqrt(z))
    // E = Vw - 3A_q w^{3/2}/A^2 - 3A_p sqrt(w)/A^2 + R/(2A sqrt(w))
    ExprPtr A = parse_field("1 + q/3 - p/5");
    ExprPtr Ap = ast_derivative(A, "p");
    ExprPtr Aq = ast_derivative(A, "q");
    ExprPtr A2 = ast_pow_int(A, 2);
    ExprPtr V = parse_field("p + q/2");
    TwistingAnsatz a;
    a.F = ast_mul(A, parse_field("sqrt(z)"));
    a.Sigma = a.F;
    a.H = ast_mul(A, parse_field("sqrt(w)"));
    a.G = ast_neg(a.H);
    a.Omega = parse_field("z^2/2 + q*z + 1");
    a.R = parse_field("w^2/4 + p*w + 1/2");
    ExprPtr z = ast_name("z"), w = ast_name("w");
    a.T = ast_add(ast_add(ast_mul(V, z),
                          ast_add(ast_div(ast_mul(ast_num(3), ast_mul(Ap, ast_pow_real(z, 1.5))), A2),
                                  ast_div(ast_mul(ast_num(3), ast_mul(Aq, ast_call(NodeKind::Sqrt, z))), A2))),
                  ast_div(a.Omega, ast_mul(ast_num(2), ast_mul(A, ast_call(NodeKind::Sqrt, z)))));
    a.E = ast_add(ast_sub(ast_mul(V, w),
                          ast_add(ast_div(ast_mul(ast_num(3), ast_mul(Aq, ast_pow_real(w, 1.5))), A2),
                                  ast_div(ast_mul(ast_num(3), ast_mul(Ap, ast_call(NodeKind::Sqrt, w))), A2))),
                  ast_div(a.R, ast_mul(ast_num(2), ast_mul(A, ast_call(NodeKind::Sqrt, w)))));
    for (double zv : {0.3, 1.1}) {
      for (double wv : {0.5, 1.6}) {
        Point4 at{ChartName::QPWZ, {0.15, -0.25, wv, zv}};
        CHECK(std::abs(second_consistency_residual(a, at)) < 1e-9);
      }
    }
  }
}

TEST_CASE("nonexistence probe") {
  SUBCASE("with the phi floor the residual stays away from zero") {
    ProbeReport r = nonexistence_probe(1000, 7);
    CHECK(r.evaluated == 1000);
    CHECK(r.best_residual > 1e-3);
    CHECK(r.best_min_phi >= 0.1);
  }
  SUBCASE("zero budget gives an empty report") {
    ProbeReport r = nonexistence_probe(0, 7);
    CHECK(r.evaluated == 0);
    CHECK(r.trace.empty());
  }
  SUBCASE("removing the floor drives the residual to zero with phi") {
    ProbeReport r = nonexistence_probe(1000, 7, false);
    CHECK(r.best_residual < 1e-6);
    CHECK(r.best_min_phi < 1e-3);
  }
}

TEST_CASE("zero pattern policy") {
  CHECK(classify_pattern({1e-9, -1e-8, 0}) == ZeroPattern::Zero);
  CHECK(classify_pattern({1e-9, 0.5}) == ZeroPattern::NonZero);
  CHECK(classify_pattern({1e-5, 1e-6}) == ZeroPattern::Inconclusive);
}
