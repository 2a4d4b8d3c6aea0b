#include <cmath>
#include <random>

#include "doctest.h"
#include "hh/fieldexpr.hpp"

using namespace hh;

namespace {

std::mt19937_64 rng(77001);
double uni(double lo, double hi) { return lo + (hi - lo) * (double(rng() >> 11) * 0x1.0p-53); }
int pick(int n) { return int(rng() % uint64_t(n)); }

ExprPtr random_tree(int depth) {
  static const char* names[] = {"q", "p", "x", "y", "Lambda", "T0", "A", "Omega"};
  if (depth == 0 || pick(4) == 0) {
    if (pick(2)) return ast_num(std::round(uni(-8, 8) * 4) / 4);
    return ast_name(names[pick(8)]);
  }
  switch (pick(10)) {
    case 0: return ast_add(random_tree(depth - 1), random_tree(depth - 1));
    case 1: return ast_sub(random_tree(depth - 1), random_tree(depth - 1));
    case 2: return ast_mul(random_tree(depth - 1), random_tree(depth - 1));
    case 3: return ast_div(random_tree(depth - 1), random_tree(depth - 1));
    case 4: return ast_neg(random_tree(depth - 1));
    case 5: return ast_pow_int(random_tree(depth - 1), pick(7) - 3);
    case 6:  // odd eighths only: an integral exponent would canonicalize to PowInt
      return ast_pow_real(random_tree(depth - 1), (2 * pick(12) + 1) / 8.0);
    case 7: return ast_call(NodeKind::Exp, random_tree(depth - 1));
    case 8: return ast_call(NodeKind::Sin, random_tree(depth - 1));
    default: return ast_call(NodeKind::Sqrt, random_tree(depth - 1));
  }
}

}  // namespace

TEST_CASE("parse shapes and precedence") {
  ExprPtr e = parse_field("q*y - p*x");
  REQUIRE(e->kind == NodeKind::Sub);
  CHECK(e->a->kind == NodeKind::Mul);
  CHECK(e->a->a->name == "q");
  CHECK(e->a->b->name == "y");
  CHECK(e->b->kind == NodeKind::Mul);
  CHECK(e->b->a->name == "p");
  CHECK(e->b->b->name == "x");

  ExprPtr f = parse_field("Lambda/3 * (1 - 3*y + 3*y^2)");
  REQUIRE(f->kind == NodeKind::Mul);
  CHECK(f->a->kind == NodeKind::Div);
  CHECK(f->a->a->name == "Lambda");
  // (1 - 3*y) + 3*y^2 by left association
  CHECK(f->b->kind == NodeKind::Add);
  CHECK(f->b->b->kind == NodeKind::Mul);
  CHECK(f->b->b->b->kind == NodeKind::PowInt);
  CHECK(f->b->b->b->ipow == 2);

  // power binds tighter than unary minus; right associative
  ExprPtr g = parse_field("-x^2");
  REQUIRE(g->kind == NodeKind::Neg);
  CHECK(g->a->kind == NodeKind::PowInt);

  // integer vs real exponents are distinct node kinds
  CHECK(parse_field("x^3")->kind == NodeKind::PowInt);
  CHECK(parse_field("x^0.5")->kind == NodeKind::PowReal);
  CHECK(parse_field("w^(1/2)")->kind == NodeKind::PowReal);
  CHECK(parse_field("x^(-2)")->kind == NodeKind::PowInt);
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    parse_field("x +");
    FAIL("expected ParseFailure");
  } catch (const ParseFailure& pf) {
    CHECK(pf.offset == 3);
  }
  CHECK_THROWS_AS(parse_field("2x"), ParseFailure);       // no implicit multiplication
  CHECK_THROWS_AS(parse_field("x ^ y"), ParseFailure);    // non-numeric exponent
  CHECK_THROWS_AS(parse_field("foo(x)"), ParseFailure);   // unknown function
  CHECK_THROWS_AS(parse_field("(x"), ParseFailure);
}

TEST_CASE("print canonical form") {
  ExprPtr e = parse_field("q*y - p*x");
  CHECK(print_field(e) == "((q*y)-(p*x))");
  ExprPtr n = parse_field("x^2^3");  // right associative: x^(2^3)
  CHECK(n->kind == NodeKind::PowInt);
  CHECK(n->ipow == 8);
  ExprPtr r = parse_field(print_field(n));
  CHECK(expr_equal(n, r));
}

TEST_CASE("round-trip: parse(print(tree)) is the identity on 1000 random trees") {
  int checked = 0;
  while (checked < 1000) {
    ExprPtr t = random_tree(4);
    std::string s = print_field(t);
    ExprPtr back = parse_field(s);
    CHECK(expr_equal(t, back));
    CHECK(print_field(back) == s);
    ++checked;
  }
}

TEST_CASE("evaluation matches direct computation") {
  FieldBinding b;
  b.constants = {{"Lambda", 3.0}, {"A", 1.0}};
  Point4 at{ChartName::QPXY, {0.0, 0.0, 2.0, 0.0}};

  ExprPtr cube = parse_field("x^3");
  Jet j = eval_field(cube, b, at, 3);
  CHECK(j.value() == doctest::Approx(8.0));
  CHECK(j.partial({0, 0, 1, 0}) == doctest::Approx(12.0));
  CHECK(j.partial({0, 0, 2, 0}) == doctest::Approx(12.0));
  CHECK(j.partial({0, 0, 3, 0}) == doctest::Approx(6.0));

  Point4 one{ChartName::QPXY, {0.0, 0.0, 1.0, 0.0}};
  Jet k = eval_field(parse_field("A*x^3 + Lambda/3"), b, one, 3);
  CHECK(k.value() == doctest::Approx(2.0));

  CHECK_THROWS_AS(eval_field(parse_field("Q9 + 1"), b, at, 3), UnboundName);
}

TEST_CASE("jet evaluation of random polynomial expressions is exact") {
  auto snap6 = [](double v) { return std::round(v * 1e6) / 1e6; };  // match to_string's 6 digits
  for (int trial = 0; trial < 50; ++trial) {
    double c0 = snap6(uni(-1, 1)), c1 = snap6(uni(-1, 1)), c2 = snap6(uni(-1, 1)), c3 = snap6(uni(-1, 1));
    double qv = uni(-2, 2), pv = uni(-2, 2), xv = uni(-2, 2), yv = uni(-2, 2);
    std::string s = std::to_string(c0) + " + " + std::to_string(c1) + "*q*x + " +
                    std::to_string(c2) + "*y^2 + " + std::to_string(c3) + "*p*x*y";
    ExprPtr e = parse_field(s);
    FieldBinding b;
    Jet j = eval_field(e, b, Point4{ChartName::QPXY, {qv, pv, xv, yv}}, 3);
    double expect = c0 + c1 * qv * xv + c2 * yv * yv + c3 * pv * xv * yv;
    CHECK(j.value() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(j.partial({1, 0, 0, 0}) == doctest::Approx(c1 * xv).epsilon(1e-12).scale(1.0));
    CHECK(j.partial({0, 0, 0, 2}) == doctest::Approx(2 * c2).epsilon(1e-12).scale(1.0));
    CHECK(j.partial({0, 1, 1, 1}) == doctest::Approx(c3).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("arity enforcement gives exactly zero partials in forbidden directions") {
  FieldFunc f{parse_field("q*p + p^2"), {"q", "p"}};
  std::map<std::string, double> consts;
  validate_arity("S", f, consts);
  FieldBinding b;
  Jet j = eval_field(f.body, b, Point4{ChartName::QPXY, {1.0, 2.0, 3.0, 4.0}}, 3);
  const auto& idx = Jet::index_table();
  for (size_t t = 0; t < j.size(); ++t)
    if (idx[t][2] > 0 || idx[t][3] > 0) CHECK(j.coeff(t) == 0.0);

  FieldFunc bad{parse_field("q + x"), {"q", "p"}};
  CHECK_THROWS_AS(validate_arity("S", bad, consts), ConstraintViolated);
}

TEST_CASE("ast derivative is exact on polynomials") {
  ExprPtr e = parse_field("q^3*p - 2*q*p^2 + 7");
  ExprPtr dq = ast_derivative(e, "q");
  FieldBinding b;
  for (int trial = 0; trial < 20; ++trial) {
    double qv = uni(-2, 2), pv = uni(-2, 2);
    Point4 at{ChartName::QPXY, {qv, pv, 0, 0}};
    Jet j = eval_field(dq, b, at, 2);
    CHECK(j.value() == doctest::Approx(3 * qv * qv * pv - 2 * pv * pv).epsilon(1e-12).scale(1.0));
  }
  // chain rule through sqrt
  ExprPtr s = parse_field("sqrt(q^2 + 1)");
  ExprPtr ds = ast_derivative(s, "q");
  double qv = 0.8;
  Jet j = eval_field(ds, b, Point4{ChartName::QPXY, {qv, 0, 0, 0}}, 2);
  CHECK(j.value() == doctest::Approx(qv / std::sqrt(qv * qv + 1)).epsilon(1e-12));
}

TEST_CASE("ast substitution") {
  ExprPtr om = parse_field("z^2 + q*z");
  ExprPtr zofxy = parse_field("-(y/x)");
  ExprPtr composed = ast_subst(om, "z", zofxy);
  FieldBinding b;
  Point4 at{ChartName::QPXY, {0.5, 0, 2.0, 1.0}};
  Jet j = eval_field(composed, b, at, 3);
  double zv = -0.5;
  CHECK(j.value() == doctest::Approx(zv * zv + 0.5 * zv).epsilon(1e-12));
}
