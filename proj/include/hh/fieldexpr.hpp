#pragma once
// Expression language for the free functions of a metric family.
// Grammar (whitespace insignificant, no implicit multiplication):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          right-associative, numeric exponent
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
// where name '(' ... ')' is one of exp, log, sin, cos, sqrt. An exponent must
// fold to a number at parse time; integral exponents are stored as PowInt
// (computed by repeated multiplication, valid for negative bases), others as
// PowReal (positive base required at evaluation).
//
// A Name node resolves at evaluation time: first against the coordinate /
// derived-field environment, then against the constants table.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "hh/jets.hpp"

namespace hh {

enum class NodeKind {
  Number, Name, Add, Sub, Mul, Div, Neg, PowInt, PowReal,
  Exp, Log, Sin, Cos, Sqrt,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  NodeKind kind;
  double number = 0.0;   // Number
  long ipow = 0;         // PowInt
  double rpow = 0.0;     // PowReal
  std::string name;      // Name
  ExprPtr a, b;
};

ExprPtr parse_field(const std::string& text);
std::string print_field(const ExprPtr& e);

// Structural equality (exact numbers, same shapes).
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

// All Name nodes referenced by the tree.
std::set<std::string> expr_names(const ExprPtr& e);

// Jet environment: named jets (coordinates and derived fields) plus scalars.
struct EvalEnv {
  ChartName chart = ChartName::QPXY;
  int order = 3;
  std::map<std::string, Jet> vars;
  const std::map<std::string, double>* consts = nullptr;

  static EvalEnv at_point(const Point4& p, int order,
                          const std::map<std::string, double>* consts = nullptr);
};

Jet eval_expr(const ExprPtr& e, const EvalEnv& env);

// A named function: body plus the variables it may depend on. Evaluation of a
// body that mentions anything outside `args` (or the constants) is rejected,
// which makes forbidden-direction partials exactly zero by construction.
struct FieldFunc {
  ExprPtr body;
  std::set<std::string> args;
};

struct FieldBinding {
  std::map<std::string, FieldFunc> functions;
  std::map<std::string, double> constants;

  const FieldFunc& function(const std::string& name) const;
  bool has_function(const std::string& name) const { return functions.count(name) != 0; }
  double constant(const std::string& name) const;
  bool has_constant(const std::string& name) const { return constants.count(name) != 0; }
};

// Checks the body references only its declared args and known constants.
void validate_arity(const std::string& fname, const FieldFunc& f,
                    const std::map<std::string, double>& constants);

// eval of a bound function in a plain chart-point environment
Jet eval_field(const ExprPtr& e, const FieldBinding& binding, const Point4& at, int order);

// ---- formal AST calculus (used by the catalog to build derived fields) ----
ExprPtr ast_num(double v);
ExprPtr ast_name(const std::string& n);
ExprPtr ast_add(ExprPtr a, ExprPtr b);
ExprPtr ast_sub(ExprPtr a, ExprPtr b);
ExprPtr ast_mul(ExprPtr a, ExprPtr b);
ExprPtr ast_div(ExprPtr a, ExprPtr b);
ExprPtr ast_neg(ExprPtr a);
ExprPtr ast_pow_int(ExprPtr a, long n);
ExprPtr ast_pow_real(ExprPtr a, double r);
ExprPtr ast_call(NodeKind fn, ExprPtr a);

// Exact derivative of the tree with respect to a named variable.
ExprPtr ast_derivative(const ExprPtr& e, const std::string& var);
// Substitute every occurrence of `var` by `repl`.
ExprPtr ast_subst(const ExprPtr& e, const std::string& var, const ExprPtr& repl);

}  // namespace hh
