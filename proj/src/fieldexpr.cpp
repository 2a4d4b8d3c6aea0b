#include "hh/fieldexpr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hh {

namespace {

ExprPtr node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

// ------------------------------ parser ------------------------------

struct Parser {
  const std::string& s;
  size_t i = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eof() {
    skip_ws();
    return i >= s.size();
  }
  char peek() {
    skip_ws();
    return i < s.size() ? s[i] : '\0';
  }
  [[noreturn]] void fail(const std::string& expected) {
    skip_ws();
    std::ostringstream os;
    os << "parse error at offset " << i << ": expected " << expected;
    throw ParseFailure(i, expected, os.str());
  }

  ExprPtr parse() {
    ExprPtr e = expr();
    if (!eof()) fail("end of input");
    return e;
  }

  ExprPtr expr() {
    ExprPtr e = term();
    while (true) {
      char c = peek();
      if (c == '+' || c == '-') {
        ++i;
        ExprPtr rhs = term();
        e = node({c == '+' ? NodeKind::Add : NodeKind::Sub, 0, 0, 0, "", e, rhs});
      } else {
        return e;
      }
    }
  }

  ExprPtr term() {
    ExprPtr e = unary();
    while (true) {
      char c = peek();
      if (c == '*' || c == '/') {
        ++i;
        ExprPtr rhs = unary();
        e = node({c == '*' ? NodeKind::Mul : NodeKind::Div, 0, 0, 0, "", e, rhs});
      } else {
        return e;
      }
    }
  }

  ExprPtr unary() {
    if (peek() == '-') {
      ++i;
      return node({NodeKind::Neg, 0, 0, 0, "", unary(), nullptr});
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = atom();
    if (peek() == '^') {
      ++i;
      size_t at = i;
      ExprPtr e = unary();  // right associative, allows -2 and (1/2)
      auto v = fold(e);
      if (!v) {
        std::ostringstream os;
        os << "parse error at offset " << at << ": expected numeric exponent";
        throw ParseFailure(at, "numeric exponent", os.str());
      }
      double r = *v;
      if (std::abs(r - std::llround(r)) < 1e-12 && std::abs(r) < 1e9)
        return node({NodeKind::PowInt, 0, std::llround(r), 0, "", base, nullptr});
      return node({NodeKind::PowReal, 0, 0, r, "", base, nullptr});
    }
    return base;
  }

  static std::optional<double> fold(const ExprPtr& e) {
    switch (e->kind) {
      case NodeKind::Number: return e->number;
      case NodeKind::Neg: {
        auto a = fold(e->a);
        return a ? std::optional<double>(-*a) : std::nullopt;
      }
      case NodeKind::Add: case NodeKind::Sub: case NodeKind::Mul: case NodeKind::Div: {
        auto a = fold(e->a), b = fold(e->b);
        if (!a || !b) return std::nullopt;
        switch (e->kind) {
          case NodeKind::Add: return *a + *b;
          case NodeKind::Sub: return *a - *b;
          case NodeKind::Mul: return *a * *b;
          default: return *b == 0 ? std::nullopt : std::optional<double>(*a / *b);
        }
      }
      case NodeKind::PowInt: {
        auto a = fold(e->a);
        return a ? std::optional<double>(std::pow(*a, double(e->ipow))) : std::nullopt;
      }
      default: return std::nullopt;
    }
  }

  ExprPtr atom() {
    char c = peek();
    if (c == '(') {
      ++i;
      ExprPtr e = expr();
      if (peek() != ')') fail("')'");
      ++i;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail("number, name or '('");
  }

  ExprPtr number() {
    skip_ws();
    size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i < s.size() && s[i] == '.') {
      ++i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      size_t save = i;
      ++i;
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
      if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      } else {
        i = save;  // 'e' belongs to something else
      }
    }
    if (i == start) fail("number");
    return node({NodeKind::Number, std::stod(s.substr(start, i - start)), 0, 0, "", nullptr, nullptr});
  }

  ExprPtr name() {
    skip_ws();
    size_t start = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    std::string id = s.substr(start, i - start);
    if (peek() == '(') {
      NodeKind fn;
      if (id == "exp") fn = NodeKind::Exp;
      else if (id == "log") fn = NodeKind::Log;
      else if (id == "sin") fn = NodeKind::Sin;
      else if (id == "cos") fn = NodeKind::Cos;
      else if (id == "sqrt") fn = NodeKind::Sqrt;
      else {
        std::ostringstream os;
        os << "parse error at offset " << start << ": expected known function (exp, log, sin, cos, sqrt)";
        throw ParseFailure(start, "known function", os.str());
      }
      ++i;  // '('
      ExprPtr arg = expr();
      if (peek() != ')') fail("')'");
      ++i;
      return node({fn, 0, 0, 0, "", arg, nullptr});
    }
    return node({NodeKind::Name, 0, 0, 0, id, nullptr, nullptr});
  }
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ExprPtr parse_field(const std::string& text) { return Parser(text).parse(); }

std::string print_field(const ExprPtr& e) {
  switch (e->kind) {
    case NodeKind::Number: return fmt_double(e->number);
    case NodeKind::Name: return e->name;
    case NodeKind::Add: return "(" + print_field(e->a) + "+" + print_field(e->b) + ")";
    case NodeKind::Sub: return "(" + print_field(e->a) + "-" + print_field(e->b) + ")";
    case NodeKind::Mul: return "(" + print_field(e->a) + "*" + print_field(e->b) + ")";
    case NodeKind::Div: return "(" + print_field(e->a) + "/" + print_field(e->b) + ")";
    case NodeKind::Neg: return "(-" + print_field(e->a) + ")";
    case NodeKind::PowInt: return "(" + print_field(e->a) + "^" + std::to_string(e->ipow) + ")";
    case NodeKind::PowReal: return "(" + print_field(e->a) + "^" + fmt_double(e->rpow) + ")";
    case NodeKind::Exp: return "exp(" + print_field(e->a) + ")";
    case NodeKind::Log: return "log(" + print_field(e->a) + ")";
    case NodeKind::Sin: return "sin(" + print_field(e->a) + ")";
    case NodeKind::Cos: return "cos(" + print_field(e->a) + ")";
    case NodeKind::Sqrt: return "sqrt(" + print_field(e->a) + ")";
  }
  throw Error("corrupt expression node");
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::Number: return a->number == b->number;
    case NodeKind::Name: return a->name == b->name;
    case NodeKind::PowInt: return a->ipow == b->ipow && expr_equal(a->a, b->a);
    case NodeKind::PowReal: return a->rpow == b->rpow && expr_equal(a->a, b->a);
    case NodeKind::Neg: case NodeKind::Exp: case NodeKind::Log:
    case NodeKind::Sin: case NodeKind::Cos: case NodeKind::Sqrt:
      return expr_equal(a->a, b->a);
    default:
      return expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
  }
}

std::set<std::string> expr_names(const ExprPtr& e) {
  std::set<std::string> out;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& n) {
    if (!n) return;
    if (n->kind == NodeKind::Name) out.insert(n->name);
    walk(n->a);
    walk(n->b);
  };
  walk(e);
  return out;
}

EvalEnv EvalEnv::at_point(const Point4& p, int order,
                          const std::map<std::string, double>* consts) {
  EvalEnv env;
  env.chart = p.chart;
  env.order = order;
  env.consts = consts;
  const Chart& ch = chart_of(p.chart);
  auto js = coordinate_jets(p, order);
  for (int k = 0; k < 4; ++k) env.vars.emplace(ch.labels[k], js[k]);
  return env;
}

Jet eval_expr(const ExprPtr& e, const EvalEnv& env) {
  switch (e->kind) {
    case NodeKind::Number: return Jet::constant(e->number, env.chart, env.order);
    case NodeKind::Name: {
      auto it = env.vars.find(e->name);
      if (it != env.vars.end()) return it->second;
      if (env.consts) {
        auto ct = env.consts->find(e->name);
        if (ct != env.consts->end()) return Jet::constant(ct->second, env.chart, env.order);
      }
      throw UnboundName("unbound name '" + e->name + "'");
    }
    case NodeKind::Add: return eval_expr(e->a, env) + eval_expr(e->b, env);
    case NodeKind::Sub: return eval_expr(e->a, env) - eval_expr(e->b, env);
    case NodeKind::Mul: return eval_expr(e->a, env) * eval_expr(e->b, env);
    case NodeKind::Div: return eval_expr(e->a, env) / eval_expr(e->b, env);
    case NodeKind::Neg: return -eval_expr(e->a, env);
    case NodeKind::PowInt: return jet_pow_int(eval_expr(e->a, env), e->ipow);
    case NodeKind::PowReal: return jet_pow_real(eval_expr(e->a, env), e->rpow);
    case NodeKind::Exp: return jet_exp(eval_expr(e->a, env));
    case NodeKind::Log: return jet_log(eval_expr(e->a, env));
    case NodeKind::Sin: return jet_sin(eval_expr(e->a, env));
    case NodeKind::Cos: return jet_cos(eval_expr(e->a, env));
    case NodeKind::Sqrt: return jet_sqrt(eval_expr(e->a, env));
  }
  throw Error("corrupt expression node");
}

const FieldFunc& FieldBinding::function(const std::string& name) const {
  auto it = functions.find(name);
  if (it == functions.end()) throw UnboundName("no function '" + name + "' in binding");
  return it->second;
}

double FieldBinding::constant(const std::string& name) const {
  auto it = constants.find(name);
  if (it == constants.end()) throw UnboundName("no constant '" + name + "' in binding");
  return it->second;
}

void validate_arity(const std::string& fname, const FieldFunc& f,
                    const std::map<std::string, double>& constants) {
  for (const std::string& n : expr_names(f.body)) {
    if (f.args.count(n)) continue;
    if (constants.count(n)) continue;
    throw ConstraintViolated("function '" + fname + "' references '" + n +
                             "' outside its declared arguments");
  }
}

Jet eval_field(const ExprPtr& e, const FieldBinding& binding, const Point4& at, int order) {
  EvalEnv env = EvalEnv::at_point(at, order, &binding.constants);
  return eval_expr(e, env);
}

// ------------------------------ AST calculus ------------------------------

ExprPtr ast_num(double v) {
  // canonical trees keep literals nonnegative (the parser can only produce
  // a negative constant as Neg(Number), and print must re-parse identically)
  if (std::signbit(v) && v == v)
    return node({NodeKind::Neg, 0, 0, 0, "",
                 node({NodeKind::Number, -v, 0, 0, "", nullptr, nullptr}), nullptr});
  return node({NodeKind::Number, v, 0, 0, "", nullptr, nullptr});
}
ExprPtr ast_name(const std::string& n) { return node({NodeKind::Name, 0, 0, 0, n, nullptr, nullptr}); }

namespace {
bool is_zero(const ExprPtr& e) { return e->kind == NodeKind::Number && e->number == 0.0; }
bool is_one(const ExprPtr& e) { return e->kind == NodeKind::Number && e->number == 1.0; }
}  // namespace

ExprPtr ast_add(ExprPtr a, ExprPtr b) {
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  return node({NodeKind::Add, 0, 0, 0, "", a, b});
}
ExprPtr ast_sub(ExprPtr a, ExprPtr b) {
  if (is_zero(b)) return a;
  return node({NodeKind::Sub, 0, 0, 0, "", a, b});
}
ExprPtr ast_mul(ExprPtr a, ExprPtr b) {
  if (is_zero(a) || is_zero(b)) return ast_num(0);
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  return node({NodeKind::Mul, 0, 0, 0, "", a, b});
}
ExprPtr ast_div(ExprPtr a, ExprPtr b) {
  if (is_zero(a)) return ast_num(0);
  if (is_one(b)) return a;
  return node({NodeKind::Div, 0, 0, 0, "", a, b});
}
ExprPtr ast_neg(ExprPtr a) {
  if (is_zero(a)) return a;
  return node({NodeKind::Neg, 0, 0, 0, "", a, nullptr});
}
ExprPtr ast_pow_int(ExprPtr a, long n) {
  if (n == 0) return ast_num(1);
  if (n == 1) return a;
  return node({NodeKind::PowInt, 0, n, 0, "", a, nullptr});
}
ExprPtr ast_pow_real(ExprPtr a, double r) {
  return node({NodeKind::PowReal, 0, 0, r, "", a, nullptr});
}
ExprPtr ast_call(NodeKind fn, ExprPtr a) { return node({fn, 0, 0, 0, "", a, nullptr}); }

ExprPtr ast_derivative(const ExprPtr& e, const std::string& var) {
  switch (e->kind) {
    case NodeKind::Number: return ast_num(0);
    case NodeKind::Name: return ast_num(e->name == var ? 1 : 0);
    case NodeKind::Add: return ast_add(ast_derivative(e->a, var), ast_derivative(e->b, var));
    case NodeKind::Sub: return ast_sub(ast_derivative(e->a, var), ast_derivative(e->b, var));
    case NodeKind::Mul:
      return ast_add(ast_mul(ast_derivative(e->a, var), e->b),
                     ast_mul(e->a, ast_derivative(e->b, var)));
    case NodeKind::Div:
      // (a/b)' = a'/b - a b'/b^2
      return ast_sub(ast_div(ast_derivative(e->a, var), e->b),
                     ast_div(ast_mul(e->a, ast_derivative(e->b, var)), ast_pow_int(e->b, 2)));
    case NodeKind::Neg: return ast_neg(ast_derivative(e->a, var));
    case NodeKind::PowInt:
      return ast_mul(ast_mul(ast_num(double(e->ipow)), ast_pow_int(e->a, e->ipow - 1)),
                     ast_derivative(e->a, var));
    case NodeKind::PowReal:
      return ast_mul(ast_mul(ast_num(e->rpow), ast_pow_real(e->a, e->rpow - 1)),
                     ast_derivative(e->a, var));
    case NodeKind::Exp: return ast_mul(ast_call(NodeKind::Exp, e->a), ast_derivative(e->a, var));
    case NodeKind::Log: return ast_div(ast_derivative(e->a, var), e->a);
    case NodeKind::Sin: return ast_mul(ast_call(NodeKind::Cos, e->a), ast_derivative(e->a, var));
    case NodeKind::Cos: return ast_neg(ast_mul(ast_call(NodeKind::Sin, e->a), ast_derivative(e->a, var)));
    case NodeKind::Sqrt:
      return ast_div(ast_derivative(e->a, var),
                     ast_mul(ast_num(2), ast_call(NodeKind::Sqrt, e->a)));
  }
  throw Error("corrupt expression node");
}

ExprPtr ast_subst(const ExprPtr& e, const std::string& var, const ExprPtr& repl) {
  switch (e->kind) {
    case NodeKind::Number: return e;
    case NodeKind::Name: return e->name == var ? repl : e;
    default: {
      ExprNode n = *e;
      if (n.a) n.a = ast_subst(n.a, var, repl);
      if (n.b) n.b = ast_subst(n.b, var, repl);
      return node(std::move(n));
    }
  }
}

}  // namespace hh
