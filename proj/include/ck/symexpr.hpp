#pragma once

/// Exact symbolic expressions over a named chart.
///
/// Expressions are immutable trees built from rational constants, inexact
/// numeric constants, named symbols, n-ary sums and products, powers with
/// rational exponents, and a fixed set of analytic functions. Canonical form
/// (see simplify) sorts and merges terms so that structural equality is
/// usable as expression equality for the rewrite rules implemented here.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ck::symexpr {

struct RationalOverflow : std::runtime_error {
  explicit RationalOverflow(const std::string& what) : std::runtime_error(what) {}
};

/// Reduced fraction with positive denominator. Arithmetic goes through
/// 128-bit intermediates and throws RationalOverflow instead of wrapping.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n) : num(n), den(1) {}
  Rational(long long n, long long d);

  bool is_integer() const { return den == 1; }
  bool is_zero() const { return num == 0; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Rational operator+(Rational a, Rational b);
Rational operator-(Rational a, Rational b);
Rational operator*(Rational a, Rational b);
Rational operator/(Rational a, Rational b);
Rational operator-(Rational a);
bool operator==(Rational a, Rational b);
bool operator!=(Rational a, Rational b);
int compare(Rational a, Rational b);

/// Ordered list of distinct coordinate names.
class Chart {
 public:
  Chart() = default;
  explicit Chart(std::vector<std::string> names);

  const std::vector<std::string>& names() const { return names_; }
  int dimension() const { return static_cast<int>(names_.size()); }
  std::optional<int> index_of(const std::string& name) const;

  bool operator==(const Chart& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
};

/// Coordinates of a point, aligned with a Chart's name order.
using Point = std::vector<double>;

/// Named scalar bindings for symbols that are not chart coordinates.
using Bindings = std::map<std::string, double>;

enum class Fn { Sin, Cos, Sinh, Cosh, Tanh, Exp, Ln, Abs, Sign };

enum class Kind { Rat, Num, Sym, Fun, Pow, Mul, Add };

class Expr;

struct Node {
  Kind kind;
  Rational rat;            // Kind::Rat value; Kind::Pow exponent
  double num = 0;          // Kind::Num value
  std::string name;        // Kind::Sym
  Fn fn = Fn::Sin;         // Kind::Fun
  std::vector<Expr> kids;  // Add/Mul operands; Pow base; Fun argument
};

/// Shared-immutable expression handle. Copies are cheap.
class Expr {
 public:
  Expr();  // the constant 0

  static Expr rational(Rational r);
  static Expr integer(long long n);
  static Expr number(double v);  // inexact constant; never produced by the parser
  static Expr symbol(std::string name);
  static Expr add(std::vector<Expr> terms);
  static Expr mul(std::vector<Expr> factors);
  static Expr pow(Expr base, Rational exponent);
  static Expr fun(Fn f, Expr argument);

  const Node& node() const { return *n_; }
  Kind kind() const { return n_->kind; }

  bool is_rational() const { return n_->kind == Kind::Rat; }
  bool is_zero() const { return n_->kind == Kind::Rat && n_->rat.is_zero(); }
  bool is_one() const { return n_->kind == Kind::Rat && n_->rat == Rational(1); }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

// Convenience operators. The results are unnormalized; call simplify.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

/// Total deterministic order on expression trees; 0 iff structurally equal.
int compare(const Expr& a, const Expr& b);
bool equal(const Expr& a, const Expr& b);

struct SyntaxError : std::runtime_error {
  SyntaxError(const std::string& what, std::size_t position);
  std::size_t position;
};

struct UnknownIdentifier : std::runtime_error {
  explicit UnknownIdentifier(const std::string& offender);
  std::string name;
};

/// Grammar:
///   expr   := term (('+' | '-') term)*
///   term   := factor (('*' | '/') factor)*
///   factor := base ('^' exponent)?
///   base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
/// where exponent is a signed rational, optionally parenthesized ("x^2",
/// "x^-2", "x^(-3/2)"), and numbers are decimal literals folded to exact
/// rationals. Reserved function names: sin cos sinh cosh tanh exp ln sqrt
/// abs sign; sqrt(u) is stored as u^(1/2).
///
/// If `allowed` is given, every bare identifier must be a chart coordinate
/// or a member of `allowed`; offenders raise UnknownIdentifier. A call to a
/// non-reserved name raises UnknownIdentifier regardless.
Expr parse_expr(const std::string& text, const Chart& chart,
                const std::optional<std::set<std::string>>& allowed = std::nullopt);

/// Prints in the grammar above; parse_expr(to_string(e)) reproduces a
/// canonical e up to re-canonicalization.
std::string to_string(const Expr& e);

/// Exact partial derivative with respect to the named symbol, simplified.
/// d(abs u) = sign(u) du and d(sign u) = 0; both are valid away from kinks
/// and callers surface a nonsmooth flag instead of erroring.
Expr differentiate(const Expr& e, const std::string& var);

/// Canonical form: rational folding, flattened sorted sums and products,
/// like-term and like-factor collection (x^a*x^b -> x^(a+b)), power and
/// special-value folds, sin^2+cos^2 -> 1 and cosh^2-sinh^2 -> 1 with
/// matching cofactors. Idempotent.
Expr simplify(const Expr& e);

/// Distributes products over sums and multiplies out positive integer powers
/// of sums, recursively (function arguments included); result is canonical.
/// Expressions the pythagorean folds can only cancel term by term, such as
/// (A cos w + B sin w)² + (A sin w − B cos w)² − A² − B², vanish after
/// expansion.
Expr expand(const Expr& e);

/// Simultaneous substitution of symbols by expressions; result is simplified.
Expr subst(const Expr& e, const std::map<std::string, Expr>& replacements);
Expr subst(const Expr& e, const std::string& name, const Expr& value);

std::vector<std::string> free_symbols(const Expr& e);

/// True if the tree mentions abs or sign anywhere.
bool contains_abs(const Expr& e);

struct EvalError : std::runtime_error {
  enum class Code { DivisionByZero, DomainViolation, Unbound, NotFinite };
  EvalError(Code c, const std::string& what);
  Code code;
};

/// Evaluates at a point of the chart; non-coordinate symbols are looked up
/// in params. Unbound symbols, division by zero, domain violations (ln of a
/// non-positive value, fractional power of a negative base) and non-finite
/// results raise EvalError with the matching code.
double eval(const Expr& e, const Chart& chart, const Point& p, const Bindings& params = {});

/// Axis-aligned box, ranges aligned with a Chart's coordinate order.
struct Box {
  std::vector<std::array<double, 2>> ranges;

  static Box cube(int dimension, double halfwidth, const Point& center = {});
};

struct SampleSpec {
  int count = 256;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  Bindings params;
};

enum class ZeroStatus { SymbolicZero, NumericallyZero, NonZero, Inconclusive };

struct ZeroVerdict {
  ZeroStatus status = ZeroStatus::Inconclusive;
  double max_abs = 0;             // largest |value| over evaluated samples
  std::optional<Point> witness;   // sample proving NonZero
  double witness_value = 0;
  int samples = 0;                // samples successfully evaluated
  double tolerance = 0;
  bool nonsmooth = false;         // expression contains abs or sign

  bool zero() const {
    return status == ZeroStatus::SymbolicZero || status == ZeroStatus::NumericallyZero;
  }
};

/// Simplifies, then samples quasi-randomly over the box. SymbolicZero if the
/// canonical form is the constant 0; NonZero with a witness on the first
/// sample exceeding spec.tol in absolute value; NumericallyZero when at
/// least half the samples evaluate and all stay within tolerance;
/// Inconclusive otherwise.
ZeroVerdict is_identically_zero(const Expr& e, const Chart& chart, const Box& box,
                                const SampleSpec& spec = {});

/// Radical-inverse (Halton) sequence; deterministic for a given seed.
double halton(std::uint64_t index, int base);
Point halton_point(std::uint64_t index, const Box& box, std::uint64_t seed);

}  // namespace ck::symexpr
