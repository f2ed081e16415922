#include "ck/symexpr.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <utility>

namespace ck::symexpr {

namespace {

using i128 = __int128;

constexpr long long kI64Max = 9223372036854775807LL;

Rational make_rational(i128 n, i128 d) {
  if (d == 0) throw RationalOverflow("zero denominator");
  if (n == 0) return Rational(0);
  if (d < 0) {
    n = -n;
    d = -d;
  }
  i128 a = n < 0 ? -n : n;
  i128 b = d;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  n /= a;
  d /= a;
  if (n > (i128)kI64Max || n < -(i128)kI64Max || d > (i128)kI64Max)
    throw RationalOverflow("rational out of 64-bit range");
  Rational r;
  r.num = (long long)n;
  r.den = (long long)d;
  return r;
}

}  // namespace

Rational::Rational(long long n, long long d) { *this = make_rational(n, d); }

Rational operator+(Rational a, Rational b) {
  return make_rational((i128)a.num * b.den + (i128)b.num * a.den, (i128)a.den * b.den);
}
Rational operator-(Rational a, Rational b) {
  return make_rational((i128)a.num * b.den - (i128)b.num * a.den, (i128)a.den * b.den);
}
Rational operator*(Rational a, Rational b) {
  return make_rational((i128)a.num * b.num, (i128)a.den * b.den);
}
Rational operator/(Rational a, Rational b) {
  if (b.num == 0) throw RationalOverflow("division by zero rational");
  return make_rational((i128)a.num * b.den, (i128)a.den * b.num);
}
Rational operator-(Rational a) { return make_rational(-(i128)a.num, a.den); }
bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
bool operator!=(Rational a, Rational b) { return !(a == b); }
int compare(Rational a, Rational b) {
  i128 lhs = (i128)a.num * b.den;
  i128 rhs = (i128)b.num * a.den;
  return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
}

namespace {

bool ident_like(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha((unsigned char)s[0]) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum((unsigned char)c) && c != '_') return false;
  return true;
}

}  // namespace

Chart::Chart(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!ident_like(names_[i])) throw std::invalid_argument("chart name not an identifier: " + names_[i]);
    for (std::size_t j = i + 1; j < names_.size(); ++j)
      if (names_[i] == names_[j]) throw std::invalid_argument("duplicate chart name: " + names_[i]);
  }
}

std::optional<int> Chart::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return (int)i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// construction

namespace {

std::shared_ptr<const Node> make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

const std::shared_ptr<const Node>& zero_node() {
  static const std::shared_ptr<const Node> z = make_node(Node{Kind::Rat, Rational(0), 0, {}, Fn::Sin, {}});
  return z;
}

}  // namespace

Expr::Expr() : n_(zero_node()) {}

Expr Expr::rational(Rational r) {
  return Expr(make_node(Node{Kind::Rat, r, 0, {}, Fn::Sin, {}}));
}
Expr Expr::integer(long long n) { return rational(Rational(n)); }
Expr Expr::number(double v) {
  return Expr(make_node(Node{Kind::Num, Rational(0), v, {}, Fn::Sin, {}}));
}
Expr Expr::symbol(std::string name) {
  return Expr(make_node(Node{Kind::Sym, Rational(0), 0, std::move(name), Fn::Sin, {}}));
}
Expr Expr::add(std::vector<Expr> terms) {
  if (terms.empty()) return integer(0);
  if (terms.size() == 1) return terms[0];
  return Expr(make_node(Node{Kind::Add, Rational(0), 0, {}, Fn::Sin, std::move(terms)}));
}
Expr Expr::mul(std::vector<Expr> factors) {
  if (factors.empty()) return integer(1);
  if (factors.size() == 1) return factors[0];
  return Expr(make_node(Node{Kind::Mul, Rational(0), 0, {}, Fn::Sin, std::move(factors)}));
}
Expr Expr::pow(Expr base, Rational exponent) {
  return Expr(make_node(Node{Kind::Pow, exponent, 0, {}, Fn::Sin, {std::move(base)}}));
}
Expr Expr::fun(Fn f, Expr argument) {
  return Expr(make_node(Node{Kind::Fun, Rational(0), 0, {}, f, {std::move(argument)}}));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::add({a, Expr::mul({Expr::integer(-1), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::mul({a, Expr::pow(b, Rational(-1))}); }
Expr operator-(const Expr& a) { return Expr::mul({Expr::integer(-1), a}); }

// ---------------------------------------------------------------------------
// ordering

namespace {

int kind_rank(Kind k) {
  switch (k) {
    case Kind::Rat: return 0;
    case Kind::Num: return 1;
    case Kind::Sym: return 2;
    case Kind::Fun: return 3;
    case Kind::Pow: return 4;
    case Kind::Mul: return 5;
    case Kind::Add: return 6;
  }
  return 7;
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
  if (&a.node() == &b.node()) return 0;
  int ra = kind_rank(a.kind());
  int rb = kind_rank(b.kind());
  if (ra != rb) return ra < rb ? -1 : 1;
  const Node& na = a.node();
  const Node& nb = b.node();
  switch (a.kind()) {
    case Kind::Rat:
      return compare(na.rat, nb.rat);
    case Kind::Num:
      return na.num < nb.num ? -1 : na.num > nb.num ? 1 : 0;
    case Kind::Sym:
      return na.name < nb.name ? -1 : na.name > nb.name ? 1 : 0;
    case Kind::Fun: {
      if (na.fn != nb.fn) return (int)na.fn < (int)nb.fn ? -1 : 1;
      return compare(na.kids[0], nb.kids[0]);
    }
    case Kind::Pow: {
      int c = compare(na.kids[0], nb.kids[0]);
      if (c != 0) return c;
      return compare(na.rat, nb.rat);
    }
    case Kind::Mul:
    case Kind::Add: {
      std::size_t n = std::min(na.kids.size(), nb.kids.size());
      for (std::size_t i = 0; i < n; ++i) {
        int c = compare(na.kids[i], nb.kids[i]);
        if (c != 0) return c;
      }
      if (na.kids.size() != nb.kids.size()) return na.kids.size() < nb.kids.size() ? -1 : 1;
      return 0;
    }
  }
  return 0;
}

bool equal(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

// ---------------------------------------------------------------------------
// canonicalization

namespace {

// exact-or-inexact scalar used for coefficients during canonicalization
struct KNum {
  Rational r{1};
  double f = 0;
  bool exact = true;

  static KNum of(Rational q) { return KNum{q, 0, true}; }
  static KNum of_num(double v) { return KNum{Rational(0), v, false}; }

  double value() const { return exact ? r.value() : f; }
  bool is_zero() const { return exact ? r.is_zero() : f == 0.0; }
  bool is_one() const { return exact ? r == Rational(1) : f == 1.0; }
  bool same(const KNum& o) const {
    if (exact != o.exact) return false;
    return exact ? r == o.r : f == o.f;
  }
  KNum neg() const { return exact ? of(-r) : of_num(-f); }
  KNum times(const KNum& o) const {
    if (exact && o.exact) {
      try {
        return of(r * o.r);
      } catch (const RationalOverflow&) {
        return of_num(r.value() * o.r.value());
      }
    }
    return of_num(value() * o.value());
  }
  KNum plus(const KNum& o) const {
    if (exact && o.exact) {
      try {
        return of(r + o.r);
      } catch (const RationalOverflow&) {
        return of_num(r.value() + o.r.value());
      }
    }
    return of_num(value() + o.value());
  }
  Expr to_expr() const { return exact ? Expr::rational(r) : Expr::number(f); }
};

// exact rational power; throws RationalOverflow when the result is not an
// exact rational (negative base with fractional exponent, inexact root, ...)
Rational rat_pow_exact(Rational b, Rational e) {
  if (e.num == 0) return Rational(1);
  if (e.is_integer()) {
    if (b.is_zero()) {
      if (e.num < 0) throw RationalOverflow("zero to negative power");
      return Rational(0);
    }
    bool inv = e.num < 0;
    unsigned long long k = inv ? 0ULL - (unsigned long long)e.num : (unsigned long long)e.num;
    if (k > 64) throw RationalOverflow("power too large");
    i128 rn = 1, rd = 1;
    for (unsigned long long i = 0; i < k; ++i) {
      rn *= b.num;
      rd *= b.den;
      if (rn > (i128)kI64Max || rn < -(i128)kI64Max || rd > (i128)kI64Max)
        throw RationalOverflow("power overflow");
    }
    return inv ? make_rational(rd, rn) : make_rational(rn, rd);
  }
  if (b.num < 0) throw RationalOverflow("fractional power of negative rational");
  if (e.den > 64) throw RationalOverflow("root index too large");
  auto iroot = [](long long v, long long q) -> std::optional<long long> {
    if (v == 0) return 0;
    if (v == 1) return 1;
    double guess = std::pow((double)v, 1.0 / (double)q);
    long long g = (long long)std::llround(guess);
    for (long long c = std::max(0LL, g - 2); c <= g + 2; ++c) {
      i128 p = 1;
      bool over = false;
      for (long long i = 0; i < q; ++i) {
        p *= c;
        if (p > (i128)kI64Max) {
          over = true;
          break;
        }
      }
      if (!over && p == v) return c;
    }
    return std::nullopt;
  };
  auto rn = iroot(b.num, e.den);
  auto rd = iroot(b.den, e.den);
  if (!rn || !rd) throw RationalOverflow("inexact root");
  return rat_pow_exact(Rational(*rn, *rd), Rational(e.num));
}

Expr canon(const Expr& e);
Expr canon_mul_parts(KNum coef, std::vector<Expr> factors);
Expr canon_add_parts(const std::vector<Expr>& kids);
bool add_leading_negative(const Expr& e);
Expr negate_expr(const Expr& e);

Expr canon_pow(const Expr& base, Rational e) {
  if (e.num == 0) return Expr::integer(1);
  if (e == Rational(1)) return base;
  const Node& nb = base.node();
  if (nb.kind == Kind::Rat) {
    try {
      return Expr::rational(rat_pow_exact(nb.rat, e));
    } catch (const RationalOverflow&) {
      return Expr::pow(base, e);
    }
  }
  if (nb.kind == Kind::Num) {
    double v = std::pow(nb.num, e.value());
    if (std::isfinite(v)) return Expr::number(v);
    return Expr::pow(base, e);
  }
  if (nb.kind == Kind::Pow && e.is_integer()) {
    try {
      Rational merged = nb.rat * e;
      return canon_pow(nb.kids[0], merged);
    } catch (const RationalOverflow&) {
      return Expr::pow(base, e);
    }
  }
  if (nb.kind == Kind::Mul && e.is_integer()) {
    std::vector<Expr> kids;
    kids.reserve(nb.kids.size());
    for (const Expr& k : nb.kids) kids.push_back(canon_pow(k, e));
    return canon_mul_parts(KNum::of(Rational(1)), std::move(kids));
  }
  // Sign-normalized sum bases let (-u)^k cancel against u^-k.
  if (nb.kind == Kind::Add && e.is_integer() && add_leading_negative(base)) {
    Expr flipped = canon_pow(negate_expr(base), e);
    if (e.num % 2 == 0) return flipped;
    return canon_mul_parts(KNum::of(Rational(-1)), {flipped});
  }
  return Expr::pow(base, e);
}

// factors must already be canonical; flattens, merges exponents of equal
// bases, folds constants into the leading coefficient
Expr canon_mul_parts(KNum coef, std::vector<Expr> factors) {
  std::vector<std::pair<Expr, Rational>> bases;
  auto absorb = [&](const Expr& f, auto&& self) -> void {
    const Node& n = f.node();
    switch (n.kind) {
      case Kind::Rat:
        coef = coef.times(KNum::of(n.rat));
        return;
      case Kind::Num:
        coef = coef.times(KNum::of_num(n.num));
        return;
      case Kind::Mul:
        for (const Expr& k : n.kids) self(k, self);
        return;
      case Kind::Pow: {
        for (auto& [b, q] : bases)
          if (equal(b, n.kids[0])) {
            q = q + n.rat;
            return;
          }
        bases.emplace_back(n.kids[0], n.rat);
        return;
      }
      default: {
        if (add_leading_negative(f)) {
          coef = coef.neg();
          self(negate_expr(f), self);
          return;
        }
        for (auto& [b, q] : bases)
          if (equal(b, f)) {
            q = q + Rational(1);
            return;
          }
        bases.emplace_back(f, Rational(1));
        return;
      }
    }
  };
  for (const Expr& f : factors) absorb(f, absorb);

  std::vector<Expr> out;
  for (auto& [b, q] : bases) {
    if (q.num == 0) continue;
    Expr p = canon_pow(b, q);
    const Node& n = p.node();
    if (n.kind == Kind::Rat)
      coef = coef.times(KNum::of(n.rat));
    else if (n.kind == Kind::Num)
      coef = coef.times(KNum::of_num(n.num));
    else
      out.push_back(p);
  }
  if (coef.is_zero()) return Expr::integer(0);
  std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
  if (out.empty()) return coef.to_expr();
  // A bare scalar times a sum distributes, so that sums cancel term by term.
  if (out.size() == 1 && out[0].kind() == Kind::Add && !coef.is_one()) {
    std::vector<Expr> scaled;
    Expr c = coef.to_expr();
    for (const Expr& t : out[0].node().kids) scaled.push_back(canon_mul_parts(KNum::of(Rational(1)), {c, t}));
    return canon_add_parts(scaled);
  }
  if (coef.is_one()) {
    if (out.size() == 1) return out[0];
    return Expr::mul(std::move(out));
  }
  std::vector<Expr> kids;
  kids.reserve(out.size() + 1);
  kids.push_back(coef.to_expr());
  for (auto& f : out) kids.push_back(std::move(f));
  return Expr::mul(std::move(kids));
}

struct Term {
  KNum c;
  std::vector<Expr> fs;  // canonical factors, sorted, constants excluded
};

// splits a canonical non-Add expression into coefficient and factor list
Term split_term(const Expr& e) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Rat:
      return {KNum::of(n.rat), {}};
    case Kind::Num:
      return {KNum::of_num(n.num), {}};
    case Kind::Mul: {
      Term t{KNum::of(Rational(1)), {}};
      for (const Expr& k : n.kids) {
        if (k.kind() == Kind::Rat)
          t.c = t.c.times(KNum::of(k.node().rat));
        else if (k.kind() == Kind::Num)
          t.c = t.c.times(KNum::of_num(k.node().num));
        else
          t.fs.push_back(k);
      }
      return t;
    }
    default:
      return {KNum::of(Rational(1)), {e}};
  }
}

int compare_factor_lists(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    int c = compare(a[i], b[i]);
    if (c != 0) return c;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

// The sign marker of a sum is the coefficient sign of its minimal factor
// list. Negation flips it no matter how the terms sort, so flipping is
// involutive.
bool add_leading_negative(const Expr& e) {
  if (e.kind() != Kind::Add) return false;
  bool neg = false, first = true;
  std::vector<Expr> best;
  for (const Expr& k : e.node().kids) {
    Term t = split_term(k);
    if (first || compare_factor_lists(t.fs, best) < 0) {
      best = std::move(t.fs);
      neg = t.c.value() < 0;
      first = false;
    }
  }
  return neg;
}

Expr negate_expr(const Expr& e) {
  if (e.kind() == Kind::Add) {
    std::vector<Expr> kids;
    kids.reserve(e.node().kids.size());
    for (const Expr& t : e.node().kids) {
      kids.push_back(canon_mul_parts(KNum::of(Rational(-1)), {t}));
    }
    return canon_add_parts(kids);
  }
  return canon_mul_parts(KNum::of(Rational(-1)), {e});
}

bool factors_equal(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!equal(a[i], b[i])) return false;
  return true;
}

// removes the factor fn(u)^2 from fs if present, reporting u
std::optional<std::pair<Expr, std::vector<Expr>>> strip_square(const std::vector<Expr>& fs, Fn fn) {
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Node& n = fs[i].node();
    if (n.kind != Kind::Pow || n.rat != Rational(2)) continue;
    const Node& b = n.kids[0].node();
    if (b.kind != Kind::Fun || b.fn != fn) continue;
    std::vector<Expr> rest;
    rest.reserve(fs.size() - 1);
    for (std::size_t j = 0; j < fs.size(); ++j)
      if (j != i) rest.push_back(fs[j]);
    return std::make_pair(b.kids[0], std::move(rest));
  }
  return std::nullopt;
}

// c*sin(u)^2*R + c*cos(u)^2*R -> c*R and c*cosh(u)^2*R - c*sinh(u)^2*R -> c*R
void pythagorean_merge(std::vector<Term>& terms) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < terms.size() && !changed; ++i) {
      auto si = strip_square(terms[i].fs, Fn::Sin);
      auto ci = strip_square(terms[i].fs, Fn::Cosh);
      for (std::size_t j = 0; j < terms.size() && !changed; ++j) {
        if (i == j) continue;
        if (si) {
          auto cj = strip_square(terms[j].fs, Fn::Cos);
          if (cj && equal(si->first, cj->first) && factors_equal(si->second, cj->second) &&
              terms[i].c.same(terms[j].c)) {
            terms[i] = Term{terms[i].c, si->second};
            terms.erase(terms.begin() + j);
            changed = true;
          }
        }
        if (!changed && ci) {
          auto sj = strip_square(terms[j].fs, Fn::Sinh);
          if (sj && equal(ci->first, sj->first) && factors_equal(ci->second, sj->second) &&
              terms[j].c.same(terms[i].c.neg())) {
            terms[i] = Term{terms[i].c, ci->second};
            terms.erase(terms.begin() + j);
            changed = true;
          }
        }
      }
    }
  }
}

Expr canon_add_parts(const std::vector<Expr>& kids) {
  std::vector<Term> terms;
  auto absorb = [&](const Expr& k, auto&& self) -> void {
    if (k.kind() == Kind::Add) {
      for (const Expr& kk : k.node().kids) self(kk, self);
      return;
    }
    Term t = split_term(k);
    if (t.c.is_zero()) return;
    for (Term& u : terms)
      if (factors_equal(u.fs, t.fs)) {
        u.c = u.c.plus(t.c);
        return;
      }
    terms.push_back(std::move(t));
  };
  for (const Expr& k : kids) absorb(k, absorb);

  pythagorean_merge(terms);

  std::vector<Expr> out;
  for (Term& t : terms) {
    if (t.c.is_zero()) continue;
    out.push_back(canon_mul_parts(t.c, t.fs));
  }
  std::erase_if(out, [](const Expr& t) { return t.is_zero(); });
  if (out.empty()) return Expr::integer(0);
  std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
  if (out.size() == 1) return out[0];
  return Expr::add(std::move(out));
}

Expr canon_fun(Fn fn, const Expr& arg) {
  const Node& n = arg.node();
  if (n.kind == Kind::Rat) {
    Rational r = n.rat;
    if (r.is_zero()) {
      switch (fn) {
        case Fn::Sin:
        case Fn::Sinh:
        case Fn::Tanh:
        case Fn::Sign:
        case Fn::Abs:
          return Expr::integer(0);
        case Fn::Cos:
        case Fn::Cosh:
        case Fn::Exp:
          return Expr::integer(1);
        case Fn::Ln:
          break;  // ln(0) stays symbolic; evaluation reports the domain error
      }
    }
    if (fn == Fn::Abs) return Expr::rational(r.num < 0 ? -r : r);
    if (fn == Fn::Sign) return Expr::integer(r.num > 0 ? 1 : r.num < 0 ? -1 : 0);
    if (fn == Fn::Ln && r == Rational(1)) return Expr::integer(0);
  }
  if (n.kind == Kind::Num) {
    double v = n.num;
    switch (fn) {
      case Fn::Sin: return Expr::number(std::sin(v));
      case Fn::Cos: return Expr::number(std::cos(v));
      case Fn::Sinh: return Expr::number(std::sinh(v));
      case Fn::Cosh: return Expr::number(std::cosh(v));
      case Fn::Tanh: return Expr::number(std::tanh(v));
      case Fn::Exp: return Expr::number(std::exp(v));
      case Fn::Abs: return Expr::number(std::fabs(v));
      case Fn::Sign: return Expr::number(v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0);
      case Fn::Ln:
        if (v > 0) return Expr::number(std::log(v));
        break;
    }
  }
  if (fn == Fn::Ln && n.kind == Kind::Fun && n.fn == Fn::Exp) return n.kids[0];
  return Expr::fun(fn, arg);
}

Expr canon(const Expr& e) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Rat:
    case Kind::Num:
    case Kind::Sym:
      return e;
    case Kind::Fun:
      return canon_fun(n.fn, canon(n.kids[0]));
    case Kind::Pow:
      return canon_pow(canon(n.kids[0]), n.rat);
    case Kind::Mul: {
      std::vector<Expr> kids;
      kids.reserve(n.kids.size());
      for (const Expr& k : n.kids) kids.push_back(canon(k));
      return canon_mul_parts(KNum::of(Rational(1)), std::move(kids));
    }
    case Kind::Add: {
      std::vector<Expr> kids;
      kids.reserve(n.kids.size());
      for (const Expr& k : n.kids) kids.push_back(canon(k));
      return canon_add_parts(kids);
    }
  }
  return e;
}

}  // namespace

Expr simplify(const Expr& e) {
  Expr cur = e;
  for (int pass = 0; pass < 10; ++pass) {
    Expr next = canon(cur);
    if (equal(next, cur)) return next;
    cur = next;
  }
  return cur;
}

namespace {

std::vector<Expr> sum_terms(const Expr& e) {
  if (e.kind() == Kind::Add) return e.node().kids;
  return {e};
}

Expr expand_canonical(const Expr& x) {
  const Node& n = x.node();
  switch (n.kind) {
    case Kind::Add: {
      std::vector<Expr> kids;
      kids.reserve(n.kids.size());
      for (const Expr& k : n.kids) kids.push_back(expand_canonical(k));
      return simplify(Expr::add(std::move(kids)));
    }
    case Kind::Mul: {
      std::vector<Expr> acc{Expr::integer(1)};
      for (const Expr& k : n.kids) {
        std::vector<Expr> rhs = sum_terms(expand_canonical(k));
        std::vector<Expr> next;
        next.reserve(acc.size() * rhs.size());
        for (const Expr& a : acc)
          for (const Expr& b : rhs)
            for (const Expr& t : sum_terms(simplify(a * b))) next.push_back(t);
        acc = std::move(next);
      }
      return simplify(Expr::add(std::move(acc)));
    }
    case Kind::Pow: {
      Expr base = expand_canonical(n.kids[0]);
      if (n.rat.is_integer() && n.rat.num > 1 && base.kind() == Kind::Add) {
        // multiply term lists directly; a whole-product simplify would fold
        // the equal factors back into this very power
        std::vector<Expr> acc = sum_terms(base);
        const std::vector<Expr> rhs = acc;
        for (long long i = 1; i < n.rat.num; ++i) {
          std::vector<Expr> next;
          next.reserve(acc.size() * rhs.size());
          for (const Expr& a : acc)
            for (const Expr& b : rhs)
              for (const Expr& t : sum_terms(simplify(a * b))) next.push_back(t);
          acc = std::move(next);
        }
        return simplify(Expr::add(std::move(acc)));
      }
      return simplify(Expr::pow(std::move(base), n.rat));
    }
    case Kind::Fun:
      return simplify(Expr::fun(n.fn, expand_canonical(n.kids[0])));
    default:
      return x;
  }
}

}  // namespace

Expr expand(const Expr& e) {
  Expr cur = simplify(e);
  for (int pass = 0; pass < 8; ++pass) {
    Expr next = expand_canonical(cur);
    if (equal(next, cur)) return next;
    cur = next;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// parsing

SyntaxError::SyntaxError(const std::string& what, std::size_t pos)
    : std::runtime_error(what + " at position " + std::to_string(pos)), position(pos) {}

UnknownIdentifier::UnknownIdentifier(const std::string& offender)
    : std::runtime_error("unknown identifier: " + offender), name(offender) {}

namespace {

struct Token {
  enum T { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } t;
  std::size_t pos = 0;
  std::string text;
  Rational value;       // Number
  bool digits_only = false;
};

struct Lexer {
  const std::string& s;
  std::size_t i = 0;

  Token next() {
    while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
    Token tok;
    tok.pos = i;
    if (i >= s.size()) {
      tok.t = Token::End;
      return tok;
    }
    char c = s[i];
    switch (c) {
      case '+': ++i; tok.t = Token::Plus; return tok;
      case '-': ++i; tok.t = Token::Minus; return tok;
      case '*': ++i; tok.t = Token::Star; return tok;
      case '/': ++i; tok.t = Token::Slash; return tok;
      case '^': ++i; tok.t = Token::Caret; return tok;
      case '(': ++i; tok.t = Token::LParen; return tok;
      case ')': ++i; tok.t = Token::RParen; return tok;
      default: break;
    }
    if (std::isdigit((unsigned char)c)) return lex_number();
    if (std::isalpha((unsigned char)c) || c == '_') {
      std::size_t start = i;
      while (i < s.size() && (std::isalnum((unsigned char)s[i]) || s[i] == '_')) ++i;
      tok.t = Token::Ident;
      tok.text = s.substr(start, i - start);
      return tok;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", i);
  }

  Token lex_number() {
    Token tok;
    tok.pos = i;
    tok.t = Token::Number;
    std::size_t start = i;
    i128 mant = 0;
    int frac_digits = 0;
    bool dot = false;
    bool digits_only = true;
    auto push_digit = [&](char d) {
      mant = mant * 10 + (d - '0');
      if (mant > (i128)kI64Max * 1000000) throw SyntaxError("numeric literal out of range", start);
    };
    while (i < s.size()) {
      char c = s[i];
      if (std::isdigit((unsigned char)c)) {
        push_digit(c);
        if (dot) ++frac_digits;
        ++i;
      } else if (c == '.' && !dot) {
        dot = true;
        digits_only = false;
        ++i;
      } else {
        break;
      }
    }
    long long exp10 = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      std::size_t save = i;
      std::size_t j = i + 1;
      bool neg = false;
      if (j < s.size() && (s[j] == '+' || s[j] == '-')) {
        neg = s[j] == '-';
        ++j;
      }
      if (j < s.size() && std::isdigit((unsigned char)s[j])) {
        long long v = 0;
        while (j < s.size() && std::isdigit((unsigned char)s[j])) {
          v = v * 10 + (s[j] - '0');
          if (v > 40) throw SyntaxError("numeric literal out of range", save);
          ++j;
        }
        exp10 = neg ? -v : v;
        i = j;
        digits_only = false;
      }
    }
    i128 num = mant;
    i128 den = 1;
    long long down = frac_digits - exp10;
    for (long long k = 0; k < std::max(0LL, down); ++k) den *= 10;
    for (long long k = 0; k < std::max(0LL, -down); ++k) num *= 10;
    try {
      tok.value = make_rational(num, den);
    } catch (const RationalOverflow&) {
      throw SyntaxError("numeric literal out of range", start);
    }
    tok.text = s.substr(start, i - start);
    tok.digits_only = digits_only;
    return tok;
  }
};

const std::map<std::string, Fn>& function_names() {
  static const std::map<std::string, Fn> m = {
      {"sin", Fn::Sin},   {"cos", Fn::Cos}, {"sinh", Fn::Sinh}, {"cosh", Fn::Cosh},
      {"tanh", Fn::Tanh}, {"exp", Fn::Exp}, {"ln", Fn::Ln},     {"abs", Fn::Abs},
      {"sign", Fn::Sign}};
  return m;
}

struct Parser {
  Lexer lex;
  Token tok;
  const Chart& chart;
  const std::optional<std::set<std::string>>& allowed;

  Parser(const std::string& text, const Chart& c, const std::optional<std::set<std::string>>& a)
      : lex{text}, chart(c), allowed(a) {
    tok = lex.next();
  }

  void advance() { tok = lex.next(); }

  void expect(Token::T t, const char* what) {
    if (tok.t != t) throw SyntaxError(std::string("expected ") + what, tok.pos);
    advance();
  }

  Expr parse() {
    Expr e = expr();
    if (tok.t != Token::End) throw SyntaxError("trailing input", tok.pos);
    return e;
  }

  Expr expr() {
    Expr e = term();
    while (tok.t == Token::Plus || tok.t == Token::Minus) {
      bool minus = tok.t == Token::Minus;
      advance();
      Expr rhs = term();
      e = minus ? e - rhs : e + rhs;
    }
    return e;
  }

  Expr term() {
    Expr e = factor();
    while (tok.t == Token::Star || tok.t == Token::Slash) {
      bool div = tok.t == Token::Slash;
      advance();
      Expr rhs = factor();
      e = div ? e / rhs : e * rhs;
    }
    return e;
  }

  Expr factor() {
    Expr b = base();
    if (tok.t == Token::Caret) {
      advance();
      return Expr::pow(b, exponent());
    }
    return b;
  }

  Rational exponent() {
    bool paren = false;
    if (tok.t == Token::LParen) {
      paren = true;
      advance();
    }
    long long sign = 1;
    if (tok.t == Token::Minus) {
      sign = -1;
      advance();
    } else if (tok.t == Token::Plus) {
      advance();
    }
    if (tok.t != Token::Number || !tok.digits_only)
      throw SyntaxError("expected rational exponent", tok.pos);
    Rational num = tok.value;
    advance();
    Rational result = Rational(sign) * num;
    // a fractional exponent must be parenthesized; a bare slash after x^2
    // stays a division
    if (paren && tok.t == Token::Slash) {
      advance();
      if (!(tok.t == Token::Number && tok.digits_only && !tok.value.is_zero()))
        throw SyntaxError("expected exponent denominator", tok.pos);
      result = result / tok.value;
      advance();
    }
    if (paren) expect(Token::RParen, "')'");
    return result;
  }

  Expr base() {
    switch (tok.t) {
      case Token::Number: {
        Expr e = Expr::rational(tok.value);
        advance();
        return e;
      }
      case Token::Ident: {
        std::string name = tok.text;
        std::size_t pos = tok.pos;
        advance();
        if (tok.t == Token::LParen) {
          advance();
          Expr arg = expr();
          expect(Token::RParen, "')'");
          if (name == "sqrt") return Expr::pow(arg, Rational(1, 2));
          auto it = function_names().find(name);
          if (it == function_names().end()) throw UnknownIdentifier(name);
          return Expr::fun(it->second, arg);
        }
        if (function_names().count(name) || name == "sqrt")
          throw SyntaxError("function name used without argument", pos);
        if (allowed && !chart.index_of(name) && !allowed->count(name))
          throw UnknownIdentifier(name);
        return Expr::symbol(name);
      }
      case Token::LParen: {
        advance();
        Expr e = expr();
        expect(Token::RParen, "')'");
        return e;
      }
      case Token::Minus: {
        advance();
        return -base();
      }
      default:
        throw SyntaxError("expected expression", tok.pos);
    }
  }
};

}  // namespace

Expr parse_expr(const std::string& text, const Chart& chart,
                const std::optional<std::set<std::string>>& allowed) {
  Parser p(text, chart, allowed);
  return simplify(p.parse());
}

// ---------------------------------------------------------------------------
// printing

namespace {

std::string rat_to_string(Rational r) {
  std::string s = std::to_string(r.num);
  if (r.den != 1) s += "/" + std::to_string(r.den);
  return s;
}

std::string num_to_string(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* fn_name(Fn f) {
  switch (f) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Sinh: return "sinh";
    case Fn::Cosh: return "cosh";
    case Fn::Tanh: return "tanh";
    case Fn::Exp: return "exp";
    case Fn::Ln: return "ln";
    case Fn::Abs: return "abs";
    case Fn::Sign: return "sign";
  }
  return "?";
}

std::string print(const Expr& e);

bool is_atom(const Expr& e) {
  switch (e.kind()) {
    case Kind::Sym:
    case Kind::Fun:
      return true;
    case Kind::Rat: {
      const Rational& r = e.node().rat;
      return r.num >= 0 && r.den == 1;
    }
    case Kind::Num:
      return e.node().num >= 0;
    default:
      return false;
  }
}

std::string print_base(const Expr& e) {
  if (is_atom(e)) return print(e);
  return "(" + print(e) + ")";
}

std::string exponent_to_string(Rational q) {
  if (q.is_integer() && q.num >= 0) return std::to_string(q.num);
  return "(" + rat_to_string(q) + ")";
}

// one factor inside a product (never a constant; constants live in the coefficient)
std::string print_factor(const Expr& e) {
  const Node& n = e.node();
  if (n.kind == Kind::Pow) return print_base(n.kids[0]) + "^" + exponent_to_string(n.rat);
  if (n.kind == Kind::Add) return "(" + print(e) + ")";
  return print(e);
}

struct TermText {
  std::string text;
  bool negative = false;
  bool leading_pow = false;  // first printed piece is base^exp; needs parens after unary minus
};

TermText print_term(const Expr& e) {
  Term t = split_term(e);
  TermText out;
  bool neg = t.c.exact ? t.c.r.num < 0 : t.c.f < 0;
  KNum mag = neg ? t.c.neg() : t.c;
  std::vector<std::string> num_pieces;
  std::string den;
  if (!mag.is_one() || t.fs.empty())
    num_pieces.push_back(mag.exact ? rat_to_string(mag.r) : num_to_string(mag.f));
  for (const Expr& f : t.fs) {
    const Node& n = f.node();
    if (n.kind == Kind::Pow && n.rat.num < 0) {
      Rational pe = -n.rat;
      if (pe == Rational(1))
        den += "/" + print_base(n.kids[0]);
      else
        den += "/" + print_base(n.kids[0]) + "^" + exponent_to_string(pe);
    } else {
      num_pieces.push_back(print_factor(f));
    }
  }
  if (num_pieces.empty()) num_pieces.push_back("1");
  std::string s = num_pieces[0];
  for (std::size_t i = 1; i < num_pieces.size(); ++i) s += "*" + num_pieces[i];
  out.text = s + den;
  out.negative = neg;
  out.leading_pow = !num_pieces.empty() && num_pieces[0].find('^') != std::string::npos &&
                    num_pieces[0][0] != '(';
  return out;
}

std::string print_signed_term(const Expr& e, bool first) {
  TermText t = print_term(e);
  std::string body = t.text;
  if (t.negative && first && t.leading_pow) body = "(" + body + ")";
  if (first) return t.negative ? "-" + body : body;
  return (t.negative ? " - " : " + ") + body;
}

std::string print(const Expr& e) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Rat:
      return rat_to_string(n.rat);
    case Kind::Num:
      return num_to_string(n.num);
    case Kind::Sym:
      return n.name;
    case Kind::Fun:
      return std::string(fn_name(n.fn)) + "(" + print(n.kids[0]) + ")";
    case Kind::Pow:
    case Kind::Mul:
      return print_signed_term(e, true);
    case Kind::Add: {
      std::string s;
      for (std::size_t i = 0; i < n.kids.size(); ++i) s += print_signed_term(n.kids[i], i == 0);
      return s;
    }
  }
  return "?";
}

}  // namespace

std::string to_string(const Expr& e) { return print(e); }

// ---------------------------------------------------------------------------
// calculus

namespace {

Expr diff_raw(const Expr& e, const std::string& v) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Rat:
    case Kind::Num:
      return Expr::integer(0);
    case Kind::Sym:
      return Expr::integer(n.name == v ? 1 : 0);
    case Kind::Add: {
      std::vector<Expr> kids;
      kids.reserve(n.kids.size());
      for (const Expr& k : n.kids) kids.push_back(diff_raw(k, v));
      return Expr::add(std::move(kids));
    }
    case Kind::Mul: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        std::vector<Expr> fs;
        fs.reserve(n.kids.size());
        for (std::size_t j = 0; j < n.kids.size(); ++j)
          fs.push_back(j == i ? diff_raw(n.kids[j], v) : n.kids[j]);
        terms.push_back(Expr::mul(std::move(fs)));
      }
      return Expr::add(std::move(terms));
    }
    case Kind::Pow: {
      Expr db = diff_raw(n.kids[0], v);
      Rational q = n.rat;
      return Expr::mul({Expr::rational(q), Expr::pow(n.kids[0], q - Rational(1)), db});
    }
    case Kind::Fun: {
      const Expr& u = n.kids[0];
      Expr du = diff_raw(u, v);
      switch (n.fn) {
        case Fn::Sin: return Expr::mul({Expr::fun(Fn::Cos, u), du});
        case Fn::Cos: return Expr::mul({Expr::integer(-1), Expr::fun(Fn::Sin, u), du});
        case Fn::Sinh: return Expr::mul({Expr::fun(Fn::Cosh, u), du});
        case Fn::Cosh: return Expr::mul({Expr::fun(Fn::Sinh, u), du});
        case Fn::Tanh: {
          Expr sq = Expr::pow(Expr::fun(Fn::Tanh, u), Rational(2));
          return Expr::mul({Expr::add({Expr::integer(1), -sq}), du});
        }
        case Fn::Exp: return Expr::mul({Expr::fun(Fn::Exp, u), du});
        case Fn::Ln: return Expr::mul({Expr::pow(u, Rational(-1)), du});
        case Fn::Abs: return Expr::mul({Expr::fun(Fn::Sign, u), du});
        case Fn::Sign: return Expr::integer(0);
      }
    }
  }
  return Expr::integer(0);
}

}  // namespace

Expr differentiate(const Expr& e, const std::string& var) { return simplify(diff_raw(e, var)); }

namespace {

Expr subst_raw(const Expr& e, const std::map<std::string, Expr>& repl) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Rat:
    case Kind::Num:
      return e;
    case Kind::Sym: {
      auto it = repl.find(n.name);
      return it == repl.end() ? e : it->second;
    }
    case Kind::Fun:
      return Expr::fun(n.fn, subst_raw(n.kids[0], repl));
    case Kind::Pow:
      return Expr::pow(subst_raw(n.kids[0], repl), n.rat);
    case Kind::Add:
    case Kind::Mul: {
      std::vector<Expr> kids;
      kids.reserve(n.kids.size());
      for (const Expr& k : n.kids) kids.push_back(subst_raw(k, repl));
      return n.kind == Kind::Add ? Expr::add(std::move(kids)) : Expr::mul(std::move(kids));
    }
  }
  return e;
}

}  // namespace

Expr subst(const Expr& e, const std::map<std::string, Expr>& replacements) {
  return simplify(subst_raw(e, replacements));
}

Expr subst(const Expr& e, const std::string& name, const Expr& value) {
  return subst(e, std::map<std::string, Expr>{{name, value}});
}

namespace {

void collect_symbols(const Expr& e, std::set<std::string>& out) {
  const Node& n = e.node();
  if (n.kind == Kind::Sym) out.insert(n.name);
  for (const Expr& k : n.kids) collect_symbols(k, out);
}

}  // namespace

std::vector<std::string> free_symbols(const Expr& e) {
  std::set<std::string> s;
  collect_symbols(e, s);
  return {s.begin(), s.end()};
}

bool contains_abs(const Expr& e) {
  const Node& n = e.node();
  if (n.kind == Kind::Fun && (n.fn == Fn::Abs || n.fn == Fn::Sign)) return true;
  for (const Expr& k : n.kids)
    if (contains_abs(k)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// evaluation

EvalError::EvalError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}

namespace {

double eval_node(const Node& n, const Chart& chart, const Point& p, const Bindings& params) {
  switch (n.kind) {
    case Kind::Rat:
      return n.rat.value();
    case Kind::Num:
      return n.num;
    case Kind::Sym: {
      if (auto idx = chart.index_of(n.name)) {
        if ((std::size_t)*idx >= p.size())
          throw EvalError(EvalError::Code::Unbound, "point has no coordinate " + n.name);
        return p[(std::size_t)*idx];
      }
      auto it = params.find(n.name);
      if (it == params.end()) throw EvalError(EvalError::Code::Unbound, "unbound symbol " + n.name);
      return it->second;
    }
    case Kind::Add: {
      double s = 0;
      for (const Expr& k : n.kids) s += eval_node(k.node(), chart, p, params);
      return s;
    }
    case Kind::Mul: {
      double s = 1;
      for (const Expr& k : n.kids) s *= eval_node(k.node(), chart, p, params);
      return s;
    }
    case Kind::Pow: {
      double b = eval_node(n.kids[0].node(), chart, p, params);
      Rational q = n.rat;
      if (q.is_integer()) {
        long long k = q.num;
        if (b == 0 && k < 0) throw EvalError(EvalError::Code::DivisionByZero, "zero base, negative power");
        if (k >= -32 && k <= 32) {
          double r = 1;
          long long a = k < 0 ? -k : k;
          for (long long i = 0; i < a; ++i) r *= b;
          return k < 0 ? 1.0 / r : r;
        }
        return std::pow(b, (double)k);
      }
      if (b < 0) throw EvalError(EvalError::Code::DomainViolation, "fractional power of negative value");
      if (b == 0 && q.num < 0) throw EvalError(EvalError::Code::DivisionByZero, "zero base, negative power");
      return std::pow(b, q.value());
    }
    case Kind::Fun: {
      double u = eval_node(n.kids[0].node(), chart, p, params);
      switch (n.fn) {
        case Fn::Sin: return std::sin(u);
        case Fn::Cos: return std::cos(u);
        case Fn::Sinh: return std::sinh(u);
        case Fn::Cosh: return std::cosh(u);
        case Fn::Tanh: return std::tanh(u);
        case Fn::Exp: return std::exp(u);
        case Fn::Abs: return std::fabs(u);
        case Fn::Sign: return u > 0 ? 1.0 : u < 0 ? -1.0 : 0.0;
        case Fn::Ln:
          if (u <= 0) throw EvalError(EvalError::Code::DomainViolation, "ln of non-positive value");
          return std::log(u);
      }
    }
  }
  throw EvalError(EvalError::Code::NotFinite, "unreachable node kind");
}

}  // namespace

double eval(const Expr& e, const Chart& chart, const Point& p, const Bindings& params) {
  double v = eval_node(e.node(), chart, p, params);
  if (!std::isfinite(v)) throw EvalError(EvalError::Code::NotFinite, "non-finite result");
  return v;
}

// ---------------------------------------------------------------------------
// sampling

Box Box::cube(int dimension, double halfwidth, const Point& center) {
  Box b;
  b.ranges.resize((std::size_t)dimension);
  for (int i = 0; i < dimension; ++i) {
    double c = (std::size_t)i < center.size() ? center[(std::size_t)i] : 0.0;
    b.ranges[(std::size_t)i] = {c - halfwidth, c + halfwidth};
  }
  return b;
}

double halton(std::uint64_t index, int base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (double)(index % (std::uint64_t)base);
    index /= (std::uint64_t)base;
  }
  return r;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr int kPrimes[12] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

}  // namespace

Point halton_point(std::uint64_t index, const Box& box, std::uint64_t seed) {
  std::uint64_t offset = splitmix64(seed) % 100003ULL;
  Point p(box.ranges.size());
  for (std::size_t d = 0; d < box.ranges.size(); ++d) {
    double u = halton(1 + offset + index, kPrimes[d % 12]);
    p[d] = box.ranges[d][0] + (box.ranges[d][1] - box.ranges[d][0]) * u;
  }
  return p;
}

ZeroVerdict is_identically_zero(const Expr& e, const Chart& chart, const Box& box,
                                const SampleSpec& spec) {
  ZeroVerdict v;
  v.tolerance = spec.tol;
  v.nonsmooth = contains_abs(e);
  Expr s = simplify(e);
  if (s.is_zero() || (s.kind() == Kind::Num && s.node().num == 0.0)) {
    v.status = ZeroStatus::SymbolicZero;
    return v;
  }
  int ok = 0;
  for (int i = 0; i < spec.count; ++i) {
    Point p = halton_point((std::uint64_t)i, box, spec.seed);
    double val;
    try {
      val = eval(s, chart, p, spec.params);
    } catch (const EvalError&) {
      continue;
    }
    ++ok;
    double a = std::fabs(val);
    if (a > v.max_abs) v.max_abs = a;
    if (a > spec.tol) {
      v.status = ZeroStatus::NonZero;
      v.witness = p;
      v.witness_value = val;
      v.samples = ok;
      return v;
    }
  }
  v.samples = ok;
  v.status = (ok > 0 && 2 * ok >= spec.count) ? ZeroStatus::NumericallyZero : ZeroStatus::Inconclusive;
  return v;
}

}  // namespace ck::symexpr
