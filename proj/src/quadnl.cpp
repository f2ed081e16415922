#include "ck/quadnl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ck::quadnl {

namespace {

using fields::Frame;
using symexpr::EvalError;
using symexpr::eval;
using symexpr::Fn;
using symexpr::is_identically_zero;
using symexpr::Rational;
using symexpr::simplify;

Expr I(long long n) { return Expr::integer(n); }

Expr lie(const VectorField& V, const Expr& e) { return fields::lie_derivative(V, e); }

bool is_eh(Kind k) { return k != Kind::Parabolic; }

void require_plane(const QuadraticNLSystem& Xi) {
  if (Xi.A.chart.dimension() != 2)
    throw std::invalid_argument("quadratic nonlinear systems live on 2-dimensional charts");
  if (!(Xi.A.chart == Xi.B.chart) || !(Xi.A.chart == Xi.C.chart)) throw fields::ChartMismatch();
}

// fibre basis pair (b0, b1); the drift is A·b0 + B·b1 + C
std::pair<Expr, Expr> basis_pair(Kind kind, const Expr& w) {
  switch (kind) {
    case Kind::Elliptic:
      return {Expr::fun(Fn::Cos, w), Expr::fun(Fn::Sin, w)};
    case Kind::Hyperbolic:
      return {Expr::fun(Fn::Cosh, w), Expr::fun(Fn::Sinh, w)};
    case Kind::Parabolic:
      return {simplify(Expr::pow(w, Rational(2))), w};
  }
  throw std::logic_error("unreachable");
}

void check_reparam_kind(Kind kind, const Reparam& r) {
  if (kind == Kind::Parabolic) {
    if (!r.beta) throw KindMismatch("a parabolic reparametrization needs a scale factor beta");
  } else if (r.beta) {
    throw KindMismatch("elliptic/hyperbolic reparametrizations have no scale factor");
  } else if (r.sign != 1 && r.sign != -1) {
    throw std::invalid_argument("reparametrization sign must be +1 or -1");
  }
}

void fill_invariants(QNLStructure& s, Kind kind) {
  const Expr &g0 = s.gamma0, &g1 = s.gamma1;
  switch (kind) {
    case Kind::Elliptic:
      s.Gamma = simplify(g0 * g0 + g1 * g1);
      s.antigamma = {{g1, simplify(-g0)}};
      break;
    case Kind::Hyperbolic:
      s.Gamma = simplify(g0 * g0 - g1 * g1);
      s.antigamma = {{g1, g0}};
      break;
    case Kind::Parabolic:
      s.Gamma = simplify(g0 + g1 * g1);
      break;
  }
}

// κ± = −L_B μ₀ ± L_A μ₁ − (μ₀)² ∓ (μ₁)²
Expr curvature_from(const QNLStructure& s, const QuadraticNLSystem& Xi) {
  Expr LA_mu1 = lie(Xi.A, s.mu1);
  Expr LB_mu0 = lie(Xi.B, s.mu0);
  if (Xi.kind == Kind::Elliptic)
    return simplify(-LB_mu0 + LA_mu1 - s.mu0 * s.mu0 - s.mu1 * s.mu1);
  return simplify(-LB_mu0 - LA_mu1 - s.mu0 * s.mu0 + s.mu1 * s.mu1);
}

QNLStructure structure_impl(const QuadraticNLSystem& Xi, const Box* box, const SampleSpec* spec) {
  require_plane(Xi);
  Frame frame = Frame::of({Xi.A, Xi.B});
  VectorField bracket = fields::lie_bracket(Xi.A, Xi.B);
  fields::Decomposition db, dc;
  try {
    if (box) {
      db = fields::decompose_in_frame(bracket, frame, *box, *spec);
      dc = fields::decompose_in_frame(Xi.C, frame, *box, *spec);
    } else {
      db = fields::decompose_in_frame(bracket, frame);
      dc = fields::decompose_in_frame(Xi.C, frame);
    }
  } catch (const fields::DegenerateFrame&) {
    throw DegenerateAB();
  }
  QNLStructure s;
  s.mu0 = db.coefficients[0];
  s.mu1 = db.coefficients[1];
  s.gamma0 = dc.coefficients[0];
  s.gamma1 = dc.coefficients[1];
  s.pointwise_singular = db.pointwise_singular || dc.pointwise_singular;
  if (box) s.min_abs_det = std::min(db.min_abs_det, dc.min_abs_det);
  fill_invariants(s, Xi.kind);
  if (is_eh(Xi.kind)) s.kappa = curvature_from(s, Xi);
  return s;
}

}  // namespace

std::string to_string(Kind k) {
  switch (k) {
    case Kind::Elliptic:
      return "elliptic";
    case Kind::Hyperbolic:
      return "hyperbolic";
    case Kind::Parabolic:
      return "parabolic";
  }
  return "?";
}

QuadraticNLSystem make_system(Kind kind, VectorField A, VectorField B) {
  VectorField C = fields::zero_field(A.chart);
  return make_system(kind, std::move(A), std::move(B), std::move(C));
}

QuadraticNLSystem make_system(Kind kind, VectorField A, VectorField B, VectorField C) {
  QuadraticNLSystem Xi{kind, std::move(A), std::move(B), std::move(C)};
  require_plane(Xi);
  return Xi;
}

std::array<Expr, 2> drift(const QuadraticNLSystem& Xi, const std::string& fibre_name) {
  require_plane(Xi);
  if (Xi.A.chart.index_of(fibre_name))
    throw std::invalid_argument("fibre coordinate shadows a chart coordinate");
  auto [b0, b1] = basis_pair(Xi.kind, Expr::symbol(fibre_name));
  std::array<Expr, 2> out;
  for (int i = 0; i < 2; ++i)
    out[i] = simplify(Xi.A.components[i] * b0 + Xi.B.components[i] * b1 + Xi.C.components[i]);
  return out;
}

std::pair<Expr, Expr> fiber_coefficients(const QuadraticNLSystem& Xi,
                                         const std::string& fibre_name) {
  require_plane(Xi);
  if (Xi.A.chart.index_of(fibre_name))
    throw std::invalid_argument("fibre coordinate shadows a chart coordinate");
  auto [b0, b1] = basis_pair(Xi.kind, Expr::symbol(fibre_name));
  const Expr &A0 = Xi.A.components[0], &A1 = Xi.A.components[1];
  const Expr &B0 = Xi.B.components[0], &B1 = Xi.B.components[1];
  Expr e0 = simplify(A0 * b0 + B0 * b1);
  Expr e1 = simplify(A1 * b0 + B1 * b1);
  Expr det = simplify(A0 * B1 - A1 * B0);
  if (det.is_zero()) throw DegenerateAB();
  Expr coefA = simplify((e0 * B1 - e1 * B0) / det);
  Expr coefB = simplify((A0 * e1 - A1 * e0) / det);
  return {coefA, coefB};
}

QNLStructure qnl_structure(const QuadraticNLSystem& Xi) { return structure_impl(Xi, nullptr, nullptr); }

QNLStructure qnl_structure(const QuadraticNLSystem& Xi, const Box& box, const SampleSpec& spec) {
  return structure_impl(Xi, &box, &spec);
}

Expr gaussian_curvature(const QuadraticNLSystem& Xi) {
  if (Xi.kind == Kind::Parabolic)
    throw KindMismatch("Gaussian curvature needs an elliptic or hyperbolic frame metric");
  return *qnl_structure(Xi).kappa;
}

Reparam Reparam::shift(Expr alpha, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("reparametrization sign must be +1 or -1");
  Reparam r;
  r.alpha = simplify(std::move(alpha));
  r.sign = sign;
  return r;
}

Reparam Reparam::scale_shift(Expr alpha, Expr beta) {
  Reparam r;
  r.alpha = simplify(std::move(alpha));
  r.beta = simplify(std::move(beta));
  return r;
}

QuadraticNLSystem reparametrize(const QuadraticNLSystem& Xi, const Reparam& r) {
  require_plane(Xi);
  check_reparam_kind(Xi.kind, r);
  using fields::add_fields;
  using fields::scale_field;
  if (Xi.kind == Kind::Parabolic) {
    const Expr& a = r.alpha;
    Expr b = simplify(*r.beta);
    if (b.is_zero()) throw VanishingBeta("beta is identically zero");
    VectorField At = scale_field(simplify(b * b), Xi.A);
    VectorField Bt = add_fields(scale_field(simplify(I(2) * a * b), Xi.A), scale_field(b, Xi.B));
    VectorField Ct =
        add_fields(Xi.C, add_fields(scale_field(simplify(a * a), Xi.A), scale_field(a, Xi.B)));
    return {Xi.kind, std::move(At), std::move(Bt), std::move(Ct)};
  }
  auto [c, s] = basis_pair(Xi.kind, r.alpha);
  Expr sgn = I(r.sign);
  VectorField At = add_fields(scale_field(c, Xi.A), scale_field(s, Xi.B));
  Expr first = Xi.kind == Kind::Elliptic ? simplify(-(sgn * s)) : simplify(sgn * s);
  VectorField Bt = add_fields(scale_field(first, Xi.A), scale_field(simplify(sgn * c), Xi.B));
  return {Xi.kind, std::move(At), std::move(Bt), Xi.C};
}

QuadraticNLSystem reparametrize(const QuadraticNLSystem& Xi, const Reparam& r, const Box& box,
                                const SampleSpec& spec) {
  if (Xi.kind == Kind::Parabolic && r.beta) {
    Expr b = simplify(*r.beta);
    double lo = std::numeric_limits<double>::infinity();
    int usable = 0;
    for (int i = 0; i < spec.count; ++i) {
      Point p = symexpr::halton_point(static_cast<std::uint64_t>(i), box, spec.seed);
      try {
        lo = std::min(lo, std::fabs(eval(b, Xi.A.chart, p, spec.params)));
        ++usable;
      } catch (const EvalError&) {
      }
    }
    if (usable == 0 || lo <= spec.tol) throw VanishingBeta("beta vanishes inside the working box");
  }
  return reparametrize(Xi, r);
}

QNLStructure struct_transform_law(const QNLStructure& s, const Reparam& r,
                                  const QuadraticNLSystem& Xi) {
  require_plane(Xi);
  check_reparam_kind(Xi.kind, r);
  QNLStructure out;
  if (Xi.kind == Kind::Parabolic) {
    const Expr& a = r.alpha;
    Expr b = simplify(*r.beta);
    if (b.is_zero()) throw VanishingBeta("beta is identically zero");
    Expr LAb = lie(Xi.A, b), LBb = lie(Xi.B, b), LAa = lie(Xi.A, a);
    out.mu0 = simplify(b * s.mu0 - I(2) * a * LAb + I(2) * b * LAa - I(2) * LBb -
                       I(2) * a * (LAb + b * s.mu1));
    out.mu1 = simplify(b * b * s.mu1 + b * LAb);
    out.gamma0 =
        simplify((s.gamma0 - I(2) * a * s.gamma1 - a * a) * Expr::pow(b, Rational(-2)));
    out.gamma1 = simplify((s.gamma1 + a) * Expr::pow(b, Rational(-1)));
  } else {
    Expr LAa = lie(Xi.A, r.alpha), LBa = lie(Xi.B, r.alpha);
    auto [c, sn] = basis_pair(Xi.kind, r.alpha);
    bool ell = Xi.kind == Kind::Elliptic;
    Expr u = ell ? simplify(s.mu0 - LAa) : simplify(s.mu0 + LAa);
    Expr v = simplify(s.mu1 - LBa);
    const Expr &g0 = s.gamma0, &g1 = s.gamma1;
    // the reversed branch negates the μ row and reflects the matrix column
    if (ell) {
      out.mu0 = r.sign > 0 ? simplify(u * c + v * sn) : simplify(-(u * c) - v * sn);
      out.gamma0 = simplify(g0 * c + g1 * sn);
      out.gamma1 = r.sign > 0 ? simplify(-(g0 * sn) + g1 * c) : simplify(g0 * sn - g1 * c);
    } else {
      out.mu0 = r.sign > 0 ? simplify(u * c - v * sn) : simplify(-(u * c) + v * sn);
      out.gamma0 = simplify(g0 * c - g1 * sn);
      out.gamma1 = r.sign > 0 ? simplify(-(g0 * sn) + g1 * c) : simplify(g0 * sn - g1 * c);
    }
    out.mu1 = simplify(-(u * sn) + v * c);
  }
  fill_invariants(out, Xi.kind);
  // curvature is not a function of the structure row alone; recompute it from
  // the transformed system when needed
  return out;
}

std::string to_string(Flag f) {
  switch (f) {
    case Flag::Yes:
      return "yes";
    case Flag::No:
      return "no";
    case Flag::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

std::string to_string(PTag t) {
  switch (t) {
    case PTag::Plus:
      return "P+";
    case PTag::Minus:
      return "P-";
    case PTag::Zero:
      return "P0";
    case PTag::None:
      return "none";
  }
  return "?";
}

namespace {

Flag flag_of(const symexpr::ZeroVerdict& v) {
  switch (v.status) {
    case ZeroStatus::SymbolicZero:
    case ZeroStatus::NumericallyZero:
      return Flag::Yes;
    case ZeroStatus::NonZero:
      return Flag::No;
    default:
      return Flag::Inconclusive;
  }
}

Flag flag_and(Flag a, Flag b) {
  if (a == Flag::No || b == Flag::No) return Flag::No;
  if (a == Flag::Inconclusive || b == Flag::Inconclusive) return Flag::Inconclusive;
  return Flag::Yes;
}

Flag flag_or(Flag a, Flag b) {
  if (a == Flag::Yes || b == Flag::Yes) return Flag::Yes;
  if (a == Flag::Inconclusive || b == Flag::Inconclusive) return Flag::Inconclusive;
  return Flag::No;
}

}  // namespace

std::string to_string(const CanonicalForm& cf) {
  std::ostringstream os;
  os << (cf.kind == Kind::Elliptic ? "E" : "H") << ": Gamma=" << cf.Gamma;
  if (cf.epsilon) os << ", eps=" << (*cf.epsilon > 0 ? "+1" : "-1");
  os << ", canonical (" << cf.pair[0] << ", " << cf.pair[1] << ")";
  return os.str();
}

CanonicalForm canonical_from_invariants(Kind kind, double Gamma, std::optional<int> epsilon) {
  if (kind == Kind::Parabolic)
    throw KindMismatch("canonical constant pairs belong to elliptic and hyperbolic systems");
  CanonicalForm cf;
  cf.kind = kind;
  cf.Gamma = Gamma;
  cf.epsilon = epsilon;
  if (kind == Kind::Elliptic) {
    if (Gamma < 0) throw std::invalid_argument("the elliptic invariant is a sum of squares");
    cf.epsilon.reset();
    cf.pair = {std::sqrt(Gamma), 0.0};
  } else if (Gamma > 0) {
    if (!epsilon) throw std::invalid_argument("a positive hyperbolic invariant carries a branch sign");
    cf.pair = {*epsilon * std::sqrt(Gamma), 0.0};
  } else if (Gamma < 0) {
    cf.epsilon.reset();
    cf.pair = {0.0, std::sqrt(-Gamma)};
  } else if (epsilon) {
    cf.pair = {static_cast<double>(*epsilon), 1.0};
  } else {
    cf.pair = {0.0, 0.0};
  }
  return cf;
}

CanonicalForm canonical_eh(double c0, double c1, Kind kind) {
  if (kind == Kind::Parabolic)
    throw KindMismatch("canonical constant pairs belong to elliptic and hyperbolic systems");
  if (kind == Kind::Elliptic) return canonical_from_invariants(kind, c0 * c0 + c1 * c1, std::nullopt);
  double Gamma = c0 * c0 - c1 * c1;
  std::optional<int> eps;
  // Gamma > 0 forces c0 != 0; at Gamma = 0 the branch sign survives only off
  // the origin
  if (Gamma > 0 || (Gamma == 0 && c0 != 0)) eps = c0 > 0 ? +1 : -1;
  return canonical_from_invariants(kind, Gamma, eps);
}

namespace {

std::array<double, 2> apply_constant_shift(Kind kind, int sign, double alpha,
                                           std::array<double, 2> c) {
  double d0, d1;
  if (kind == Kind::Elliptic) {
    double co = std::cos(alpha), si = std::sin(alpha);
    d0 = co * c[0] + si * c[1];
    d1 = -si * c[0] + co * c[1];
  } else {
    double ch = std::cosh(alpha), sh = std::sinh(alpha);
    d0 = ch * c[0] - sh * c[1];
    d1 = -sh * c[0] + ch * c[1];
  }
  if (sign < 0) d1 = -d1;
  return {d0, d1};
}

}  // namespace

std::optional<ConstantShift> connect_constant_forms(Kind kind, std::array<double, 2> c,
                                                    std::array<double, 2> d, double tol) {
  if (kind == Kind::Parabolic)
    throw KindMismatch("constant-pair shifts act on elliptic and hyperbolic forms");
  double scale =
      1 + std::max({std::fabs(c[0]), std::fabs(c[1]), std::fabs(d[0]), std::fabs(d[1])});
  auto verified = [&](int sign, double alpha) {
    auto m = apply_constant_shift(kind, sign, alpha, c);
    return std::fabs(m[0] - d[0]) <= tol * scale && std::fabs(m[1] - d[1]) <= tol * scale;
  };
  for (int sign : {+1, -1}) {
    // the reversed branch is the direct one followed by a flip of the second
    // component, so solve the direct map onto the pre-flipped target
    std::array<double, 2> t{d[0], sign > 0 ? d[1] : -d[1]};
    std::optional<double> alpha;
    if (kind == Kind::Elliptic) {
      alpha = std::atan2(c[1], c[0]) - std::atan2(t[1], t[0]);
    } else {
      double num = c[1] * t[0] - c[0] * t[1];
      double den = c[0] * t[0] - c[1] * t[1];
      if (den != 0 && std::fabs(num / den) < 1) {
        alpha = std::atanh(num / den);
      } else {
        // light-cone pairs: the null coordinates c0 ± c1 stretch by e^∓α
        double u = c[0] + c[1], v = c[0] - c[1];
        double ut = t[0] + t[1], vt = t[0] - t[1];
        if (std::fabs(u) > tol * scale && ut / u > 0)
          alpha = -std::log(ut / u);
        else if (std::fabs(v) > tol * scale && vt / v > 0)
          alpha = std::log(vt / v);
        else if (std::fabs(u) <= tol * scale && std::fabs(v) <= tol * scale)
          alpha = 0;
      }
    }
    if (alpha && verified(sign, *alpha)) return ConstantShift{sign, *alpha};
  }
  return std::nullopt;
}

LadderLabel ladder_classify(const QuadraticNLSystem& Xi, const Point& x0, const Box& box,
                            const SampleSpec& spec) {
  QNLStructure s = qnl_structure(Xi, box, spec);
  const Chart& chart = Xi.A.chart;
  auto zero_flag = [&](const Expr& e) { return flag_of(is_identically_zero(e, chart, box, spec)); };
  LadderLabel L;
  L.kind = Xi.kind;
  if (is_eh(Xi.kind)) {
    bool ell = Xi.kind == Kind::Elliptic;
    L.conformally_flat = Flag::Yes;
    L.flat = zero_flag(*s.kappa);
    const auto& [ag0, ag1] = *s.antigamma;
    Expr eA0 = simplify(lie(Xi.A, s.gamma0) + ag0 * s.mu0);
    Expr eA1 = simplify(lie(Xi.A, s.gamma1) + ag1 * s.mu0);
    Expr sgn = I(ell ? 1 : -1);
    Expr eB0 = simplify(lie(Xi.B, s.gamma0) + sgn * ag0 * s.mu1);
    Expr eB1 = simplify(lie(Xi.B, s.gamma1) + sgn * ag1 * s.mu1);
    Flag constant_eqs = flag_and(flag_and(zero_flag(eA0), zero_flag(eA1)),
                                 flag_and(zero_flag(eB0), zero_flag(eB1)));
    L.constant_form = flag_and(L.flat, constant_eqs);
    double Gamma0 = eval(s.Gamma, chart, x0, spec.params);
    L.Gamma_at_x0 = Gamma0;
    Flag gamma_zero = flag_and(zero_flag(s.gamma0), zero_flag(s.gamma1));
    Flag gamma_at = std::fabs(Gamma0) <= spec.tol ? Flag::Yes : Flag::No;
    L.null_form = flag_and(L.constant_form, flag_and(gamma_zero, gamma_at));
    if (!ell) {
      double g0v = eval(s.gamma0, chart, x0, spec.params);
      if (Gamma0 > spec.tol || (std::fabs(Gamma0) <= spec.tol && std::fabs(g0v) > spec.tol))
        L.epsilon = g0v >= 0 ? +1 : -1;
    }
    if (L.constant_form == Flag::Yes) {
      double Gamma = std::fabs(Gamma0) <= spec.tol ? 0.0 : Gamma0;
      L.canonical = canonical_from_invariants(Xi.kind, Gamma, L.epsilon);
    }
  } else {
    L.weakly_flat = Flag::Yes;
    Expr half = Expr::rational(Rational(1, 2));
    Expr strongly =
        simplify(lie(Xi.A, lie(Xi.A, s.gamma1)) + s.gamma1 * (lie(Xi.A, s.mu1) - s.mu1 * s.mu1) -
                 half * s.mu0 * s.mu1 - half * lie(Xi.A, s.mu0) - lie(Xi.B, s.mu1));
    L.strongly_flat = zero_flag(strongly);
    Expr r1 = simplify(lie(Xi.A, s.Gamma) + I(2) * s.mu1 * s.Gamma);
    Expr r2 = simplify(lie(Xi.B, s.Gamma) + I(2) * s.Gamma * lie(Xi.A, s.gamma1) -
                       s.Gamma * s.mu0 + I(2) * s.Gamma * s.gamma1 * s.mu1);
    double GammaP0 = eval(s.Gamma, chart, x0, spec.params);
    Flag nonzero_at = std::fabs(GammaP0) > spec.tol ? Flag::Yes : Flag::No;
    L.null_form = flag_and(L.strongly_flat, zero_flag(s.Gamma));
    Flag nonnull = flag_and(flag_and(nonzero_at, flag_and(zero_flag(r1), zero_flag(r2))),
                            L.strongly_flat);
    L.constant_form = flag_or(nonnull, L.null_form);
    if (L.constant_form == Flag::Yes) {
      if (L.null_form == Flag::Yes)
        L.tag = PTag::Zero;
      else
        L.tag = GammaP0 > 0 ? PTag::Plus : PTag::Minus;
    }
  }
  return L;
}

namespace {

// worst-case of two verdicts for reporting: a NonZero or Inconclusive answer
// must win over a zero one
const symexpr::ZeroVerdict& worse(const symexpr::ZeroVerdict& a, const symexpr::ZeroVerdict& b) {
  auto rank = [](ZeroStatus s) {
    switch (s) {
      case ZeroStatus::NonZero:
        return 3;
      case ZeroStatus::Inconclusive:
        return 2;
      case ZeroStatus::NumericallyZero:
        return 1;
      default:
        return 0;
    }
  };
  return rank(b.status) > rank(a.status) ? b : a;
}

}  // namespace

ConformalFrameReport check_conformal_frame(const QuadraticNLSystem& Xi, const Box& box,
                                           const SampleSpec& spec) {
  require_plane(Xi);
  if (Xi.kind == Kind::Parabolic)
    throw KindMismatch("conformal frames belong to elliptic and hyperbolic systems");
  const Chart& chart = Xi.A.chart;
  ConformalFrameReport rep;
  symexpr::ZeroVerdict a1 = is_identically_zero(Xi.A.components[1], chart, box, spec);
  symexpr::ZeroVerdict b0 = is_identically_zero(Xi.B.components[0], chart, box, spec);
  rep.off_diagonal = worse(a1, b0);
  rep.scalar_match =
      is_identically_zero(simplify(Xi.A.components[0] - Xi.B.components[1]), chart, box, spec);
  rep.conformal = rep.off_diagonal.zero() && rep.scalar_match.zero();
  rep.r = simplify(Xi.A.components[0]);
  return rep;
}

ConformalMapReport check_conformal_frame(const QuadraticNLSystem& Xi,
                                         const QuadraticNLSystem& Xi_target, const Expr& phi1,
                                         const Expr& phi2, const oracle::Grid& grid,
                                         double tolerance) {
  require_plane(Xi);
  require_plane(Xi_target);
  if (Xi.kind == Kind::Parabolic || Xi_target.kind != Xi.kind)
    throw KindMismatch("the map check relates two conformal systems of a shared E/H kind");
  auto conformal_scalar = [](const QuadraticNLSystem& S) {
    if (!simplify(S.A.components[1]).is_zero() || !simplify(S.B.components[0]).is_zero() ||
        !simplify(S.A.components[0] - S.B.components[1]).is_zero())
      throw std::invalid_argument("frame is not in the conformal shape r(d/dz, d/dy)");
    return simplify(S.A.components[0]);
  };
  Expr r = conformal_scalar(Xi);
  Expr rt = conformal_scalar(Xi_target);
  const Chart& chart = Xi.A.chart;
  const std::string &z = chart.names()[0], &y = chart.names()[1];
  Expr dz1 = symexpr::differentiate(phi1, z), dy1 = symexpr::differentiate(phi1, y);
  Expr dz2 = symexpr::differentiate(phi2, z), dy2 = symexpr::differentiate(phi2, y);
  bool ell = Xi.kind == Kind::Elliptic;
  Expr cr1 = simplify(dz1 - dy2);
  Expr cr2 = ell ? simplify(dy1 + dz2) : simplify(dy1 - dz2);
  ConformalMapReport rep;
  rep.ratio_squared = ell ? simplify(dz1 * dz1 + dy1 * dy1) : simplify(dz1 * dz1 - dy1 * dy1);
  const Chart& tchart = Xi_target.A.chart;
  Expr rt_comp = symexpr::subst(rt, {{tchart.names()[0], phi1}, {tchart.names()[1], phi2}});
  Expr modulus =
      simplify(rep.ratio_squared - rt_comp * rt_comp * Expr::pow(r, Rational(-2)));
  int usable = 0;
  for (const Point& p : grid.points()) {
    try {
      double v1 = eval(cr1, chart, p);
      double v2 = eval(cr2, chart, p);
      double vm = eval(modulus, chart, p);
      rep.cr_max_residual = std::max({rep.cr_max_residual, std::fabs(v1), std::fabs(v2)});
      rep.modulus_max_residual = std::max(rep.modulus_max_residual, std::fabs(vm));
      ++usable;
    } catch (const EvalError&) {
    }
  }
  if (usable == 0) throw std::invalid_argument("no grid node evaluated");
  rep.cr_holds = rep.cr_max_residual <= tolerance;
  rep.pass = rep.cr_holds && rep.modulus_max_residual <= tolerance;
  return rep;
}

CommutativeFrameReport straighten_p_frame(const QuadraticNLSystem& Xi, const Box& box,
                                          double tolerance, double rk_step, int sample_count) {
  require_plane(Xi);
  if (Xi.kind != Kind::Parabolic)
    throw KindMismatch("frame straightening integrates the parabolic reparametrization system");
  if (!simplify(Xi.A.components[0]).is_one() || !simplify(Xi.A.components[1]).is_zero())
    throw std::invalid_argument("the frame must be rectified: A = d/dz");
  if (box.ranges.size() != 2) throw std::invalid_argument("need a 2-dimensional box");
  if (rk_step <= 0 || sample_count <= 0) throw std::invalid_argument("bad step or sample count");

  QNLStructure s = qnl_structure(Xi);
  const Chart& chart = Xi.A.chart;
  Expr dmu1_dy = symexpr::differentiate(s.mu1, chart.names()[1]);
  const Expr &B0 = Xi.B.components[0], &B1 = Xi.B.components[1];
  double z0 = 0.5 * (box.ranges[0][0] + box.ranges[0][1]);

  // state (β, ∂β/∂y, α); the middle equation is the y-derivative of the β one
  struct State {
    double b, eta, a;
  };
  auto rhs = [&](double zz, double yy, const State& st) {
    Point p{zz, yy};
    double m0 = eval(s.mu0, chart, p);
    double m1 = eval(s.mu1, chart, p);
    double dm1 = eval(dmu1_dy, chart, p);
    double lb = eval(B0, chart, p) * (-st.b * m1) + eval(B1, chart, p) * st.eta;
    return State{-st.b * m1, -st.eta * m1 - st.b * dm1,
                 -st.a * m1 + (2 * lb - st.b * m0) / (2 * st.b)};
  };
  auto nudged = [](const State& st, const State& k, double h) {
    return State{st.b + h * k.b, st.eta + h * k.eta, st.a + h * k.a};
  };
  auto integrate = [&](double zz, double yy) {
    State st{1, 0, 0};
    double span = zz - z0;
    int n = std::max(1, static_cast<int>(std::ceil(std::fabs(span) / rk_step)));
    double h = span / n;
    for (int i = 0; i < n; ++i) {
      double t = z0 + i * h;
      State k1 = rhs(t, yy, st);
      State k2 = rhs(t + h / 2, yy, nudged(st, k1, h / 2));
      State k3 = rhs(t + h / 2, yy, nudged(st, k2, h / 2));
      State k4 = rhs(t + h, yy, nudged(st, k3, h));
      st.b += h / 6 * (k1.b + 2 * k2.b + 2 * k3.b + k4.b);
      st.eta += h / 6 * (k1.eta + 2 * k2.eta + 2 * k3.eta + k4.eta);
      st.a += h / 6 * (k1.a + 2 * k2.a + 2 * k3.a + k4.a);
    }
    return st;
  };

  oracle::FieldFn At = [&](const Point& p) -> Point {
    State st = integrate(p[0], p[1]);
    return {st.b * st.b, 0.0};
  };
  oracle::FieldFn Bt = [&](const Point& p) -> Point {
    State st = integrate(p[0], p[1]);
    return {2 * st.a * st.b + st.b * eval(B0, chart, p), st.b * eval(B1, chart, p)};
  };

  CommutativeFrameReport rep;
  for (int i = 0; i < sample_count; ++i) {
    Point p = symexpr::halton_point(static_cast<std::uint64_t>(i), box, 0);
    Point br = oracle::fd_lie_bracket(At, Bt, p);
    State st = integrate(p[0], p[1]);
    double a00 = st.b * st.b, a10 = 0.0;
    double b00 = 2 * st.a * st.b + st.b * eval(B0, chart, p);
    double b10 = st.b * eval(B1, chart, p);
    double det = a00 * b10 - a10 * b00;
    if (std::fabs(det) < 1e-14) continue;
    double m0 = (br[0] * b10 - br[1] * b00) / det;
    double m1 = (a00 * br[1] - a10 * br[0]) / det;
    rep.max_mu0 = std::max(rep.max_mu0, std::fabs(m0));
    rep.max_mu1 = std::max(rep.max_mu1, std::fabs(m1));
    ++rep.samples;
  }
  if (rep.samples == 0) throw std::invalid_argument("no usable sample point");
  rep.pass = rep.max_mu0 <= tolerance && rep.max_mu1 <= tolerance;
  return rep;
}

}  // namespace ck::quadnl
