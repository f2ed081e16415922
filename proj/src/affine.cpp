#include "ck/affine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ck::affine {

using fields::VectorField;
using symexpr::Rational;
using symexpr::ZeroStatus;

namespace {

Expr I(long long k) { return Expr::integer(k); }
Expr S(const std::string& n) { return Expr::symbol(n); }

// Small rationals stay exact so the canonical forms cancel; anything else
// becomes a floating literal.
Expr num_or_rat(double v) {
  double scaled = v * 4096.0;
  if (std::fabs(scaled) < 9e15 && scaled == std::floor(scaled)) {
    return Expr::rational(Rational(static_cast<long long>(scaled), 4096));
  }
  return Expr::number(v);
}

Expr sqrt_of(const Expr& e) { return Expr::pow(e, Rational{1, 2}); }
Expr inv(const Expr& e) { return Expr::pow(e, Rational{-1, 1}); }
Expr sq(const Expr& e) { return Expr::pow(e, Rational{2, 1}); }

bool verdict_zero(const symexpr::ZeroVerdict& v) {
  return v.status == ZeroStatus::SymbolicZero || v.status == ZeroStatus::NumericallyZero;
}

Box base_box(const Box& box) {
  if (box.ranges.size() <= 2) return box;
  Box b;
  b.ranges.assign(box.ranges.begin(), box.ranges.begin() + 2);
  return b;
}

Expr p_of(const HFamily& fam) {
  Expr w = S("w");
  return fam.d * sq(w) + fam.e * w + I(1);
}

long long factorial(int n) {
  long long f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

const Chart& base_chart() {
  static const Chart chart({"z", "y"});
  return chart;
}

const Chart& full_chart() {
  static const Chart chart({"z", "y", "w"});
  return chart;
}

AffineSystem sigma_h(const Expr& h, int epsilon) {
  if (epsilon != 0 && epsilon != 1) throw std::invalid_argument("sigma_h: epsilon must be 0 or 1");
  VectorField f{full_chart(), {symexpr::simplify(h), S("w") + I(epsilon), I(0)}};
  return AffineSystem{full_chart(), f, fields::coordinate_field(full_chart(), 2)};
}

AffineStructure affine_structure(const AffineSystem& Sys, const Point& xi0, const Box& box,
                                 const SampleSpec& spec) {
  AffineStructure st;
  st.ad1 = fields::lie_bracket(Sys.g, Sys.f);
  st.ad2 = fields::lie_bracket(Sys.g, st.ad1);
  st.ad3 = fields::lie_bracket(Sys.g, st.ad2);
  fields::Frame frame = fields::Frame::of({Sys.g, st.ad1, st.ad2});
  fields::Decomposition dec = fields::decompose_in_frame(st.ad3, frame, box, spec);
  st.tau = dec.coefficients[1];
  st.rho = dec.coefficients[2];
  st.frame_det = dec.det;
  st.pointwise_singular = dec.pointwise_singular;
  st.min_abs_det = dec.min_abs_det;
  st.chi = symexpr::simplify(I(3) * fields::lie_derivative(Sys.g, st.rho) -
                             I(2) * st.rho * st.rho - I(9) * st.tau);
  st.c2_residual = symexpr::simplify(fields::lie_derivative(Sys.g, st.chi) -
                                     Expr::rational(Rational(2, 3)) * st.rho * st.chi);
  st.c1_value_at_xi0 = symexpr::eval(st.frame_det, Sys.chart, xi0, spec.params);
  st.chi_zero = symexpr::is_identically_zero(st.chi, Sys.chart, box, spec);
  st.c2_zero = symexpr::is_identically_zero(st.c2_residual, Sys.chart, box, spec);
  return st;
}

std::string to_string(AffineClass c) {
  switch (c) {
    case AffineClass::Elliptic: return "elliptic";
    case AffineClass::Hyperbolic: return "hyperbolic";
    case AffineClass::Parabolic: return "parabolic";
    case AffineClass::NotQuadratizable: return "not-quadratizable";
    case AffineClass::C1Fails: return "frame-degenerate-at-point";
  }
  return "?";
}

AffineClass classify_affine(const AffineSystem& Sys, const Point& xi0, const Box& box,
                            const SampleSpec& spec) {
  AffineStructure st;
  try {
    st = affine_structure(Sys, xi0, box, spec);
  } catch (const fields::DegenerateFrame&) {
    return AffineClass::C1Fails;
  }
  if (std::fabs(st.c1_value_at_xi0) <= spec.tol) return AffineClass::C1Fails;
  if (st.c2_zero.status == ZeroStatus::NonZero) return AffineClass::NotQuadratizable;
  if (verdict_zero(st.chi_zero)) return AffineClass::Parabolic;
  double chi0 = symexpr::eval(st.chi, Sys.chart, xi0, spec.params);
  if (std::fabs(chi0) <= spec.tol) return AffineClass::NotQuadratizable;
  return chi0 > 0 ? AffineClass::Elliptic : AffineClass::Hyperbolic;
}

HOdeCheck h_ode_residual(const Expr& h) {
  Expr h2 = symexpr::differentiate(symexpr::differentiate(h, "w"), "w");
  Expr h3 = symexpr::differentiate(h2, "w");
  Expr h4 = symexpr::differentiate(h3, "w");
  Expr h5 = symexpr::differentiate(h4, "w");
  HOdeCheck out;
  out.residual = symexpr::simplify(I(9) * h5 * sq(h2) - I(45) * h4 * h3 * h2 +
                                   I(40) * Expr::pow(h3, Rational{3, 1}));
  out.h2_at_zero = symexpr::simplify(symexpr::subst(h2, "w", I(0)));
  return out;
}

HFamily HFamily::constants(double a, double b, double c, double d, double e, int epsilon) {
  return HFamily{num_or_rat(a), num_or_rat(b), num_or_rat(c),
                 num_or_rat(d), num_or_rat(e), epsilon};
}

Expr build_h_normal_form(const HFamily& fam) {
  Expr w = S("w");
  Expr p = p_of(fam);
  Expr denom = sq(sqrt_of(p) + I(1)) - fam.d * sq(w);
  return symexpr::simplify(I(2) * fam.a * sq(w) * inv(denom) + fam.b * w + fam.c);
}

DEA extract_de(const Expr& h, const Point& x0) {
  if (x0.size() < 2) throw std::invalid_argument("extract_de: base point must have (z, y)");
  Expr h2 = symexpr::differentiate(symexpr::differentiate(h, "w"), "w");
  Expr h3 = symexpr::differentiate(h2, "w");
  Expr h4 = symexpr::differentiate(h3, "w");
  Expr h5 = symexpr::differentiate(h4, "w");

  auto at = [&](const Expr& e, double w) {
    return symexpr::eval(e, full_chart(), Point{x0[0], x0[1], w});
  };

  double a = at(h2, 0.0);
  if (std::fabs(a) < 1e-12) throw SecondDerivativeVanishes();

  // The family is characterized by the fifth-order identity; refuse drifts
  // that visibly break it near w = 0.
  int usable = 0;
  for (int i = 0; i <= 40; ++i) {
    double w = -0.3 + 0.6 * i / 40.0;
    double v2, v3, v4, v5;
    try {
      v2 = at(h2, w);
      v3 = at(h3, w);
      v4 = at(h4, w);
      v5 = at(h5, w);
    } catch (const symexpr::EvalError&) {
      continue;
    }
    ++usable;
    double r = 9 * v5 * v2 * v2 - 45 * v4 * v3 * v2 + 40 * v3 * v3 * v3;
    double scale = 9 * std::fabs(v5) * v2 * v2 + 45 * std::fabs(v4 * v3 * v2) +
                   40 * std::fabs(v3 * v3 * v3) + 1.0;
    if (std::fabs(r) > 1e-7 * scale) {
      std::ostringstream os;
      os << "fifth-order identity fails at w=" << w << " (residual " << r << ")";
      throw OdeViolated(os.str());
    }
  }
  if (usable < 10) throw OdeViolated("drift not evaluable near w=0");

  double rho0 = at(h3, 0.0) / a;
  double rho1 = (at(h4, 0.0) * a - at(h3, 0.0) * at(h3, 0.0)) / (a * a);
  DEA out;
  out.e = -(2.0 / 3.0) * rho0;
  out.d = out.e * out.e / 2.0 - rho1 / 3.0;
  out.a = a;
  return out;
}

namespace {

AffineClass class_of_d_sign(double d0) {
  if (d0 < 0) return AffineClass::Elliptic;
  if (d0 > 0) return AffineClass::Hyperbolic;
  throw MixedSign("d vanishes at the base point but not identically");
}

}  // namespace

AffineClass classify_h(const HFamily& fam, const Point& x0, const Box& box,
                       const SampleSpec& spec) {
  symexpr::ZeroVerdict dz = symexpr::is_identically_zero(fam.d, base_chart(), base_box(box), spec);
  if (verdict_zero(dz)) return AffineClass::Parabolic;
  double d0 = symexpr::eval(fam.d, base_chart(), Point{x0[0], x0[1]}, spec.params);
  return class_of_d_sign(std::fabs(d0) <= spec.tol ? 0.0 : d0);
}

AffineClass classify_h(const Expr& h, const Point& x0, const Box& box, const SampleSpec& spec) {
  Box bb = base_box(box);
  bool all_zero = true;
  double d_at_x0 = extract_de(h, x0).d;
  for (int i = 0; i < 16; ++i) {
    Point q = symexpr::halton_point(static_cast<std::uint64_t>(i), bb, spec.seed);
    try {
      double d = extract_de(h, q).d;
      if (std::fabs(d) > 1e-8) all_zero = false;
    } catch (const symexpr::EvalError&) {
      continue;
    }
  }
  if (all_zero && std::fabs(d_at_x0) <= 1e-8) return AffineClass::Parabolic;
  return class_of_d_sign(std::fabs(d_at_x0) <= 1e-8 ? 0.0 : d_at_x0);
}

ReparamSpec normalizing_reparam(const HFamily& fam, const Box& box, const SampleSpec& spec) {
  Box bb = base_box(box);
  symexpr::ZeroVerdict dz = symexpr::is_identically_zero(fam.d, base_chart(), bb, spec);

  HKind kind;
  if (verdict_zero(dz)) {
    kind = HKind::Parabolic;
  } else {
    bool pos = false, neg = false;
    for (int i = 0; i < spec.count; ++i) {
      Point q = symexpr::halton_point(static_cast<std::uint64_t>(i), bb, spec.seed);
      double v;
      try {
        v = symexpr::eval(fam.d, base_chart(), q, spec.params);
      } catch (const symexpr::EvalError&) {
        continue;
      }
      if (v > spec.tol) pos = true;
      if (v < -spec.tol) neg = true;
    }
    if (pos && neg) throw MixedSign("d changes sign on the box");
    kind = pos ? HKind::Hyperbolic : HKind::Elliptic;
  }

  Expr w = S("w"), wbar = S("wbar");
  Expr p = p_of(fam);
  Expr denom = fam.e * w + I(2) + I(2) * sqrt_of(p);

  ReparamSpec rep;
  rep.kind = kind;
  rep.validity = symexpr::simplify(p);
  switch (kind) {
    case HKind::Parabolic:
      rep.wbar = symexpr::simplify(w * inv(I(1) + sqrt_of(fam.e * w + I(1))));
      break;
    case HKind::Elliptic:
      rep.relation = symexpr::simplify(
          sq(Expr::fun(symexpr::Fn::Sin, sqrt_of(I(-1) * fam.d) * wbar)) * denom +
          fam.d * sq(w));
      break;
    case HKind::Hyperbolic:
      rep.relation = symexpr::simplify(
          sq(Expr::fun(symexpr::Fn::Sinh, sqrt_of(fam.d) * wbar)) * denom - fam.d * sq(w));
      break;
  }

  Expr de = fam.d, ee = fam.e;
  Bindings params = spec.params;
  auto coeffs = [de, ee, params](const Point& pt) {
    Point base{pt[0], pt[1]};
    return std::pair<double, double>{symexpr::eval(de, base_chart(), base, params),
                                     symexpr::eval(ee, base_chart(), base, params)};
  };

  rep.wbar_of = [kind, coeffs](const Point& pt) {
    auto [dv, ev] = coeffs(pt);
    double w = pt[2];
    if (kind == HKind::Parabolic) return w / (1.0 + std::sqrt(ev * w + 1.0));
    double pv = dv * w * w + ev * w + 1.0;
    double ratio = w * w / (ev * w + 2.0 + 2.0 * std::sqrt(pv));
    if (kind == HKind::Elliptic) {
      double sd = std::sqrt(-dv);
      double arg = std::copysign(std::sqrt(std::max(-dv * ratio, 0.0)), w);
      return std::asin(std::clamp(arg, -1.0, 1.0)) / sd;
    }
    double sd = std::sqrt(dv);
    return std::asinh(std::copysign(std::sqrt(std::max(dv * ratio, 0.0)), w)) / sd;
  };

  rep.w_of = [kind, coeffs](const Point& pt, double wb) {
    auto [dv, ev] = coeffs(pt);
    double t = wb;
    if (kind == HKind::Elliptic) {
      double sd = std::sqrt(-dv);
      t = std::sin(sd * wb) / sd;
    } else if (kind == HKind::Hyperbolic) {
      double sd = std::sqrt(dv);
      t = std::sinh(sd * wb) / sd;
    }
    return ev * t * t + 2.0 * t * std::sqrt(dv * t * t + 1.0);
  };

  return rep;
}

oracle::ResidualReport validate_reparam(const HFamily& fam, const ReparamSpec& rep,
                                        const oracle::Grid& grid, double tolerance) {
  Expr h = build_h_normal_form(fam);
  auto drift = [h, w_of = rep.w_of](const Point& pt) {
    double w = w_of(pt, pt[2]);
    return symexpr::eval(h, full_chart(), Point{pt[0], pt[1], w});
  };
  Expr de = fam.d;
  auto residual = [&](const Point& pt) {
    double third = oracle::fd_partial(drift, pt, 2, 3, 2e-2);
    double first = oracle::fd_partial(drift, pt, 2, 1);
    double dv = symexpr::eval(de, base_chart(), Point{pt[0], pt[1]});
    return third - 4.0 * dv * first;
  };
  return oracle::residual_on_grid(residual, grid, tolerance);
}

fields::VectorField series_fq(const VectorField& A, const VectorField& B, const VectorField& C,
                              const Expr& tau, int K, double w0) {
  if (K < 1 || K > 10) throw std::invalid_argument("series_fq: K must be in 1..10");
  if (!(A.chart == B.chart) || !(A.chart == C.chart) || A.chart.dimension() != 2) {
    throw std::invalid_argument("series_fq: A, B, C must share a 2-dimensional chart");
  }
  Expr ab = symexpr::simplify(A.components[0] * B.components[1] -
                              A.components[1] * B.components[0]);
  if (ab.is_zero()) throw DegenerateAB();

  std::vector<std::string> names{A.chart.names()[0], A.chart.names()[1], "w"};
  Chart chart(names);
  Expr wm = S("w") - num_or_rat(w0);

  Expr even = I(0), odd = I(0);
  for (int k = 0; k < K; ++k) {
    Expr tk = k == 0 ? I(1) : Expr::pow(tau, Rational{k, 1});
    even = even + Expr::rational(Rational(1, factorial(2 * k + 2))) *
                      Expr::pow(wm, Rational{2 * k + 2, 1}) * tk;
    odd = odd + Expr::rational(Rational(1, factorial(2 * k + 1))) *
                    Expr::pow(wm, Rational{2 * k + 1, 1}) * tk;
  }

  VectorField out;
  out.chart = chart;
  for (int i = 0; i < 2; ++i) {
    out.components.push_back(symexpr::simplify(A.components[i] * even +
                                               B.components[i] * odd + C.components[i]));
  }
  out.components.push_back(I(0));
  return out;
}

oracle::ResidualReport cauchy_identity_check(const Expr& a, const Expr& b, const Expr& c0,
                                             const Expr& c1, const Expr& tau, int K,
                                             const oracle::Grid& grid, double tolerance) {
  VectorField A{base_chart(), {a, I(0)}};
  VectorField B{base_chart(), {I(0), b}};
  VectorField C{base_chart(), {c0, c1}};
  VectorField fq = series_fq(A, B, C, tau, K, 0.0);
  Expr zrel = (fq.components[0] - c0) * inv(a);
  Expr yrel = (fq.components[1] - c1) * inv(b);
  Expr residual = symexpr::simplify(sq(yrel) - tau * sq(zrel) - I(2) * zrel);
  auto fn = [&](const Point& pt) { return symexpr::eval(residual, full_chart(), pt); };
  return oracle::residual_on_grid(fn, grid, tolerance);
}

}  // namespace ck::affine
