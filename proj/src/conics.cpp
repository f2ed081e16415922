#include "ck/conics.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace ck::conics {

namespace {

using fields::VectorField;
using symexpr::EvalError;
using symexpr::eval;
using symexpr::expand;
using symexpr::is_identically_zero;
using symexpr::Rational;
using symexpr::simplify;

Expr I(long long n) { return Expr::integer(n); }

std::string point_text(const Point& p) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

}  // namespace

Chart velocity_chart(const Chart& base) {
  if (base.dimension() != 2) throw std::invalid_argument("conics live on 2-dimensional charts");
  std::vector<std::string> names = base.names();
  for (const std::string& n : base.names()) {
    std::string v = "d" + n;
    if (base.index_of(v)) throw std::invalid_argument("velocity name collides with " + v);
    names.push_back(v);
  }
  return Chart(names);
}

Expr constraint_expr(const ConicSubmanifold& S) {
  Chart v = velocity_chart(S.chart);
  Expr dz = Expr::symbol(v.names()[2]);
  Expr dy = Expr::symbol(v.names()[3]);
  return simplify(S.g11 * dz * dz + I(2) * S.g12 * dz * dy + S.g22 * dy * dy +
                  I(2) * (S.omega[0] * dz + S.omega[1] * dy) + S.h);
}

Diffeomorphism make_diffeo(Chart chart_in, Chart chart_out, std::array<Expr, 2> components) {
  if (chart_in.dimension() != 2 || chart_out.dimension() != 2)
    throw std::invalid_argument("plane diffeomorphisms need 2-dimensional charts");
  Diffeomorphism phi{std::move(chart_in), std::move(chart_out), std::move(components), {}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      phi.jacobian[i][j] = symexpr::differentiate(phi.components[i], phi.chart_in.names()[j]);
  if (jacobian_det(phi).is_zero()) throw SingularJacobian();
  return phi;
}

Expr jacobian_det(const Diffeomorphism& phi) {
  const auto& J = phi.jacobian;
  return simplify(J[0][0] * J[1][1] - J[0][1] * J[1][0]);
}

std::string to_string(ConicClassTag t) {
  switch (t) {
    case ConicClassTag::Elliptic:
      return "elliptic";
    case ConicClassTag::Hyperbolic:
      return "hyperbolic";
    case ConicClassTag::Parabolic:
      return "parabolic";
    case ConicClassTag::Degenerate:
      return "degenerate";
    case ConicClassTag::Empty:
      return "empty";
    case ConicClassTag::Transitional:
      return "transitional";
  }
  return "?";
}

std::pair<Expr, Expr> conic_determinants(const ConicSubmanifold& S) {
  const Expr &w1 = S.omega[0], &w2 = S.omega[1];
  Expr d2 = expand(S.g11 * S.g22 - S.g12 * S.g12);
  Expr d1 = expand(S.g11 * (S.g22 * S.h - w2 * w2) - S.g12 * (S.g12 * S.h - w2 * w1) +
                   w1 * (S.g12 * w2 - S.g22 * w1));
  return {d1, d2};
}

ConicClass classify_conic(const ConicSubmanifold& S, const Point& x0, const Box& box,
                          const SampleSpec& spec) {
  auto [d1, d2] = conic_determinants(S);
  ConicClass out;
  out.delta1_at_x0 = eval(d1, S.chart, x0, spec.params);
  out.delta2_at_x0 = eval(d2, S.chart, x0, spec.params);
  out.delta1_zero = is_identically_zero(d1, S.chart, box, spec);
  out.delta2_zero = is_identically_zero(d2, S.chart, box, spec);
  if (std::fabs(out.delta1_at_x0) <= spec.tol) {
    out.tag = ConicClassTag::Degenerate;
  } else if (out.delta2_zero.zero()) {
    out.tag = ConicClassTag::Parabolic;
  } else if (std::fabs(out.delta2_at_x0) <= spec.tol) {
    out.tag = ConicClassTag::Transitional;
  } else if (out.delta2_at_x0 > 0) {
    // Δ₂ > 0 forces g₁₁ ≠ 0; the level set is empty iff the bordered matrix
    // is definite (leading minors g₁₁, Δ₂, Δ₁ all positive or alternating)
    double a11 = eval(S.g11, S.chart, x0, spec.params);
    bool definite = (a11 > 0 && out.delta1_at_x0 > 0) || (a11 < 0 && out.delta1_at_x0 < 0);
    out.tag = definite ? ConicClassTag::Empty : ConicClassTag::Elliptic;
  } else {
    out.tag = ConicClassTag::Hyperbolic;
  }
  return out;
}

ConicSubmanifold pullback_conic(const ConicSubmanifold& S, const Diffeomorphism& phi) {
  if (!(S.chart == phi.chart_out)) throw fields::ChartMismatch();
  if (jacobian_det(phi).is_zero()) throw SingularJacobian();
  std::map<std::string, Expr> repl{{S.chart.names()[0], phi.components[0]},
                                   {S.chart.names()[1], phi.components[1]}};
  Expr g11 = symexpr::subst(S.g11, repl);
  Expr g12 = symexpr::subst(S.g12, repl);
  Expr g22 = symexpr::subst(S.g22, repl);
  Expr w1 = symexpr::subst(S.omega[0], repl);
  Expr w2 = symexpr::subst(S.omega[1], repl);
  const auto& J = phi.jacobian;
  ConicSubmanifold out;
  out.chart = phi.chart_in;
  out.g11 = simplify(J[0][0] * J[0][0] * g11 + I(2) * J[0][0] * J[1][0] * g12 +
                     J[1][0] * J[1][0] * g22);
  out.g12 = simplify(J[0][0] * J[0][1] * g11 + (J[0][0] * J[1][1] + J[1][0] * J[0][1]) * g12 +
                     J[1][0] * J[1][1] * g22);
  out.g22 = simplify(J[0][1] * J[0][1] * g11 + I(2) * J[0][1] * J[1][1] * g12 +
                     J[1][1] * J[1][1] * g22);
  out.omega = {simplify(w1 * J[0][0] + w2 * J[1][0]), simplify(w1 * J[0][1] + w2 * J[1][1])};
  out.h = symexpr::subst(S.h, repl);
  return out;
}

oracle::ResidualReport verify_equivalence(const Expr& S, const Expr& S_tilde,
                                          const EquivalenceWitness& w, const oracle::Grid& grid,
                                          double tolerance) {
  const Chart vin = velocity_chart(w.phi.chart_in);
  const auto& out_names = w.phi.chart_out.names();
  const auto& J = w.phi.jacobian;
  Expr dz = Expr::symbol(vin.names()[2]);
  Expr dy = Expr::symbol(vin.names()[3]);
  std::map<std::string, Expr> repl{
      {out_names[0], w.phi.components[0]},
      {out_names[1], w.phi.components[1]},
      {"d" + out_names[0], simplify(J[0][0] * dz + J[0][1] * dy)},
      {"d" + out_names[1], simplify(J[1][0] * dz + J[1][1] * dy)}};
  Expr residual = simplify(symexpr::subst(S_tilde, repl) - w.delta * S);
  Expr delta = simplify(w.delta);

  oracle::ResidualReport rep;
  rep.tolerance = tolerance;
  double sum = 0;
  for (const Point& p : grid.points()) {
    double dv, rv;
    try {
      dv = eval(delta, vin, p);
      rv = eval(residual, vin, p);
    } catch (const EvalError& e) {
      throw oracle::StencilEvalError(
          std::string("evaluation failed at ") + point_text(p) + ": " + e.what(), p);
    }
    if (std::fabs(dv) <= 1e-12)
      throw std::invalid_argument("delta vanishes at grid node " + point_text(p));
    ++rep.samples;
    sum += std::fabs(rv);
    if (std::fabs(rv) > rep.max_abs || rep.samples == 1) {
      rep.max_abs = std::fabs(rv);
      rep.argmax = p;
    }
  }
  if (rep.samples == 0) throw std::invalid_argument("grid has no nodes");
  rep.mean_abs = sum / rep.samples;
  rep.pass = rep.max_abs <= tolerance;
  return rep;
}

oracle::ResidualReport verify_equivalence(const ConicSubmanifold& S,
                                          const ConicSubmanifold& S_tilde,
                                          const EquivalenceWitness& w, const oracle::Grid& grid,
                                          double tolerance) {
  return verify_equivalence(constraint_expr(S), constraint_expr(S_tilde), w, grid, tolerance);
}

quadnl::QuadraticNLSystem parametrize_conic(const ConicSubmanifold& S, const ConicClass& cls) {
  using quadnl::Kind;
  Expr g11 = simplify(S.g11), g12 = simplify(S.g12), g22 = simplify(S.g22);
  Expr w1 = simplify(S.omega[0]), w2 = simplify(S.omega[1]), h = simplify(S.h);
  if (!g12.is_zero()) throw NotInNormalForm("the cross metric term must vanish");
  switch (cls.tag) {
    case ConicClassTag::Elliptic:
    case ConicClassTag::Hyperbolic: {
      bool ell = cls.tag == ConicClassTag::Elliptic;
      if (g11.is_zero() || g22.is_zero())
        throw NotInNormalForm("both diagonal metric entries must be nonzero");
      // a²(ż−c₀)² ± b²(ẏ−c₁)² = 1 expands to ω = (−a²c₀, ∓b²c₁) and
      // h = ω₁²/g₁₁ + ω₂²/g₂₂ − 1
      Expr closure = expand(h - w1 * w1 * Expr::pow(g11, Rational(-1)) -
                            w2 * w2 * Expr::pow(g22, Rational(-1)) + I(1));
      if (!closure.is_zero())
        throw NotInNormalForm("the inhomogeneity does not close the unit level set");
      Expr c0 = simplify(-(w1 * Expr::pow(g11, Rational(-1))));
      Expr c1 = simplify(-(w2 * Expr::pow(g22, Rational(-1))));
      Expr leg = ell ? g22 : simplify(-g22);
      VectorField A{S.chart, {simplify(Expr::pow(g11, Rational(-1, 2))), I(0)}};
      VectorField B{S.chart, {I(0), simplify(Expr::pow(leg, Rational(-1, 2)))}};
      VectorField C{S.chart, {c0, c1}};
      return quadnl::make_system(ell ? Kind::Elliptic : Kind::Hyperbolic, std::move(A),
                                 std::move(B), std::move(C));
    }
    case ConicClassTag::Parabolic: {
      if (!g11.is_zero()) throw NotInNormalForm("the parabolic normal form has no ż² term");
      if (g22.is_zero()) throw NotInNormalForm("the parabolic normal form needs a ẏ² term");
      if (!simplify(w1 + Expr::rational(Rational(1, 2))).is_zero())
        throw NotInNormalForm("ż must enter with coefficient -1");
      VectorField A{S.chart, {g22, I(0)}};
      VectorField B{S.chart, {simplify(I(2) * w2), I(1)}};
      VectorField C{S.chart, {h, I(0)}};
      return quadnl::make_system(Kind::Parabolic, std::move(A), std::move(B), std::move(C));
    }
    default:
      throw NotInNormalForm("only elliptic, hyperbolic, and parabolic conics have a regular "
                            "parametrization");
  }
}

affine::AffineSystem extend(const quadnl::QuadraticNLSystem& Xi, const std::string& fibre_name) {
  auto f2 = quadnl::drift(Xi, fibre_name);
  std::vector<std::string> names = Xi.A.chart.names();
  names.push_back(fibre_name);
  Chart chart3(names);
  fields::VectorField f{chart3, {f2[0], f2[1], I(0)}};
  return affine::AffineSystem{chart3, f, fields::coordinate_field(chart3, 2)};
}

}  // namespace ck::conics
