#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ck/affine.hpp"
#include "ck/fields.hpp"
#include "ck/oracle.hpp"
#include "ck/symexpr.hpp"

using namespace ck;
using namespace ck::affine;
using symexpr::Box;
using symexpr::Expr;
using symexpr::Point;
using symexpr::SampleSpec;
using symexpr::ZeroStatus;

namespace {

Expr P(const std::string& t) { return symexpr::parse_expr(t, full_chart()); }

AffineSystem dubins(double = 1.0) {
  fields::VectorField f = fields::parse_field(full_chart(), {"r*cos(w)", "r*sin(w)", "0"});
  return AffineSystem{full_chart(), f, fields::coordinate_field(full_chart(), 2)};
}

const Box kBox = Box::cube(3, 0.5);
const Point kOrigin{0.0, 0.0, 0.0};

SampleSpec with_r(double r) {
  SampleSpec s;
  s.params = {{"r", r}};
  return s;
}

}  // namespace

TEST_CASE("structure functions of the rotating-drift system") {
  SampleSpec spec = with_r(1.5);
  AffineStructure st = affine_structure(dubins(), kOrigin, kBox, spec);
  CHECK(st.rho.is_zero());
  CHECK(symexpr::equal(st.tau, Expr::integer(-1)));
  CHECK(symexpr::equal(st.chi, Expr::integer(9)));
  CHECK(st.c2_residual.is_zero());
  CHECK(st.c1_value_at_xi0 == doctest::Approx(1.5 * 1.5));
  CHECK(st.c2_zero.status == ZeroStatus::SymbolicZero);
  CHECK_FALSE(st.pointwise_singular);
  CHECK(classify_affine(dubins(), kOrigin, kBox, spec) == AffineClass::Elliptic);
}

TEST_CASE("hyperbolic and parabolic reference drifts") {
  fields::VectorField fh = fields::parse_field(full_chart(), {"cosh(w)", "sinh(w)", "0"});
  AffineSystem Sh{full_chart(), fh, fields::coordinate_field(full_chart(), 2)};
  AffineStructure sth = affine_structure(Sh, kOrigin, kBox);
  CHECK(sth.rho.is_zero());
  CHECK(symexpr::equal(sth.tau, Expr::integer(1)));
  CHECK(symexpr::equal(sth.chi, Expr::integer(-9)));
  CHECK(classify_affine(Sh, kOrigin, kBox) == AffineClass::Hyperbolic);

  fields::VectorField fp = fields::parse_field(full_chart(), {"w^2", "w", "0"});
  AffineSystem Sp{full_chart(), fp, fields::coordinate_field(full_chart(), 2)};
  AffineStructure stp = affine_structure(Sp, kOrigin, kBox);
  CHECK(stp.rho.is_zero());
  CHECK(stp.tau.is_zero());
  CHECK(stp.chi.is_zero());
  CHECK(classify_affine(Sp, kOrigin, kBox) == AffineClass::Parabolic);
}

TEST_CASE("obstructed drift is rejected") {
  fields::VectorField f = fields::parse_field(full_chart(), {"sin(w)*w", "w^3", "0"});
  AffineSystem S{full_chart(), f, fields::coordinate_field(full_chart(), 2)};
  Box near_one({{ -0.5, 0.5 }, { -0.5, 0.5 }, { 0.6, 1.4 }});
  CHECK(classify_affine(S, {0.0, 0.0, 1.0}, near_one) == AffineClass::NotQuadratizable);
}

TEST_CASE("degenerate frames surface as such") {
  // Drift linear in w: ad² is already a multiple of ad¹.
  fields::VectorField f = fields::parse_field(full_chart(), {"w", "w", "0"});
  AffineSystem S{full_chart(), f, fields::coordinate_field(full_chart(), 2)};
  CHECK(classify_affine(S, kOrigin, kBox) == AffineClass::C1Fails);
  CHECK_THROWS_AS(affine_structure(S, kOrigin, kBox), fields::DegenerateFrame);
}

TEST_CASE("fifth-order drift identity") {
  // All w-derivatives of order >= 3 vanish.
  HOdeCheck quad = h_ode_residual(P("2*w^2 + b*w + c"));
  CHECK(quad.residual.is_zero());
  CHECK(symexpr::equal(quad.h2_at_zero, Expr::integer(4)));

  Expr h = build_h_normal_form(HFamily::constants(1, 0, 0, 1, 0));
  HOdeCheck fam = h_ode_residual(h);
  Box wline({{ -0.5, 0.5 }, { -0.5, 0.5 }, { -0.6, 0.6 }});
  SampleSpec spec;
  spec.count = 100;
  spec.tol = 1e-7;
  auto verdict = symexpr::is_identically_zero(fam.residual, full_chart(), wline, spec);
  CHECK((verdict.status == ZeroStatus::SymbolicZero ||
         verdict.status == ZeroStatus::NumericallyZero));

  HOdeCheck quintic = h_ode_residual(P("w^5"));
  auto nz = symexpr::is_identically_zero(quintic.residual, full_chart(), wline, spec);
  CHECK(nz.status == ZeroStatus::NonZero);
}

TEST_CASE("coefficient extraction and round trips") {
  DEA flat = extract_de(P("2*w^2"), {0.0, 0.0});
  CHECK(flat.d == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(flat.e == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(flat.a == doctest::Approx(4.0));

  for (auto [d, e] : {std::pair{0.0, 1.0}, std::pair{-1.0, 0.0}, std::pair{1.0, 0.25},
                      std::pair{0.5, -0.25}}) {
    HFamily fam = HFamily::constants(1.25, 0.5, -0.75, d, e);
    DEA got = extract_de(build_h_normal_form(fam), {0.1, -0.2});
    CHECK(got.d == doctest::Approx(d).epsilon(1e-8));
    CHECK(got.e == doctest::Approx(e).epsilon(1e-8));
    CHECK(got.a == doctest::Approx(1.25).epsilon(1e-8));
  }

  CHECK_THROWS_AS(extract_de(P("w + z"), {0.0, 0.0}), SecondDerivativeVanishes);
  // exp has h''(0) = 1 but residual 4·exp(3w).
  CHECK_THROWS_AS(extract_de(P("exp(w)"), {0.0, 0.0}), OdeViolated);
}

TEST_CASE("closed-form drift family") {
  Expr plain = build_h_normal_form(HFamily::constants(1, 0, 0, 0, 0));
  CHECK(symexpr::equal(plain, P("1/2*w^2")));

  HFamily fam = HFamily::constants(1, 0, 0, 1, 0);
  Expr h = build_h_normal_form(fam);
  // Denominator expands around (sqrt(w^2+1)+1)^2 - w^2.
  double at1 = symexpr::eval(h, full_chart(), {0.0, 0.0, 1.0});
  double expect = 2.0 / (std::pow(std::sqrt(2.0) + 1.0, 2) - 1.0);
  CHECK(at1 == doctest::Approx(expect).epsilon(1e-12));

  Expr at0 = symexpr::simplify(symexpr::subst(
      build_h_normal_form(HFamily{P("a"), P("b"), P("c"), P("d"), P("e"), 0}), "w",
      Expr::integer(0)));
  CHECK(symexpr::equal(at0, symexpr::parse_expr("c", full_chart())));
}

TEST_CASE("first derivative of the drift family matches its closed form") {
  HFamily fam = HFamily::constants(1.25, 0.5, -0.25, 0.5, 0.25);
  Expr h = build_h_normal_form(fam);
  Expr hw = symexpr::differentiate(h, "w");
  Expr p = P("0.5*w^2 + 0.25*w + 1");
  Expr closed = P("2*1.25*w") * (symexpr::Expr::pow(p, {1, 2}) + Expr::integer(1)) *
                    symexpr::Expr::pow(p, {-1, 2}) *
                    symexpr::Expr::pow(P("0.25*w + 2") + Expr::integer(2) * Expr::pow(p, {1, 2}),
                                       {-1, 1}) +
                P("0.5");
  Box wline({{ -0.5, 0.5 }, { -0.5, 0.5 }, { -0.8, 0.8 }});
  auto verdict = symexpr::is_identically_zero(hw - closed, full_chart(), wline);
  CHECK((verdict.status == ZeroStatus::SymbolicZero ||
         verdict.status == ZeroStatus::NumericallyZero));
}

TEST_CASE("family classification by the sign of d") {
  Box bb = Box::cube(2, 0.5);
  Point x0{0.0, 0.0};
  CHECK(classify_h(HFamily::constants(1, 1, 1, 0, 0.5), x0, bb) == AffineClass::Parabolic);
  CHECK(classify_h(HFamily::constants(1, 0, 0, -1, 0), x0, bb) == AffineClass::Elliptic);
  CHECK(classify_h(HFamily::constants(1, 0, 0, 1, 0), x0, bb) == AffineClass::Hyperbolic);

  CHECK(classify_h(build_h_normal_form(HFamily::constants(1, 0.5, 0, 0, 0.5)), x0, bb) ==
        AffineClass::Parabolic);
  CHECK(classify_h(build_h_normal_form(HFamily::constants(1, 0, 0, -0.5, 0.25)), x0, bb) ==
        AffineClass::Elliptic);
}

TEST_CASE("extended systems agree with the family classification") {
  Box box = Box::cube(3, 0.4);
  for (int eps : {0, 1}) {
    for (auto [d, want] : {std::pair{0.0, AffineClass::Parabolic},
                           std::pair{-1.0, AffineClass::Elliptic},
                           std::pair{1.0, AffineClass::Hyperbolic}}) {
      HFamily fam = HFamily::constants(1, 0.25, -0.5, d, 0.25, eps);
      AffineSystem S = sigma_h(build_h_normal_form(fam), eps);
      CHECK(classify_affine(S, kOrigin, box) == want);
    }
  }
}

TEST_CASE("extended-system structure: tau vanishes, rho is the derivative ratio") {
  Expr h = P("exp(w) + w^3 + z*w");
  AffineSystem S = sigma_h(h, 0);
  AffineStructure st = affine_structure(S, kOrigin, kBox);
  CHECK(st.tau.is_zero());
  Expr h2 = symexpr::differentiate(symexpr::differentiate(h, "w"), "w");
  Expr h3 = symexpr::differentiate(h2, "w");
  auto verdict = symexpr::is_identically_zero(st.rho * h2 - h3, full_chart(), kBox);
  CHECK(verdict.status == ZeroStatus::SymbolicZero);
}

TEST_CASE("obstruction function scales by beta squared under feedback") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> small(-0.2, 0.2);
  AffineSystem S = dubins();
  SampleSpec spec = with_r(1.0);
  AffineStructure st = affine_structure(S, kOrigin, kBox, spec);
  for (int trial = 0; trial < 5; ++trial) {
    // beta bounded away from zero on the box.
    Expr beta = Expr::number(1.0 + 0.5 * trial) + Expr::number(small(rng)) * P("z") +
                Expr::number(small(rng)) * P("y") + Expr::number(small(rng)) * P("w");
    Expr alpha = Expr::number(small(rng)) + Expr::number(small(rng)) * P("w*y");
    AffineSystem T{S.chart, fields::add_fields(S.f, fields::scale_field(alpha, S.g)),
                   fields::scale_field(beta, S.g)};
    AffineStructure stt = affine_structure(T, kOrigin, kBox, spec);
    Expr diff = stt.chi - beta * beta * st.chi;
    auto verdict = symexpr::is_identically_zero(diff, full_chart(), kBox, spec);
    CHECK((verdict.status == ZeroStatus::SymbolicZero ||
           verdict.status == ZeroStatus::NumericallyZero));
    CHECK(stt.c2_zero.status != ZeroStatus::NonZero);
  }
}

TEST_CASE("normalizing fibre maps") {
  Box bb = Box::cube(2, 0.5);

  ReparamSpec flat = normalizing_reparam(HFamily::constants(1, 0, 0, 0, 0), bb);
  CHECK(flat.kind == HKind::Parabolic);
  CHECK(symexpr::equal(flat.wbar, P("1/2*w")));

  ReparamSpec parab = normalizing_reparam(HFamily::constants(1, 0, 0, 0, 1), bb);
  CHECK(parab.wbar_of({0, 0, 0}) == doctest::Approx(0.0));
  // dwbar/dw at w=0 is 1/2.
  double slope = (parab.wbar_of({0, 0, 1e-6}) - parab.wbar_of({0, 0, -1e-6})) / 2e-6;
  CHECK(slope == doctest::Approx(0.5).epsilon(1e-5));

  ReparamSpec hyp = normalizing_reparam(HFamily::constants(1, 0, 0, 1, 0), bb);
  CHECK(hyp.kind == HKind::Hyperbolic);
  CHECK(hyp.wbar_of({0, 0, 0}) == doctest::Approx(0.0));
  double v = symexpr::eval(hyp.relation, symexpr::Chart({"z", "y", "w", "wbar"}),
                           {0.0, 0.0, 0.0, 0.0});
  CHECK(v == doctest::Approx(0.0));

  ReparamSpec ell = normalizing_reparam(HFamily::constants(1, 0, 0, -1, 0), bb);
  CHECK(ell.kind == HKind::Elliptic);

  // Round trip w -> wbar -> w.
  for (const auto& rep : {parab, hyp, ell}) {
    for (double w : {-0.3, -0.1, 0.2, 0.4}) {
      double wb = rep.wbar_of({0.1, -0.1, w});
      CHECK(rep.w_of({0.1, -0.1, 0.0}, wb) == doctest::Approx(w).epsilon(1e-10));
    }
  }

  HFamily mixed{P("z"), Expr::integer(0), Expr::integer(0), P("z"), Expr::integer(0), 0};
  CHECK_THROWS_AS(normalizing_reparam(mixed, bb), MixedSign);
}

TEST_CASE("reparametrized drifts satisfy the third-derivative law") {
  Box bb = Box::cube(2, 0.3);
  oracle::Grid grid = oracle::Grid::over({{-0.2, 0.2}, {-0.2, 0.2}, {-0.15, 0.15}}, {3, 3, 7});
  for (auto [d, e] : {std::pair{-1.0, 0.0}, std::pair{1.0, 0.0}, std::pair{0.0, 1.0},
                      std::pair{0.5, 0.25}}) {
    HFamily fam = HFamily::constants(1.5, 0.5, -0.25, d, e);
    ReparamSpec rep = normalizing_reparam(fam, bb);
    oracle::ResidualReport r = validate_reparam(fam, rep, grid, 1e-4);
    CHECK(r.pass);
  }
}

TEST_CASE("drift series against closed sums") {
  fields::VectorField A = fields::coordinate_field(base_chart(), 0);
  fields::VectorField B = fields::coordinate_field(base_chart(), 1);
  fields::VectorField C = fields::zero_field(base_chart());

  fields::VectorField trig = series_fq(A, B, C, Expr::integer(-1), 8, 0.0);
  fields::VectorField hypb = series_fq(A, B, C, Expr::integer(1), 8, 0.0);
  for (double w = -1.0; w <= 1.0; w += 0.125) {
    Point p{0.0, 0.0, w};
    CHECK(std::fabs(symexpr::eval(trig.components[0], full_chart(), p) - (1 - std::cos(w))) <
          1e-10);
    CHECK(std::fabs(symexpr::eval(trig.components[1], full_chart(), p) - std::sin(w)) < 1e-10);
    CHECK(std::fabs(symexpr::eval(hypb.components[1], full_chart(), p) - std::sinh(w)) < 1e-10);
  }

  fields::VectorField lin = series_fq(A, B, C, Expr::integer(0), 3, 0.0);
  CHECK(symexpr::equal(lin.components[0], P("1/2*w^2")));
  CHECK(symexpr::equal(lin.components[1], P("w")));

  CHECK_THROWS_AS(series_fq(A, A, C, Expr::integer(0), 3, 0.0), DegenerateAB);
  CHECK_THROWS_AS(series_fq(A, B, C, Expr::integer(0), 11, 0.0), std::invalid_argument);
}

TEST_CASE("squared-velocity identity of the series") {
  oracle::Grid grid = oracle::Grid::over({{-0.5, 0.5}, {-0.5, 0.5}, {-1.0, 1.0}}, {3, 3, 9});
  Expr a = P("1 + 1/4*z^2"), b = P("1 + 1/4*y^2");
  Expr c0 = P("3/10"), c1 = P("-1/5");
  CHECK(cauchy_identity_check(a, b, c0, c1, Expr::integer(0), 2, grid, 1e-12).pass);
  CHECK(cauchy_identity_check(a, b, c0, c1, Expr::integer(-1), 10, grid, 1e-9).pass);
  CHECK(cauchy_identity_check(a, b, c0, c1, Expr::integer(1), 10, grid, 1e-9).pass);
}
