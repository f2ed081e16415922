#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ck/fields.hpp"

using namespace ck::fields;
using ck::symexpr::Expr;
using ck::symexpr::equal;
using ck::symexpr::eval;
using ck::symexpr::EvalError;
using ck::symexpr::is_identically_zero;
using ck::symexpr::parse_expr;
using ck::symexpr::simplify;
using ck::symexpr::ZeroStatus;

namespace {

const Chart kZYW({"z", "y", "w"});
const Chart kZY({"z", "y"});

VectorField F(const Chart& c, std::vector<std::string> comps) { return parse_field(c, comps); }

bool field_equal(const VectorField& a, const VectorField& b) {
  if (a.components.size() != b.components.size()) return false;
  for (std::size_t i = 0; i < a.components.size(); ++i)
    if (!equal(simplify(a.components[i]), simplify(b.components[i]))) return false;
  return true;
}

const VectorField kDubinsDrift = F(kZYW, {"r*cos(w)", "r*sin(w)", "0"});
const VectorField kDw = coordinate_field(kZYW, 2);

}  // namespace

TEST_CASE("lie bracket basics") {
  CHECK(field_equal(lie_bracket(coordinate_field(kZY, 0), coordinate_field(kZY, 1)),
                    zero_field(kZY)));

  VectorField b = lie_bracket(kDw, kDubinsDrift);
  CHECK(field_equal(b, F(kZYW, {"0-r*sin(w)", "r*cos(w)", "0"})));

  CHECK(field_equal(lie_bracket(coordinate_field(kZY, 0), F(kZY, {"0", "z"})),
                    coordinate_field(kZY, 1)));

  CHECK_THROWS_AS(lie_bracket(coordinate_field(kZY, 0), kDw), ChartMismatch);
}

TEST_CASE("iterated adjoints") {
  CHECK(field_equal(iterated_ad(kDw, kDubinsDrift, 0), kDubinsDrift));
  VectorField ad3 = iterated_ad(kDw, kDubinsDrift, 3);
  VectorField ad1 = iterated_ad(kDw, kDubinsDrift, 1);
  CHECK(field_equal(ad3, scale_field(Expr::integer(-1), ad1)));

  VectorField quad = F(kZYW, {"w^2", "w", "0"});
  CHECK(field_equal(iterated_ad(kDw, quad, 3), zero_field(kZYW)));
}

TEST_CASE("lie derivative") {
  CHECK(equal(lie_derivative(kDw, parse_expr("w^2", kZYW)), simplify(parse_expr("2*w", kZYW))));
  CHECK(equal(lie_derivative(kDw, Expr::integer(9)), Expr::integer(0)));
  CHECK(equal(lie_derivative(coordinate_field(kZY, 0), parse_expr("z^2", kZY)),
              simplify(parse_expr("2*z", kZY))));
}

TEST_CASE("wedge determinants") {
  CHECK(equal(wedge_det(Frame::of({coordinate_field(kZY, 0), coordinate_field(kZY, 1)})),
              Expr::integer(1)));

  Frame dubins = Frame::of({kDw, iterated_ad(kDw, kDubinsDrift, 1), iterated_ad(kDw, kDubinsDrift, 2)});
  CHECK(equal(wedge_det(dubins), simplify(parse_expr("r^2", kZYW))));

  CHECK(equal(wedge_det(Frame::of({coordinate_field(kZY, 0), F(kZY, {"0", "z"})})),
              Expr::symbol("z")));

  CHECK_THROWS_AS(wedge_det(Frame::of({kDw, kDubinsDrift})), ArityMismatch);
}

TEST_CASE("frame decomposition by Cramer") {
  SUBCASE("coefficients on a scaled coordinate frame") {
    Frame fr = Frame::of({coordinate_field(kZY, 0), F(kZY, {"0", "z"})});
    VectorField v = coordinate_field(kZY, 1);
    auto dec = decompose_in_frame(v, fr);
    CHECK(equal(dec.coefficients[0], Expr::integer(0)));
    CHECK(equal(dec.coefficients[1], simplify(parse_expr("1/z", kZY))));
  }

  SUBCASE("structure coefficients of the elliptic fixture") {
    VectorField ad1 = iterated_ad(kDw, kDubinsDrift, 1);
    VectorField ad2 = iterated_ad(kDw, kDubinsDrift, 2);
    VectorField ad3 = iterated_ad(kDw, kDubinsDrift, 3);
    auto dec = decompose_in_frame(ad3, Frame::of({kDw, ad1, ad2}));
    CHECK(equal(dec.coefficients[1], Expr::integer(-1)));  // tau
    CHECK(equal(dec.coefficients[2], Expr::integer(0)));   // rho
  }

  SUBCASE("zero field decomposes to zeros") {
    auto dec = decompose_in_frame(zero_field(kZY),
                                  Frame::of({coordinate_field(kZY, 0), coordinate_field(kZY, 1)}));
    CHECK(equal(dec.coefficients[0], Expr::integer(0)));
    CHECK(equal(dec.coefficients[1], Expr::integer(0)));
  }

  SUBCASE("identically degenerate frame throws") {
    Frame bad = Frame::of({coordinate_field(kZY, 0), coordinate_field(kZY, 0)});
    CHECK_THROWS_AS(decompose_in_frame(coordinate_field(kZY, 1), bad), DegenerateFrame);
  }

  SUBCASE("pointwise singularity is a flag, not an error") {
    Frame fr = Frame::of({coordinate_field(kZY, 0), F(kZY, {"0", "z"})});
    Box box = Box::cube(2, 0.5);  // straddles z=0
    SampleSpec spec;
    auto dec = decompose_in_frame(coordinate_field(kZY, 1), fr, box, spec);
    CHECK(dec.min_abs_det < 0.51);
    Box away;
    away.ranges = {{1.0, 2.0}, {-0.5, 0.5}};
    auto ok = decompose_in_frame(coordinate_field(kZY, 1), fr, away, spec);
    CHECK(!ok.pointwise_singular);
    CHECK(ok.min_abs_det >= 1.0);
  }
}

namespace {

VectorField random_poly_field(std::mt19937& rng, const Chart& chart) {
  std::uniform_int_distribution<long long> c(-2, 2);
  std::vector<Expr> comps;
  for (int i = 0; i < chart.dimension(); ++i) {
    std::vector<Expr> terms = {Expr::integer(c(rng))};
    for (const std::string& n : chart.names()) {
      terms.push_back(Expr::integer(c(rng)) * Expr::symbol(n));
      terms.push_back(Expr::integer(c(rng)) * Expr::symbol(n) * Expr::symbol(n));
    }
    comps.push_back(simplify(Expr::add(terms)));
  }
  return VectorField{chart, comps};
}

double sup_on_samples(const VectorField& v, std::uint64_t seed) {
  Box box = Box::cube(v.chart.dimension(), 0.5);
  double worst = 0;
  for (int i = 0; i < 64; ++i) {
    Point p = ck::symexpr::halton_point((std::uint64_t)i, box, seed);
    Point vals = eval_field(v, p);
    for (double x : vals) worst = std::max(worst, std::fabs(x));
  }
  return worst;
}

}  // namespace

TEST_CASE("bracket antisymmetry and Jacobi identity on random fields") {
  std::mt19937 rng(5150);
  for (int trial = 0; trial < 25; ++trial) {
    VectorField a = random_poly_field(rng, kZYW);
    VectorField b = random_poly_field(rng, kZYW);
    VectorField c = random_poly_field(rng, kZYW);

    VectorField anti = add_fields(lie_bracket(a, b), lie_bracket(b, a));
    CHECK(sup_on_samples(anti, 3) <= 1e-9);

    VectorField jac = add_fields(add_fields(lie_bracket(a, lie_bracket(b, c)),
                                            lie_bracket(b, lie_bracket(c, a))),
                                 lie_bracket(c, lie_bracket(a, b)));
    CHECK(sup_on_samples(jac, 4) <= 1e-8);
  }
}

TEST_CASE("Leibniz rule for the Lie derivative") {
  std::mt19937 rng(616);
  Box box = Box::cube(3, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    VectorField v = random_poly_field(rng, kZYW);
    Expr e1 = random_poly_field(rng, kZYW).components[0];
    Expr e2 = random_poly_field(rng, kZYW).components[1];
    Expr lhs = lie_derivative(v, simplify(e1 * e2));
    Expr rhs = simplify(e1 * lie_derivative(v, e2) + e2 * lie_derivative(v, e1));
    auto verdict = is_identically_zero(simplify(lhs - rhs), kZYW, box);
    CHECK(verdict.zero());
  }
}

TEST_CASE("decomposition recombines to the original field") {
  std::mt19937 rng(90125);
  Box box;
  box.ranges = {{0.5, 1.5}, {-0.5, 0.5}, {-0.5, 0.5}};
  SampleSpec spec;
  spec.tol = 1e-9;
  int done = 0;
  for (int trial = 0; trial < 40 && done < 10; ++trial) {
    Frame fr = Frame::of(
        {random_poly_field(rng, kZYW), random_poly_field(rng, kZYW), random_poly_field(rng, kZYW)});
    VectorField v = random_poly_field(rng, kZYW);
    Decomposition dec;
    try {
      dec = decompose_in_frame(v, fr, box, spec);
    } catch (const DegenerateFrame&) {
      continue;
    }
    if (dec.pointwise_singular) continue;
    VectorField recon = zero_field(kZYW);
    for (std::size_t i = 0; i < fr.fields.size(); ++i)
      recon = add_fields(recon, scale_field(dec.coefficients[i], fr.fields[i]));
    for (std::size_t i = 0; i < 3; ++i) {
      Expr residual = simplify(v.components[i] - recon.components[i]);
      auto verdict = is_identically_zero(residual, kZYW, box, spec);
      CHECK(verdict.zero());
    }
    ++done;
  }
  CHECK(done >= 10);
}

TEST_CASE("bracket naturality under linear coordinate change") {
  // for linear x̃ = Mx, pushforward has components (MV)(M⁻¹x̃)
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  const Chart tilde({"u", "v"});
  Box box = Box::cube(2, 0.5);

  auto push = [&](const VectorField& V, const std::array<std::array<double, 2>, 2>& M,
                  const std::array<std::array<double, 2>, 2>& Minv) {
    // substitute x = M⁻¹ x̃ into the components, then multiply by M
    std::map<std::string, Expr> back = {
        {"z", simplify(Expr::number(Minv[0][0]) * Expr::symbol("u") +
                       Expr::number(Minv[0][1]) * Expr::symbol("v"))},
        {"y", simplify(Expr::number(Minv[1][0]) * Expr::symbol("u") +
                       Expr::number(Minv[1][1]) * Expr::symbol("v"))}};
    std::vector<Expr> comps(2, Expr::integer(0));
    for (int i = 0; i < 2; ++i) {
      Expr ci = Expr::integer(0);
      for (int j = 0; j < 2; ++j)
        ci = ci + Expr::number(M[i][j]) * ck::symexpr::subst(V.components[(std::size_t)j], back);
      comps[(std::size_t)i] = simplify(ci);
    }
    return VectorField{tilde, comps};
  };

  int done = 0;
  for (int trial = 0; trial < 40 && done < 10; ++trial) {
    std::array<std::array<double, 2>, 2> M = {{{entry(rng), entry(rng)}, {entry(rng), entry(rng)}}};
    double det = M[0][0] * M[1][1] - M[0][1] * M[1][0];
    if (std::fabs(det) < 0.2) continue;
    std::array<std::array<double, 2>, 2> Minv = {
        {{M[1][1] / det, -M[0][1] / det}, {-M[1][0] / det, M[0][0] / det}}};

    VectorField a = random_poly_field(rng, kZY);
    VectorField b = random_poly_field(rng, kZY);
    VectorField lhs = push(lie_bracket(a, b), M, Minv);
    VectorField rhs = lie_bracket(push(a, M, Minv), push(b, M, Minv));
    for (int i = 0; i < 2; ++i) {
      auto verdict =
          is_identically_zero(simplify(lhs.components[(std::size_t)i] - rhs.components[(std::size_t)i]),
                              tilde, box);
      CHECK(verdict.zero());
    }
    ++done;
  }
  CHECK(done >= 10);
}
