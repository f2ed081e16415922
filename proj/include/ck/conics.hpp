#pragma once

/// Conic submanifolds of the tangent plane: level sets
///
///   S(x, ẋ) = ẋᵀ g(x) ẋ + 2 ω(x) ẋ + h(x) = 0
///
/// over a 2-dimensional chart, represented by the triple (g, ω, h). The module
/// computes the two classifying determinants, sorts a conic into
/// elliptic/hyperbolic/parabolic (or degenerate, empty, transitional) at a
/// base point, pulls triples back along plane diffeomorphisms, verifies
/// claimed equivalences numerically, and parametrizes the three normal forms
/// as quadratic nonlinear systems.

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

#include "ck/affine.hpp"
#include "ck/fields.hpp"
#include "ck/oracle.hpp"
#include "ck/quadnl.hpp"
#include "ck/symexpr.hpp"

namespace ck::conics {

using symexpr::Box;
using symexpr::Chart;
using symexpr::Expr;
using symexpr::Point;
using symexpr::SampleSpec;
using symexpr::ZeroVerdict;

struct SingularJacobian : std::runtime_error {
  SingularJacobian() : std::runtime_error("jacobian determinant is identically zero") {}
};

struct NotInNormalForm : std::runtime_error {
  explicit NotInNormalForm(const std::string& what) : std::runtime_error(what) {}
};

struct ConicSubmanifold {
  Chart chart;                 // base coordinates, e.g. (z, y)
  Expr g11, g12, g22;          // symmetric fibre metric
  std::array<Expr, 2> omega;   // linear part
  Expr h;                      // inhomogeneity
};

/// The chart extended by velocity names: (z, y) -> (z, y, dz, dy).
Chart velocity_chart(const Chart& base);

/// The defining function S(x, ẋ) over velocity_chart(S.chart).
Expr constraint_expr(const ConicSubmanifold& S);

struct Diffeomorphism {
  Chart chart_in, chart_out;
  std::array<Expr, 2> components;               // chart_out coords as functions of chart_in
  std::array<std::array<Expr, 2>, 2> jacobian;  // [i][j] = ∂componentsᵢ/∂xⱼ
};

/// Derives the jacobian; throws SingularJacobian when det Dφ ≡ 0.
Diffeomorphism make_diffeo(Chart chart_in, Chart chart_out, std::array<Expr, 2> components);

Expr jacobian_det(const Diffeomorphism& phi);

/// A claimed equivalence S̃(φ(x), Dφ(x)ẋ) = δ(x, ẋ) · S(x, ẋ).
struct EquivalenceWitness {
  Diffeomorphism phi;
  Expr delta;  // over the source velocity chart, nonvanishing on the grid
};

enum class ConicClassTag { Elliptic, Hyperbolic, Parabolic, Degenerate, Empty, Transitional };

std::string to_string(ConicClassTag t);

struct ConicClass {
  ConicClassTag tag = ConicClassTag::Degenerate;
  double delta1_at_x0 = 0;
  double delta2_at_x0 = 0;
  ZeroVerdict delta1_zero, delta2_zero;  // box-level verdicts
};

/// The bordered determinant Δ₁ = det [[g, ωᵀ], [ω, h]] and Δ₂ = det g, both
/// expanded. Δ₁ ≠ 0 is non-degeneracy; the sign of Δ₂ picks the type.
std::pair<Expr, Expr> conic_determinants(const ConicSubmanifold& S);

/// Type of the conic at x0:
///   Degenerate    Δ₁(x₀) = 0 (within spec.tol)
///   Parabolic     Δ₂ ≡ 0 on the box, Δ₁(x₀) ≠ 0
///   Transitional  Δ₂(x₀) = 0 but Δ₂ ≢ 0 (a type boundary runs through x₀)
///   Empty         Δ₂(x₀) > 0 with the bordered matrix definite at x₀
///                 (g₁₁, Δ₂, Δ₁ all positive, or alternating from g₁₁ < 0)
///   Elliptic      Δ₂(x₀) > 0 otherwise
///   Hyperbolic    Δ₂(x₀) < 0
ConicClass classify_conic(const ConicSubmanifold& S, const Point& x0, const Box& box,
                          const SampleSpec& spec = {});

/// Pulls the triple on phi.chart_out back to phi.chart_in via ẋ̃ = Dφ ẋ:
/// g = Dφᵀ (g̃∘φ) Dφ, ω = (ω̃∘φ) Dφ, h = h̃∘φ. Both determinants transform
/// by Δᵢ = θ² · (Δ̃ᵢ∘φ) with θ = det Dφ, so type and sign data are shared.
ConicSubmanifold pullback_conic(const ConicSubmanifold& S, const Diffeomorphism& phi);

/// Samples |S̃(φ(x), Dφ(x)ẋ) − δ·S(x, ẋ)| over a grid in the source velocity
/// chart. The constraints may be arbitrary expressions; triples go through
/// constraint_expr. Throws std::invalid_argument when δ vanishes at a node
/// and oracle::StencilEvalError when evaluation fails at one.
oracle::ResidualReport verify_equivalence(const Expr& S, const Expr& S_tilde,
                                          const EquivalenceWitness& w, const oracle::Grid& grid,
                                          double tolerance = 1e-9);
oracle::ResidualReport verify_equivalence(const ConicSubmanifold& S,
                                          const ConicSubmanifold& S_tilde,
                                          const EquivalenceWitness& w, const oracle::Grid& grid,
                                          double tolerance = 1e-9);

/// Regular parametrization of a conic already in normal form:
///   elliptic    a²(ż−c₀)² + b²(ẏ−c₁)² = 1  ->  A = (1/a)∂z, B = (1/b)∂y,
///               C = c₀∂z + c₁∂y, fibre basis (cos w, sin w)
///   hyperbolic  a²(ż−c₀)² − b²(ẏ−c₁)² = 1  ->  same frame, (cosh w, sinh w)
///   parabolic   a ẏ² − ż + b ẏ + c = 0      ->  A = a∂z, B = b∂z + ∂y,
///               C = c∂z, so ż = aw² + bw + c, ẏ = w.
/// The normal-form pattern is checked symbolically; anything else throws
/// NotInNormalForm (no coordinate change is constructed here).
quadnl::QuadraticNLSystem parametrize_conic(const ConicSubmanifold& S, const ConicClass& cls);

/// First extension to a control-affine system on (z, y, w): drift
/// f = (f_Q, 0), control field g = ∂w.
affine::AffineSystem extend(const quadnl::QuadraticNLSystem& Xi,
                            const std::string& fibre_name = "w");

}  // namespace ck::conics
