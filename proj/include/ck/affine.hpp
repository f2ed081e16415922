#pragma once

/// Control-affine systems ξ̇ = f(ξ) + g(ξ)u on 3-dimensional charts: the
/// structure functions (ρ, τ) of the adjoint decomposition, the obstruction
/// function χ, quadratizability classification, the closed-form drift family
/// h(x,w) with its characterizing fifth-order ODE, normalizing fibre
/// reparametrizations, and the series generator for quadratic drifts.

#include <functional>
#include <stdexcept>

#include "ck/fields.hpp"
#include "ck/oracle.hpp"
#include "ck/symexpr.hpp"

namespace ck::affine {

using symexpr::Bindings;
using symexpr::Box;
using symexpr::Chart;
using symexpr::Expr;
using symexpr::Point;
using symexpr::SampleSpec;

struct SecondDerivativeVanishes : std::runtime_error {
  SecondDerivativeVanishes() : std::runtime_error("second w-derivative vanishes at base point") {}
};

struct OdeViolated : std::runtime_error {
  explicit OdeViolated(const std::string& what) : std::runtime_error(what) {}
};

struct MixedSign : std::runtime_error {
  explicit MixedSign(const std::string& what) : std::runtime_error(what) {}
};

using fields::DegenerateAB;

/// Chart (z, y) of the base variables and its extension (z, y, w).
const Chart& base_chart();
const Chart& full_chart();

struct AffineSystem {
  Chart chart;  // 3-dimensional
  fields::VectorField f, g;
};

/// ż = h(z,y,w), ẏ = w + ε, ẇ = u with g = ∂w. ε is declared by the caller,
/// never inferred.
AffineSystem sigma_h(const Expr& h, int epsilon);

/// ad_g f = [g, f]; the decomposition reads
///   ad³_g f = ρ · ad²_g f + τ · ad_g f   (mod g),
/// χ = 3 L_g ρ − 2ρ² − 9τ, and the second obstruction is
/// c2_residual = L_g χ − (2/3) ρ χ.
struct AffineStructure {
  Expr rho, tau, chi;
  Expr c2_residual;
  Expr frame_det;  // wedge of (g, ad_g f, ad²_g f)
  double c1_value_at_xi0 = 0.0;
  fields::VectorField ad1, ad2, ad3;
  symexpr::ZeroVerdict chi_zero, c2_zero;
  bool pointwise_singular = false;
  double min_abs_det = 0.0;
};

/// Throws fields::DegenerateFrame when the frame determinant vanishes
/// identically on the box.
AffineStructure affine_structure(const AffineSystem& S, const Point& xi0, const Box& box,
                                 const SampleSpec& spec = {});

enum class AffineClass { Elliptic, Hyperbolic, Parabolic, NotQuadratizable, C1Fails };

std::string to_string(AffineClass c);

/// sign χ(ξ₀) > 0 ⇔ Elliptic, < 0 ⇔ Hyperbolic, χ ≡ 0 on the box ⇔ Parabolic
/// (the second obstruction holds automatically there); a nonzero second
/// obstruction means NotQuadratizable.
AffineClass classify_affine(const AffineSystem& S, const Point& xi0, const Box& box,
                            const SampleSpec& spec = {});

/// 9 h⁽⁵⁾ (h″)² − 45 h⁽⁴⁾ h⁽³⁾ h″ + 40 (h⁽³⁾)³, derivatives in w.
struct HOdeCheck {
  Expr residual;
  Expr h2_at_zero;  // h″ restricted to w = 0
};
HOdeCheck h_ode_residual(const Expr& h);

/// Drift family h = 2a·w²/((√p+1)² − d·w²) + b·w + c with p = d·w² + e·w + 1.
/// The coefficient functions live on the (z, y) base; constants are fine.
struct HFamily {
  Expr a, b, c, d, e;
  int epsilon = 0;

  static HFamily constants(double a, double b, double c, double d, double e, int epsilon = 0);
};

Expr build_h_normal_form(const HFamily& fam);

/// Reads (d, e, a) back off a drift satisfying the fifth-order ODE, using
/// ρ = h⁽³⁾/h″ at w = 0:  e = −(2/3)ρ, d = e²/2 − ρ′/3, a = h″. x0 is a
/// point of the (z, y) base.
struct DEA {
  double d, e, a;
};
DEA extract_de(const Expr& h, const Point& x0);

/// d < 0 ⇔ Elliptic, d > 0 ⇔ Hyperbolic, d ≡ 0 ⇔ Parabolic; the obstruction
/// function of the extended system is χ = −9d/p, so sign χ = −sign d.
AffineClass classify_h(const HFamily& fam, const Point& x0, const Box& box,
                       const SampleSpec& spec = {});
AffineClass classify_h(const Expr& h, const Point& x0, const Box& box,
                       const SampleSpec& spec = {});

enum class HKind { Elliptic, Hyperbolic, Parabolic };

/// Fibre reparametrization w ↦ w̄ flattening the drift family to a quadratic
/// one: explicit w̄ = w/(1 + √(ew+1)) in the parabolic branch, implicit
///   sin²(√−d · w̄) = −d·w²/(ew + 2 + 2√p)   (elliptic)
///   sinh²(√d · w̄) =  d·w²/(ew + 2 + 2√p)   (hyperbolic)
/// otherwise, with numeric evaluators both ways. After the substitution the
/// drift satisfies ∂³f/∂w̄³ = 4d · ∂f/∂w̄.
struct ReparamSpec {
  HKind kind;
  Expr wbar;      // parabolic branch only: explicit map over (z, y, w)
  Expr relation;  // elliptic/hyperbolic: residual over (z, y, w, wbar), zero on the graph
  Expr validity;  // defined where this is positive (p > 0)
  std::function<double(const Point&)> wbar_of;          // (z, y, w) -> w̄
  std::function<double(const Point&, double)> w_of;     // (z, y, ·), w̄ -> w
};

ReparamSpec normalizing_reparam(const HFamily& fam, const Box& box, const SampleSpec& spec = {});

/// Composes the drift with w_of and checks ∂³f/∂w̄³ − 4d·∂f/∂w̄ on the grid
/// (coordinates z, y, w̄) by finite differences.
oracle::ResidualReport validate_reparam(const HFamily& fam, const ReparamSpec& rep,
                                        const oracle::Grid& grid, double tolerance);

/// Σ-drift from its fibre Taylor data:
///   f = A Σ_{k<K} (w−w₀)^{2k+2}/(2k+2)! τ^k + B Σ_{k<K} (w−w₀)^{2k+1}/(2k+1)! τ^k + C,
/// emitted on chart (z, y, w) with a zero third component. K ≤ 10 keeps the
/// factorials exact.
fields::VectorField series_fq(const fields::VectorField& A, const fields::VectorField& B,
                              const fields::VectorField& C, const Expr& tau, int K, double w0);

/// Residual of ((ẏ−c₁)/b)² − τ((ż−c₀)/a)² − 2(ż−c₀)/a with (ż, ẏ) from
/// series_fq(a∂z, b∂y, c₀∂z + c₁∂y); vanishes as K grows.
oracle::ResidualReport cauchy_identity_check(const Expr& a, const Expr& b, const Expr& c0,
                                             const Expr& c1, const Expr& tau, int K,
                                             const oracle::Grid& grid, double tolerance);

}  // namespace ck::affine
