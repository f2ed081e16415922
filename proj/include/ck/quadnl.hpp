#pragma once

/// Quadratic nonlinear systems ẋ = f(x,w) on a 2-dimensional chart, where the
/// fibre over x traces a conic curve:
///
///   elliptic    f = A cos(w) + B sin(w) + C
///   hyperbolic  f = A cosh(w) + B sinh(w) + C
///   parabolic   f = A w² + B w + C
///
/// with a frame pair (A, B) that is pointwise independent. The module derives
/// the structure functions of the triple, the Gaussian curvature of the frame
/// metric, the action of fibre reparametrizations, and the flatness ladder
/// with its canonical constant forms.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "ck/fields.hpp"
#include "ck/oracle.hpp"
#include "ck/symexpr.hpp"

namespace ck::quadnl {

using symexpr::Box;
using symexpr::Chart;
using symexpr::Expr;
using symexpr::Point;
using symexpr::SampleSpec;
using symexpr::ZeroStatus;
using symexpr::ZeroVerdict;
using fields::DegenerateAB;
using fields::VectorField;

struct KindMismatch : std::runtime_error {
  explicit KindMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct VanishingBeta : std::runtime_error {
  explicit VanishingBeta(const std::string& what) : std::runtime_error(what) {}
};

enum class Kind { Elliptic, Hyperbolic, Parabolic };

std::string to_string(Kind k);

struct QuadraticNLSystem {
  Kind kind = Kind::Elliptic;
  VectorField A, B, C;  // shared 2-dimensional chart
};

/// Validates charts and dimension; C may be omitted (defaults to zero).
QuadraticNLSystem make_system(Kind kind, VectorField A, VectorField B);
QuadraticNLSystem make_system(Kind kind, VectorField A, VectorField B, VectorField C);

/// The two drift components as expressions over the chart extended by the
/// fibre coordinate w.
std::array<Expr, 2> drift(const QuadraticNLSystem& Xi, const std::string& fibre_name = "w");

/// Cramer coefficients of f − C in the frame (A, B), over the extended chart.
/// For well-behaved frames these reduce to the fibre basis pair itself:
/// (cos w, sin w), (cosh w, sinh w), or (w², w).
std::pair<Expr, Expr> fiber_coefficients(const QuadraticNLSystem& Xi,
                                         const std::string& fibre_name = "w");

/// Structure functions of the triple:
///   [A,B] = μ₀ A + μ₁ B   and   C = γ₀ A + γ₁ B.
/// Gamma is the kind-matched invariant γ₀²+γ₁² | γ₀²−γ₁² | γ₀+γ₁²; antigamma
/// is the rotated pair (γ₁, −γ₀) elliptic / (γ₁, +γ₀) hyperbolic, absent for
/// parabolic; kappa is the Gaussian curvature, absent for parabolic.
struct QNLStructure {
  Expr mu0, mu1;
  Expr gamma0, gamma1;
  Expr Gamma;
  std::optional<std::pair<Expr, Expr>> antigamma;
  std::optional<Expr> kappa;
  bool pointwise_singular = false;  // box overload only
  double min_abs_det = 0;
};

QNLStructure qnl_structure(const QuadraticNLSystem& Xi);
/// Additionally samples the frame determinant over the box.
QNLStructure qnl_structure(const QuadraticNLSystem& Xi, const Box& box, const SampleSpec& spec);

/// κ± = −L_B μ₀ ± L_A μ₁ − (μ₀)² ∓ (μ₁)², upper signs elliptic and lower
/// hyperbolic; the curvature of the metric declaring (A, B) orthonormal
/// (B of square norm ±1). Throws KindMismatch for parabolic systems.
Expr gaussian_curvature(const QuadraticNLSystem& Xi);

/// Fibre reparametrization. Elliptic/hyperbolic: w = sign·w̃ + α(x) with
/// sign ∈ {+1,−1}. Parabolic: w = β(x)·w̃ + α(x) with β nonvanishing.
struct Reparam {
  Expr alpha;
  int sign = +1;             // elliptic/hyperbolic only
  std::optional<Expr> beta;  // parabolic only

  static Reparam shift(Expr alpha, int sign = +1);
  static Reparam scale_shift(Expr alpha, Expr beta);
};

/// The transformed triple on the same chart:
///   elliptic    Ã = A cos α + B sin α,   B̃ = ±(−A sin α + B cos α), C̃ = C
///   hyperbolic  Ã = A cosh α + B sinh α, B̃ = ±(A sinh α + B cosh α), C̃ = C
///   parabolic   Ã = A β²,  B̃ = 2αβ A + β B,  C̃ = C + α² A + α B.
/// The box overload also rejects a β whose sampled magnitude dips below
/// spec.tol anywhere in the box.
QuadraticNLSystem reparametrize(const QuadraticNLSystem& Xi, const Reparam& r);
QuadraticNLSystem reparametrize(const QuadraticNLSystem& Xi, const Reparam& r, const Box& box,
                                const SampleSpec& spec);

/// Closed-form action of a reparametrization on structure functions; must
/// agree with qnl_structure ∘ reparametrize. Xi supplies the frame along
/// which α and β are differentiated. Elliptic/hyperbolic with w = w̃ + α:
///   (μ̃₀, μ̃₁) = (μ₀ ∓ L_A α, μ₁ − L_B α) · R̄(α),  γ̃ = γ · R̄(α),
/// where R̄ is the rotation [[cos, −sin],[sin, cos]] resp. the boost
/// [[cosh, −sinh],[−sinh, cosh]]; the reversed branch w = −w̃ + α negates the
/// μ-row and uses the reflected matrices [[cos, sin],[sin, −cos]] resp.
/// [[cosh, sinh],[−sinh, −cosh]]. Parabolic:
///   μ̃₀ = βμ₀ − 2αL_Aβ + 2βL_Aα − 2L_Bβ − 2α(L_Aβ + βμ₁),
///   μ̃₁ = β²μ₁ + βL_Aβ,
///   γ̃₀ = (γ₀ − 2αγ₁ − α²)/β²,   γ̃₁ = (γ₁ + α)/β.
/// kappa is not propagated; recompute it from the transformed system.
QNLStructure struct_transform_law(const QNLStructure& s, const Reparam& r,
                                  const QuadraticNLSystem& Xi);

enum class Flag { Yes, No, Inconclusive };

std::string to_string(Flag f);

/// Canonical constant-form parabolic tags: ż = w² + 1 | w² − 1 | w².
enum class PTag { Plus, Minus, Zero, None };

std::string to_string(PTag t);

/// Canonical constant form of an elliptic/hyperbolic system, determined by
/// the invariant Γ and, in the hyperbolic case, the branch sign ε = sgn(c₀)
/// when Γ > 0 or Γ = 0 with c₀ ≠ 0. (Γ > 0 forces c₀ ≠ 0, so ε is always
/// defined there.)
struct CanonicalForm {
  Kind kind = Kind::Elliptic;
  double Gamma = 0;
  std::optional<int> epsilon;
  std::array<double, 2> pair{0, 0};  // representative (c̃₀, c̃₁)
};

std::string to_string(const CanonicalForm& cf);

CanonicalForm canonical_from_invariants(Kind kind, double Gamma, std::optional<int> epsilon);

/// Canonical form of the constant pair (c₀, c₁).
///   Elliptic: Γ = c₀²+c₁², representative (√Γ, 0).
///   Hyperbolic: Γ = c₀²−c₁² with representative (ε√Γ, 0) for Γ > 0,
///   (0, √−Γ) for Γ < 0, (ε, 1) for Γ = 0 with c₀ ≠ 0, else (0, 0).
CanonicalForm canonical_eh(double c0, double c1, Kind kind);

/// A constant fibre shift connecting two constant pairs, when one exists.
struct ConstantShift {
  int sign = +1;
  double alpha = 0;
};

/// Searches the two-branch reparametrization group for a constant α mapping
/// c to d: closed-form angle difference for elliptic, tanh⁻¹ of a guarded
/// ratio (|ratio| < 1) for hyperbolic. The induced plane diffeomorphism is
/// fixed by α; no other freedom is explored.
std::optional<ConstantShift> connect_constant_forms(Kind kind, std::array<double, 2> c,
                                                    std::array<double, 2> d, double tol = 1e-9);

/// Flatness ladder. Elliptic/hyperbolic rungs: conformally_flat (every
/// system) ⊇ flat (κ ≡ 0) ⊇ constant_form (flat and L_Aγ + γ̄μ₀ ≡ 0,
/// L_Bγ ± γ̄μ₁ ≡ 0) ⊇ null_form (γ ≡ 0). Parabolic rungs: weakly_flat
/// (every system) ⊇ strongly_flat (the integrability identity
/// L²_Aγ₁ + γ₁(L_Aμ₁ − μ₁²) = μ₀μ₁/2 + L_Aμ₀/2 + L_Bμ₁) ⊇ constant_form
/// (Γ_P(x₀) ≠ 0 with L_AΓ_P + 2μ₁Γ_P ≡ 0 and
/// L_BΓ_P + 2Γ_P L_Aγ₁ − Γ_Pμ₀ + 2Γ_Pγ₁μ₁ ≡ 0, or null) ⊇ null_form
/// (strongly flat and Γ_P ≡ 0). Rungs are cut off monotonically; an
/// inconclusive zero verdict stays Inconclusive rather than forcing a class.
struct LadderLabel {
  Kind kind = Kind::Elliptic;
  // elliptic/hyperbolic rungs
  Flag conformally_flat = Flag::Inconclusive;
  Flag flat = Flag::Inconclusive;
  // parabolic rungs
  Flag weakly_flat = Flag::Inconclusive;
  Flag strongly_flat = Flag::Inconclusive;
  // shared rungs
  Flag constant_form = Flag::Inconclusive;
  Flag null_form = Flag::Inconclusive;
  // canonical data (elliptic/hyperbolic)
  std::optional<double> Gamma_at_x0;
  std::optional<int> epsilon;
  std::optional<CanonicalForm> canonical;
  // canonical tag (parabolic)
  PTag tag = PTag::None;
};

LadderLabel ladder_classify(const QuadraticNLSystem& Xi, const Point& x0, const Box& box,
                            const SampleSpec& spec);

/// Pattern test: is the frame already of the shape A = r∂z, B = r∂y with a
/// shared scalar r? Verdicts are box-level zero checks of the off-diagonal
/// components and of A₀ − B₁.
struct ConformalFrameReport {
  bool conformal = false;
  Expr r;  // the shared scalar when conformal (first component of A)
  ZeroVerdict off_diagonal;
  ZeroVerdict scalar_match;
};

ConformalFrameReport check_conformal_frame(const QuadraticNLSystem& Xi, const Box& box,
                                           const SampleSpec& spec);

/// Verifies that a plane map φ = (φ₁, φ₂) intertwines two conformal frames
/// r(∂z, ∂y) and r̃(∂z̃, ∂ỹ): the first-order system
///   ∂φ₁/∂z = ∂φ₂/∂y,   ∂φ₁/∂y = ∓∂φ₂/∂z
/// (upper sign elliptic) together with the modulus condition
///   (∂φ₁/∂z)² ± (∂φ₁/∂y)² = (r̃∘φ / r)²,
/// both sampled on the grid. Does not construct φ.
struct ConformalMapReport {
  bool cr_holds = false;
  double cr_max_residual = 0;
  Expr ratio_squared;  // (∂φ₁/∂z)² ± (∂φ₁/∂y)², simplified
  double modulus_max_residual = 0;
  bool pass = false;
};

ConformalMapReport check_conformal_frame(const QuadraticNLSystem& Xi,
                                         const QuadraticNLSystem& Xi_target, const Expr& phi1,
                                         const Expr& phi2, const oracle::Grid& grid,
                                         double tolerance);

/// Numerically builds the fibre reparametrization (α, β) that straightens a
/// rectified parabolic frame (A = ∂z) into a commuting pair, integrating
///   L_A β = −β μ₁   and   L_A α + α μ₁ = (2 L_B β − β μ₀) / (2β)
/// along z by fixed-step RK4 from the box centre, then measures the bracket
/// coefficients of the transformed frame Ã = β²A, B̃ = 2αβA + βB by finite
/// differences at the sample points.
struct CommutativeFrameReport {
  double max_mu0 = 0;
  double max_mu1 = 0;
  int samples = 0;
  bool pass = false;
};

CommutativeFrameReport straighten_p_frame(const QuadraticNLSystem& Xi, const Box& box,
                                          double tolerance = 1e-6, double rk_step = 1e-3,
                                          int sample_count = 25);

}  // namespace ck::quadnl
