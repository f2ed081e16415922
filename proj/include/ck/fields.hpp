#pragma once

/// Vector-field calculus over symexpr charts: Lie brackets, iterated
/// adjoints, Lie derivatives, wedge determinants, and frame decomposition
/// by Cramer's rule.

#include <stdexcept>
#include <string>
#include <vector>

#include "ck/symexpr.hpp"

namespace ck::fields {

using symexpr::Bindings;
using symexpr::Box;
using symexpr::Chart;
using symexpr::Expr;
using symexpr::Point;
using symexpr::SampleSpec;

struct ChartMismatch : std::runtime_error {
  ChartMismatch() : std::runtime_error("vector fields live on different charts") {}
};

struct ArityMismatch : std::runtime_error {
  explicit ArityMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateFrame : std::runtime_error {
  DegenerateFrame() : std::runtime_error("frame determinant is identically zero") {}
};

struct DegenerateAB : std::runtime_error {
  DegenerateAB() : std::runtime_error("frame pair A, B is linearly dependent") {}
};

struct VectorField {
  Chart chart;
  std::vector<Expr> components;  // one per coordinate, in chart order
};

VectorField parse_field(const Chart& chart, const std::vector<std::string>& components,
                        const std::optional<std::set<std::string>>& allowed = std::nullopt);
VectorField coordinate_field(const Chart& chart, int index);
VectorField zero_field(const Chart& chart);
VectorField scale_field(const Expr& e, const VectorField& v);
VectorField add_fields(const VectorField& a, const VectorField& b);

/// Components evaluated at a point.
Point eval_field(const VectorField& v, const Point& p, const Bindings& params = {});

struct Frame {
  std::vector<VectorField> fields;
  int expected_rank = 0;

  static Frame of(std::vector<VectorField> fields);
};

/// [V,W] = DW·V − DV·W, componentwise symbolic, simplified.
VectorField lie_bracket(const VectorField& V, const VectorField& W);

/// ad⁰ = f, ad^k = [g, ad^{k−1}].
VectorField iterated_ad(const VectorField& g, const VectorField& f, int k);

/// Σᵢ Vᵢ ∂e/∂xᵢ, simplified.
Expr lie_derivative(const VectorField& V, const Expr& e);

/// Determinant of the square component matrix (fields as rows), simplified.
Expr wedge_det(const Frame& frame);

struct Decomposition {
  std::vector<Expr> coefficients;  // v = Σ cᵢ frame.fields[i]
  Expr det;                        // the frame's wedge determinant
  bool pointwise_singular = false; // |det| dipped below tolerance inside the box
  double min_abs_det = 0;          // smallest sampled |det| (box overload only)
};

/// Cramer coefficients of v in the frame. Throws DegenerateFrame when the
/// determinant simplifies to zero. The box overload additionally samples the
/// determinant: an identically-zero verdict throws, a vanishing sample only
/// sets pointwise_singular.
Decomposition decompose_in_frame(const VectorField& v, const Frame& frame);
Decomposition decompose_in_frame(const VectorField& v, const Frame& frame, const Box& box,
                                 const SampleSpec& spec);

}  // namespace ck::fields
