#include "ck/fields.hpp"

#include <cmath>
#include <limits>

namespace ck::fields {

using symexpr::eval;
using symexpr::EvalError;
using symexpr::halton_point;
using symexpr::is_identically_zero;
using symexpr::parse_expr;
using symexpr::simplify;

namespace {

void check_field(const VectorField& v) {
  if ((int)v.components.size() != v.chart.dimension())
    throw ArityMismatch("field has " + std::to_string(v.components.size()) + " components on a " +
                        std::to_string(v.chart.dimension()) + "-dimensional chart");
}

void check_same_chart(const VectorField& a, const VectorField& b) {
  if (!(a.chart == b.chart)) throw ChartMismatch();
}

}  // namespace

VectorField parse_field(const Chart& chart, const std::vector<std::string>& components,
                        const std::optional<std::set<std::string>>& allowed) {
  VectorField v{chart, {}};
  v.components.reserve(components.size());
  for (const std::string& c : components) v.components.push_back(parse_expr(c, chart, allowed));
  check_field(v);
  return v;
}

VectorField coordinate_field(const Chart& chart, int index) {
  VectorField v{chart, std::vector<Expr>((std::size_t)chart.dimension(), Expr::integer(0))};
  v.components.at((std::size_t)index) = Expr::integer(1);
  return v;
}

VectorField zero_field(const Chart& chart) {
  return VectorField{chart, std::vector<Expr>((std::size_t)chart.dimension(), Expr::integer(0))};
}

VectorField scale_field(const Expr& e, const VectorField& v) {
  VectorField out{v.chart, {}};
  out.components.reserve(v.components.size());
  for (const Expr& c : v.components) out.components.push_back(simplify(e * c));
  return out;
}

VectorField add_fields(const VectorField& a, const VectorField& b) {
  check_same_chart(a, b);
  check_field(a);
  check_field(b);
  VectorField out{a.chart, {}};
  for (std::size_t i = 0; i < a.components.size(); ++i)
    out.components.push_back(simplify(a.components[i] + b.components[i]));
  return out;
}

Point eval_field(const VectorField& v, const Point& p, const Bindings& params) {
  check_field(v);
  Point out(v.components.size());
  for (std::size_t i = 0; i < v.components.size(); ++i)
    out[i] = eval(v.components[i], v.chart, p, params);
  return out;
}

Frame Frame::of(std::vector<VectorField> fields) {
  Frame f{std::move(fields), 0};
  f.expected_rank = (int)f.fields.size();
  return f;
}

VectorField lie_bracket(const VectorField& V, const VectorField& W) {
  check_same_chart(V, W);
  check_field(V);
  check_field(W);
  const auto& names = V.chart.names();
  VectorField out{V.chart, {}};
  out.components.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<Expr> terms;
    for (std::size_t j = 0; j < names.size(); ++j) {
      terms.push_back(symexpr::differentiate(W.components[i], names[j]) * V.components[j]);
      terms.push_back(-(symexpr::differentiate(V.components[i], names[j]) * W.components[j]));
    }
    out.components.push_back(simplify(Expr::add(std::move(terms))));
  }
  return out;
}

VectorField iterated_ad(const VectorField& g, const VectorField& f, int k) {
  if (k < 0) throw ArityMismatch("negative adjoint order");
  VectorField cur = f;
  for (int i = 0; i < k; ++i) cur = lie_bracket(g, cur);
  return cur;
}

Expr lie_derivative(const VectorField& V, const Expr& e) {
  check_field(V);
  const auto& names = V.chart.names();
  std::vector<Expr> terms;
  terms.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    terms.push_back(V.components[i] * symexpr::differentiate(e, names[i]));
  return simplify(Expr::add(std::move(terms)));
}

namespace {

Expr det_expr(const std::vector<std::vector<Expr>>& m) {
  std::size_t n = m.size();
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  std::vector<Expr> terms;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<Expr>> minor;
    minor.reserve(n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Expr> row;
      for (std::size_t cc = 0; cc < n; ++cc)
        if (cc != c) row.push_back(m[r][cc]);
      minor.push_back(std::move(row));
    }
    Expr cofactor = m[0][c] * det_expr(minor);
    terms.push_back(c % 2 == 0 ? cofactor : -cofactor);
  }
  return Expr::add(std::move(terms));
}

std::vector<std::vector<Expr>> component_matrix(const Frame& frame) {
  std::vector<std::vector<Expr>> m;
  m.reserve(frame.fields.size());
  for (const VectorField& f : frame.fields) m.push_back(f.components);
  return m;
}

void check_frame(const Frame& frame) {
  if (frame.fields.empty()) throw ArityMismatch("empty frame");
  const Chart& chart = frame.fields[0].chart;
  for (const VectorField& f : frame.fields) {
    check_field(f);
    if (!(f.chart == chart)) throw ChartMismatch();
  }
  if ((int)frame.fields.size() != chart.dimension())
    throw ArityMismatch("frame of " + std::to_string(frame.fields.size()) + " fields on a " +
                        std::to_string(chart.dimension()) + "-dimensional chart");
}

}  // namespace

Expr wedge_det(const Frame& frame) {
  check_frame(frame);
  return simplify(det_expr(component_matrix(frame)));
}

Decomposition decompose_in_frame(const VectorField& v, const Frame& frame) {
  check_frame(frame);
  check_same_chart(v, frame.fields[0]);
  check_field(v);
  Decomposition out;
  out.det = wedge_det(frame);
  if (out.det.is_zero()) throw DegenerateFrame();
  Expr inv_det = Expr::pow(out.det, symexpr::Rational(-1));
  for (std::size_t i = 0; i < frame.fields.size(); ++i) {
    Frame replaced = frame;
    replaced.fields[i] = v;
    Expr num = wedge_det(replaced);
    out.coefficients.push_back(simplify(num * inv_det));
  }
  return out;
}

Decomposition decompose_in_frame(const VectorField& v, const Frame& frame, const Box& box,
                                 const SampleSpec& spec) {
  Decomposition out = decompose_in_frame(v, frame);
  auto verdict = is_identically_zero(out.det, v.chart, box, spec);
  if (verdict.zero()) throw DegenerateFrame();
  out.min_abs_det = std::numeric_limits<double>::infinity();
  for (int i = 0; i < spec.count; ++i) {
    Point p = halton_point((std::uint64_t)i, box, spec.seed);
    try {
      double d = std::fabs(eval(out.det, v.chart, p, spec.params));
      if (d < out.min_abs_det) out.min_abs_det = d;
      if (d <= spec.tol) out.pointwise_singular = true;
    } catch (const EvalError&) {
      out.pointwise_singular = true;
    }
  }
  return out;
}

}  // namespace ck::fields
