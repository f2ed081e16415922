#pragma once

/// Numeric verification layer, independent of the symbolic engine: central
/// finite differences with one Richardson extrapolation, numeric Lie
/// brackets, and residual statistics over rectangular grids.

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ck/symexpr.hpp"

namespace ck::oracle {

using symexpr::Bindings;
using symexpr::Box;
using symexpr::Chart;
using symexpr::Expr;
using symexpr::Point;

using ScalarFn = std::function<double(const Point&)>;
using FieldFn = std::function<Point(const Point&)>;

struct StencilEvalError : std::runtime_error {
  StencilEvalError(const std::string& what, Point at_point)
      : std::runtime_error(what), at(std::move(at_point)) {}
  Point at;
};

/// Rectangular evaluation grid with an optional exclusion predicate.
struct Grid {
  std::vector<std::array<double, 2>> ranges;
  std::vector<int> counts;
  std::function<bool(const Point&)> exclude;  // true = skip this node

  static Grid over(std::vector<std::array<double, 2>> ranges, std::vector<int> counts);
  static Grid of_box(const Box& box, int per_axis);

  std::vector<Point> points() const;
};

struct ResidualReport {
  double max_abs = 0;
  double mean_abs = 0;
  Point argmax;
  int samples = 0;
  double tolerance = 0;
  bool pass = false;  // max_abs <= tolerance
};

/// Default steps: 1e-3 for orders <= 2, 5e-2 for orders 3..5 (higher-order
/// central differences amplify rounding noise).
double default_step(int order);

/// Central-difference partial of the given order (1..5) in coordinate `var`,
/// Richardson-extrapolated once. Throws StencilEvalError when fn fails or
/// returns a non-finite value anywhere on the stencil.
double fd_partial(const ScalarFn& fn, const Point& p, int var, int order, double step = 0);

/// [V,W] = JW·V − JV·W with Jacobians from first-order central differences.
Point fd_lie_bracket(const FieldFn& V, const FieldFn& W, const Point& p, double step = 1e-3);

/// Residual statistics of |sym − recipe| over the grid.
ResidualReport crosscheck(const Expr& sym, const Chart& chart, const ScalarFn& recipe,
                          const Grid& grid, double tolerance, const Bindings& params = {});

/// Residual statistics of |fn| over the grid.
ResidualReport residual_on_grid(const ScalarFn& fn, const Grid& grid, double tolerance);

}  // namespace ck::oracle
