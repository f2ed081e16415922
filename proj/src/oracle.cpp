#include "ck/oracle.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ck::oracle {

namespace {

std::string point_text(const Point& p) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) os << ", ";
    os << p[i];
  }
  os << ")";
  return os.str();
}

double safe_eval(const ScalarFn& fn, const Point& p) {
  double v;
  try {
    v = fn(p);
  } catch (const std::exception& e) {
    throw StencilEvalError(std::string("evaluation failed at ") + point_text(p) + ": " + e.what(),
                           p);
  }
  if (!std::isfinite(v)) {
    throw StencilEvalError("non-finite value at " + point_text(p), p);
  }
  return v;
}

// Central stencils; error = c2 h^2 + c4 h^4 + ..., so one Richardson pass
// (4 D(h/2) - D(h)) / 3 leaves O(h^4).
double stencil(const ScalarFn& fn, const Point& p, int var, int order, double h) {
  auto at = [&](int k) {
    Point q = p;
    q[static_cast<std::size_t>(var)] += k * h;
    return safe_eval(fn, q);
  };
  switch (order) {
    case 1:
      return (at(1) - at(-1)) / (2 * h);
    case 2:
      return (at(1) - 2 * at(0) + at(-1)) / (h * h);
    case 3:
      return (at(2) - 2 * at(1) + 2 * at(-1) - at(-2)) / (2 * h * h * h);
    case 4:
      return (at(2) - 4 * at(1) + 6 * at(0) - 4 * at(-1) + at(-2)) / (h * h * h * h);
    case 5:
      return (at(3) - 4 * at(2) + 5 * at(1) - 5 * at(-1) + 4 * at(-2) - at(-3)) /
             (2 * h * h * h * h * h);
    default:
      throw std::invalid_argument("fd_partial: order must be in 1..5");
  }
}

}  // namespace

double default_step(int order) { return order <= 2 ? 1e-3 : 5e-2; }

double fd_partial(const ScalarFn& fn, const Point& p, int var, int order, double step) {
  if (order < 1 || order > 5) throw std::invalid_argument("fd_partial: order must be in 1..5");
  if (var < 0 || static_cast<std::size_t>(var) >= p.size()) {
    throw std::invalid_argument("fd_partial: var out of range");
  }
  double h = step > 0 ? step : default_step(order);
  double coarse = stencil(fn, p, var, order, h);
  double fine = stencil(fn, p, var, order, h / 2);
  return (4 * fine - coarse) / 3;
}

Point fd_lie_bracket(const FieldFn& V, const FieldFn& W, const Point& p, double step) {
  const std::size_t n = p.size();
  auto field_at = [&](const FieldFn& f, const Point& q) {
    Point v;
    try {
      v = f(q);
    } catch (const std::exception& e) {
      throw StencilEvalError(std::string("field evaluation failed at ") + point_text(q) + ": " +
                                 e.what(),
                             q);
    }
    if (v.size() != n) throw StencilEvalError("field dimension mismatch at " + point_text(q), q);
    for (double c : v) {
      if (!std::isfinite(c)) throw StencilEvalError("non-finite field value at " + point_text(q), q);
    }
    return v;
  };

  // Jacobian column j via one Richardson pass on the first-order stencil.
  auto jacobian = [&](const FieldFn& f) {
    std::vector<Point> cols(n);
    for (std::size_t j = 0; j < n; ++j) {
      auto column = [&](double h) {
        Point plus = p, minus = p;
        plus[j] += h;
        minus[j] -= h;
        Point fp = field_at(f, plus), fm = field_at(f, minus);
        Point c(n);
        for (std::size_t i = 0; i < n; ++i) c[i] = (fp[i] - fm[i]) / (2 * h);
        return c;
      };
      Point coarse = column(step), fine = column(step / 2);
      cols[j].resize(n);
      for (std::size_t i = 0; i < n; ++i) cols[j][i] = (4 * fine[i] - coarse[i]) / 3;
    }
    return cols;
  };

  std::vector<Point> jv = jacobian(V), jw = jacobian(W);
  Point v0 = field_at(V, p), w0 = field_at(W, p);
  Point out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += jw[j][i] * v0[j] - jv[j][i] * w0[j];
    }
  }
  return out;
}

Grid Grid::over(std::vector<std::array<double, 2>> ranges, std::vector<int> counts) {
  if (ranges.size() != counts.size()) throw std::invalid_argument("Grid: ranges/counts mismatch");
  for (int c : counts) {
    if (c < 1) throw std::invalid_argument("Grid: counts must be positive");
  }
  Grid g;
  g.ranges = std::move(ranges);
  g.counts = std::move(counts);
  return g;
}

Grid Grid::of_box(const Box& box, int per_axis) {
  std::vector<std::array<double, 2>> r(box.ranges.begin(), box.ranges.end());
  return over(std::move(r), std::vector<int>(box.ranges.size(), per_axis));
}

std::vector<Point> Grid::points() const {
  const std::size_t dim = ranges.size();
  std::vector<Point> out;
  Point p(dim);
  std::vector<int> idx(dim, 0);
  while (true) {
    for (std::size_t k = 0; k < dim; ++k) {
      double lo = ranges[k][0], hi = ranges[k][1];
      p[k] = counts[k] == 1 ? (lo + hi) / 2
                            : lo + (hi - lo) * idx[k] / static_cast<double>(counts[k] - 1);
    }
    if (!exclude || !exclude(p)) out.push_back(p);
    std::size_t k = 0;
    for (; k < dim; ++k) {
      if (++idx[k] < counts[k]) break;
      idx[k] = 0;
    }
    if (k == dim) break;
  }
  return out;
}

ResidualReport residual_on_grid(const ScalarFn& fn, const Grid& grid, double tolerance) {
  ResidualReport rep;
  rep.tolerance = tolerance;
  double sum = 0;
  for (const Point& p : grid.points()) {
    double r = std::fabs(safe_eval(fn, p));
    ++rep.samples;
    sum += r;
    if (r > rep.max_abs || rep.samples == 1) {
      rep.max_abs = r;
      rep.argmax = p;
    }
  }
  if (rep.samples == 0) throw std::invalid_argument("residual_on_grid: grid has no usable nodes");
  rep.mean_abs = sum / rep.samples;
  rep.pass = rep.max_abs <= tolerance;
  return rep;
}

ResidualReport crosscheck(const Expr& sym, const Chart& chart, const ScalarFn& recipe,
                          const Grid& grid, double tolerance, const Bindings& params) {
  auto residual = [&](const Point& p) {
    double a = symexpr::eval(sym, chart, p, params);
    double b = recipe(p);
    return a - b;
  };
  return residual_on_grid(residual, grid, tolerance);
}

}  // namespace ck::oracle
