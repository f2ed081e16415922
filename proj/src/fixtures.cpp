#include "ck/cli.hpp"

#include <map>
#include <stdexcept>

namespace ck::cli {

namespace {

// clang-format off
const std::map<std::string, std::string> kFixtures = {
    {"dubins", R"json({
  "name": "dubins",
  "description": "unit-speed planar turning: the elliptic constraint (dz/r)^2 + (dy/r)^2 = 1 and its control-affine extension",
  "conic": {
    "chart": ["z", "y"],
    "g": [["r^-2", "0"], ["0", "r^-2"]],
    "omega": ["0", "0"],
    "h": "-1",
    "point": [0.0, 0.0],
    "params": {"r": 1.0}
  },
  "affine": {
    "chart": ["z", "y", "w"],
    "f": ["cos(w)", "sin(w)", "0"],
    "g": ["0", "0", "1"],
    "point": [0.0, 0.0, 0.3]
  },
  "qnl": {
    "kind": "E",
    "chart": ["z", "y"],
    "A": ["1", "0"],
    "B": ["0", "1"],
    "C": ["0", "0"],
    "point": [0.0, 0.0]
  }
})json"},
    {"dubins-hyperbolic", R"json({
  "name": "dubins-hyperbolic",
  "description": "the hyperbolic counterpart dz^2 - dy^2 = 1 with drift (cosh w, sinh w) and a constant-form fibre frame",
  "conic": {
    "chart": ["z", "y"],
    "g": [["1", "0"], ["0", "-1"]],
    "omega": ["0", "0"],
    "h": "-1",
    "point": [0.0, 0.0]
  },
  "affine": {
    "chart": ["z", "y", "w"],
    "f": ["cosh(w)", "sinh(w)", "0"],
    "g": ["0", "0", "1"],
    "point": [0.0, 0.0, 0.3]
  },
  "qnl": {
    "kind": "H",
    "chart": ["z", "y"],
    "A": ["1", "0"],
    "B": ["0", "1"],
    "C": ["1", "1"],
    "point": [0.0, 0.0]
  }
})json"},
    {"parabolic-null", R"json({
  "name": "parabolic-null",
  "description": "the parabolic constraint dy^2 = dz with the flat null-form fibre frame (w^2, w)",
  "conic": {
    "chart": ["z", "y"],
    "g": [["0", "0"], ["0", "1"]],
    "omega": ["-1/2", "0"],
    "h": "0",
    "point": [0.0, 0.0]
  },
  "affine": {
    "chart": ["z", "y", "w"],
    "f": ["w^2", "w", "0"],
    "g": ["0", "0", "1"],
    "point": [0.0, 0.0, 0.3]
  },
  "qnl": {
    "kind": "P",
    "chart": ["z", "y"],
    "A": ["1", "0"],
    "B": ["0", "1"],
    "C": ["0", "0"],
    "point": [0.0, 0.0]
  }
})json"},
    {"example1", R"json({
  "name": "example1",
  "description": "a square-root constraint equivalent to dz = dy^2/4 under (z, y) -> (z, y - z), with the certifying multiplier",
  "witness": {
    "source_chart": ["z", "y"],
    "target_chart": ["zt", "yt"],
    "S": "dz - 2 + 2*sqrt(1 + dy) - dy",
    "S_tilde": "dzt - dyt^2/4",
    "phi": ["z", "y - z"],
    "delta": "-(dz - dy - 2 - 2*sqrt(1 + dy))/4",
    "ranges": [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-0.8, 1.0]]
  }
})json"},
    {"hfamily-elliptic", R"json({
  "name": "hfamily-elliptic",
  "description": "drift family coefficients (a, b, c, d, e) = (1, 0, 0, -1, 0); d < 0 is the elliptic sign",
  "hfamily": {"a": 1.0, "b": 0.0, "c": 0.0, "d": -1.0, "e": 0.0, "epsilon": 0}
})json"},
    {"hfamily-hyperbolic", R"json({
  "name": "hfamily-hyperbolic",
  "description": "drift family coefficients (1, 0, 0, 1, 0); d > 0 is the hyperbolic sign",
  "hfamily": {"a": 1.0, "b": 0.0, "c": 0.0, "d": 1.0, "e": 0.0, "epsilon": 0}
})json"},
    {"hfamily-parabolic", R"json({
  "name": "hfamily-parabolic",
  "description": "drift family coefficients (1, 0.5, -0.25, 0, 0.25); d = 0 collapses the family to a quadratic",
  "hfamily": {"a": 1.0, "b": 0.5, "c": -0.25, "d": 0.0, "e": 0.25, "epsilon": 0}
})json"},
};
// clang-format on

}  // namespace

std::vector<std::string> fixture_names() {
  return {"dubins",          "dubins-hyperbolic", "parabolic-null",    "example1",
          "hfamily-elliptic", "hfamily-hyperbolic", "hfamily-parabolic"};
}

const std::string& fixture_text(const std::string& name) { return kFixtures.at(name); }

}  // namespace ck::cli
