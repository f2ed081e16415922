#include "ck/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "ck/affine.hpp"
#include "ck/conics.hpp"
#include "ck/fields.hpp"
#include "ck/oracle.hpp"
#include "ck/quadnl.hpp"
#include "ck/symexpr.hpp"

namespace ck::cli {

namespace {

using ordered_json = nlohmann::ordered_json;
using symexpr::Bindings;
using symexpr::Box;
using symexpr::Chart;
using symexpr::Expr;
using symexpr::Point;
using symexpr::SampleSpec;
using symexpr::ZeroStatus;
using symexpr::ZeroVerdict;

struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- input

ordered_json load_input(const std::string& input) {
  std::string text;
  if (input.rfind("fixture:", 0) == 0) {
    const std::string name = input.substr(8);
    try {
      text = fixture_text(name);
    } catch (const std::out_of_range&) {
      throw BadInput("unknown fixture: " + name);
    }
  } else {
    std::ifstream in(input);
    if (!in) throw BadInput("cannot read input file: " + input);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw BadInput(std::string("invalid JSON: ") + e.what());
  }
}

// the payload either sits under `key` or the document is the bare payload,
// recognized by a key unique to its schema
const ordered_json& section(const ordered_json& root, const char* key, const char* marker) {
  if (root.is_object() && root.contains(key)) return root.at(key);
  if (root.is_object() && root.contains(marker)) return root;
  throw BadInput(std::string("input has no '") + key + "' payload");
}

void require_keys(const ordered_json& j, const std::set<std::string>& required,
                  const std::set<std::string>& optional, const char* what) {
  if (!j.is_object()) throw BadInput(std::string(what) + " payload must be a JSON object");
  for (const std::string& k : required)
    if (!j.contains(k)) throw BadInput(std::string(what) + " payload lacks key '" + k + "'");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!required.count(it.key()) && !optional.count(it.key()))
      throw BadInput(std::string("unknown key '") + it.key() + "' in " + what + " payload");
}

std::string str_at(const ordered_json& j, const char* what) {
  if (!j.is_string()) throw BadInput(std::string(what) + " must be a string");
  return j.get<std::string>();
}

std::vector<std::string> str_list(const ordered_json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n)
    throw BadInput(std::string(what) + " must be an array of " + std::to_string(n) + " strings");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(str_at(e, what));
  return out;
}

Chart chart_of(const ordered_json& j, std::size_t dim, const char* what) {
  try {
    return Chart(str_list(j, dim, what));
  } catch (const std::invalid_argument& e) {
    throw BadInput(std::string(what) + ": " + e.what());
  }
}

Bindings params_of(const ordered_json& j) {
  Bindings out;
  if (!j.contains("params")) return out;
  const auto& p = j.at("params");
  if (!p.is_object()) throw BadInput("params must be an object of numbers");
  for (auto it = p.begin(); it != p.end(); ++it) {
    if (!it.value().is_number()) throw BadInput("params entry '" + it.key() + "' is not a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

std::set<std::string> names_of(const Bindings& b) {
  std::set<std::string> out;
  for (const auto& [k, v] : b) out.insert(k);
  return out;
}

Point point_of(const ordered_json& j, std::size_t dim) {
  if (!j.contains("point")) return Point(dim, 0.0);
  const auto& p = j.at("point");
  if (!p.is_array() || p.size() != dim)
    throw BadInput("point must be an array of " + std::to_string(dim) + " numbers");
  Point out;
  for (const auto& e : p) {
    if (!e.is_number()) throw BadInput("point entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Expr parse_checked(const std::string& text, const Chart& chart,
                   const std::set<std::string>& allowed, const char* what) {
  try {
    return symexpr::parse_expr(text, chart, allowed);
  } catch (const symexpr::SyntaxError& e) {
    throw BadInput(std::string(what) + ": " + e.what() + " in \"" + text + "\"");
  } catch (const symexpr::UnknownIdentifier& e) {
    throw BadInput(std::string(what) + ": " + e.what() + " in \"" + text + "\"");
  }
}

fields::VectorField field_of(const ordered_json& j, const Chart& chart,
                             const std::set<std::string>& allowed, const char* what) {
  std::vector<std::string> comp = str_list(j, chart.dimension(), what);
  try {
    return fields::parse_field(chart, comp, allowed);
  } catch (const symexpr::SyntaxError& e) {
    throw BadInput(std::string(what) + ": " + e.what());
  } catch (const symexpr::UnknownIdentifier& e) {
    throw BadInput(std::string(what) + ": " + e.what());
  }
}

Box box_around(const Point& p, double halfwidth) {
  Box b;
  for (double c : p) b.ranges.push_back({c - halfwidth, c + halfwidth});
  return b;
}

// ---------------------------------------------------------------- reports

const char* status_name(ZeroStatus s) {
  switch (s) {
    case ZeroStatus::SymbolicZero:
      return "SymbolicZero";
    case ZeroStatus::NumericallyZero:
      return "NumericallyZero";
    case ZeroStatus::NonZero:
      return "NonZero";
    case ZeroStatus::Inconclusive:
      return "Inconclusive";
  }
  return "?";
}

ordered_json point_json(const Point& p) {
  ordered_json a = ordered_json::array();
  for (double v : p) a.push_back(v);
  return a;
}

ordered_json verdict_json(const ZeroVerdict& v) {
  ordered_json j;
  j["status"] = status_name(v.status);
  j["samples"] = v.samples;
  j["max_abs"] = v.max_abs;
  j["tolerance"] = v.tolerance;
  if (v.witness) {
    j["witness"] = point_json(*v.witness);
    j["witness_value"] = v.witness_value;
  }
  return j;
}

ordered_json rule_json(const char* name, const char* statement) {
  ordered_json j;
  j["name"] = name;
  j["statement"] = statement;
  return j;
}

ordered_json field_json(const fields::VectorField& v) {
  ordered_json a = ordered_json::array();
  for (const Expr& e : v.components) a.push_back(symexpr::to_string(e));
  return a;
}

ordered_json residual_json(const oracle::ResidualReport& r) {
  ordered_json j;
  j["max_abs"] = r.max_abs;
  j["mean_abs"] = r.mean_abs;
  j["argmax"] = point_json(r.argmax);
  j["samples"] = r.samples;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  return j;
}

ordered_json report_head(const RunConfig& cfg, const ordered_json& payload) {
  ordered_json rep;
  rep["command"] = cfg.command;
  rep["input"] = cfg.input;
  rep["payload"] = payload;
  ordered_json conf;
  conf["box_halfwidth"] = cfg.box_halfwidth;
  conf["samples"] = cfg.samples;
  conf["tolerance"] = cfg.tolerance;
  conf["seed"] = cfg.seed;
  rep["config"] = conf;
  return rep;
}

bool scalar_only(const ordered_json& a) {
  for (const auto& e : a)
    if (e.is_object() || (e.is_array() && !scalar_only(e))) return false;
  return true;
}

std::string scalar_text(const ordered_json& s) {
  if (s.is_string()) return s.get<std::string>();
  return s.dump();
}

std::string inline_array(const ordered_json& a) {
  std::string out = "[";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out += ", ";
    out += a[i].is_array() ? inline_array(a[i]) : scalar_text(a[i]);
  }
  return out + "]";
}

void render_text(const ordered_json& j, std::ostream& out, int indent) {
  const std::string pad(2 * indent, ' ');
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& v = it.value();
      if (v.is_object() || (v.is_array() && !scalar_only(v))) {
        out << pad << it.key() << ":\n";
        render_text(v, out, indent + 1);
      } else if (v.is_array()) {
        out << pad << it.key() << ": " << inline_array(v) << "\n";
      } else {
        out << pad << it.key() << ": " << scalar_text(v) << "\n";
      }
    }
  } else if (j.is_array()) {
    for (const auto& e : j) {
      out << pad << "-\n";
      render_text(e, out, indent + 1);
    }
  } else {
    out << pad << scalar_text(j) << "\n";
  }
}

void emit(const ordered_json& rep, const RunConfig& cfg, std::ostream& out) {
  if (cfg.format == "json")
    out << rep.dump(2) << "\n";
  else
    render_text(rep, out, 0);
}

int finish(ordered_json& rep, const char* status, int code, const RunConfig& cfg,
           std::ostream& out) {
  rep["status"] = status;
  emit(rep, cfg, out);
  return code;
}

// ---------------------------------------------------------------- commands

int cmd_fixtures(const RunConfig& cfg, std::ostream& out) {
  ordered_json list = ordered_json::array();
  for (const std::string& name : fixture_names()) {
    ordered_json meta = ordered_json::parse(fixture_text(name));
    ordered_json row;
    row["name"] = name;
    row["description"] = meta.value("description", "");
    list.push_back(row);
  }
  if (cfg.format == "json") {
    out << list.dump(2) << "\n";
  } else {
    for (const auto& row : list)
      out << row["name"].get<std::string>() << ": " << row["description"].get<std::string>()
          << "\n";
  }
  return 0;
}

int cmd_classify_conic(const RunConfig& cfg, std::ostream& out) {
  ordered_json root = load_input(cfg.input);
  const ordered_json& payload = section(root, "conic", "omega");
  require_keys(payload, {"chart", "g", "omega", "h"}, {"point", "params", "name", "description"},
               "conic");
  Chart chart = chart_of(payload.at("chart"), 2, "chart");
  Bindings params = params_of(payload);
  std::set<std::string> allowed = names_of(params);

  const auto& gj = payload.at("g");
  if (!gj.is_array() || gj.size() != 2) throw BadInput("g must be a 2x2 array of strings");
  std::vector<std::string> row0 = str_list(gj[0], 2, "g"), row1 = str_list(gj[1], 2, "g");
  if (row0[1] != row1[0]) throw BadInput("g must be symmetric: g[0][1] and g[1][0] differ");
  std::vector<std::string> om = str_list(payload.at("omega"), 2, "omega");

  conics::ConicSubmanifold S{chart,
                             parse_checked(row0[0], chart, allowed, "g[0][0]"),
                             parse_checked(row0[1], chart, allowed, "g[0][1]"),
                             parse_checked(row1[1], chart, allowed, "g[1][1]"),
                             {parse_checked(om[0], chart, allowed, "omega[0]"),
                              parse_checked(om[1], chart, allowed, "omega[1]")},
                             parse_checked(str_at(payload.at("h"), "h"), chart, allowed, "h")};
  Point x0 = point_of(payload, 2);
  Box box = box_around(x0, cfg.box_halfwidth);
  SampleSpec spec{cfg.samples, cfg.tolerance, cfg.seed, params};

  auto [d1, d2] = conics::conic_determinants(S);
  conics::ConicClass cls = conics::classify_conic(S, x0, box, spec);

  ordered_json rep = report_head(cfg, payload);
  rep["rules"] = ordered_json::array(
      {rule_json("conic type by determinant signs",
                 "Δ₁ ≠ 0 regular; Δ₂ ≡ 0 parabolic; Δ₂(x₀) > 0 elliptic, or empty when the "
                 "bordered form is definite; Δ₂(x₀) < 0 hyperbolic"),
       rule_json("constraint form",
                 "S(x, ẋ) = ẋᵀ g(x) ẋ + 2 ω(x) ẋ + h(x); Δ₁ = det of g bordered by (ω, h), "
                 "Δ₂ = det g")});
  ordered_json det;
  det["delta1"] = symexpr::to_string(d1);
  det["delta2"] = symexpr::to_string(d2);
  det["delta1_at_point"] = cls.delta1_at_x0;
  det["delta2_at_point"] = cls.delta2_at_x0;
  rep["determinants"] = det;
  ordered_json verdicts;
  verdicts["delta1_zero"] = verdict_json(cls.delta1_zero);
  verdicts["delta2_zero"] = verdict_json(cls.delta2_zero);
  rep["verdicts"] = verdicts;
  rep["point"] = point_json(x0);
  rep["class"] = conics::to_string(cls.tag);

  try {
    quadnl::QuadraticNLSystem Xi = conics::parametrize_conic(S, cls);
    ordered_json par;
    par["kind"] = quadnl::to_string(Xi.kind);
    par["A"] = field_json(Xi.A);
    par["B"] = field_json(Xi.B);
    par["C"] = field_json(Xi.C);
    rep["parametrization"] = par;
    rep["rules"].push_back(
        rule_json("regular fibre parametrization",
                  "a normal-form conic lifts to ẋ = A b₀(w) + B b₁(w) + C with fibre basis "
                  "(cos, sin) | (cosh, sinh) | (w², w)"));
  } catch (const conics::NotInNormalForm& e) {
    rep["parametrization"] = nullptr;
    rep["parametrization_note"] = e.what();
  }

  if (cls.tag == conics::ConicClassTag::Degenerate) return finish(rep, "degenerate", 3, cfg, out);
  return finish(rep, "ok", 0, cfg, out);
}

int cmd_classify_affine(const RunConfig& cfg, std::ostream& out) {
  ordered_json root = load_input(cfg.input);
  const ordered_json& payload = section(root, "affine", "f");
  require_keys(payload, {"chart", "f", "g"}, {"point", "params", "name", "description"},
               "affine");
  Chart chart = chart_of(payload.at("chart"), 3, "chart");
  Bindings params = params_of(payload);
  std::set<std::string> allowed = names_of(params);
  affine::AffineSystem sys{chart, field_of(payload.at("f"), chart, allowed, "f"),
                           field_of(payload.at("g"), chart, allowed, "g")};
  Point xi0 = point_of(payload, 3);
  Box box = box_around(xi0, cfg.box_halfwidth);
  SampleSpec spec{cfg.samples, cfg.tolerance, cfg.seed, params};

  affine::AffineStructure st = affine::affine_structure(sys, xi0, box, spec);
  affine::AffineClass cls = affine::classify_affine(sys, xi0, box, spec);

  ordered_json rep = report_head(cfg, payload);
  rep["rules"] = ordered_json::array(
      {rule_json("adjoint frame decomposition",
                 "ad³_g f = ρ · ad²_g f + τ · ad_g f modulo g, in the frame (g, ad_g f, ad²_g f)"),
       rule_json("obstruction sign law",
                 "χ = 3 L_g ρ − 2ρ² − 9τ; χ(ξ₀) > 0 elliptic, χ(ξ₀) < 0 hyperbolic, χ ≡ 0 "
                 "parabolic; otherwise the residual L_g χ − (2/3)ρχ must vanish")});
  ordered_json str;
  str["rho"] = symexpr::to_string(st.rho);
  str["tau"] = symexpr::to_string(st.tau);
  str["chi"] = symexpr::to_string(st.chi);
  str["c2_residual"] = symexpr::to_string(st.c2_residual);
  str["rho_at_point"] = symexpr::eval(st.rho, chart, xi0, params);
  str["tau_at_point"] = symexpr::eval(st.tau, chart, xi0, params);
  str["chi_at_point"] = symexpr::eval(st.chi, chart, xi0, params);
  rep["structure"] = str;
  ordered_json verdicts;
  verdicts["chi_zero"] = verdict_json(st.chi_zero);
  verdicts["c2_zero"] = verdict_json(st.c2_zero);
  verdicts["c1_value_at_point"] = st.c1_value_at_xi0;
  verdicts["min_abs_frame_det"] = st.min_abs_det;
  verdicts["pointwise_singular"] = st.pointwise_singular;
  rep["verdicts"] = verdicts;
  rep["point"] = point_json(xi0);
  rep["class"] = affine::to_string(cls);

  if (cls == affine::AffineClass::C1Fails) return finish(rep, "degenerate", 3, cfg, out);
  return finish(rep, "ok", 0, cfg, out);
}

int cmd_ladder(const RunConfig& cfg, std::ostream& out) {
  ordered_json root = load_input(cfg.input);
  const ordered_json& payload = section(root, "qnl", "kind");
  require_keys(payload, {"kind", "chart", "A", "B"},
               {"C", "point", "params", "name", "description"}, "qnl");
  const std::string kind_name = str_at(payload.at("kind"), "kind");
  quadnl::Kind kind;
  if (kind_name == "E")
    kind = quadnl::Kind::Elliptic;
  else if (kind_name == "H")
    kind = quadnl::Kind::Hyperbolic;
  else if (kind_name == "P")
    kind = quadnl::Kind::Parabolic;
  else
    throw BadInput("kind must be one of E, H, P");
  Chart chart = chart_of(payload.at("chart"), 2, "chart");
  Bindings params = params_of(payload);
  std::set<std::string> allowed = names_of(params);
  fields::VectorField A = field_of(payload.at("A"), chart, allowed, "A");
  fields::VectorField B = field_of(payload.at("B"), chart, allowed, "B");
  fields::VectorField C = payload.contains("C") ? field_of(payload.at("C"), chart, allowed, "C")
                                                : fields::zero_field(chart);
  quadnl::QuadraticNLSystem Xi = quadnl::make_system(kind, A, B, C);
  Point x0 = point_of(payload, 2);
  Box box = box_around(x0, cfg.box_halfwidth);
  SampleSpec spec{cfg.samples, cfg.tolerance, cfg.seed, params};

  quadnl::QNLStructure s = quadnl::qnl_structure(Xi, box, spec);
  quadnl::LadderLabel lab = quadnl::ladder_classify(Xi, x0, box, spec);

  ordered_json rep = report_head(cfg, payload);
  bool eh = kind != quadnl::Kind::Parabolic;
  rep["rules"] = ordered_json::array(
      {rule_json("frame structure functions", "[A, B] = μ₀ A + μ₁ B and C = γ₀ A + γ₁ B"),
       eh ? rule_json("flatness ladder",
                      "conformally flat ⊇ flat (κ ≡ 0) ⊇ constant form (flat and the γ-transport "
                      "equations hold) ⊇ null form (γ ≡ 0)")
          : rule_json("flatness ladder",
                      "weakly flat ⊇ strongly flat (the γ₁ integrability identity) ⊇ constant "
                      "form (Γ_P transport) ⊇ null form (Γ_P ≡ 0)")});
  ordered_json str;
  str["mu0"] = symexpr::to_string(s.mu0);
  str["mu1"] = symexpr::to_string(s.mu1);
  str["gamma0"] = symexpr::to_string(s.gamma0);
  str["gamma1"] = symexpr::to_string(s.gamma1);
  str["Gamma"] = symexpr::to_string(s.Gamma);
  str["Gamma_at_point"] = symexpr::eval(s.Gamma, chart, x0, params);
  if (s.kappa) {
    str["kappa"] = symexpr::to_string(*s.kappa);
    str["kappa_at_point"] = symexpr::eval(*s.kappa, chart, x0, params);
  }
  str["min_abs_frame_det"] = s.min_abs_det;
  rep["structure"] = str;
  ordered_json flags;
  if (eh) {
    flags["conformally_flat"] = quadnl::to_string(lab.conformally_flat);
    flags["flat"] = quadnl::to_string(lab.flat);
  } else {
    flags["weakly_flat"] = quadnl::to_string(lab.weakly_flat);
    flags["strongly_flat"] = quadnl::to_string(lab.strongly_flat);
  }
  flags["constant_form"] = quadnl::to_string(lab.constant_form);
  flags["null_form"] = quadnl::to_string(lab.null_form);
  rep["flags"] = flags;
  rep["point"] = point_json(x0);
  if (lab.Gamma_at_x0) rep["Gamma_at_point"] = *lab.Gamma_at_x0;
  if (lab.epsilon) rep["epsilon"] = *lab.epsilon;
  if (lab.canonical) {
    ordered_json can;
    can["label"] = quadnl::to_string(*lab.canonical);
    can["Gamma"] = lab.canonical->Gamma;
    if (lab.canonical->epsilon) can["epsilon"] = *lab.canonical->epsilon;
    can["pair"] = ordered_json::array({lab.canonical->pair[0], lab.canonical->pair[1]});
    rep["canonical"] = can;
  }
  if (!eh) rep["tag"] = quadnl::to_string(lab.tag);
  return finish(rep, "ok", 0, cfg, out);
}

int verify_witness(const RunConfig& cfg, const ordered_json& payload, std::ostream& out) {
  require_keys(payload,
               {"source_chart", "target_chart", "S", "S_tilde", "phi", "delta"},
               {"ranges", "name", "description"}, "witness");
  Chart src = chart_of(payload.at("source_chart"), 2, "source_chart");
  Chart tgt = chart_of(payload.at("target_chart"), 2, "target_chart");
  Chart vsrc = conics::velocity_chart(src);
  Chart vtgt = conics::velocity_chart(tgt);
  Expr S = parse_checked(str_at(payload.at("S"), "S"), vsrc, {}, "S");
  Expr St = parse_checked(str_at(payload.at("S_tilde"), "S_tilde"), vtgt, {}, "S_tilde");
  std::vector<std::string> comp = str_list(payload.at("phi"), 2, "phi");
  conics::Diffeomorphism phi = conics::make_diffeo(
      src, tgt, {parse_checked(comp[0], src, {}, "phi[0]"), parse_checked(comp[1], src, {}, "phi[1]")});
  Expr delta = parse_checked(str_at(payload.at("delta"), "delta"), vsrc, {}, "delta");

  std::vector<std::array<double, 2>> ranges;
  if (payload.contains("ranges")) {
    const auto& rj = payload.at("ranges");
    if (!rj.is_array() || rj.size() != 4) throw BadInput("ranges must be 4 [lo, hi] pairs");
    for (const auto& pair : rj) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
        throw BadInput("ranges must be 4 [lo, hi] pairs");
      ranges.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
  } else {
    for (int i = 0; i < 4; ++i) ranges.push_back({-cfg.box_halfwidth, cfg.box_halfwidth});
  }
  int per_axis = std::max(2, (int)std::llround(std::pow((double)cfg.samples, 0.25)));
  oracle::Grid grid = oracle::Grid::over(ranges, {per_axis, per_axis, per_axis, per_axis});

  oracle::ResidualReport res =
      conics::verify_equivalence(S, St, {phi, delta}, grid, cfg.tolerance);

  ordered_json rep = report_head(cfg, payload);
  rep["rules"] = ordered_json::array(
      {rule_json("constraint equivalence",
                 "S̃(φ(x), Dφ(x) ẋ) = δ(x, ẋ) · S(x, ẋ) with δ nonvanishing on the grid")});
  rep["jacobian_det"] = symexpr::to_string(conics::jacobian_det(phi));
  rep["residual"] = residual_json(res);
  if (!res.pass) return finish(rep, "check-failed", 1, cfg, out);
  return finish(rep, "ok", 0, cfg, out);
}

int verify_hfamily(const RunConfig& cfg, const ordered_json& payload, std::ostream& out) {
  require_keys(payload, {"a", "b", "c", "d", "e"}, {"epsilon", "name", "description"}, "hfamily");
  for (const char* k : {"a", "b", "c", "d", "e"})
    if (!payload.at(k).is_number()) throw BadInput(std::string("hfamily '") + k + "' must be a number");
  double a = payload.at("a").get<double>(), b = payload.at("b").get<double>(),
         c = payload.at("c").get<double>(), d = payload.at("d").get<double>(),
         e = payload.at("e").get<double>();
  int epsilon = payload.value("epsilon", 0);
  affine::HFamily fam = affine::HFamily::constants(a, b, c, d, e, epsilon);
  Expr h = affine::build_h_normal_form(fam);
  affine::HOdeCheck chk = affine::h_ode_residual(h);

  const Chart& fc = affine::full_chart();
  Expr h2 = symexpr::differentiate(symexpr::differentiate(h, "w"), "w");
  Expr h3 = symexpr::differentiate(h2, "w");
  Expr h4 = symexpr::differentiate(h3, "w");
  Expr h5 = symexpr::differentiate(h4, "w");

  Box wbox{{{-cfg.box_halfwidth, cfg.box_halfwidth}}};
  double max_rel = 0;
  int usable = 0;
  for (int i = 0; i < cfg.samples; ++i) {
    double w = symexpr::halton_point((std::uint64_t)i, wbox, cfg.seed)[0];
    if (d * w * w + e * w + 1 <= 0.1) continue;
    Point p{0, 0, w};
    double v2 = symexpr::eval(h2, fc, p), v3 = symexpr::eval(h3, fc, p),
           v4 = symexpr::eval(h4, fc, p), v5 = symexpr::eval(h5, fc, p);
    double scale = std::max({1.0, std::fabs(9 * v5 * v2 * v2), std::fabs(45 * v4 * v3 * v2),
                             std::fabs(40 * v3 * v3 * v3)});
    max_rel = std::max(max_rel, std::fabs(symexpr::eval(chk.residual, fc, p)) / scale);
    ++usable;
  }
  if (usable == 0) throw std::invalid_argument("validity region p > 0.1 excludes every sample");
  bool ode_pass = max_rel < cfg.tolerance;

  affine::DEA dea = affine::extract_de(h, {0, 0});
  double rt_err = std::max({std::fabs(dea.d - d), std::fabs(dea.e - e), std::fabs(dea.a - a)});
  bool rt_pass = rt_err < 1e-8;

  affine::AffineClass cls = affine::classify_h(fam, {0, 0}, Box::cube(2, cfg.box_halfwidth),
                                               SampleSpec{cfg.samples, cfg.tolerance, cfg.seed, {}});

  ordered_json rep = report_head(cfg, payload);
  rep["rules"] = ordered_json::array(
      {rule_json("fifth-order fibre identity",
                 "9 h⁽⁵⁾ (h″)² − 45 h⁽⁴⁾ h⁽³⁾ h″ + 40 (h⁽³⁾)³ = 0 characterizes the drift family"),
       rule_json("coefficient recovery",
                 "ρ = h⁽³⁾/h″ at w = 0 yields e = −2ρ/3, d = e²/2 − ρ′/3, a = h″"),
       rule_json("family sign law", "d < 0 elliptic, d > 0 hyperbolic, d ≡ 0 parabolic")});
  ordered_json ode;
  ode["max_relative_residual"] = max_rel;
  ode["samples_used"] = usable;
  ode["tolerance"] = cfg.tolerance;
  ode["pass"] = ode_pass;
  rep["ode_check"] = ode;
  ordered_json rt;
  rt["recovered_d"] = dea.d;
  rt["recovered_e"] = dea.e;
  rt["recovered_a"] = dea.a;
  rt["max_abs_error"] = rt_err;
  rt["tolerance"] = 1e-8;
  rt["pass"] = rt_pass;
  rep["roundtrip"] = rt;
  rep["class"] = affine::to_string(cls);
  if (!(ode_pass && rt_pass)) return finish(rep, "check-failed", 1, cfg, out);
  return finish(rep, "ok", 0, cfg, out);
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  ordered_json root = load_input(cfg.input);
  if (root.is_object() && (root.contains("witness") || root.contains("delta")))
    return verify_witness(cfg, root.contains("witness") ? root.at("witness") : root, out);
  if (root.is_object() && (root.contains("hfamily") || root.contains("d")))
    return verify_hfamily(cfg, root.contains("hfamily") ? root.at("hfamily") : root, out);
  throw BadInput("verify needs a 'witness' or 'hfamily' payload");
}

int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == "fixtures") return cmd_fixtures(cfg, out);
    if (cfg.command == "classify-conic") return cmd_classify_conic(cfg, out);
    if (cfg.command == "classify-affine") return cmd_classify_affine(cfg, out);
    if (cfg.command == "ladder") return cmd_ladder(cfg, out);
    if (cfg.command == "verify") return cmd_verify(cfg, out);
    err << "error: unknown command " << cfg.command << "\n";
    return 2;
  } catch (const BadInput& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const oracle::StencilEvalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const symexpr::EvalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const conics::SingularJacobian& e) {
    err << "degenerate: " << e.what() << "\n";
    return 3;
  } catch (const fields::DegenerateFrame& e) {
    err << "degenerate: " << e.what() << "\n";
    return 3;
  } catch (const fields::DegenerateAB& e) {
    err << "degenerate: " << e.what() << "\n";
    return 3;
  } catch (const affine::SecondDerivativeVanishes& e) {
    err << "degenerate: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "degenerate: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"classification and verification toolkit for quadratic velocity constraints"};
  app.name("conic-kit");
  app.require_subcommand(1);
  auto add = [&](const std::string& name, const std::string& desc, bool needs_input) {
    CLI::App* sub = app.add_subcommand(name, desc);
    if (needs_input)
      sub->add_option("--input", cfg.input, "JSON file path or fixture:NAME")->required();
    sub->add_option("--box", cfg.box_halfwidth, "half-width of the sampling box");
    sub->add_option("--samples", cfg.samples, "sampling budget for verdicts and grids");
    sub->add_option("--tol", cfg.tolerance, "tolerance for verdicts and residual checks");
    sub->add_option("--seed", cfg.seed, "seed of the quasi-random sample stream");
    sub->add_option("--format", cfg.format, "report format")
        ->check(CLI::IsMember({"text", "json"}));
    return sub;
  };
  add("classify-conic", "determinant classification of a quadratic velocity constraint", true);
  add("classify-affine", "obstruction classification of a control-affine system", true);
  add("ladder", "flatness ladder of a quadratic nonlinear system", true);
  add("verify", "residual checks for equivalence witnesses and drift families", true);
  add("fixtures", "list the bundled example systems", false);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(std::move(rev));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  if (!(cfg.tolerance > 0)) {
    err << "error: --tol must be positive\n";
    return 2;
  }
  if (cfg.samples < 16) {
    err << "error: --samples must be at least 16\n";
    return 2;
  }
  return dispatch(cfg, out, err);
}

}  // namespace ck::cli
