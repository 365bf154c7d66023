#include "oplab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include "oplab/czd.hpp"
#include "oplab/ensembles.hpp"
#include "oplab/parallel.hpp"
#include "oplab/scattering.hpp"

namespace oplab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kResidualTol = 1e-10;
constexpr double kIsometryTol = 1e-10;
constexpr double kCorollaryTol = 1e-10;

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

const Json& need(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing config key '") + key + "'");
  return j.at(key);
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json number_or_null(const std::optional<double>& v) { return v ? number_or_null(*v) : Json(nullptr); }

SchattenIndex parse_norm(const Json& config, const char* key, const std::string& fallback) {
  try {
    if (config.contains(key) && config[key].is_number()) return SchattenIndex(config[key].get<double>());
    return SchattenIndex::parse(get_or<std::string>(config, key, fallback));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

MeasureSpec parse_measure_spec(const Json& g) {
  MeasureSpec s;
  s.min_atoms = get_or(g, "min_atoms", s.min_atoms);
  s.max_atoms = get_or(g, "max_atoms", s.max_atoms);
  if (g.contains("atoms")) s.min_atoms = s.max_atoms = g["atoms"].get<int>();
  s.max_dim = get_or(g, "max_dim", s.max_dim);
  s.rows = get_or(g, "rows", s.rows);
  s.cols = get_or(g, "cols", s.cols);
  if (g.contains("support")) {
    const auto& sup = g["support"];
    if (!sup.is_array() || sup.size() != 2) throw ConfigError("'support' must be [lo, hi]");
    s.support_lo = sup[0].get<double>();
    s.support_hi = sup[1].get<double>();
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

// {"fixture": path} or {"generate": spec}
SimpleOpMeasure load_measure(const Json& m, std::uint64_t seed) {
  if (m.contains("fixture")) {
    const OpMeasure mu = measure_from_json(read_json_file(m["fixture"].get<std::string>()));
    if (!mu.density.empty()) throw ConfigError("this command needs a purely atomic measure");
    return mu.atoms;
  }
  if (m.contains("generate")) {
    std::mt19937_64 rng(stream_seed(seed, 0));
    return random_simple_measure(rng, parse_measure_spec(m["generate"]));
  }
  if (m.contains("atoms")) {
    const OpMeasure mu = measure_from_json(m);
    if (!mu.density.empty()) throw ConfigError("this command needs a purely atomic measure");
    return mu.atoms;
  }
  throw ConfigError("measure needs 'fixture', 'generate' or inline 'atoms'");
}

GridSpec parse_grid(const Json& g, const GridSpec& fallback) {
  GridSpec s = fallback;
  if (g.is_null()) return s;
  s.lo = get_or(g, "lo", s.lo);
  s.cells = get_or<std::size_t>(g, "cells", s.cells);
  if (g.contains("hi")) {
    const double hi = g["hi"].get<double>();
    if (!(hi > s.lo) || s.cells == 0) throw ConfigError("grid needs hi > lo and cells > 0");
    s.step = (hi - s.lo) / static_cast<double>(s.cells);
  } else {
    s.step = get_or(g, "step", s.step);
  }
  if (!(s.step > 0.0) || s.cells == 0 || !std::isfinite(s.lo)) throw ConfigError("bad grid");
  return s;
}

ConeSampling parse_cone(const Json& c) {
  ConeSampling s;
  if (c.is_null()) return s;
  s.ratio = get_or(c, "ratio", s.ratio);
  s.x_samples = get_or(c, "x_samples", s.x_samples);
  s.refine_steps = get_or(c, "refine_steps", s.refine_steps);
  s.floor_rel = get_or(c, "floor_rel", s.floor_rel);
  s.top_rel = get_or(c, "top_rel", s.top_rel);
  s.boundary_only = get_or(c, "boundary_only", s.boundary_only);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

WeakNormOptions parse_weak_options(const Json& config, int threads) {
  WeakNormOptions o;
  o.c_x = get_or(config, "C_X", o.c_x);
  o.beta = get_or(config, "beta", o.beta);
  o.cone = parse_cone(config.contains("cone") ? config["cone"] : Json());
  o.general_t = get_or(config, "general_t", o.general_t);
  o.threads = threads;
  if (!(o.c_x >= 0.0)) throw ConfigError("C_X must be >= 0");
  if (!(o.beta > 0.0 && o.beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  return o;
}

std::vector<MaximalOperator> parse_operators(const Json& config) {
  const Json& o = config.contains("operator") ? config["operator"] : config.contains("operators") ? config["operators"] : Json("all");
  std::vector<MaximalOperator> out;
  auto add = [&](const std::string& name) {
    if (name == "all") {
      for (auto op : {MaximalOperator::M, MaximalOperator::H, MaximalOperator::HSharp, MaximalOperator::T}) out.push_back(op);
    } else {
      out.push_back(parse_operator(name));
    }
  };
  if (o.is_string()) add(o.get<std::string>());
  else if (o.is_array())
    for (const auto& e : o) add(e.get<std::string>());
  else throw ConfigError("'operator' must be a name or a list of names");
  return out;
}

// threads never changes results, so it stays out of the hash
Json summary_header(const Json& config, std::uint64_t seed) {
  Json hashed = config;
  hashed.erase("threads");
  return Json{{"version", kVersion}, {"config_hash", hex64(config_hash(hashed))}, {"seed", seed}};
}

std::filesystem::path out_path(const std::string& dir, const std::string& name) {
  return std::filesystem::path(dir) / name;
}

void write_json(const std::string& dir, const std::string& name, const Json& j) {
  write_text_file(out_path(dir, name).string(), j.dump(2) + "\n");
}

Json weak_result_json(const WeakNormResult& r, double c_x) {
  Json j{{"operator", to_string(r.op)},
         {"quasinorm", number_or_null(r.quasinorm)},
         {"reference", number_or_null(r.reference)},
         {"paper_bound", number_or_null(r.constant * r.reference)},
         {"constant", number_or_null(r.constant)},
         {"C_X", c_x},
         {"minimal_feasible_C_X", number_or_null(r.minimal_cx)},
         {"pass", r.pass},
         {"grid_offset", r.offset}};
  if (r.op == MaximalOperator::T) {
    j["constant_simple"] = r.constant_simple;
    j["pass_simple"] = r.quasinorm <= r.constant_simple * r.reference;
  }
  return j;
}

std::string weak_csv(const WeakNormResult& r) {
  std::ostringstream csv;
  csv << "lambda,value\n";
  for (std::size_t k = 0; k < r.values.count(); ++k)
    csv << format_double(r.values.node(k)) << ',' << format_double(r.values.values[k]) << '\n';
  return csv.str();
}

VerifyOptions parse_verify(const Json& v) {
  VerifyOptions o;
  if (v.is_null()) return o;
  o.kernel_samples = get_or(v, "kernel_samples", o.kernel_samples);
  o.seed = get_or(v, "seed", o.seed);
  o.integral = get_or(v, "integral", o.integral);
  o.gauss_points = get_or(v, "gauss_points", o.gauss_points);
  o.tail_factor = get_or(v, "tail_factor", o.tail_factor);
  return o;
}

Json verify_tolerances(const VerifyOptions& o) {
  return Json{{"cancellation_rel", o.cancel_tol}, {"reconstruction_rel", o.recon_tol},
              {"kernel_samples", o.kernel_samples}, {"kernel_seed", o.seed},
              {"gauss_points", o.gauss_points}, {"tail_factor", o.tail_factor}};
}

std::vector<double> cz_levels(const Json& config, double total) {
  std::vector<double> levels;
  if (config.contains("levels"))
    for (const auto& s : config["levels"]) levels.push_back(s.get<double>());
  if (config.contains("level_factors"))
    for (const auto& f : config["level_factors"]) levels.push_back(f.get<double>() * total);
  if (levels.empty()) throw ConfigError("cz needs 'levels' or 'level_factors'");
  for (double s : levels)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("CZ levels must be positive");
  return levels;
}

// ---- scatter ----

ComplexMatrix signature(const Json& j, int k) {
  if (j.is_null()) {
    ComplexMatrix out = ComplexMatrix::Identity(k, k);
    return out;
  }
  if (j.is_array() && (j.empty() || j[0].is_number())) {
    if (static_cast<int>(j.size()) != k) throw ConfigError("signature length must equal k");
    ComplexMatrix out = ComplexMatrix::Zero(k, k);
    for (int i = 0; i < k; ++i) out(i, i) = j[i].get<double>();
    return out;
  }
  return matrix_from_json(j);
}

struct LoadedModel {
  ScatteringModel model;
  std::optional<std::vector<ComplexMatrix>> g_samples;  // multiplication model only
  int channels = 1;
  bool remark = false;
  double remark_norm_p = 0.0;
};

LoadedModel load_model(const Json& m, std::uint64_t seed, SchattenIndex p) {
  if (m.contains("fixture")) return {model_from_json(read_json_file(m["fixture"].get<std::string>())), std::nullopt};
  if (m.contains("H0")) return {model_from_json(m), std::nullopt};
  if (m.contains("random")) {
    const Json& r = m["random"];
    std::mt19937_64 rng(stream_seed(seed, 0));
    return {random_model(rng, need(r, "n").get<int>(), need(r, "k").get<int>()), std::nullopt};
  }
  if (m.contains("example_e1")) {
    const Json& e = m["example_e1"];
    const int grid_n = need(e, "grid_n").get<int>();
    const int channels = get_or(e, "channels", 1);
    const int k = get_or(e, "k", channels);
    if (grid_n < 1 || channels < 1 || k < 1) throw ConfigError("example_e1 sizes must be positive");
    const auto x = cell_midpoints(grid_n);
    std::vector<ComplexMatrix> g;
    g.reserve(grid_n);
    for (double xm : x) g.push_back(smooth_g(xm, k, channels));
    const ComplexMatrix j = signature(e.contains("J") ? e["J"] : Json(), k);
    LoadedModel out{build_example_e1(grid_n, channels, g, j), std::move(g)};
    out.channels = channels;
    return out;
  }
  if (m.contains("remark")) {
    const Json& r = m["remark"];
    ComplexMatrix v;
    if (r.contains("V")) {
      v = matrix_from_json(r["V"]);
    } else {
      std::mt19937_64 rng(stream_seed(seed, 0));
      const int n = need(r, "n").get<int>();
      const ComplexMatrix a = gaussian_matrix(rng, n, n);
      v = 0.5 * (a + a.adjoint());
    }
    LoadedModel out{build_remark_model(v), std::nullopt};
    out.remark = true;
    out.remark_norm_p = schatten_norm(v, p);
    return out;
  }
  throw ConfigError("model needs 'fixture', inline H0/G/J, 'random', 'example_e1' or 'remark'");
}

ScalarMeasure parse_nu0(const Json& h, const LoadedModel& lm, SchattenIndex p) {
  const Json nu = h.contains("nu0") ? h["nu0"] : Json("auto");
  if (nu.is_string()) {
    const std::string kind = nu.get<std::string>();
    if ((kind == "auto" || kind == "example") && lm.g_samples) return example_nu0(*lm.g_samples, p);
    if ((kind == "auto" || kind == "remark") && lm.remark) return ScalarMeasure({{0.0, lm.remark_norm_p}}, {});
    throw ConfigError("nu0 '" + kind + "' does not apply to this model");
  }
  std::vector<ScalarAtom> atoms;
  std::vector<ScalarCell> cells;
  if (nu.contains("atoms"))
    for (const auto& a : nu["atoms"]) atoms.push_back({need(a, "x").get<double>(), need(a, "w").get<double>()});
  if (nu.contains("cells"))
    for (const auto& c : nu["cells"])
      cells.push_back({need(c, "lo").get<double>(), need(c, "hi").get<double>(), need(c, "density").get<double>()});
  const double scale = get_or(nu, "scale", 1.0);
  for (auto& a : atoms) a.weight *= scale;
  for (auto& c : cells) c.density *= scale;
  return ScalarMeasure(std::move(atoms), std::move(cells));
}

Interval parse_interval(const Json& j, const Interval& fallback) {
  if (j.is_null()) return fallback;
  if (!j.is_array() || j.size() != 2) throw ConfigError("intervals are [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<double> parse_eps(const Json& l, const ScatteringModel& model, int which, double lambda) {
  if (l.contains("eps")) return l["eps"].get<std::vector<double>>();
  const auto mult = get_or<std::vector<double>>(l, "floor_multiples", {40.0, 4.0});
  const int count = get_or(l, "count", 10);
  if (mult.size() != 2 || count < 2) throw ConfigError("floor_multiples needs [hi, lo] and count >= 2");
  double base = ladder_floor(model, which, lambda) / 4.0;
  if (!(base > 0.0)) base = get_or(l, "spacing", 1e-3);
  std::vector<double> eps(count);
  for (int i = 0; i < count; ++i)
    eps[i] = base * mult[0] * std::pow(mult[1] / mult[0], double(i) / (count - 1));
  return eps;
}

ComplexVector make_psi(const Json& w, const LoadedModel& lm, std::uint64_t seed) {
  const Eigen::Index n = lm.model.n();
  const Json spec = w.contains("psi") ? w["psi"] : Json("hat");
  ComplexVector psi = ComplexVector::Zero(n);
  if (spec.is_string() && spec.get<std::string>() == "hat") {
    const auto& ev = lm.model.H0().diagonal();
    // hat centred at 1/2, half-width 1/4, first channel only
    for (Eigen::Index i = 0; i < n; i += lm.channels) {
      const double x = ev(i).real();
      psi(i) = std::max(0.0, 1.0 - std::abs(x - 0.5) / 0.25);
    }
  } else if (spec.is_string() && spec.get<std::string>() == "random") {
    std::mt19937_64 rng(stream_seed(seed, 1));
    psi = gaussian_matrix(rng, n, 1).col(0);
  } else if (spec.is_object()) {
    psi = matrix_from_json(spec).col(0);
    if (psi.size() != n) throw ConfigError("psi has the wrong dimension");
  } else {
    throw ConfigError("psi must be \"hat\", \"random\" or a column matrix");
  }
  const double norm = psi.norm();
  if (!(norm > 0.0)) throw ConfigError("psi vanishes");
  return psi / norm;
}

std::vector<double> parse_times(const Json& w) {
  if (w.contains("times")) return w["times"].get<std::vector<double>>();
  const double t0 = get_or(w, "t0", 10.0);
  const int doublings = get_or(w, "doublings", 8);
  std::vector<double> t;
  for (int m = 0; m <= doublings; ++m) t.push_back(std::ldexp(t0, m));
  return t;
}

}  // namespace

// ---- public helpers ----

MaximalOperator parse_operator(const std::string& name) {
  if (name == "M") return MaximalOperator::M;
  if (name == "H") return MaximalOperator::H;
  if (name == "Hsharp" || name == "H#") return MaximalOperator::HSharp;
  if (name == "T" || name == "T<") return MaximalOperator::T;
  if (name == "Mbeta") return MaximalOperator::MBeta;
  throw ConfigError("unknown operator '" + name + "' (M, H, Hsharp, T, Mbeta)");
}

std::string to_string(MaximalOperator op) {
  switch (op) {
    case MaximalOperator::M: return "M";
    case MaximalOperator::H: return "H";
    case MaximalOperator::HSharp: return "Hsharp";
    case MaximalOperator::T: return "T";
    case MaximalOperator::MBeta: return "Mbeta";
  }
  return "?";
}

double weak_type_constant(MaximalOperator op, double c_x, bool simple, double beta) {
  switch (op) {
    case MaximalOperator::M: return 3.0;
    case MaximalOperator::MBeta: return std::pow(6.0, 1.0 / beta) / (1.0 - beta);
    case MaximalOperator::H: return 30.0 + 4.0 * c_x;
    case MaximalOperator::HSharp: return 17592.0 + 2304.0 * c_x;
    case MaximalOperator::T: return simple ? 35274.0 + 4608.0 * c_x : 70548.0 + 9216.0 * c_x;
  }
  return 0.0;
}

std::optional<double> minimal_feasible_cx(MaximalOperator op, double ratio, bool simple, double beta) {
  if (std::isnan(ratio)) return std::nullopt;
  const double a = weak_type_constant(op, 0.0, simple, beta);
  const double b = weak_type_constant(op, 1.0, simple, beta) - a;
  if (b == 0.0) {
    if (ratio <= a) return 0.0;
    return std::nullopt;
  }
  if (!std::isfinite(ratio)) return std::nullopt;
  return std::max(0.0, (ratio - a) / b);
}

WeakNormResult weak_norm_audit(const SimpleOpMeasure& mu, SchattenIndex norm, MaximalOperator op,
                               const GridSpec& grid, const WeakNormOptions& options) {
  if (!(grid.step > 0.0) || grid.cells == 0) throw std::invalid_argument("bad grid");
  WeakNormResult r;
  r.op = op;

  // grid edges must miss the atoms
  double lo = grid.lo;
  auto hits = [&](double base) {
    for (const Atom& a : mu.atoms()) {
      const double k = std::round((a.x - base) / grid.step);
      if (k < 0.0 || k > static_cast<double>(grid.cells)) continue;
      for (double kk : {k - 1.0, k, k + 1.0})
        if (kk >= 0.0 && base + kk * grid.step == a.x) return true;
    }
    return false;
  };
  for (int attempt = 1; hits(lo) && attempt <= 8; ++attempt) {
    r.offset = grid.step * std::ldexp(1.0, -6 - attempt) * attempt;
    lo = grid.lo + r.offset;
  }

  const ScalarMeasure variation = variation_measure(mu, norm);
  const double total = variation.total();
  auto h_norm = [&](double x) {
    if (mu.atom_at(x)) return std::numeric_limits<double>::infinity();
    return schatten_norm_fast(hilbert(mu, x), norm);
  };

  switch (op) {
    case MaximalOperator::M:
      r.values = sample_cells(lo, grid.step, grid.cells, [&](double x) { return hl_maximal(variation, x); },
                              options.threads);
      break;
    case MaximalOperator::H:
      r.values = sample_cells(lo, grid.step, grid.cells, h_norm, options.threads);
      break;
    case MaximalOperator::HSharp:
      r.values = sample_cells(lo, grid.step, grid.cells, [&](double x) { return hilbert_maximal(mu, x, norm); },
                              options.threads);
      break;
    case MaximalOperator::T: {
      const CauchyField field(OpMeasure(mu), norm);
      r.values = sample_cells(
          lo, grid.step, grid.cells,
          [&](double x) { return nontangential_maximal(field, x, 0.0, options.cone).value; }, options.threads);
      break;
    }
    case MaximalOperator::MBeta: {
      GridFunction g = sample_cells(lo, grid.step, grid.cells, h_norm, options.threads);
      for (double& v : g.values)
        if (!std::isfinite(v)) v = 0.0;  // cannot happen for distinct atoms; keeps power_density finite
      r.values = sample_cells(lo, grid.step, grid.cells,
                              [&](double x) { return mbeta_maximal(g, options.beta, x); }, options.threads);
      r.quasinorm = weak_quasinorm(r.values);
      r.reference = weak_quasinorm(g);
      r.constant = weak_type_constant(op, options.c_x, false, options.beta);
      const double ratio = r.reference > 0.0 ? r.quasinorm / r.reference : 0.0;
      r.minimal_cx = minimal_feasible_cx(op, ratio, false, options.beta);
      r.pass = r.quasinorm <= r.constant * r.reference;
      return r;
    }
  }
  r.quasinorm = weak_quasinorm(r.values);
  r.reference = total;
  const bool simple = !options.general_t;
  r.constant = weak_type_constant(op, options.c_x, simple, options.beta);
  if (op == MaximalOperator::T) r.constant_simple = weak_type_constant(op, options.c_x, true);
  const double ratio = total > 0.0 ? r.quasinorm / total : 0.0;
  r.minimal_cx = minimal_feasible_cx(op, ratio, simple, options.beta);
  r.pass = r.quasinorm <= r.constant * total;
  return r;
}

std::uint64_t config_hash(const Json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 15];
  return s;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

ComplexMatrix smooth_g(double x, int k, int channels) {
  ComplexMatrix g(k, channels);
  const double envelope = std::sin(kPi * x);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < channels; ++c)
      g(r, c) = std::polar(envelope / (1.0 + r + c), 2.0 * kPi * (r - c) * x);
  return g;
}

// ---- commands ----

int run_cz(const Json& config, const std::string& out_dir) {
  const std::uint64_t seed = get_or<std::uint64_t>(config, "seed", 0);
  const int threads = get_or(config, "threads", 1);
  const SimpleOpMeasure mu = load_measure(need(config, "measure"), seed);
  const SchattenIndex norm = parse_norm(config, "norm", "op");
  const VerifyOptions vopt = parse_verify(config.contains("verify") ? config["verify"] : Json());
  const double total = total_variation(mu, Interval::real_line(), norm);
  const auto levels = cz_levels(config, total);

  std::vector<Json> docs(levels.size());
  std::vector<int> ok(levels.size(), 0);
  parallel_for(levels.size(), threads, [&](std::size_t i) {
    const CZDecomposition dec = decompose(mu, levels[i], norm);
    const CZReport rep = verify_decomposition(mu, dec, vopt);
    docs[i] = decomposition_to_json(dec, rep);
    ok[i] = rep.all_pass();
  });

  Json summary = summary_header(config, seed);
  summary["command"] = "cz";
  summary["norm"] = norm.to_string();
  summary["total_variation"] = total;
  summary["tolerances"] = verify_tolerances(vopt);
  Json reports = Json::array();
  bool all = true;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string name = "cz_" + std::to_string(i) + ".json";
    write_json(out_dir, name, docs[i]);
    reports.push_back({{"s", levels[i]}, {"file", name}, {"intervals", docs[i]["intervals"].size()}, {"pass", ok[i] != 0}});
    all = all && ok[i];
  }
  summary["levels"] = std::move(reports);
  summary["pass"] = all;
  write_json(out_dir, "summary.json", summary);
  return all ? kExitPass : kExitViolation;
}

int run_weaknorm(const Json& config, const std::string& out_dir) {
  const std::uint64_t seed = get_or<std::uint64_t>(config, "seed", 0);
  const int threads = get_or(config, "threads", 1);
  const SimpleOpMeasure mu = load_measure(need(config, "measure"), seed);
  const SchattenIndex norm = parse_norm(config, "norm", "op");
  const GridSpec grid = parse_grid(config.contains("grid") ? config["grid"] : Json(), GridSpec{});
  const WeakNormOptions opt = parse_weak_options(config, threads);

  Json summary = summary_header(config, seed);
  summary["command"] = "weaknorm";
  summary["norm"] = norm.to_string();
  summary["total_variation"] = total_variation(mu, Interval::real_line(), norm);
  summary["grid"] = {{"lo", grid.lo}, {"step", grid.step}, {"cells", grid.cells}};
  summary["tolerances"] = {{"weak_norm", "exact comparison, no slack"},
                           {"cone", {{"ratio", opt.cone.ratio}, {"x_samples", opt.cone.x_samples},
                                     {"refine_steps", opt.cone.refine_steps}, {"floor_rel", opt.cone.floor_rel},
                                     {"top_rel", opt.cone.top_rel}, {"boundary_only", opt.cone.boundary_only}}}};
  Json results = Json::array();
  bool all = true;
  for (MaximalOperator op : parse_operators(config)) {
    const WeakNormResult r = weak_norm_audit(mu, norm, op, grid, opt);
    write_text_file(out_path(out_dir, "weaknorm_" + to_string(op) + ".csv").string(), weak_csv(r));
    Json j = weak_result_json(r, opt.c_x);
    if (r.offset != 0.0) j["note"] = "grid edge hit an atom; grid shifted by grid_offset";
    results.push_back(std::move(j));
    all = all && r.pass;
  }
  summary["results"] = std::move(results);
  summary["pass"] = all;
  write_json(out_dir, "summary.json", summary);
  return all ? kExitPass : kExitViolation;
}

int run_scatter(const Json& config, const std::string& out_dir) {
  const std::uint64_t seed = get_or<std::uint64_t>(config, "seed", 0);
  const SchattenIndex p = parse_norm(config, "p", "S2");
  const LoadedModel lm = load_model(need(config, "model"), seed, p);
  const ScatteringModel& model = lm.model;

  Json summary = summary_header(config, seed);
  summary["command"] = "scatter";
  summary["n"] = model.n();
  summary["k"] = model.k();
  summary["tolerances"] = {{"resolvent_rel", kResidualTol}, {"isometry", kIsometryTol},
                           {"corollary", kCorollaryTol}, {"hermitian_rel", kHermitianTol},
                           {"det_invertibility", kInvertibilityThreshold}, {"hypothesis_rel", 1e-10}};
  bool hard_ok = true;

  if (config.contains("z")) {
    Json rows = Json::array();
    for (const auto& zj : config["z"]) {
      if (!zj.is_array() || zj.size() != 2) throw ConfigError("z values are [re, im]");
      const Complex z(zj[0].get<double>(), zj[1].get<double>());
      if (z.imag() == 0.0) throw ConfigError("resolvent probe needs Im z != 0");
      try {
        const ResolventResiduals r = resolvent_identity_residuals(model, z);
        rows.push_back({{"z", zj}, {"status", r.pass() ? "ok" : "violation"}, {"r1", r.r1}, {"r2", r.r2},
                        {"norm_B0", r.norm_b0}, {"norm_B1", r.norm_b1}, {"tolerance", r.tolerance}});
        hard_ok = hard_ok && r.pass();
      } catch (const SingularSystem&) {
        rows.push_back({{"z", zj}, {"status", "singular_system"}});
      }
    }
    summary["resolvent"] = std::move(rows);
  }

  if (config.contains("hypothesis")) {
    const Json& h = config["hypothesis"];
    const SchattenIndex hp = parse_norm(h, "p", p.to_string());
    const auto& ev = model.spectrum(0).eigenvalues;
    const double pad = 1.0 + (ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0);
    const Interval delta = parse_interval(h.contains("delta") ? h["delta"] : Json(), {-pad, pad});
    const int depth = get_or(h, "depth", 6);
    const ScalarMeasure nu0 = parse_nu0(h, lm, hp);
    const HypothesisReport rep = hypothesis_check(model, hp, delta, nu0, depth);
    Json j{{"p", hp.to_string()}, {"pass", rep.pass}, {"worst_margin", number_or_null(rep.worst_margin)},
           {"worst_ratio", number_or_null(rep.worst_ratio)}, {"probes", rep.probes}};
    if (rep.violation) j["violation"] = {rep.violation->lo, rep.violation->hi};
    summary["hypothesis"] = std::move(j);
  }

  if (config.contains("ladder")) {
    const Json& l = config["ladder"];
    const int which = get_or(l, "which", 0);
    const double lambda = need(l, "lambda").get<double>();
    EpsilonLadder lad;
    try {
      lad = boundary_ladder(model, which, lambda, parse_eps(l, model, which, lambda));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    std::ostringstream csv;
    csv << "eps,norm,re_trace,im_trace,difference\n";
    for (std::size_t i = 0; i < lad.epsilons.size(); ++i) {
      const Complex tr = lad.values[i].trace();
      csv << format_double(lad.epsilons[i]) << ',' << format_double(schatten_norm(lad.values[i], SchattenIndex::operator_norm()))
          << ',' << format_double(tr.real()) << ',' << format_double(tr.imag()) << ','
          << (i == 0 ? std::string() : format_double(lad.differences[i - 1])) << '\n';
    }
    write_text_file(out_path(out_dir, "ladder.csv").string(), csv.str());
    summary["ladder"] = {{"lambda", lambda}, {"which", which}, {"floor", lad.floor},
                         {"max_difference", lad.max_difference}, {"growth_slope", lad.growth_slope}};
  }

  if (config.contains("det")) {
    const Json& d = config["det"];
    const double lambda = need(d, "lambda").get<double>();
    const int q = get_or(d, "q", p.is_operator_norm() ? 1 : default_det_order(p));
    const auto eps = get_or<std::vector<double>>(d, "eps", {1e-1, 1e-2, 1e-3, 1e-4});
    std::ostringstream csv;
    csv << "eps,re,im,relative_modulus,invertible\n";
    double min_mod = std::numeric_limits<double>::infinity();
    for (double e : eps) {
      if (!(e > 0.0)) throw ConfigError("det ε must be positive");
      const RegularizedDeterminant r = det_probe(model, lambda, e, q);
      csv << format_double(e) << ',' << format_double(r.value.real()) << ',' << format_double(r.value.imag()) << ','
          << format_double(r.relative_modulus) << ',' << (r.invertible ? 1 : 0) << '\n';
      min_mod = std::min(min_mod, r.relative_modulus);
    }
    write_text_file(out_path(out_dir, "det.csv").string(), csv.str());
    summary["det"] = {{"lambda", lambda}, {"q", q}, {"min_relative_modulus", number_or_null(min_mod)}};
  }

  if (config.contains("wave")) {
    const Json& w = config["wave"];
    const ComplexVector psi = make_psi(w, lm, seed);
    const auto times = parse_times(w);
    std::optional<Interval> delta;
    if (w.contains("delta")) delta = parse_interval(w["delta"], {});
    const WaveProbe probe = wave_probe(model, psi, times, delta);
    std::ostringstream csv;
    csv << "t,increment,isometry_defect,intertwining\n";
    double worst_iso = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      csv << format_double(times[i]) << ','
          << (i < probe.increments.size() ? format_double(probe.increments[i]) : std::string()) << ','
          << format_double(probe.isometry_defect[i]) << ',' << format_double(probe.intertwining[i]) << '\n';
      worst_iso = std::max(worst_iso, probe.isometry_defect[i]);
    }
    write_text_file(out_path(out_dir, "wave.csv").string(), csv.str());
    summary["wave"] = {{"decreasing_window", probe.decreasing_window()}, {"increments", probe.increments},
                       {"max_isometry_defect", worst_iso}, {"isometry_pass", worst_iso <= kIsometryTol}};
    hard_ok = hard_ok && worst_iso <= kIsometryTol;
  }

  if (config.contains("corollary")) {
    if (!lm.g_samples) throw ConfigError("corollary needs an example_e1 model");
    const SchattenIndex cp = parse_norm(config["corollary"], "p", p.to_string());
    if (cp.is_operator_norm()) throw ConfigError("corollary needs finite p");
    const CorollarySides s = corollary_inequality(*lm.g_samples, 1.0 / lm.g_samples->size(), cp);
    const bool pass = s.lhs <= s.rhs + kCorollaryTol;
    summary["corollary"] = {{"p", cp.to_string()}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"pass", pass}};
    hard_ok = hard_ok && pass;
  }

  summary["pass"] = hard_ok;
  write_json(out_dir, "summary.json", summary);
  return hard_ok ? kExitPass : kExitViolation;
}

int run_sweep(const Json& config, const std::string& out_dir) {
  const std::uint64_t seed = get_or<std::uint64_t>(config, "seed", 0);
  const int threads = get_or(config, "threads", 1);
  const std::string kind = get_or<std::string>(config, "kind", "audit");
  const std::size_t count = get_or<std::size_t>(config, "count", 10);
  const std::string norm_name = get_or<std::string>(config, "norm", "mixed");
  const MeasureSpec spec = parse_measure_spec(config.contains("measure") ? config["measure"] : Json::object());

  auto item_norm = [&](std::mt19937_64& rng) {
    if (norm_name == "mixed") return random_norm(rng);
    try {
      return SchattenIndex::parse(norm_name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };

  Json summary = summary_header(config, seed);
  summary["command"] = "sweep";
  summary["kind"] = kind;
  summary["count"] = count;
  std::ostringstream csv;
  bool all = true;

  if (kind == "audit") {
    const GridSpec grid = parse_grid(config.contains("grid") ? config["grid"] : Json(), GridSpec{-10.0, 20.0 / 256, 256});
    WeakNormOptions opt = parse_weak_options(config, 1);
    if (!config.contains("cone")) {
      opt.cone.boundary_only = true;
      opt.cone.ratio = 1.2;
      opt.cone.refine_steps = 20;
    }
    const auto ops = parse_operators(config);
    std::vector<std::vector<WeakNormResult>> res(count);
    std::vector<std::string> norms(count);
    std::vector<double> totals(count);
    parallel_for(count, threads, [&](std::size_t i) {
      std::mt19937_64 rng(stream_seed(seed, i));
      const SimpleOpMeasure mu = random_simple_measure(rng, spec);
      const SchattenIndex norm = item_norm(rng);
      norms[i] = norm.to_string();
      totals[i] = total_variation(mu, Interval::real_line(), norm);
      for (auto op : ops) res[i].push_back(weak_norm_audit(mu, norm, op, grid, opt));
    });
    csv << "item,norm,total_variation,operator,quasinorm,ratio,constant,minimal_feasible_C_X,pass\n";
    Json worst = Json::object();
    for (std::size_t i = 0; i < count; ++i)
      for (const auto& r : res[i]) {
        const double ratio = r.reference > 0.0 ? r.quasinorm / r.reference : 0.0;
        csv << i << ',' << norms[i] << ',' << format_double(totals[i]) << ',' << to_string(r.op) << ','
            << format_double(r.quasinorm) << ',' << format_double(ratio) << ',' << format_double(r.constant) << ','
            << (r.minimal_cx ? format_double(*r.minimal_cx) : std::string("inf")) << ',' << (r.pass ? 1 : 0) << '\n';
        auto& w = worst[to_string(r.op)];
        if (w.is_null()) w = {{"max_ratio", 0.0}, {"minimal_feasible_C_X", 0.0}, {"constant", r.constant}};
        w["max_ratio"] = std::max(w["max_ratio"].get<double>(), ratio);
        const double mc = r.minimal_cx ? *r.minimal_cx : std::numeric_limits<double>::infinity();
        w["minimal_feasible_C_X"] = number_or_null(std::max(w["minimal_feasible_C_X"].is_null()
                                                                ? std::numeric_limits<double>::infinity()
                                                                : w["minimal_feasible_C_X"].get<double>(),
                                                            mc));
        all = all && r.pass;
      }
    summary["operators"] = std::move(worst);
    summary["C_X"] = opt.c_x;
    summary["tolerances"] = {{"weak_norm", "exact comparison, no slack"}};
  } else if (kind == "cz") {
    const SchattenIndex fixed = parse_norm(config, "cz_norm", "op");
    const auto factors = get_or<std::vector<double>>(config, "level_factors", {0.25, 1.0, 4.0, 16.0, 64.0});
    const VerifyOptions vopt = parse_verify(config.contains("verify") ? config["verify"] : Json());
    std::vector<std::vector<CZReport>> reps(count);
    std::vector<std::vector<double>> levels(count);
    parallel_for(count, threads, [&](std::size_t i) {
      std::mt19937_64 rng(stream_seed(seed, i));
      const SimpleOpMeasure mu = random_simple_measure(rng, spec);
      const SchattenIndex norm = norm_name == "mixed" ? random_norm(rng) : fixed;
      const double total = total_variation(mu, Interval::real_line(), norm);
      for (double f : factors) {
        levels[i].push_back(f * total);
        reps[i].push_back(verify_decomposition(mu, decompose(mu, f * total, norm), vopt));
      }
    });
    csv << "item,s,intervals_checked,integral,integral_limit,failed_checks,pass\n";
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t l = 0; l < reps[i].size(); ++l) {
        const CZReport& r = reps[i][l];
        std::string failed;
        for (const auto& c : r.checks)
          if (!c.pass) failed += (failed.empty() ? "" : ";") + c.name;
        csv << i << ',' << format_double(levels[i][l]) << ',' << r.checks.size() << ',' << format_double(r.integral)
            << ',' << format_double(r.integral_limit) << ',' << failed << ',' << (r.all_pass() ? 1 : 0) << '\n';
        all = all && r.all_pass();
      }
    summary["tolerances"] = verify_tolerances(vopt);
  } else if (kind == "resolvent") {
    const int n_max = get_or(config, "n_max", 12);
    const int z_count = get_or(config, "z_count", 10);
    if (n_max < 1 || z_count < 1) throw ConfigError("n_max and z_count must be positive");
    std::vector<std::vector<ResolventResiduals>> res(count);
    std::vector<std::vector<Complex>> zs(count);
    std::vector<int> singular(count, 0);
    parallel_for(count, threads, [&](std::size_t i) {
      std::mt19937_64 rng(stream_seed(seed, i));
      std::uniform_int_distribution<int> dim(1, n_max);
      const int n = dim(rng);
      std::uniform_int_distribution<int> kd(1, n);
      const ScatteringModel model = random_model(rng, n, kd(rng));
      std::uniform_real_distribution<double> re(-3.0, 3.0), lim(-2.0, 0.0);
      for (int t = 0; t < z_count; ++t) {
        const double y = std::pow(10.0, lim(rng));
        const Complex z(re(rng), (t % 2 ? -y : y));
        try {
          res[i].push_back(resolvent_identity_residuals(model, z));
          zs[i].push_back(z);
        } catch (const SingularSystem&) {
          ++singular[i];
        }
      }
    });
    csv << "item,re_z,im_z,r1,r2,tolerance,pass\n";
    int singular_total = 0;
    for (std::size_t i = 0; i < count; ++i) {
      singular_total += singular[i];
      for (std::size_t t = 0; t < res[i].size(); ++t) {
        const auto& r = res[i][t];
        csv << i << ',' << format_double(zs[i][t].real()) << ',' << format_double(zs[i][t].imag()) << ','
            << format_double(r.r1) << ',' << format_double(r.r2) << ',' << format_double(r.tolerance) << ','
            << (r.pass() ? 1 : 0) << '\n';
        all = all && r.pass();
      }
    }
    summary["singular_systems"] = singular_total;
    summary["tolerances"] = {{"resolvent_rel", kResidualTol}};
  } else {
    throw ConfigError("unknown sweep kind '" + kind + "' (audit, cz, resolvent)");
  }

  write_text_file(out_path(out_dir, "sweep.csv").string(), csv.str());
  summary["pass"] = all;
  write_json(out_dir, "summary.json", summary);
  return all ? kExitPass : kExitViolation;
}

int run_command(const CliOptions& options) {
  try {
    Json config = read_json_file(options.config_path);
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    if (options.seed) config["seed"] = *options.seed;
    if (options.threads) config["threads"] = *options.threads;
    if (config.contains("command") && config["command"].get<std::string>() != options.command)
      throw ConfigError("config is for command '" + config["command"].get<std::string>() + "'");
    std::filesystem::create_directories(options.out_dir);
    if (options.command == "cz") return run_cz(config, options.out_dir);
    if (options.command == "weaknorm") return run_weaknorm(config, options.out_dir);
    if (options.command == "scatter") return run_scatter(config, options.out_dir);
    if (options.command == "sweep") return run_sweep(config, options.out_dir);
    throw ConfigError("unknown command '" + options.command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace oplab
