#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bosonlab/bridge.hpp"
#include "bosonlab/exact.hpp"

namespace bosonlab::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"magic",      "crescent-audit", "bounds", "exact", "isometry",
                                              "intertwine", "h2-audit",       "trial",  "scaling", "hb"};
  return names;
}

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}
inline std::string num(long x) { return std::to_string(x); }
inline std::string num(std::size_t x) { return std::to_string(x); }

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw std::logic_error("Table: row width does not match header");
    rows_.push_back(std::move(row));
  }
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  void write(std::ostream& out) const {
    write_line(out, header_);
    for (const auto& r : rows_) write_line(out, r);
  }

 private:
  static void write_line(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      const auto& c = cells[i];
      if (c.find_first_of(",\"\n") == std::string::npos) {
        out << c;
      } else {
        out << '"';
        for (char ch : c) out << (ch == '"' ? "\"\"" : std::string(1, ch));
        out << '"';
      }
    }
    out << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Failure {
  std::string invariant;
  std::string detail;
  long row = -1;
  json values = json::object();
};

inline json to_json(const Failure& f) {
  json j;
  j["invariant"] = f.invariant;
  j["detail"] = f.detail;
  if (f.row >= 0) j["row"] = f.row;
  j["values"] = f.values;
  return j;
}

struct RunResult {
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<Failure> failures;
  json summary = json::object();
  std::vector<std::string> warnings;
  std::vector<double> row_ms;
};

struct Settings {
  json raw = json::object();
  fs::path base_dir = ".";
  int d = 2;
  double alpha = 0.0;
  std::vector<long> radii;
  long max_radius_sq = 5;
  Potential potential;
  std::string potential_path;
  long window_radius_sq = 1;
  std::size_t window_degree = 2;
  long k_radius_sq = 36;
  long cutoff_radius_sq = 4;
  std::optional<double> K;
  EigenOptions eigen;
  bool crosscheck = true;
  bool exact_in_scaling = true;
  double enumeration_budget = 5e6;
  int random_states = 20;
  unsigned threads = 1;
  std::uint64_t seed = 1;
  std::optional<std::pair<double, double>> expect_slope;  ///< (target, tolerance)
  fs::path out;

  TruncationWindow window(std::size_t degree) const { return TruncationWindow::ball(d, window_radius_sq, degree); }
  TruncationWindow window() const { return window(window_degree); }
  std::vector<GasConfig> configs() const {
    std::vector<GasConfig> out;
    for (long r : radii) out.emplace_back(d, r, alpha);
    return out;
  }
};

namespace detail {

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "experiment", "d",           "alpha",        "radii_sq",      "particles",       "radius_sq_range",
      "max_radius_sq", "potential", "window",      "k_radius_sq",   "cutoff_radius_sq", "K",
      "eigensolver", "crosscheck", "exact",        "enumeration_budget", "random_states", "threads",
      "seed",        "expect_slope", "out"};
  return keys;
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Applies `key=value` overrides; value is parsed as JSON and falls back to a string.
inline void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline Settings parse_settings(const json& cfg, const fs::path& base_dir) {
  using detail::get;
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : cfg.items()) {
    if (!detail::known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  Settings s;
  s.raw = cfg;
  s.base_dir = base_dir;
  s.d = get<int>(cfg, "d", 2);
  if (s.d < 2 || s.d > 4) throw ConfigError("d must be in [2, 4]");
  s.alpha = get<double>(cfg, "alpha", 0.0);
  s.max_radius_sq = get<long>(cfg, "max_radius_sq", 5);

  std::vector<std::string> bad;
  if (cfg.contains("radii_sq")) {
    for (long r : get<std::vector<long>>(cfg, "radii_sq", {})) {
      if (r < 0 || !shell_occupied(s.d, r)) bad.push_back("radius_sq " + std::to_string(r) + " is not an occupied shell");
      else s.radii.push_back(r);
    }
  }
  if (cfg.contains("particles")) {
    for (long n : get<std::vector<long>>(cfg, "particles", {})) {
      try {
        s.radii.push_back(GasConfig::from_particle_number(s.d, static_cast<std::size_t>(n), s.alpha).fermi_radius_sq());
      } catch (const std::invalid_argument&) {
        bad.push_back("N = " + std::to_string(n) + " is not a magic number");
      }
    }
  }
  if (cfg.contains("radius_sq_range")) {
    const auto range = get<std::vector<long>>(cfg, "radius_sq_range", {});
    if (range.size() != 2) throw ConfigError("radius_sq_range must be [min, max]");
    for (const auto& c : magic_configs(s.d, range[0], range[1], s.alpha)) s.radii.push_back(c.fermi_radius_sq());
  }
  if (!bad.empty()) {
    std::string msg = "invalid gas sizes:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
  std::sort(s.radii.begin(), s.radii.end());
  s.radii.erase(std::unique(s.radii.begin(), s.radii.end()), s.radii.end());

  const std::string pot = get<std::string>(cfg, "potential", "zero");
  if (pot != "zero") {
    fs::path p = pot;
    if (p.is_relative()) p = base_dir / p;
    s.potential_path = p.string();
    s.potential = load_potential(s.potential_path);
    if (s.potential.dim() != s.d) throw ConfigError("potential dimension does not match d");
  }

  const json win = cfg.value("window", json::object());
  s.window_radius_sq = get<long>(win, "radius_sq", 1);
  s.window_degree = get<std::size_t>(win, "max_degree", 2);
  if (s.window_radius_sq < 1) throw ConfigError("window.radius_sq must be >= 1");
  s.k_radius_sq = get<long>(cfg, "k_radius_sq", 36);
  s.cutoff_radius_sq = get<long>(cfg, "cutoff_radius_sq", 4);
  if (cfg.contains("K") && !cfg["K"].is_null()) s.K = get<double>(cfg, "K", 0.0);

  const json eig = cfg.value("eigensolver", json::object());
  s.eigen.tolerance = get<double>(eig, "tolerance", s.eigen.tolerance);
  s.eigen.max_restarts = get<int>(eig, "max_restarts", s.eigen.max_restarts);
  s.eigen.krylov_dim = get<int>(eig, "krylov_dim", s.eigen.krylov_dim);
  s.eigen.keep = get<int>(eig, "keep", s.eigen.keep);
  s.eigen.dense_below = get<std::size_t>(eig, "dense_below", s.eigen.dense_below);
  s.eigen.dim_limit = get<std::size_t>(eig, "dim_limit", s.eigen.dim_limit);
  s.eigen.force_iterative = get<bool>(eig, "force_iterative", false);

  s.crosscheck = get<bool>(cfg, "crosscheck", true);
  s.exact_in_scaling = get<bool>(cfg, "exact", true);
  s.enumeration_budget = get<double>(cfg, "enumeration_budget", 5e6);
  s.random_states = get<int>(cfg, "random_states", 20);
  s.threads = get<unsigned>(cfg, "threads", 1u);
  s.seed = get<std::uint64_t>(cfg, "seed", 1u);
  s.eigen.seed = s.seed;
  if (cfg.contains("expect_slope")) {
    const json e = cfg["expect_slope"];
    s.expect_slope = std::pair{get<double>(e, "target", -1.0), get<double>(e, "tolerance", 0.3)};
  }
  if (cfg.contains("out")) {
    fs::path o = get<std::string>(cfg, "out", "");
    s.out = o.is_relative() ? base_dir / o : o;
  }
  return s;
}

namespace detail {

struct RowOut {
  std::vector<std::vector<std::string>> lines;
  std::vector<Failure> failures;
  json extra = json::object();
  double ms = 0.0;
};

/// Evaluates rows on the worker pool and collects them in row order.
template <class Fn>
std::vector<RowOut> run_rows(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<RowOut> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn(i, out[i]);
    out[i].ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  });
  return out;
}

inline void collect(RunResult& r, Table& t, std::vector<RowOut>& rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (auto& l : rows[i].lines) t.add(std::move(l));
    for (auto& f : rows[i].failures) {
      if (f.row < 0) f.row = static_cast<long>(i);
      r.failures.push_back(std::move(f));
    }
    r.row_ms.push_back(rows[i].ms);
  }
}

inline bool leq(double a, double b, double scale) { return a <= b + 1e-9 * std::max(1.0, std::abs(scale)); }

inline std::string mono_label(const BosonMonomial& m, int dim) {
  if (m.modes.empty()) return "vacuum";
  std::string s;
  for (auto k : m.modes) s += "e" + Momentum::from_key(k, dim).str();
  return s;
}

inline void require_configs(const Settings& s) {
  if (s.radii.empty()) throw ConfigError("no gas sizes given (radii_sq, particles or radius_sq_range)");
}

inline json fit_json(const LogLogFit& f) {
  return json{{"slope", f.slope}, {"intercept", f.intercept}, {"rms_residual", f.rms_residual}};
}

inline void check_slope(const Settings& s, RunResult& r, const std::string& what, const LogLogFit& fit) {
  if (!s.expect_slope) return;
  const auto [target, tol] = *s.expect_slope;
  if (std::abs(fit.slope - target) > tol) {
    r.failures.push_back({"decay_slope", what + " slope " + num(fit.slope) + " outside " + num(target) + " ± " + num(tol),
                          -1, json{{"slope", fit.slope}, {"target", target}, {"tolerance", tol}}});
  }
}

inline std::size_t count_modes(int dim, long r2) { return lattice_count(dim, r2); }

}  // namespace detail

inline RunResult run_magic(const Settings& s) {
  RunResult r;
  Table t({"radius_sq", "N"});
  for (const auto& mn : magic_numbers(s.d, s.max_radius_sq)) t.add({num(mn.radius_sq), num(mn.particles)});
  r.summary["count"] = t.rows().size();
  r.tables.emplace_back("magic.csv", std::move(t));
  return r;
}

inline RunResult run_crescent_audit(const Settings& s) {
  detail::require_configs(s);
  RunResult r;
  const auto rep = audit_crescent_bounds(s.configs(), nonzero_momenta(s.d, s.k_radius_sq));
  Table t({"radius_sq", "N", "k", "crescent_size", "ratio"});
  for (const auto& row : rep.rows) {
    t.add({num(row.radius_sq), num(row.particles), row.k.str(), num(row.size), num(row.ratio)});
  }
  r.tables.emplace_back("crescent_audit.csv", std::move(t));
  auto witness = [](const CrescentAuditRow& w) {
    return json{{"radius_sq", w.radius_sq}, {"k", w.k.str()}, {"ratio", w.ratio}};
  };
  r.summary = json{{"c1", rep.c1},
                   {"c2", rep.c2},
                   {"c3_radius_sq", rep.smallest_radius_sq},
                   {"min_witness", witness(rep.min_witness)},
                   {"max_witness", witness(rep.max_witness)},
                   {"union_identity", rep.union_identity_holds},
                   {"reflection_symmetric", rep.reflection_symmetric},
                   {"ok", rep.ok}};
  if (!rep.ok) r.failures.push_back({"crescent_ratio_window", rep.failure, -1, r.summary});
  return r;
}

inline RunResult run_bounds(const Settings& s) {
  detail::require_configs(s);
  RunResult r;
  Table t({"radius_sq", "N", "alpha", "lower", "upper", "gap", "gap_over_scale"});
  const auto cfgs = s.configs();
  auto rows = detail::run_rows(cfgs.size(), s.threads, [&](std::size_t i, detail::RowOut& o) {
    const auto& cfg = cfgs[i];
    const auto tb = trivial_bounds(cfg, s.potential);
    const double gap = tb.upper - tb.lower;
    o.lines.push_back({num(cfg.fermi_radius_sq()), num(cfg.particle_number()), num(cfg.alpha()), num(tb.lower),
                       num(tb.upper), num(gap), num(gap / cfg.correction_scale())});
    if (gap < 0) o.failures.push_back({"trivial_bounds_order", "upper < lower", -1, json{{"gap", gap}}});
  });
  detail::collect(r, t, rows);
  r.tables.emplace_back("bounds.csv", std::move(t));
  return r;
}

inline RunResult run_exact(const Settings& s) {
  detail::require_configs(s);
  RunResult r;
  Table t({"radius_sq", "N", "cutoff_radius_sq", "status", "dimension", "method", "energy", "residual", "lower",
           "upper_psi0", "crosscheck_energy", "crosscheck_diff"});
  const auto cfgs = s.configs();
  auto rows = detail::run_rows(cfgs.size(), s.threads, [&](std::size_t i, detail::RowOut& o) {
    const auto& cfg = cfgs[i];
    const FermiSea sea(cfg);
    const auto tb = trivial_bounds(cfg, s.potential);
    const Sector sector{cfg.particle_number(), Momentum::zero(s.d), s.cutoff_radius_sq};
    std::vector<std::string> line{num(cfg.fermi_radius_sq()), num(cfg.particle_number()), num(s.cutoff_radius_sq)};
    try {
      const auto g = ground_state(sea, ops::Hamiltonian{s.potential}, sector, s.eigen);
      std::string cross_e, cross_d;
      if (s.crosscheck && g.dimension < s.eigen.dense_below) {
        EigenOptions alt = s.eigen;
        alt.force_iterative = g.method == "dense";
        const auto h = ground_state(sea, ops::Hamiltonian{s.potential}, sector, alt);
        cross_e = num(h.energy);
        cross_d = num(std::abs(h.energy - g.energy));
        if (std::abs(h.energy - g.energy) > 1e-8) {
          o.failures.push_back({"solver_agreement", "dense and iterative energies differ", -1,
                                json{{"energy", g.energy}, {"other", h.energy}}});
        }
      }
      line.insert(line.end(), {"ok", num(g.dimension), g.method, num(g.energy), num(g.residual), num(tb.lower),
                               num(tb.upper), cross_e, cross_d});
      if (!detail::leq(tb.lower, g.energy, g.energy) || !detail::leq(g.energy, tb.upper, g.energy)) {
        o.failures.push_back({"energy_sandwich", "lower <= exact <= upper_psi0 violated", -1,
                              json{{"lower", tb.lower}, {"energy", g.energy}, {"upper", tb.upper}}});
      }
    } catch (const DimensionLimitExceeded& e) {
      line.insert(line.end(), {"dimension_limit", "", "", "", "", num(tb.lower), num(tb.upper), "", ""});
    } catch (const ConvergenceFailure& e) {
      line.insert(line.end(), {"no_convergence", "", "", "", "", num(tb.lower), num(tb.upper), "", ""});
      o.failures.push_back({"eigensolver_convergence", e.what(), -1, json::object()});
    }
    o.lines.push_back(std::move(line));
  });
  detail::collect(r, t, rows);
  r.tables.emplace_back("exact.csv", std::move(t));
  return r;
}

inline RunResult run_isometry(const Settings& s) {
  detail::require_configs(s);
  RunResult r;
  const auto w = s.window();
  std::vector<std::string> header{"radius_sq", "k_F", "N", "max_abs_eps"};
  for (std::size_t m = 0; m <= w.max_degree(); ++m) header.push_back("max_eps_degree_" + std::to_string(m));
  header.insert(header.end(), {"operator_norm_bound", "fitted_constant"});
  Table t(header);
  const auto cfgs = s.configs();
  std::vector<double> kf(cfgs.size()), eps(cfgs.size());
  auto rows = detail::run_rows(cfgs.size(), s.threads, [&](std::size_t i, detail::RowOut& o) {
    const auto& cfg = cfgs[i];
    const FermiSea sea(cfg);
    PhiMap phi(sea);
    const auto rep = isometry_audit(w, phi);
    kf[i] = cfg.fermi_momentum();
    eps[i] = rep.max_abs_eps;
    std::vector<std::string> line{num(cfg.fermi_radius_sq()), num(cfg.fermi_momentum()), num(cfg.particle_number()),
                                  num(rep.max_abs_eps)};
    for (double e : rep.max_eps_by_degree) line.push_back(num(e));
    line.insert(line.end(), {num(rep.operator_norm_bound), num(rep.fitted_constant)});
    o.lines.push_back(std::move(line));
    if (!rep.hermitian || rep.max_abs_imag > 1e-12) {
      o.failures.push_back({"isometry_hermitian", "deviation matrix not real symmetric", -1, json::object()});
    }
    if (rep.low_degree_max > 1e-12) {
      o.failures.push_back({"isometry_low_degree", "nonzero deviation on degrees <= 1", -1,
                            json{{"max", rep.low_degree_max}}});
    }
  });
  detail::collect(r, t, rows);
  r.tables.emplace_back("isometry.csv", std::move(t));
  if (cfgs.size() >= 2 && *std::min_element(eps.begin(), eps.end()) > 0) {
    const auto fit = fit_loglog(kf, eps);
    r.summary["max_abs_eps_fit"] = detail::fit_json(fit);
    detail::check_slope(s, r, "max |eps|", fit);
  }
  return r;
}

inline RunResult run_intertwine(const Settings& s) {
  detail::require_configs(s);
  RunResult r;
  const auto w = s.window();
  Table t({"radius_sq", "k_F", "N", "max_annihilation_residual", "worst_k", "max_creation_residual"});
  const auto cfgs = s.configs();
  std::vector<double> kf(cfgs.size()), res(cfgs.size());
  auto rows = detail::run_rows(cfgs.size(), s.threads, [&](std::size_t i, detail::RowOut& o) {
    const auto& cfg = cfgs[i];
    const FermiSea sea(cfg);
    PhiMap phi(sea);
    double ann = 0, cre = 0;
    Momentum worst = w.modes().front();
    for (const auto& k : w.modes()) {
      const auto rep = intertwine_residual(k, w, phi);
      if (rep.annihilation > ann) {
        ann = rep.annihilation;
        worst = k;
      }
      cre = std::max(cre, rep.creation);
    }
    kf[i] = cfg.fermi_momentum();
    res[i] = ann;
    o.lines.push_back({num(cfg.fermi_radius_sq()), num(cfg.fermi_momentum()), num(cfg.particle_number()), num(ann),
                       worst.str(), num(cre)});
    if (cre > 1e-10) {
      o.failures.push_back({"creation_intertwining", "phi_k^* Phi != Phi e_k^*", -1, json{{"residual", cre}}});
    }
  });
  detail::collect(r, t, rows);
  r.tables.emplace_back("intertwine.csv", std::move(t));
  if (cfgs.size() >= 2 && *std::min_element(res.begin(), res.end()) > 0) {
    const auto fit = fit_loglog(kf, res);
    r.summary["annihilation_residual_fit"] = detail::fit_json(fit);
    detail::check_slope(s, r, "intertwining residual", fit);
  }
  return r;
}

inline RunResult run_h2_audit(const Settings& s) {
  detail::require_configs(s);
  RunResult r;
  const auto w = s.window();
  double kmax = 0;
  for (const auto& k : w.modes()) kmax = std::max(kmax, k.physical_norm());
  const double K = s.K.value_or(std::max(kTwoPi, kmax));
  Table t({"radius_sq", "N", "K", "state", "status", "value", "bound", "kinetic"});
  const auto cfgs = s.configs();
  const auto monos = w.monomials();
  std::size_t checked = 0;
  auto rows = detail::run_rows(cfgs.size(), s.threads, [&](std::size_t i, detail::RowOut& o) {
    const auto& cfg = cfgs[i];
    const FermiSea sea(cfg);
    const std::vector<std::string> head{num(cfg.fermi_radius_sq()), num(cfg.particle_number()), num(K)};
    try {
      check_h2_window(cfg, w, K);
    } catch (const std::invalid_argument& e) {
      auto line = head;
      line.insert(line.end(), {"", "skipped: K outside [2pi, k_F]", "", "", ""});
      o.lines.push_back(std::move(line));
      return;
    }
    PhiMap phi(sea);
    std::mt19937_64 rng(s.seed * 0x9e3779b97f4a7c15ULL + i);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<std::size_t> pick(0, monos.size() - 1);
    auto audit = [&](const std::string& label, const FermionVector& psi) {
      auto line = head;
      if (psi.empty()) {
        line.insert(line.end(), {label, "zero_image", "", "", ""});
        o.lines.push_back(std::move(line));
        return;
      }
      const auto a = h2_expectation_audit(psi, sea, s.potential, K, w);
      line.insert(line.end(), {label, a.ok ? "ok" : "violated", num(a.value), num(a.bound), num(a.kinetic)});
      o.lines.push_back(std::move(line));
      o.extra["checked"] = o.extra.value("checked", 0) + 1;
      if (!a.ok) {
        o.failures.push_back({"h2_bound", "|<H2>| exceeds the bound for state " + label, -1,
                              json{{"value", a.value}, {"bound", a.bound}}});
      }
    };
    for (const auto& m : monos) audit(detail::mono_label(m, s.d), phi.image(m));
    for (int j = 0; j < s.random_states; ++j) {
      std::vector<BosonVector::Term> terms;
      for (int q = 0; q < 4; ++q) terms.emplace_back(monos[pick(rng)], Complex(gauss(rng), gauss(rng)));
      audit("random_" + std::to_string(j), phi.apply(BosonVector::from_terms(std::move(terms))));
    }
  });
  for (const auto& row : rows) checked += row.extra.value("checked", 0);
  detail::collect(r, t, rows);
  r.tables.emplace_back("h2_audit.csv", std::move(t));
  r.summary["K"] = K;
  r.summary["states_checked"] = checked;
  return r;
}

inline RunResult run_trial(const Settings& s) {
  detail::require_configs(s);
  RunResult r;
  const auto w = s.window();
  Table t({"radius_sq", "N", "f", "E_N0", "raw", "h1", "h2", "bosonic_prediction", "discrepancy",
           "discrepancy_over_scale", "norm_ratio"});
  const auto cfgs = s.configs();
  auto rows = detail::run_rows(cfgs.size(), s.threads, [&](std::size_t i, detail::RowOut& o) {
    const auto& cfg = cfgs[i];
    const FermiSea sea(cfg);
    PhiMap phi(sea);
    std::vector<std::pair<std::string, BosonVector>> trials{{"vacuum", vacuum()}};
    if (!s.potential.is_zero()) {
      trials.emplace_back("hb_minimizer", hb_min_truncated(hb_weights(cfg, s.potential), w).argmin);
    }
    for (const auto& [label, f] : trials) {
      const auto te = trial_energy(f, phi, s.potential);
      o.lines.push_back({num(cfg.fermi_radius_sq()), num(cfg.particle_number()), label, num(te.e0), num(te.raw),
                         num(te.h1), num(te.h2), num(te.bosonic_prediction), num(te.discrepancy),
                         num(te.discrepancy / cfg.correction_scale()), num(te.norm_ratio)});
      const json vals{{"f", label}, {"raw", te.raw}, {"E_N0", te.e0}, {"h1", te.h1}, {"h2", te.h2}};
      if (std::abs(te.raw - (te.e0 + te.h1 + te.h2)) > 1e-9 * std::max(1.0, std::abs(te.raw))) {
        o.failures.push_back({"energy_decomposition", "raw != E_N0 + H1 + H2", -1, vals});
      }
      if (!detail::leq(te.e0, te.raw, te.raw)) {
        o.failures.push_back({"variational_lower", "raw energy below E_N0", -1, vals});
      }
      if (label == "vacuum" && std::abs(te.discrepancy) > 1e-9 * std::max(1.0, std::abs(te.raw))) {
        o.failures.push_back({"vacuum_consistency", "bosonic prediction differs at f = vacuum", -1, vals});
      }
    }
  });
  detail::collect(r, t, rows);
  r.tables.emplace_back("trial.csv", std::move(t));
  return r;
}

/// Largest |p|^2 among occupied modes of the given vectors.
inline long occupied_reach(const FermiSea& sea, const std::vector<const FermionVector*>& vs) {
  long reach = sea.config().fermi_radius_sq();
  for (const auto* v : vs) {
    for (const auto& [det, amp] : v->terms()) {
      for (auto k : det.particles) reach = std::max(reach, static_cast<long>(norm2_of(k)));
    }
  }
  return reach;
}

inline RunResult run_scaling(const Settings& s) {
  detail::require_configs(s);
  RunResult r;
  const auto w = s.window();
  Table t({"radius_sq", "k_F", "N", "E_N0", "upper_psi0", "upper_subspace", "upper_subspace_zero_sector",
           "exact_energy", "exact_status", "ratio_psi0", "ratio_subspace", "ratio_exact"});
  const auto cfgs = s.configs();
  std::vector<double> ratio_psi(cfgs.size()), ratio_sub(cfgs.size());
  auto rows = detail::run_rows(cfgs.size(), s.threads, [&](std::size_t i, detail::RowOut& o) {
    const auto& cfg = cfgs[i];
    const FermiSea sea(cfg);
    PhiMap phi(sea);
    const auto tb = trivial_bounds(cfg, s.potential);
    const auto sub = subspace_upper_bound(w, phi, s.potential);
    const double scale = cfg.correction_scale();
    const double zero = sub.zero_sector.value_or(std::numeric_limits<double>::quiet_NaN());
    ratio_psi[i] = (tb.upper - tb.lower) / scale;
    ratio_sub[i] = (sub.value - tb.lower) / scale;

    std::string exact_e, exact_status = "skipped", exact_ratio;
    if (s.exact_in_scaling) {
      std::vector<const FermionVector*> zero_images;
      for (const auto& m : w.monomials()) {
        if (total_mode_sum(m, s.d).is_zero()) zero_images.push_back(&phi.image(m));
      }
      const long cutoff = occupied_reach(sea, zero_images);
      const double subsets =
          static_cast<double>(binomial(detail::count_modes(s.d, cutoff), cfg.particle_number()));
      if (subsets > s.enumeration_budget) {
        exact_status = "infeasible";
      } else {
        try {
          const auto g = ground_state(sea, ops::Hamiltonian{s.potential},
                                      Sector{cfg.particle_number(), Momentum::zero(s.d), cutoff}, s.eigen);
          exact_e = num(g.energy);
          exact_ratio = num((g.energy - tb.lower) / scale);
          exact_status = "ok";
          if (!detail::leq(tb.lower, g.energy, g.energy) || !detail::leq(g.energy, zero, g.energy)) {
            o.failures.push_back({"exact_sandwich", "E_N0 <= exact <= zero-sector subspace bound violated", -1,
                                  json{{"E_N0", tb.lower}, {"exact", g.energy}, {"subspace_zero", zero}}});
          }
        } catch (const DimensionLimitExceeded&) {
          exact_status = "dimension_limit";
        } catch (const ConvergenceFailure& e) {
          exact_status = "no_convergence";
          o.failures.push_back({"eigensolver_convergence", e.what(), -1, json::object()});
        }
      }
    }
    o.lines.push_back({num(cfg.fermi_radius_sq()), num(cfg.fermi_momentum()), num(cfg.particle_number()),
                       num(tb.lower), num(tb.upper), num(sub.value), num(zero), exact_e, exact_status,
                       num(ratio_psi[i]), num(ratio_sub[i]), exact_ratio});
    if (!detail::leq(tb.lower, sub.value, sub.value) || !detail::leq(sub.value, tb.upper, sub.value)) {
      o.failures.push_back({"subspace_sandwich", "E_N0 <= subspace bound <= upper_psi0 violated", -1,
                            json{{"E_N0", tb.lower}, {"subspace", sub.value}, {"upper_psi0", tb.upper}}});
    }
    o.extra["dropped"] = sub.dropped;
  });
  std::size_t dropped = 0;
  for (const auto& row : rows) dropped += row.extra.value("dropped", std::size_t{0});
  detail::collect(r, t, rows);
  r.tables.emplace_back("scaling.csv", std::move(t));

  long below_from = -1;
  for (std::size_t i = cfgs.size(); i-- > 0;) {
    if (ratio_sub[i] < ratio_psi[i]) below_from = static_cast<long>(i);
    else break;
  }
  bool tail_decreasing = cfgs.size() >= 3;
  for (std::size_t i = cfgs.size() >= 3 ? cfgs.size() - 2 : cfgs.size(); i < cfgs.size(); ++i) {
    tail_decreasing &= ratio_sub[i] < ratio_sub[i - 1];
  }
  r.summary["subspace_below_psi0_from_row"] = below_from;
  r.summary["subspace_ratio_decreasing_last_three"] = tail_decreasing;
  r.summary["gram_directions_dropped"] = dropped;
  if (s.alpha >= 1.0 - 2.0 / s.d) {
    r.summary["note"] = "alpha is not below 1 - 2/d; the correction scale is not the leading order";
  }
  return r;
}

inline RunResult run_hb(const Settings& s) {
  RunResult r;
  if (s.potential.is_zero()) throw ConfigError("hb experiment needs a nonzero potential");
  const BosonWeights tilde = hb_tilde_weights(s.potential);
  Table t({"max_degree", "dimension", "largest_block", "tilde_min"});
  double prev = std::numeric_limits<double>::infinity();
  double at_zero = 0;
  for (std::size_t m = 0; m <= s.window_degree; ++m) {
    const auto w = s.window(m);
    const auto res = hb_min_truncated(tilde, w);
    if (m == 0) at_zero = res.value;
    t.add({num(m), num(res.dimension), num(res.largest_block), num(res.value)});
    if (res.value > prev + 1e-12 * std::max(1.0, std::abs(prev))) {
      r.failures.push_back({"hb_monotone", "truncated minimum increased with the degree", static_cast<long>(m),
                            json{{"previous", prev}, {"value", res.value}}});
    }
    prev = res.value;
  }
  r.summary["tilde_min_at_zero"] = at_zero;
  r.summary["tilde_min_at_max_degree"] = prev;
  r.summary["relative_decrease"] = at_zero > 0 ? 1.0 - prev / at_zero : 0.0;
  r.tables.emplace_back("hb_minimum.csv", std::move(t));

  if (!s.radii.empty()) {
    const auto cfgs = s.configs();
    const auto audit = audit_crescent_bounds(cfgs, s.potential.nonzero_support());
    if (!audit.ok) {
      r.failures.push_back({"crescent_ratio_window", audit.failure, -1, json::object()});
    } else {
      const double c = domination_constant(audit.c2, cfgs);
      r.summary["domination_constant"] = c;
      Table d({"radius_sq", "N", "c", "scale", "min_eig_hb", "min_eig_gap", "status"});
      const auto w = s.window();
      auto rows = detail::run_rows(cfgs.size(), s.threads, [&](std::size_t i, detail::RowOut& o) {
        const auto rep = hb_domination_check(cfgs[i], s.potential, w, c);
        o.lines.push_back({num(cfgs[i].fermi_radius_sq()), num(cfgs[i].particle_number()), num(c), num(rep.scale),
                           num(rep.min_eig_hb), num(rep.min_eig_gap), rep.ok ? "ok" : "violated"});
        if (!rep.ok) {
          json wit = json::array();
          for (const auto& [m, a] : rep.witness.terms()) wit.push_back({detail::mono_label(m, s.d), a.real()});
          o.failures.push_back({"hb_domination", rep.failure, -1, json{{"witness", wit}}});
        }
      });
      detail::collect(r, d, rows);
      r.tables.emplace_back("hb_domination.csv", std::move(d));
    }
  }
  return r;
}

inline RunResult run_experiment(const std::string& name, const Settings& s) {
  if (name == "magic") return run_magic(s);
  if (name == "crescent-audit") return run_crescent_audit(s);
  if (name == "bounds") return run_bounds(s);
  if (name == "exact") return run_exact(s);
  if (name == "isometry") return run_isometry(s);
  if (name == "intertwine") return run_intertwine(s);
  if (name == "h2-audit") return run_h2_audit(s);
  if (name == "trial") return run_trial(s);
  if (name == "scaling") return run_scaling(s);
  if (name == "hb") return run_hb(s);
  throw ConfigError("unknown experiment '" + name + "'");
}

inline std::vector<std::string> settings_warnings(const std::string& name, const Settings& s) {
  std::vector<std::string> w;
  static const std::set<std::string> uses_alpha{"bounds", "exact", "h2-audit", "trial", "scaling", "hb"};
  if (uses_alpha.count(name) && s.alpha >= 1.0 - 2.0 / s.d) {
    w.push_back("alpha = " + num(s.alpha) + " >= 1 - 2/d = " + num(1.0 - 2.0 / s.d) +
                ": outside the strongly interacting regime");
  }
  return w;
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

inline void write_csvs(const fs::path& dir, const RunResult& r, json& manifest) {
  json files = json::array();
  for (const auto& [file, table] : r.tables) {
    std::ofstream out(dir / file);
    table.write(out);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    files.push_back(file);
  }
  manifest["outputs"] = files;
}

}  // namespace bosonlab::cli
