#include "bsv/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "bsv/dicke.hpp"
#include "bsv/fit.hpp"
#include "bsv/fullsim.hpp"
#include "bsv/observables.hpp"
#include "bsv/parallel.hpp"
#include "bsv/tc.hpp"

#ifndef BSV_DEFAULT_PRESET_DIR
#define BSV_DEFAULT_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;

namespace bsv {

namespace {

// ---------------------------------------------------------------- validation

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "required field is missing");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_number_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown field");
}

const std::map<std::string, std::set<std::string>>& model_series() {
  static const std::map<std::string, std::set<std::string>> m{
      {"TC",
       {"qfi_heralded", "qfi_unconditional", "qfi_exact_formula", "qfi_large_n", "prob_density",
        "fidelity_x0", "prob_weighted_qfi"}},
      {"Dicke",
       {"qfi_heralded", "qfi_unconditional", "qfi_large_n", "prob_density", "fidelity_x0", "fidelity_zcat"}},
      {"CatCompare", {"qfi_heralded", "prob_density", "prob_weighted_qfi"}},
      {"FullSim",
       {"qfi_heralded", "prob_density", "qfi_unconditional", "qfi_xfa", "xfa_relative_deviation",
        "norm_drift", "excitation_drift", "top_occupation", "max_qfi_density", "r_c", "scaled_peak_time"}},
  };
  return m;
}

const std::set<std::string> kScanAxes{"N", "r", "F_c", "q_tilde", "delta_q_tilde", "g", "alpha0"};

std::vector<double> parse_times(const json& t, const std::string& path) {
  only_keys(t, {"values", "start", "stop", "count", "step"}, path);
  if (t.contains("values")) {
    auto v = as_number_list(t["values"], path + ".values");
    if (v.empty()) fail(path + ".values", "must not be empty");
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1])) fail(path + ".values", "times must be strictly ascending");
    if (v.front() < 0.0) fail(path + ".values", "times must be non-negative");
    return v;
  }
  const double start = t.contains("start") ? as_number(t["start"], path + ".start") : 0.0;
  const double stop = as_number(require(t, "stop", path), path + ".stop");
  if (start < 0.0 || !(stop >= start)) fail(path, "need 0 <= start <= stop");
  int count = 0;
  if (t.contains("count")) {
    count = as_int(t["count"], path + ".count");
  } else if (t.contains("step")) {
    const double step = as_number(t["step"], path + ".step");
    if (!(step > 0.0)) fail(path + ".step", "must be positive");
    count = static_cast<int>(std::lround((stop - start) / step)) + 1;
  } else {
    fail(path, "give values, count or step");
  }
  if (count < 1) fail(path + ".count", "must be >= 1");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = count == 1 ? start : start + (stop - start) * i / (count - 1);
  return v;
}

// ---------------------------------------------------------------- formatting

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::string label_value(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

std::string iso_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

// ---------------------------------------------------------------- run model

struct Point {
  std::vector<double> axis_values;
  json params;
  json herald;
};

struct WignerSnapshot {
  double t = 0.0;
  SphereGrid grid;
};

struct PointResult {
  std::map<std::string, std::vector<double>> series;  // aligned with times
  std::map<std::string, std::vector<std::pair<double, double>>> rows;  // (t, value), for scan modes
  std::vector<WignerSnapshot> snapshots;
  std::vector<std::string> warnings;
  json extra;
};

double param_r(const json& p) {
  if (p.contains("r")) return p["r"].get<double>();
  return std::log(p["F_c"].get<double>() / p["g"].get<double>());
}

bool wants(const Scenario& s, const std::string& name) {
  return std::find(s.series.begin(), s.series.end(), name) != s.series.end();
}

int grid_points_for(const Scenario& s, double F_c, double t_max, SpinJ spin, double q_extent) {
  const json& n = s.numerics;
  const double cutoff = n.value("cutoff_sigmas", kDefaultCutoffSigmas);
  int pts = n.value("grid_points", kDefaultGridPoints);
  if (n.value("auto_grid", true)) pts = std::max(pts, suggest_grid_points(F_c, t_max, spin, q_extent, cutoff));
  return pts;
}

SphereGrid wigner_of(const MatterDensity& rho, const WignerRequest& w) {
  return spin_wigner(rho, SphereGrid::uniform(w.n_theta, w.n_phi));
}

PointResult run_xfa_point(const Scenario& s, const Point& pt) {
  PointResult res;
  const int N = pt.params["N"].get<int>();
  const double g = pt.params["g"].get<double>();
  const double r = param_r(pt.params);
  const double omega = pt.params.value("omega", 1.0);
  const double q_tilde = pt.herald.contains("q") ? pt.herald["q"].get<double>() / g : pt.herald.value("q_tilde", 0.0);
  const double dq_tilde = pt.herald.value("delta_q_tilde", 0.0);
  const int n_q = pt.herald.value("n_q", 0);
  const bool dicke = s.model == "Dicke";
  const SpinJ spin = SpinJ::from_particles(N);
  const DickeKet psi0 = DickeKet::ground(spin);
  TcParams tp;
  tp.N = N;
  tp.g = g;
  tp.r = r;
  tp.omega = omega;
  tp.validate();
  const double F_c = tp.F_c();
  const HeraldSpec herald = HeraldSpec::from_scaled(0.0, q_tilde, dq_tilde, g);

  const TcPropagator tc_prop;
  const DickePropagator dicke_prop(omega, s.numerics.value("dt_classical", 0.01));
  const ClassicalPropagator& prop = dicke ? static_cast<const ClassicalPropagator&>(dicke_prop)
                                          : static_cast<const ClassicalPropagator&>(tc_prop);
  const bool closed_form = !dicke && s.numerics.value("engine", std::string("xfa")) == "closed_form";
  if (closed_form && dq_tilde > 0.0) fail("scenario.numerics.engine", "closed_form supports ideal heralding only");
  if (closed_form && wants(s, "qfi_unconditional")) fail("scenario.numerics.engine", "closed_form has no unconditional state");

  const int pts = grid_points_for(s, F_c, s.times.back(), spin, std::abs(q_tilde) + 0.5 * dq_tilde);
  const FieldGrid grid = make_field_grid(F_c, pts, s.numerics.value("cutoff_sigmas", kDefaultCutoffSigmas));
  Ensemble ens;
  if (!closed_form) ens = Ensemble::build(prop, grid, psi0, s.times);

  const DickeKet x0 = DickeKet::basis_state(spin, Axis::X, 0);
  const DickeKet zcat = z_cat_reference(N);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    const double t = s.times[k];
    double qh = 0.0, prob = 0.0, fx = 0.0, fz = 0.0, pw = 0.0;
    if (dq_tilde == 0.0) {
      const HeraldedState h = closed_form ? tc_heralded_closed_form(tp, q_tilde, t, psi0)
                                          : heralded_vector(ens, grid, herald, k);
      prob = h.prob_density;
      if (prob > 0.0) {
        const DickeKet nk = h.ket.normalized();
        qh = qfi(nk).value;
        fx = fidelity(nk, x0);
        fz = fidelity(nk, zcat);
      }
      pw = qh * prob;
    } else {
      const BinnedHerald b = heralded_density_finite_resolution(ens, grid, herald, k, n_q);
      qh = qfi(b.rho).value;
      prob = b.bin_probability / dq_tilde;
      const CVector xz = basis_change(x0, Axis::Z).amps;
      const CVector cz = zcat.amps;
      fx = xz.dot(b.rho.rho * xz).real();
      fz = cz.dot(b.rho.rho * cz).real();
      pw = qh * b.bin_probability;
    }
    auto put = [&](const char* name, double v) {
      if (wants(s, name)) res.series[name].push_back(v);
    };
    put("qfi_heralded", qh / N);
    put("prob_density", prob);
    put("fidelity_x0", fx);
    put("fidelity_zcat", fz);
    put("prob_weighted_qfi", pw);
    if (wants(s, "qfi_unconditional")) res.series["qfi_unconditional"].push_back(qfi(unconditional_density(ens, grid, k)).value / N);
    put("qfi_exact_formula", dq_tilde == 0.0 ? tc_qfi_exact(tp, q_tilde, t) / N : std::nan(""));
    put("qfi_large_n", tc_qfi_large_n(tp, t) / N);
  }

  if (s.wigner) {
    const Ensemble snap = Ensemble::build(prop, grid, psi0, s.wigner->times);
    for (std::size_t k = 0; k < s.wigner->times.size(); ++k) {
      MatterDensity rho = dq_tilde == 0.0
                              ? MatterDensity::from_ket(heralded_vector(snap, grid, herald, k).ket.normalized())
                              : heralded_density_finite_resolution(snap, grid, herald, k, n_q).rho;
      res.snapshots.push_back({s.wigner->times[k], wigner_of(rho, *s.wigner)});
    }
  }
  if (dicke && !floquet_magnus_in_range(cdouble(F_c, 0.0), omega))
    res.warnings.push_back("F_c/omega above 0.3: the Floquet-Magnus picture is outside its range");
  return res;
}

PointResult run_cat_point(const Scenario& s, const Point& pt) {
  PointResult res;
  const int N = pt.params["N"].get<int>();
  const double g = pt.params["g"].get<double>();
  const double alpha0 = as_number(require(pt.params, "alpha0", "params"), "params.alpha0");
  const double q = pt.herald.value("q", 0.0);
  const SpinJ spin = SpinJ::from_particles(N);
  const DickeKet psi0 = DickeKet::ground(spin);
  const TcPropagator prop;
  for (double t : s.times) {
    const HeraldedState h = cat_heralded_vector(prop, alpha0, g, psi0, q, t);
    const double qv = h.prob_density > 0.0 ? qfi(h.ket.normalized()).value : 0.0;
    if (wants(s, "qfi_heralded")) res.series["qfi_heralded"].push_back(qv / N);
    if (wants(s, "prob_density")) res.series["prob_density"].push_back(h.prob_density);
    if (wants(s, "prob_weighted_qfi")) res.series["prob_weighted_qfi"].push_back(qv * h.prob_density);
  }
  return res;
}

FullSimParams fullsim_params(const json& p) {
  FullSimParams fp;
  fp.model = parse_coupling_model(p.value("coupling", std::string("TC")));
  fp.N = p["N"].get<int>();
  fp.g = p["g"].get<double>();
  fp.r = param_r(p);
  fp.omega = p.value("omega", 1.0);
  fp.delta = p.value("delta", fp.omega);
  fp.validate();
  return fp;
}

PointResult run_fullsim_point(const Scenario& s, const Point& pt) {
  PointResult res;
  const FullSimParams fp = fullsim_params(pt.params);
  const json& n = s.numerics;
  const double dt = as_number(require(n, "dt", "numerics"), "numerics.dt");
  const int n_max = as_int(require(n, "n_max", "numerics"), "numerics.n_max");
  const double q_tilde =
      pt.herald.contains("q") ? pt.herald["q"].get<double>() / fp.g : pt.herald.value("q_tilde", 0.0);
  const double spacing = s.times.size() > 1 ? s.times[1] - s.times[0] : dt;
  const int stride = std::max(1, static_cast<int>(std::lround(spacing / dt)));
  for (std::size_t k = 0; k < s.times.size(); ++k)
    if (std::abs(s.times[k] - s.times[0] - k * stride * dt) > 1e-9 * std::max(1.0, s.times[k]))
      fail("scenario.time", "FullSim needs a uniform time grid whose spacing is a multiple of numerics.dt");
  if (s.times.front() != 0.0) fail("scenario.time.start", "FullSim trajectories start at t = 0");

  TotalKet state = initial_state(fp, n_max, n.value("leakage_tol", kDefaultLeakageTolerance));
  SimConfig cfg;
  cfg.dt = dt;
  cfg.n_max = n_max;
  cfg.t_end = s.times.back();
  cfg.report_stride = stride;
  const double norm0 = total_norm_squared(state), exc0 = excitation_number(state);
  TcParams tp;
  tp.N = fp.N;
  tp.g = fp.g;
  tp.r = fp.r;
  const EvolveReport rep = evolve(state, fp, cfg, [&](const TotalKet& st) {
    auto put = [&](const char* name, double v) {
      if (wants(s, name)) res.series[name].push_back(v);
    };
    double qh = 0.0, prob = 0.0;
    if (wants(s, "qfi_heralded") || wants(s, "prob_density") || wants(s, "xfa_relative_deviation")) {
      const HeraldSpec h(-fp.omega * st.t, q_tilde * fp.g, 0.0, fp.g);
      const QuadratureHerald qh_state = herald_quadrature_exact(st, fp, h);
      prob = qh_state.prob_density * fp.g;
      if (qh_state.prob_density > 0.0)
        qh = qfi(to_rotating_frame(qh_state.ket, fp.omega, st.t).normalized()).value / fp.N;
    }
    const double xfa = tc_qfi_exact(tp, q_tilde, st.t) / fp.N;
    put("qfi_heralded", qh);
    put("prob_density", prob);
    put("qfi_xfa", xfa);
    put("xfa_relative_deviation", std::abs(qh - xfa) / xfa);
    if (wants(s, "qfi_unconditional")) res.series["qfi_unconditional"].push_back(qfi(partial_trace_matter(st, fp)).value / fp.N);
    put("norm_drift", std::abs(total_norm_squared(st) - norm0));
    put("excitation_drift", std::abs(excitation_number(st) - exc0));
    put("top_occupation", top_fock_occupation(st));
  });
  res.warnings = rep.warnings;
  res.extra = {{"steps", rep.steps}, {"max_norm_drift", rep.max_norm_drift}, {"max_top_occupation", rep.max_top_occupation}};
  return res;
}

// ---------------------------------------------------------------- presets

json merge_numerics(const json& preset, const json& own, const json& params) {
  json out = preset.value("numerics", json::object());
  if (preset.contains("fullsim_by_g") && params.contains("g") && !own.contains("dt") && !own.contains("n_max")) {
    for (const auto& row : preset["fullsim_by_g"])
      if (std::abs(row["g"].get<double>() - params["g"].get<double>()) < 1e-12) {
        out["dt"] = row["dt"];
        out["n_max"] = row["n_max"];
      }
  }
  for (auto it = own.begin(); it != own.end(); ++it) out[it.key()] = it.value();
  return out;
}

}  // namespace

// ---------------------------------------------------------------- public API

fs::path preset_directory() {
  if (const char* env = std::getenv("BSV_PRESET_DIR"); env && *env) return env;
  return BSV_DEFAULT_PRESET_DIR;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  const fs::path dir = preset_directory();
  if (!fs::is_directory(dir)) throw ConfigError("preset directory not found: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    const json doc = load_json_file(e.path());
    out.push_back({doc.value("name", e.path().stem().string()), doc.value("description", std::string()),
                   doc.value("long_running", false), e.path()});
  }
  std::sort(out.begin(), out.end(), [](const PresetInfo& a, const PresetInfo& b) { return a.name < b.name; });
  return out;
}

json load_preset(const std::string& name) {
  for (const auto& p : list_presets())
    if (p.name == name) return load_json_file(p.file);
  throw ConfigError("numerics.preset: unknown preset '" + name + "' in " + preset_directory().string());
}

Scenario parse_scenario(const json& doc, const std::optional<std::string>& preset_override) {
  const std::string root = "scenario";
  only_keys(doc, {"schema", "name", "model", "mode", "budget_seconds", "description", "params", "herald", "time",
                  "scan", "outputs", "numerics"},
            root);
  Scenario s;
  const int schema = as_int(require(doc, "schema", root), root + ".schema");
  if (schema != kScenarioSchemaVersion) fail(root + ".schema", "unsupported schema version " + std::to_string(schema));
  s.name = as_string(require(doc, "name", root), root + ".name");
  s.model = as_string(require(doc, "model", root), root + ".model");
  if (!model_series().count(s.model)) fail(root + ".model", "expected one of TC, Dicke, FullSim, CatCompare");
  s.mode = doc.contains("mode") ? as_string(doc["mode"], root + ".mode") : "trajectory";
  if (s.mode != "trajectory" && !(s.model == "FullSim" && s.mode == "appendix_a"))
    fail(root + ".mode", "only FullSim supports mode 'appendix_a'");
  s.budget_seconds = doc.contains("budget_seconds") ? as_number(doc["budget_seconds"], root + ".budget_seconds") : 0.0;

  s.params = require(doc, "params", root);
  only_keys(s.params, {"N", "g", "r", "F_c", "omega", "delta", "alpha0", "coupling", "span"}, root + ".params");
  s.herald = doc.value("herald", json::object());
  only_keys(s.herald, {"phi_mode", "q_tilde", "q", "delta_q_tilde", "n_q"}, root + ".herald");
  if (s.herald.contains("q") && s.herald.contains("q_tilde")) fail(root + ".herald", "give q or q_tilde, not both");

  if (doc.contains("scan")) {
    const json& sc = doc["scan"];
    only_keys(sc, kScanAxes, root + ".scan");
    for (auto it = sc.begin(); it != sc.end(); ++it) {
      ScanAxis ax{it.key(), as_number_list(it.value(), root + ".scan." + it.key())};
      if (ax.values.empty()) fail(root + ".scan." + it.key(), "scan axis must not be empty");
      s.scan.push_back(std::move(ax));
    }
  }
  auto scanned = [&](const std::string& a) {
    return std::any_of(s.scan.begin(), s.scan.end(), [&](const ScanAxis& x) { return x.name == a; });
  };
  const int r_sources = (s.params.contains("r") ? 1 : 0) + (s.params.contains("F_c") ? 1 : 0) + (scanned("r") ? 1 : 0) +
                        (scanned("F_c") ? 1 : 0);
  if (s.model == "CatCompare" ? r_sources > 1 : r_sources != 1) fail(root + ".params", "give exactly one of r or F_c (in params or as a scan axis)");
  if (!s.params.contains("N") && !scanned("N")) fail(root + ".params.N", "required field is missing");
  if (!s.params.contains("g") && !scanned("g")) fail(root + ".params.g", "required field is missing");
  if (s.params.contains("N")) {
    const int N = as_int(s.params["N"], root + ".params.N");
    if (N < 2 || N % 2) fail(root + ".params.N", "must be even and >= 2");
  }
  if (s.params.contains("g") && !(as_number(s.params["g"], root + ".params.g") > 0.0))
    fail(root + ".params.g", "must be positive");
  if (s.params.contains("r") && !(as_number(s.params["r"], root + ".params.r") >= 0.0))
    fail(root + ".params.r", "must be non-negative");
  if (s.params.contains("F_c") && !(as_number(s.params["F_c"], root + ".params.F_c") > 0.0))
    fail(root + ".params.F_c", "must be positive");
  if (s.model == "CatCompare" && !s.params.contains("alpha0") && !scanned("alpha0"))
    fail(root + ".params.alpha0", "required for CatCompare");
  for (const auto& ax : s.scan)
    if (ax.name == "N")
      for (double v : ax.values)
        if (v != std::round(v) || static_cast<int>(v) < 2 || static_cast<int>(v) % 2)
          fail(root + ".scan.N", "values must be even integers >= 2");

  if (s.mode == "appendix_a") {
    if (!scanned("N") || !scanned("r")) fail(root + ".scan", "appendix_a needs scan axes N and r");
  } else {
    s.times = parse_times(require(doc, "time", root), root + ".time");
  }

  const json& out = require(doc, "outputs", root);
  only_keys(out, {"series", "wigner_snapshots", "fits"}, root + ".outputs");
  if (out.contains("series")) {
    const json& ser = out["series"];
    if (!ser.is_array()) fail(root + ".outputs.series", "expected an array of names");
    for (std::size_t i = 0; i < ser.size(); ++i) {
      const std::string p = root + ".outputs.series[" + std::to_string(i) + "]";
      const std::string name = as_string(ser[i], p);
      if (!model_series().at(s.model).count(name)) fail(p, "series '" + name + "' is not produced by model " + s.model);
      s.series.push_back(name);
    }
  }
  if (out.contains("wigner_snapshots")) {
    if (s.model != "TC" && s.model != "Dicke") fail(root + ".outputs.wigner_snapshots", "supported for TC and Dicke");
    const json& w = out["wigner_snapshots"];
    const std::string p = root + ".outputs.wigner_snapshots";
    only_keys(w, {"times", "n_theta", "n_phi", "invert_z"}, p);
    WignerRequest wr;
    wr.times = as_number_list(require(w, "times", p), p + ".times");
    for (std::size_t i = 1; i < wr.times.size(); ++i)
      if (!(wr.times[i] > wr.times[i - 1])) fail(p + ".times", "times must be strictly ascending");
    if (w.contains("n_theta")) wr.n_theta = as_int(w["n_theta"], p + ".n_theta");
    if (w.contains("n_phi")) wr.n_phi = as_int(w["n_phi"], p + ".n_phi");
    if (w.contains("invert_z")) {
      if (!w["invert_z"].is_boolean()) fail(p + ".invert_z", "expected a boolean");
      wr.invert_z = w["invert_z"].get<bool>();
    }
    if (wr.n_theta < 2 || wr.n_phi < 1) fail(p, "grid needs n_theta >= 2 and n_phi >= 1");
    s.wigner = wr;
  }
  if (out.contains("fits")) {
    const json& f = out["fits"];
    if (!f.is_array()) fail(root + ".outputs.fits", "expected an array");
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string p = root + ".outputs.fits[" + std::to_string(i) + "]";
      only_keys(f[i], {"name", "series", "x", "t", "kind"}, p);
      FitRequest fr;
      fr.name = as_string(require(f[i], "name", p), p + ".name");
      fr.series = as_string(require(f[i], "series", p), p + ".series");
      fr.x = as_string(require(f[i], "x", p), p + ".x");
      fr.t = as_number(require(f[i], "t", p), p + ".t");
      fr.kind = f[i].contains("kind") ? as_string(f[i]["kind"], p + ".kind") : "power";
      if (fr.kind != "power" && fr.kind != "log") fail(p + ".kind", "expected power or log");
      if (!scanned(fr.x)) fail(p + ".x", "fit abscissa must be a scan axis");
      if (std::find(s.series.begin(), s.series.end(), fr.series) == s.series.end())
        fail(p + ".series", "fit series must be listed in outputs.series");
      s.fits.push_back(fr);
    }
  }
  if (s.series.empty() && !s.wigner) fail(root + ".outputs", "nothing to compute");

  const json own = doc.value("numerics", json::object());
  only_keys(own, {"preset", "grid_points", "cutoff_sigmas", "auto_grid", "engine", "dt", "n_max", "dt_classical",
                  "leakage_tol", "g_dt", "report_stride"},
            root + ".numerics");
  std::string preset = preset_override ? *preset_override
                                       : (own.contains("preset") ? as_string(own["preset"], root + ".numerics.preset")
                                                                 : std::string("fast"));
  const json pdoc = load_preset(preset);
  s.numerics = merge_numerics(pdoc, own, s.params);
  s.numerics["preset"] = preset;
  if (s.numerics.contains("engine")) {
    const std::string e = as_string(s.numerics["engine"], root + ".numerics.engine");
    if (e != "xfa" && e != "closed_form") fail(root + ".numerics.engine", "expected xfa or closed_form");
  }
  if (s.model == "FullSim" && s.mode == "trajectory") {
    require(s.numerics, "dt", root + ".numerics");
    require(s.numerics, "n_max", root + ".numerics");
  }

  s.resolved = doc;
  s.resolved["numerics"] = s.numerics;
  s.resolved["mode"] = s.mode;
  if (!s.times.empty()) s.resolved["resolved_times"] = s.times;
  s.resolved["preset_long_running"] = pdoc.value("long_running", false);
  return s;
}

RunResult run_scenario(const Scenario& s, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = iso_now();
  set_worker_count(opt.jobs);
  RunResult rr;
  rr.bundle = opt.out_dir / s.name;
  fs::create_directories(rr.bundle);

  // Cartesian product of the scan axes, last axis fastest.
  std::vector<Point> points;
  {
    std::vector<std::size_t> idx(s.scan.size(), 0);
    std::size_t total = 1;
    for (const auto& ax : s.scan) total *= ax.values.size();
    if (s.mode == "appendix_a") total = 1;
    for (std::size_t p = 0; p < total; ++p) {
      Point pt{{}, s.params, s.herald};
      std::size_t rem = p;
      for (std::size_t a = s.scan.size(); a-- > 0;) {
        const auto& ax = s.scan[a];
        const std::size_t i = s.mode == "appendix_a" ? 0 : rem % ax.values.size();
        rem /= ax.values.size();
        const double v = ax.values[i];
        pt.axis_values.insert(pt.axis_values.begin(), v);
        if (ax.name == "q_tilde" || ax.name == "delta_q_tilde") pt.herald[ax.name] = v;
        else if (ax.name == "N") pt.params["N"] = static_cast<int>(v);
        else pt.params[ax.name] = v;
      }
      points.push_back(std::move(pt));
    }
  }

  std::vector<std::string> axes;
  for (const auto& ax : s.scan) axes.push_back(ax.name);
  std::vector<PointResult> results(points.size());
  json fits = json::object();

  if (s.mode == "appendix_a") {
    AppendixScanConfig c;
    c.N_list.clear();
    for (const auto& ax : s.scan) {
      if (ax.name == "N")
        for (double v : ax.values) c.N_list.push_back(static_cast<int>(v));
      if (ax.name == "r") c.r_grid = ax.values;
    }
    c.g = s.params["g"].get<double>();
    c.g_dt = s.numerics.value("g_dt", 2e-3);
    c.span = s.params.value("span", 8.0);
    c.report_stride = s.numerics.value("report_stride", 10);
    c.leakage_tol = s.numerics.value("leakage_tol", 1e-9);
    c.n_max = s.numerics.value("n_max", 0);
    const AppendixScanReport rep = appendix_a_scan(c);
    PointResult& pr = results[0];
    for (const auto& p : rep.points) pr.rows["max_qfi_density"].push_back({p.t_peak, p.max_qfi_density});
    fits["appendix_a"] = {{"N", rep.N_list},
                          {"r_c", rep.r_c},
                          {"max_density", rep.max_density},
                          {"t_peak", rep.t_peak},
                          {"scaled_peak_times", rep.scaled_peak_times},
                          {"power_coefficient", rep.power_coefficient},
                          {"power_exponent", rep.power_exponent},
                          {"power_rms_residual", rep.power_rms_residual},
                          {"log_slope", rep.log_slope},
                          {"log_intercept", rep.log_intercept},
                          {"log_rms_residual", rep.log_rms_residual}};
    json pts = json::array();
    for (const auto& p : rep.points)
      pts.push_back({{"N", p.N}, {"r", p.r}, {"max_qfi_density", p.max_qfi_density}, {"t_peak", p.t_peak}, {"n_max", p.n_max}});
    fits["appendix_a"]["points"] = pts;
    // Rows keyed by (N, r) in scan order.
    std::ofstream csv(rr.bundle / "max_qfi_density.csv");
    csv << "N,r,t,value\n";
    for (const auto& p : rep.points) csv << fmt(p.N) << ',' << fmt(p.r) << ',' << fmt(p.t_peak) << ',' << fmt(p.max_qfi_density) << '\n';
    rr.files.push_back("max_qfi_density.csv");
    std::ofstream rc(rr.bundle / "r_c.csv");
    rc << "N,t,value\n";
    for (std::size_t i = 0; i < rep.N_list.size(); ++i) rc << fmt(rep.N_list[i]) << ',' << fmt(0.0) << ',' << fmt(rep.r_c[i]) << '\n';
    rr.files.push_back("r_c.csv");
    std::ofstream sp(rr.bundle / "scaled_peak_time.csv");
    sp << "N,t,value\n";
    for (std::size_t i = 0; i < rep.N_list.size(); ++i)
      sp << fmt(rep.N_list[i]) << ',' << fmt(rep.t_peak[i]) << ',' << fmt(rep.scaled_peak_times[i]) << '\n';
    rr.files.push_back("scaled_peak_time.csv");
  } else {
    parallel_for(points.size(), [&](std::size_t i) {
      const auto where = [&] { return " [params " + points[i].params.dump() + ", herald " + points[i].herald.dump() + "]"; };
      try {
        if (s.model == "TC" || s.model == "Dicke") results[i] = run_xfa_point(s, points[i]);
        else if (s.model == "CatCompare") results[i] = run_cat_point(s, points[i]);
        else results[i] = run_fullsim_point(s, points[i]);
      } catch (const InstabilityError& e) {
        throw InstabilityError(e.what() + where());
      } catch (const TruncationError& e) {
        throw TruncationError(e.what() + where(), e.required_n_max());
      } catch (const DomainError& e) {
        throw DomainError(e.what() + where());
      }
    });
    for (const auto& name : s.series) {
      std::ofstream csv(rr.bundle / (name + ".csv"));
      for (const auto& a : axes) csv << a << ',';
      csv << "t,value\n";
      for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& v = results[i].series.at(name);
        for (std::size_t k = 0; k < v.size(); ++k) {
          for (double a : points[i].axis_values) csv << fmt(a) << ',';
          csv << fmt(s.times[k]) << ',' << fmt(v[k]) << '\n';
        }
      }
      rr.files.push_back(name + ".csv");
    }
    for (const auto& f : s.fits) {
      std::vector<double> xs, ys;
      const auto ax_it = std::find(axes.begin(), axes.end(), f.x);
      const std::size_t ax = static_cast<std::size_t>(ax_it - axes.begin());
      std::size_t k = 0;
      for (std::size_t j = 1; j < s.times.size(); ++j)
        if (std::abs(s.times[j] - f.t) < std::abs(s.times[k] - f.t)) k = j;
      for (std::size_t i = 0; i < points.size(); ++i) {
        xs.push_back(points[i].axis_values[ax]);
        ys.push_back(results[i].series.at(f.series)[k]);
      }
      json entry = {{"series", f.series}, {"x_axis", f.x}, {"t", s.times[k]}, {"x", xs}, {"y", ys}, {"kind", f.kind}};
      if (f.kind == "power") {
        const PowerLawFit pf = power_law_fit(xs, ys);
        entry["coefficient"] = pf.coefficient;
        entry["exponent"] = pf.exponent;
        entry["rms_residual"] = pf.rms_residual;
      } else {
        const LinearFit lf = log_fit(xs, ys);
        entry["slope"] = lf.slope;
        entry["intercept"] = lf.intercept;
        entry["rms_residual"] = lf.rms_residual;
      }
      fits[f.name] = entry;
    }
    if (s.wigner) {
      for (std::size_t i = 0; i < points.size(); ++i)
        for (const auto& snap : results[i].snapshots) {
          std::string label = "wigner";
          for (std::size_t a = 0; a < axes.size(); ++a) label += "_" + axes[a] + "=" + label_value(points[i].axis_values[a]);
          label += "_t=" + label_value(snap.t) + ".json";
          json w = {{"t", snap.t},
                    {"invert_z", s.wigner->invert_z},
                    {"theta", std::vector<double>(snap.grid.thetas.data(), snap.grid.thetas.data() + snap.grid.thetas.size())},
                    {"phi", std::vector<double>(snap.grid.phis.data(), snap.grid.phis.data() + snap.grid.phis.size())}};
          json scan = json::object();
          for (std::size_t a = 0; a < axes.size(); ++a) scan[axes[a]] = points[i].axis_values[a];
          w["scan"] = scan;
          json vals = json::array();
          for (Eigen::Index r = 0; r < snap.grid.values.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < snap.grid.values.cols(); ++c) row.push_back(snap.grid.values(r, c));
            vals.push_back(row);
          }
          w["values"] = vals;
          std::ofstream(rr.bundle / label) << w.dump() << '\n';
          rr.files.push_back(label);
        }
    }
  }
  if (!fits.empty()) {
    std::ofstream(rr.bundle / "fits.json") << fits.dump(2) << '\n';
    rr.files.push_back("fits.json");
  }
  for (std::size_t i = 0; i < results.size(); ++i)
    for (const auto& w : results[i].warnings) rr.warnings.push_back("point " + std::to_string(i) + ": " + w);

  rr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = {{"schema_version", kScenarioSchemaVersion},
                   {"engine_version", kEngineVersion},
                   {"scenario", s.resolved},
                   {"started_at", started},
                   {"wall_seconds", rr.wall_seconds},
                   {"budget_seconds", s.budget_seconds},
                   {"within_budget", s.budget_seconds <= 0.0 || rr.wall_seconds <= s.budget_seconds},
                   {"jobs", worker_count()},
                   {"files", rr.files},
                   {"warnings", rr.warnings}};
  json extras = json::array();
  for (const auto& r : results) extras.push_back(r.extra);
  manifest["point_diagnostics"] = extras;
  std::ofstream(rr.bundle / "manifest.json") << manifest.dump(2) << '\n';
  return rr;
}

RunResult run_scenario_file(const fs::path& file, const RunOptions& options) {
  return run_scenario(parse_scenario(load_json_file(file), options.preset), options);
}

// ---------------------------------------------------------------- verify

SeriesTable read_series_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing series file " + path.string());
  SeriesTable tab;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) head.push_back(cell);
  }
  if (head.size() < 2 || head[head.size() - 2] != "t" || head.back() != "value")
    throw ConfigError(path.string() + ": header must end with t,value");
  tab.axes.assign(head.begin(), head.end() - 2);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a number");
      cells.push_back(v);
    }
    if (cells.size() != head.size()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    tab.axis_values.emplace_back(cells.begin(), cells.end() - 2);
    tab.t.push_back(cells[cells.size() - 2]);
    tab.value.push_back(cells.back());
  }
  return tab;
}

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

json VerifyReport::to_json() const {
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name},
                   {"kind", c.kind},
                   {"passed", c.passed},
                   {"measured", c.measured},
                   {"expected", c.expected},
                   {"tolerance", c.tolerance},
                   {"detail", c.detail}});
  return {{"passed", all_passed()}, {"checks", arr}};
}

namespace {

bool row_matches(const SeriesTable& tab, std::size_t row, const json& where) {
  for (auto it = where.begin(); it != where.end(); ++it) {
    const auto ax = std::find(tab.axes.begin(), tab.axes.end(), it.key());
    if (ax == tab.axes.end()) throw ConfigError("where: series has no axis '" + it.key() + "'");
    const double v = tab.axis_values[row][static_cast<std::size_t>(ax - tab.axes.begin())];
    if (std::abs(v - it.value().get<double>()) > 1e-9 * std::max(1.0, std::abs(v))) return false;
  }
  return true;
}

std::vector<std::size_t> select_rows(const SeriesTable& tab, const json& check) {
  const json where = check.value("where", json::object());
  std::vector<std::size_t> rows;
  double lo = -INFINITY, hi = INFINITY;
  if (check.contains("t_range")) {
    lo = check["t_range"][0].get<double>();
    hi = check["t_range"][1].get<double>();
  }
  for (std::size_t i = 0; i < tab.t.size(); ++i)
    if (row_matches(tab, i, where) && tab.t[i] >= lo - 1e-12 && tab.t[i] <= hi + 1e-12) rows.push_back(i);
  return rows;
}

void judge(CheckResult& c, const json& check) {
  if (check.contains("expected")) {
    c.expected = check["expected"].get<double>();
    c.tolerance = check.value("tol", 0.0);
    if (check.value("relative", false)) c.passed = std::abs(c.measured - c.expected) <= c.tolerance * std::abs(c.expected);
    else c.passed = std::abs(c.measured - c.expected) <= c.tolerance;
  } else {
    const bool has_min = check.contains("min"), has_max = check.contains("max");
    if (!has_min && !has_max) throw ConfigError("check '" + c.name + "': give expected/tol or min/max");
    c.passed = true;
    if (has_min) {
      c.expected = check["min"].get<double>();
      c.passed = c.passed && c.measured >= c.expected;
    }
    if (has_max) {
      if (!has_min) c.expected = check["max"].get<double>();
      c.passed = c.passed && c.measured <= check["max"].get<double>();
    }
  }
}

// First time at which the series reaches the threshold, or factor x reference.
// Sustained onsets are the earliest time from which the series stays at or above the level.
double onset_time(const SeriesTable& tab, const std::vector<std::size_t>& rows, const SeriesTable* ref,
                  double factor, double threshold, bool sustained) {
  double onset = INFINITY;
  for (std::size_t i : rows) {
    double level = threshold;
    if (ref) {
      level = NAN;
      for (std::size_t j = 0; j < ref->t.size(); ++j)
        if (std::abs(ref->t[j] - tab.t[i]) < 1e-9 && ref->axis_values[j] == tab.axis_values[i]) level = factor * ref->value[j];
      if (std::isnan(level)) throw ConfigError("onset: reference series lacks a matching row");
    }
    if (tab.value[i] >= level) {
      if (!sustained) return tab.t[i];
      if (std::isinf(onset)) onset = tab.t[i];
    } else {
      onset = INFINITY;
    }
  }
  return onset;
}

}  // namespace

VerifyReport verify_bundle(const fs::path& bundle, const fs::path& expectations) {
  const json exp = load_json_file(expectations);
  if (!exp.contains("checks") || !exp["checks"].is_array()) throw ConfigError(expectations.string() + ": needs a checks array");
  if (!fs::exists(bundle / "manifest.json")) throw ConfigError("not a results bundle (no manifest.json): " + bundle.string());
  const json manifest = load_json_file(bundle / "manifest.json");
  VerifyReport rep;
  std::map<std::string, SeriesTable> cache;
  auto table = [&](const std::string& name) -> const SeriesTable& {
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, read_series_csv(bundle / (name + ".csv"))).first;
    return it->second;
  };
  for (const auto& check : exp["checks"]) {
    CheckResult c;
    c.name = check.value("name", std::string("unnamed"));
    c.kind = check.value("kind", std::string());
    try {
      if (c.kind == "value_at" || c.kind == "max_value" || c.kind == "min_value") {
        const SeriesTable& tab = table(check.at("series").get<std::string>());
        const auto rows = select_rows(tab, check);
        if (rows.empty()) throw ConfigError("no rows match");
        if (c.kind == "value_at") {
          const double t = check.at("t").get<double>();
          std::size_t best = rows.front();
          for (std::size_t i : rows)
            if (std::abs(tab.t[i] - t) < std::abs(tab.t[best] - t)) best = i;
          c.measured = tab.value[best];
          c.detail = "t=" + fmt(tab.t[best]);
        } else {
          c.measured = tab.value[rows.front()];
          for (std::size_t i : rows)
            c.measured = c.kind == "max_value" ? std::max(c.measured, tab.value[i]) : std::min(c.measured, tab.value[i]);
        }
        judge(c, check);
      } else if (c.kind == "monotone") {
        const SeriesTable& tab = table(check.at("series").get<std::string>());
        const auto rows = select_rows(tab, check);
        const bool up = check.value("direction", std::string("nondecreasing")) == "nondecreasing";
        const double slack = check.value("tol", 0.0);
        double worst = 0.0;
        for (std::size_t k = 1; k < rows.size(); ++k) {
          const double step = tab.value[rows[k]] - tab.value[rows[k - 1]];
          worst = std::max(worst, up ? -step : step);
        }
        c.measured = worst;
        c.tolerance = slack;
        c.passed = worst <= slack;
        c.detail = "largest step against the required direction";
      } else if (c.kind == "onset_order") {
        const SeriesTable& tab = table(check.at("series").get<std::string>());
        const std::string axis = check.at("axis").get<std::string>();
        const auto ax = std::find(tab.axes.begin(), tab.axes.end(), axis);
        if (ax == tab.axes.end()) throw ConfigError("series has no axis '" + axis + "'");
        const std::size_t ai = static_cast<std::size_t>(ax - tab.axes.begin());
        const SeriesTable* ref = check.contains("reference_series") ? &table(check["reference_series"].get<std::string>()) : nullptr;
        const double factor = check.value("factor", 1.0), threshold = check.value("threshold", 0.0);
        const bool sustained = check.value("sustained", false);
        std::map<double, std::vector<std::size_t>> by_axis;
        for (std::size_t i : select_rows(tab, check)) by_axis[tab.axis_values[i][ai]].push_back(i);
        std::vector<double> onsets;
        std::string d;
        for (const auto& [v, rows] : by_axis) {
          onsets.push_back(onset_time(tab, rows, ref, factor, threshold, sustained));
          d += axis + "=" + label_value(v) + ":" + label_value(onsets.back()) + " ";
        }
        bool ordered = true;
        for (std::size_t k = 1; k < onsets.size(); ++k) ordered = ordered && onsets[k] > onsets[k - 1];
        c.measured = static_cast<double>(onsets.size());
        c.passed = ordered && !onsets.empty() && std::isfinite(onsets.front());
        c.detail = "onsets " + d;
      } else if (c.kind == "onset_at") {
        const SeriesTable& tab = table(check.at("series").get<std::string>());
        const SeriesTable* ref = check.contains("reference_series") ? &table(check["reference_series"].get<std::string>()) : nullptr;
        const auto rows = select_rows(tab, check);
        if (rows.empty()) throw ConfigError("no rows match");
        c.measured = onset_time(tab, rows, ref, check.value("factor", 1.0), check.value("threshold", 0.0),
                                check.value("sustained", false));
        judge(c, check);
      } else if (c.kind == "fit_spread") {
        const json fits = load_json_file(bundle / "fits.json");
        const json& arr = fits.at(check.at("fit").get<std::string>()).at(check.at("field").get<std::string>());
        double mean = 0.0;
        for (const auto& v : arr) mean += v.get<double>();
        mean /= static_cast<double>(arr.size());
        c.measured = 0.0;
        for (const auto& v : arr) c.measured = std::max(c.measured, std::abs(v.get<double>() / mean - 1.0));
        c.tolerance = check.value("tol", 0.0);
        c.passed = c.measured <= c.tolerance;
        c.detail = "largest relative spread about the mean " + fmt(mean);
      } else if (c.kind == "fit") {
        if (!fs::exists(bundle / "fits.json")) throw ConfigError("bundle has no fits.json");
        const json fits = load_json_file(bundle / "fits.json");
        const std::string fit = check.at("fit").get<std::string>();
        if (!fits.contains(fit)) throw ConfigError("fits.json has no entry '" + fit + "'");
        const json& field = fits[fit].at(check.at("field").get<std::string>());
        if (field.is_array()) {
          const std::size_t idx = check.value("index", std::size_t{0});
          c.measured = field.at(idx).get<double>();
        } else {
          c.measured = field.get<double>();
        }
        judge(c, check);
      } else if (c.kind == "fit_monotone") {
        const json fits = load_json_file(bundle / "fits.json");
        const json& arr = fits.at(check.at("fit").get<std::string>()).at(check.at("field").get<std::string>());
        bool inc = true;
        for (std::size_t k = 1; k < arr.size(); ++k) inc = inc && arr[k].get<double>() > arr[k - 1].get<double>();
        c.passed = inc;
        c.measured = static_cast<double>(arr.size());
        c.detail = arr.dump();
      } else if (c.kind == "budget") {
        c.measured = manifest.at("wall_seconds").get<double>();
        c.expected = manifest.at("budget_seconds").get<double>();
        c.passed = c.expected <= 0.0 || c.measured <= c.expected;
      } else {
        throw ConfigError("unknown check kind '" + c.kind + "'");
      }
    } catch (const ConfigError& e) {
      if (std::string(e.what()).rfind("missing series file", 0) == 0) throw;
      c.passed = false;
      c.detail = e.what();
    } catch (const json::exception& e) {
      c.passed = false;
      c.detail = std::string("malformed check: ") + e.what();
    }
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace bsv
