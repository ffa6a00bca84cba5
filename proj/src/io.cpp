#include "smcf/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "smcf/errors.hpp"
#include "smcf/geometry.hpp"
#include "smcf/grassmann.hpp"
#include "smcf/oracles.hpp"

namespace smcf {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(prefix + "." + it.key() + ": unknown field");
  }
}

const json& require_object(const json& doc, const std::string& name) {
  if (!doc.contains(name)) throw ConfigError(name + ": required section missing");
  if (!doc.at(name).is_object()) throw ConfigError(name + ": must be an object");
  return doc.at(name);
}

double get_number(const json& obj, const std::string& prefix, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw ConfigError(prefix + "." + key + ": must be a number");
  return obj.at(key).get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& prefix, const char* key,
                         std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer())
    throw ConfigError(prefix + "." + key + ": must be an integer");
  return obj.at(key).get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& prefix, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string())
    throw ConfigError(prefix + "." + key + ": must be a string");
  return obj.at(key).get<std::string>();
}

void parse_flow(const json& obj, RunConfig& cfg) {
  check_keys(obj, "flow",
             {"mode", "epsilon", "dt", "cfl", "t_end", "k", "delta", "output_every",
              "checkpoint_every", "energy_ceiling"});

  cfg.mode = get_string(obj, "flow", "mode", "smcf");
  if (cfg.mode != "smcf" && cfg.mode != "perturbed")
    throw ConfigError("flow.mode: must be \"smcf\" or \"perturbed\"");

  FlowConfig& f = cfg.flow;
  f.epsilon = get_number(obj, "flow", "epsilon", 0.0);
  if (f.epsilon < 0.0) throw ConfigError("flow.epsilon: must be >= 0");
  if (cfg.mode == "smcf" && f.epsilon != 0.0)
    throw ConfigError("flow.epsilon: must be 0 when mode is \"smcf\"");
  if (cfg.mode == "perturbed" && !(f.epsilon > 0.0))
    throw ConfigError("flow.epsilon: must be > 0 when mode is \"perturbed\"");

  if (!obj.contains("t_end")) throw ConfigError("flow.t_end: required");
  f.t_end = get_number(obj, "flow", "t_end", 0.0);
  if (!(f.t_end > 0.0)) throw ConfigError("flow.t_end: must be > 0");

  const bool has_dt = obj.contains("dt");
  const bool has_cfl = obj.contains("cfl");
  if (has_dt && has_cfl)
    throw ConfigError("flow.dt: give either dt or cfl, not both");
  if (has_dt) {
    f.dt = get_number(obj, "flow", "dt", 0.0);
    if (!(f.dt > 0.0)) throw ConfigError("flow.dt: must be > 0");
  } else {
    f.dt = 0.0;
    f.cfl = get_number(obj, "flow", "cfl", 0.2);
    if (!(f.cfl > 0.0)) throw ConfigError("flow.cfl: must be > 0");
  }

  f.k = static_cast<int>(get_integer(obj, "flow", "k", -1));
  if (obj.contains("k") && (f.k < 0 || f.k > 3))
    throw ConfigError("flow.k: must be between 0 and 3");

  f.delta = get_number(obj, "flow", "delta", 0.5);
  if (!(f.delta > 0.0) || f.delta > 2.0)
    throw ConfigError("flow.delta: must be in (0, 2]");

  f.output_every = get_integer(obj, "flow", "output_every", 1);
  if (f.output_every < 1) throw ConfigError("flow.output_every: must be >= 1");

  f.checkpoint_every = get_integer(obj, "flow", "checkpoint_every", 0);
  if (f.checkpoint_every < 0)
    throw ConfigError("flow.checkpoint_every: must be >= 0");
  if (f.checkpoint_every > 0 && f.checkpoint_every % f.output_every != 0)
    throw ConfigError(
        "flow.checkpoint_every: must be a multiple of output_every");

  f.energy_ceiling = get_number(obj, "flow", "energy_ceiling", 0.0);
  if (f.energy_ceiling < 0.0)
    throw ConfigError("flow.energy_ceiling: must be >= 0");
}

std::vector<int> parse_grid(const json& obj, int want_axes) {
  if (!obj.contains("grid")) throw ConfigError("initial.grid: required");
  const json& arr = obj.at("grid");
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(want_axes))
    throw ConfigError("initial.grid: must be an array of " +
                      std::to_string(want_axes) + " axis size(s)");
  std::vector<int> sizes;
  for (const json& v : arr) {
    if (!v.is_number_integer())
      throw ConfigError("initial.grid: sizes must be integers");
    const std::int64_t s = v.get<std::int64_t>();
    if (s < 16 || s % 2 != 0)
      throw ConfigError("initial.grid: axis sizes must be even and >= 16");
    sizes.push_back(static_cast<int>(s));
  }
  return sizes;
}

void parse_initial(const json& obj, RunConfig& cfg) {
  InitialConfig& ini = cfg.initial;
  ini.builtin = get_string(obj, "initial", "builtin", "");
  if (ini.builtin == "circle") {
    check_keys(obj, "initial", {"builtin", "r", "grid"});
    ini.r = get_number(obj, "initial", "r", 1.0);
    if (!(ini.r > 0.0)) throw ConfigError("initial.r: must be > 0");
    ini.grid = parse_grid(obj, 1);
  } else if (ini.builtin == "perturbed_circle") {
    check_keys(obj, "initial", {"builtin", "r", "mode", "amp", "grid"});
    ini.r = get_number(obj, "initial", "r", 1.0);
    if (!(ini.r > 0.0)) throw ConfigError("initial.r: must be > 0");
    ini.mode = static_cast<int>(get_integer(obj, "initial", "mode", 2));
    if (ini.mode < 1) throw ConfigError("initial.mode: must be >= 1");
    ini.amp = get_number(obj, "initial", "amp", 0.0);
    if (ini.amp < 0.0 || ini.amp >= ini.r)
      throw ConfigError("initial.amp: must be in [0, r)");
    ini.grid = parse_grid(obj, 1);
  } else if (ini.builtin == "clifford_torus") {
    check_keys(obj, "initial", {"builtin", "a", "b", "grid"});
    ini.a = get_number(obj, "initial", "a", 1.0);
    ini.b = get_number(obj, "initial", "b", 1.0);
    if (!(ini.a > 0.0)) throw ConfigError("initial.a: must be > 0");
    if (!(ini.b > 0.0)) throw ConfigError("initial.b: must be > 0");
    ini.grid = parse_grid(obj, 2);
  } else if (ini.builtin == "from_snapshot") {
    check_keys(obj, "initial", {"builtin", "path"});
    ini.path = get_string(obj, "initial", "path", "");
    if (ini.path.empty()) throw ConfigError("initial.path: required");
  } else {
    throw ConfigError(
        "initial.builtin: must be one of circle, perturbed_circle, "
        "clifford_torus, from_snapshot");
  }
}

void parse_outputs(const json& obj, RunConfig& cfg) {
  check_keys(obj, "outputs", {"csv", "snapshot_dir"});
  cfg.outputs.csv = get_string(obj, "outputs", "csv", "");
  cfg.outputs.snapshot_dir = get_string(obj, "outputs", "snapshot_dir", "");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("file: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("file: cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("file: failed while writing '" + path + "'");
}

// Evolve with the fixed configured step, recording copies at the given step
// indices (must be sorted, starting at 0).
void sample_run(const RunConfig& cfg, const std::vector<std::int64_t>& at_steps,
                std::vector<ImmersionState>& out, std::vector<double>& times) {
  ImmersionState s = build_initial(cfg.initial);
  GeometryCache cache, scratch;
  std::size_t next = 0;
  const std::int64_t last = at_steps.empty() ? 0 : at_steps.back();
  for (std::int64_t step = 0; step <= last; ++step) {
    if (next < at_steps.size() && at_steps[next] == step) {
      out.push_back(s);
      times.push_back(s.time);
      ++next;
    }
    if (step == last) break;
    build_geometry(s, cache, cfg.flow.g_min);
    rk4_step(s, cfg.flow.dt, cfg.flow.epsilon, cache, scratch, cfg.flow.g_min);
    refresh_gauge(s, cache);
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("json: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("json: top level must be an object");
  check_keys(doc, "config", {"flow", "initial", "outputs"});

  RunConfig cfg;
  parse_flow(require_object(doc, "flow"), cfg);
  parse_initial(require_object(doc, "initial"), cfg);
  if (doc.contains("outputs")) parse_outputs(require_object(doc, "outputs"), cfg);

  if (cfg.flow.checkpoint_every > 0 && cfg.outputs.snapshot_dir.empty())
    throw ConfigError(
        "outputs.snapshot_dir: required when flow.checkpoint_every > 0");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path));
}

ImmersionState build_initial(const InitialConfig& cfg) {
  if (cfg.builtin == "from_snapshot") return read_snapshot(cfg.path);
  auto grid = std::make_shared<PeriodicGrid>(cfg.grid);
  if (cfg.builtin == "circle") return make_circle(grid, cfg.r);
  if (cfg.builtin == "perturbed_circle")
    return make_perturbed_circle(grid, cfg.r, cfg.mode, cfg.amp);
  if (cfg.builtin == "clifford_torus")
    return make_clifford_torus(grid, cfg.a, cfg.b);
  throw ConfigError("initial.builtin: unknown builtin '" + cfg.builtin + "'");
}

void synthesize_gauge(ImmersionState& s) {
  const PeriodicGrid& grid = *s.grid;
  const int n = grid.n();
  const int m = grid.ambient();
  const std::int64_t num = grid.num_nodes();

  std::vector<Field> dF(n);
  for (int axis = 0; axis < n; ++axis)
    deriv1(grid, s.positions, m, axis, dF[axis]);

  s.gauge_ref1.assign(num * m, 0.0);
  s.gauge_ref2.assign(num * m, 0.0);
  for (std::int64_t v = 0; v < num; ++v) {
    // Orthonormalize the tangents.
    double tb[2][4];
    for (int a = 0; a < n; ++a) {
      for (int c = 0; c < m; ++c) tb[a][c] = dF[a][v * m + c];
      for (int p = 0; p < a; ++p) {
        double dot = 0.0;
        for (int c = 0; c < m; ++c) dot += tb[a][c] * tb[p][c];
        for (int c = 0; c < m; ++c) tb[a][c] -= dot * tb[p][c];
      }
      double nrm = 0.0;
      for (int c = 0; c < m; ++c) nrm += tb[a][c] * tb[a][c];
      nrm = std::sqrt(nrm);
      if (nrm <= 1e-12) throw DegenerateImmersion(static_cast<int>(v), 0.0);
      for (int c = 0; c < m; ++c) tb[a][c] /= nrm;
    }
    // Pick the two canonical axes with the largest normal residuals; among
    // m = n + 2 axes at least two always clear the 0.35 floor.
    double picked[2][4];
    int found = 0;
    for (int axis = 0; axis < m && found < 2; ++axis) {
      double res[4];
      for (int c = 0; c < m; ++c) res[c] = (c == axis) ? 1.0 : 0.0;
      for (int a = 0; a < n; ++a) {
        const double dot = tb[a][axis];
        for (int c = 0; c < m; ++c) res[c] -= dot * tb[a][c];
      }
      for (int p = 0; p < found; ++p) {
        double dot = 0.0;
        for (int c = 0; c < m; ++c) dot += picked[p][c] * res[c];
        for (int c = 0; c < m; ++c) res[c] -= dot * picked[p][c];
      }
      double nrm = 0.0;
      for (int c = 0; c < m; ++c) nrm += res[c] * res[c];
      nrm = std::sqrt(nrm);
      if (nrm < 0.35) continue;
      for (int c = 0; c < m; ++c) picked[found][c] = res[c] / nrm;
      ++found;
    }
    if (found < 2) throw FrameGaugeFailure(static_cast<int>(v), 0.0);
    for (int c = 0; c < m; ++c) {
      s.gauge_ref1[v * m + c] = picked[0][c];
      s.gauge_ref2[v * m + c] = picked[1][c];
    }
  }
}

std::string format_double(double x) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    const double back = std::strtod(buf, nullptr);
    if (back == x || (std::isnan(back) && std::isnan(x))) return buf;
  }
  return buf;
}

void write_snapshot(const std::string& path, const ImmersionState& s) {
  const PeriodicGrid& grid = *s.grid;
  const int m = grid.ambient();
  std::ostringstream out;
  out << "smcf-snapshot 1\n";
  out << "n " << grid.n() << "\n";
  out << "ambient " << m << "\n";
  out << "grid";
  for (int axis = 0; axis < grid.n(); ++axis) out << " " << grid.size(axis);
  out << "\n";
  out << "time " << format_double(s.time) << "\n";
  out << "positions " << grid.num_nodes() << "\n";
  for (std::int64_t v = 0; v < grid.num_nodes(); ++v) {
    for (int c = 0; c < m; ++c) {
      if (c) out << " ";
      out << format_double(s.positions[v * m + c]);
    }
    out << "\n";
  }
  write_file(path, out.str());
}

ImmersionState read_snapshot(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string word;
  auto expect = [&](const char* tag) {
    if (!(in >> word) || word != tag)
      throw ConfigError(std::string("snapshot: expected '") + tag + "' in '" +
                        path + "'");
  };
  expect("smcf-snapshot");
  int version = 0;
  if (!(in >> version) || version != 1)
    throw ConfigError("snapshot: unsupported format version in '" + path + "'");
  expect("n");
  int n = 0;
  if (!(in >> n) || (n != 1 && n != 2))
    throw ConfigError("snapshot: n must be 1 or 2 in '" + path + "'");
  expect("ambient");
  int m = 0;
  if (!(in >> m) || m != n + 2)
    throw ConfigError("snapshot: ambient must equal n + 2 in '" + path + "'");
  expect("grid");
  std::vector<int> sizes(n);
  for (int axis = 0; axis < n; ++axis)
    if (!(in >> sizes[axis]))
      throw ConfigError("snapshot: bad grid sizes in '" + path + "'");
  expect("time");
  double time = 0.0;
  if (!(in >> word)) throw ConfigError("snapshot: missing time in '" + path + "'");
  time = std::strtod(word.c_str(), nullptr);
  expect("positions");
  std::int64_t count = 0;
  if (!(in >> count)) throw ConfigError("snapshot: bad node count in '" + path + "'");

  ImmersionState s;
  s.grid = std::make_shared<PeriodicGrid>(sizes);
  if (count != s.grid->num_nodes())
    throw ConfigError("snapshot: node count does not match grid in '" + path + "'");
  s.time = time;
  s.positions.resize(count * m);
  for (std::int64_t i = 0; i < count * m; ++i) {
    if (!(in >> word))
      throw ConfigError("snapshot: truncated position data in '" + path + "'");
    s.positions[i] = std::strtod(word.c_str(), nullptr);
  }
  if (!all_finite(s.positions))
    throw NonFiniteState("snapshot '" + path + "'");
  synthesize_gauge(s);
  return s;
}

SimulateOutcome run_simulate(const RunConfig& cfg) {
  SimulateOutcome out;
  ImmersionState s = build_initial(cfg.initial);
  const int k_eff =
      cfg.flow.k >= 0 ? cfg.flow.k : default_energy_order(s.grid->n());

  const bool snaps = !cfg.outputs.snapshot_dir.empty();
  if (snaps) std::filesystem::create_directories(cfg.outputs.snapshot_dir);

  Observer obs;
  if (snaps && cfg.flow.checkpoint_every > 0) {
    obs = [&cfg](const ImmersionState& st, const GeometryCache&, std::int64_t step) {
      if (step % cfg.flow.checkpoint_every != 0) return;
      char name[32];
      std::snprintf(name, sizeof name, "checkpoint_%08" PRId64 ".txt", step);
      write_snapshot(cfg.outputs.snapshot_dir + "/" + name, st);
    };
  }

  out.trace = run_flow(s, cfg.flow, obs);
  out.final_state = s;
  if (snaps) write_snapshot(cfg.outputs.snapshot_dir + "/final.txt", s);

  std::ostringstream csv;
  csv << "t,vol,H_Lp";
  for (int l = 0; l <= k_eff; ++l) csv << ",A_l2_sq_" << l;
  csv << ",E_k,status\n";
  const std::string status = to_string(out.trace.status);
  for (const TickRow& row : out.trace.rows) {
    csv << format_double(row.t) << "," << format_double(row.energy.vol) << ","
        << format_double(row.energy.H_Lp);
    for (int l = 0; l <= k_eff; ++l)
      csv << ","
          << format_double(l < static_cast<int>(row.energy.A_l2_sq.size())
                               ? row.energy.A_l2_sq[l]
                               : 0.0);
    csv << "," << format_double(row.energy.E_k) << "," << status << "\n";
  }
  out.csv = csv.str();
  if (!cfg.outputs.csv.empty()) write_file(cfg.outputs.csv, out.csv);
  return out;
}

CompareOutcome run_compare(const RunConfig& a, const RunConfig& b, int samples) {
  if (samples < 2) throw ConfigError("samples: must be >= 2");
  if (!(a.flow.dt > 0.0) || !(b.flow.dt > 0.0))
    throw ConfigError("flow.dt: compare requires a fixed dt in both configs");
  if (a.flow.dt != b.flow.dt)
    throw ConfigError("flow.dt: both configs must use the same step");
  if (a.flow.t_end != b.flow.t_end)
    throw ConfigError("flow.t_end: both configs must use the same horizon");

  const ImmersionState init_a = build_initial(a.initial);
  const ImmersionState init_b = build_initial(b.initial);
  if (!init_a.grid->same_shape(*init_b.grid))
    throw ConfigError("initial.grid: configurations must share one grid shape");

  const std::int64_t steps =
      std::llround(a.flow.t_end / a.flow.dt);
  std::vector<std::int64_t> at_steps;
  for (int i = 0; i < samples; ++i) {
    const std::int64_t stp = std::llround(
        static_cast<double>(i) * static_cast<double>(steps) / (samples - 1));
    if (at_steps.empty() || stp != at_steps.back()) at_steps.push_back(stp);
  }

  std::vector<ImmersionState> run_a, run_b;
  std::vector<double> times, times_b;
  sample_run(a, at_steps, run_a, times);
  sample_run(b, at_steps, run_b, times_b);

  const GeometryCache background = build_geometry(init_a);

  CompareOutcome out;
  out.report = gronwall_study(run_a, run_b, times, background);

  std::ostringstream csv;
  csv << "t,L1,L2,L3,L_total,fitted_C\n";
  for (std::size_t i = 0; i < out.report.rows.size(); ++i) {
    const LSample& row = out.report.rows[i];
    csv << format_double(row.t) << ",";
    if (row.cut_locus) {
      csv << "nan,nan,nan,nan";
    } else {
      csv << format_double(row.value.L1) << "," << format_double(row.value.L2)
          << "," << format_double(row.value.L3) << ","
          << format_double(row.value.total);
    }
    csv << ",";
    if (i + 1 == out.report.rows.size() && out.report.fit_valid)
      csv << format_double(out.report.fitted_C);
    csv << "\n";
  }
  out.csv = csv.str();
  return out;
}

std::string run_verify_csv(const RunConfig& cfg) {
  if (cfg.initial.builtin == "from_snapshot")
    throw ConfigError(
        "initial.builtin: verify needs an analytic builtin to refine");
  for (int size : cfg.initial.grid)
    if (size % 4 != 0 || size / 4 < 16)
      throw ConfigError(
          "initial.grid: verify refines twice, so sizes must be multiples of 4 "
          "with size/4 >= 16");

  struct Row {
    std::string label;
    double metric, measure, christoffel, energy_gap;
  };
  std::vector<Row> rows;
  for (int shrink : {4, 2, 1}) {
    InitialConfig ini = cfg.initial;
    std::string label;
    for (std::size_t axis = 0; axis < ini.grid.size(); ++axis) {
      ini.grid[axis] /= shrink;
      if (axis) label += "x";
      label += std::to_string(ini.grid[axis]);
    }
    const ImmersionState s = build_initial(ini);
    const double h = s.grid->h_min();
    const EvolutionResiduals res =
        verify_evolution_equations(s, cfg.flow.epsilon, 0.05 * h * h);
    const GaussEnergyReport ge = compute_gauss_energy(s);
    rows.push_back({label, res.metric_max, res.measure_max, res.christoffel_max,
                    ge.gap});
  }

  std::ostringstream csv;
  csv << "N,metric,measure,christoffel,energy_gap\n";
  for (const Row& row : rows)
    csv << row.label << "," << format_double(row.metric) << ","
        << format_double(row.measure) << "," << format_double(row.christoffel)
        << "," << format_double(row.energy_gap) << "\n";
  const Row& mid = rows[rows.size() - 2];
  const Row& fine = rows.back();
  auto order = [](double coarse, double f) {
    return (coarse > 0.0 && f > 0.0) ? std::log2(coarse / f) : 0.0;
  };
  csv << "order," << format_double(order(mid.metric, fine.metric)) << ","
      << format_double(order(mid.measure, fine.measure)) << ","
      << format_double(order(mid.christoffel, fine.christoffel)) << ","
      << format_double(order(mid.energy_gap, fine.energy_gap)) << "\n";
  return csv.str();
}

std::string oracle_csv(const std::string& name, const OracleParams& prm) {
  std::ostringstream csv;
  if (name == "circle") {
    if (prm.samples < 1) throw ConfigError("samples: must be >= 1");
    csv << "t,radius,height\n";
    for (int i = 0; i < prm.samples; ++i) {
      const double t = prm.samples == 1
                           ? prm.t_end
                           : prm.t_end * i / (prm.samples - 1);
      const CircleLaw law = circle_law(prm.r, prm.epsilon, t);
      csv << format_double(t) << "," << format_double(law.radius) << ","
          << format_double(law.height) << "\n";
    }
    return csv.str();
  }
  if (name == "sphere-product") {
    if (prm.samples < 2) throw ConfigError("samples: must be >= 2");
    SphereProductParams spp;
    spp.p = prm.p;
    spp.q = prm.q;
    spp.a0 = prm.a;
    spp.b0 = prm.b;
    spp.r_min = prm.r_min;
    std::vector<double> ts;
    for (int i = 0; i < prm.samples; ++i)
      ts.push_back(prm.t_end * i / (prm.samples - 1));
    const SphereProductTrajectory traj = sphere_product_ode(spp, prm.t_end, ts);
    csv << "t,a,b,blew_up,blowup_time\n";
    for (std::size_t i = 0; i < traj.t.size(); ++i)
      csv << format_double(traj.t[i]) << "," << format_double(traj.a[i]) << ","
          << format_double(traj.b[i]) << "," << (traj.blew_up ? 1 : 0) << ","
          << format_double(traj.blew_up
                               ? traj.blowup_time
                               : std::numeric_limits<double>::quiet_NaN())
          << "\n";
    return csv.str();
  }
  if (name == "filament") {
    if (prm.n < 16 || prm.n % 2 != 0)
      throw ConfigError("n: must be even and >= 16");
    auto grid = std::make_shared<PeriodicGrid>(std::vector<int>{prm.n});
    const ImmersionState s =
        prm.amp > 0.0 ? make_perturbed_circle(grid, prm.r, prm.mode, prm.amp)
                      : make_circle(grid, prm.r);
    const FilamentFunction f = filament_function(s);
    csv << "theta,s,kappa,phase,psi_re,psi_im\n";
    for (int i = 0; i < prm.n; ++i)
      csv << format_double(grid->coord(0, i)) << ","
          << format_double(f.s_of_theta[i]) << ","
          << format_double(std::abs(f.psi[i])) << ","
          << format_double(f.phase[i]) << "," << format_double(f.psi[i].real())
          << "," << format_double(f.psi[i].imag()) << "\n";
    return csv.str();
  }
  throw ConfigError("oracle: unknown name '" + name +
                    "'; available: circle, sphere-product, filament");
}

std::string energies_csv(const std::string& snapshot_path, int k, double delta) {
  const ImmersionState s = read_snapshot(snapshot_path);
  const int k_eff = k >= 0 ? k : default_energy_order(s.grid->n());
  if (k_eff > 3) throw ConfigError("k: must be between 0 and 3");
  const EnergyReport rep = compute_energy(s, k_eff, delta);
  std::ostringstream csv;
  csv << "quantity,value\n";
  csv << "time," << format_double(s.time) << "\n";
  csv << "vol," << format_double(rep.vol) << "\n";
  csv << "H_Lp," << format_double(rep.H_Lp) << "\n";
  for (int l = 0; l <= k_eff; ++l)
    csv << "A_l2_sq_" << l << ","
        << format_double(l < static_cast<int>(rep.A_l2_sq.size()) ? rep.A_l2_sq[l]
                                                                  : 0.0)
        << "\n";
  csv << "E_k," << format_double(rep.E_k) << "\n";
  return csv.str();
}

}  // namespace smcf
