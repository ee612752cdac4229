#include "tempent/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "tempent/checkpoint.hpp"
#include "tempent/entropy.hpp"

namespace tempent {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config: " + field + ": " + what);
}

const json* member(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double read_number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

std::size_t read_count(const json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(field, "expected a non-negative integer");
  return v.get<std::size_t>();
}

void opt_number(const json& j, const char* key, const std::string& path, double& dst) {
  if (const json* v = member(j, key)) dst = read_number(*v, path + "." + key);
}

void opt_count(const json& j, const char* key, const std::string& path, std::size_t& dst) {
  if (const json* v = member(j, key)) dst = read_count(*v, path + "." + key);
}

void opt_bool(const json& j, const char* key, const std::string& path, bool& dst) {
  if (const json* v = member(j, key)) {
    if (!v->is_boolean()) fail(path + "." + key, "expected true or false");
    dst = v->get<bool>();
  }
}

template <class T, class Read>
void opt_list(const json& j, const char* key, const std::string& path, std::vector<T>& dst, Read read,
              bool allow_empty = false) {
  const json* v = member(j, key);
  if (!v) return;
  const std::string field = path + "." + key;
  if (!v->is_array()) fail(field, "expected a list");
  if (v->empty() && !allow_empty) fail(field, "list must not be empty");
  dst.clear();
  for (std::size_t i = 0; i < v->size(); ++i) dst.push_back(read((*v)[i], field + "[" + std::to_string(i) + "]"));
}

std::pair<int, int> read_pair(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    fail(field, "expected [n, m] with integers");
  }
  const int n = v[0].get<int>(), m = v[1].get<int>();
  if (!(n > m && m >= 1)) fail(field, "need n > m >= 1");
  return {n, m};
}

SpectrumModel read_model(const json& v, const std::string& field) {
  if (!v.is_object()) fail(field, "expected an object");
  SpectrumModel m;
  if (const json* s = member(v, "variant")) {
    if (!s->is_string()) fail(field + ".variant", "expected a string");
    try {
      m.variant = toy_variant_from_string(s->get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail(field + ".variant", e.what());
    }
  }
  opt_number(v, "alpha1", field, m.alpha1);
  opt_number(v, "gamma1", field, m.gamma1);
  opt_number(v, "alpha2", field, m.alpha2);
  opt_number(v, "gamma2", field, m.gamma2);
  opt_number(v, "r", field, m.r);
  opt_number(v, "r_prime", field, m.r_prime);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    fail(field, e.what());
  }
  return m;
}

void parse_influence(const json& j, InfluenceJob& job) {
  const std::string path = "influence";
  if (!j.is_object()) fail(path, "expected an object");
  opt_number(j, "J", path, job.J);
  opt_number(j, "dt", path, job.dt);
  opt_list(j, "h", path, job.h, read_number);
  opt_list(j, "g", path, job.g, read_number);
  opt_list(j, "bond_cap", path, job.bond_cap, read_count);
  opt_count(j, "n_t_min", path, job.n_t_min);
  opt_count(j, "n_t_max", path, job.n_t_max);
  opt_count(j, "sample_every", path, job.sample_every);
  opt_count(j, "checkpoint_every", path, job.checkpoint_every);
  opt_count(j, "power_bond_cap", path, job.power_bond_cap);
  opt_list(j, "renyi", path, job.renyi, [](const json& v, const std::string& f) {
    const auto n = read_count(v, f);
    if (n < 2) fail(f, "Renyi order must be >= 2");
    return static_cast<int>(n);
  }, true);
  opt_list(j, "delta", path, job.delta, read_pair, true);
  opt_list(j, "forward_backward", path, job.forward_backward, [](const json& v, const std::string& f) {
    const auto n = read_count(v, f);
    if (n < 2) fail(f, "order must be >= 2");
    return static_cast<int>(n);
  }, true);
  if (const json* mi = member(j, "mutual_info")) {
    const std::string mp = path + ".mutual_info";
    if (!mi->is_object()) fail(mp, "expected an object");
    opt_bool(*mi, "bipartition", mp, job.mutual_info_bipartition);
    opt_bool(*mi, "max", mp, job.mutual_info_max);
    opt_list(*mi, "disjoint", mp, job.mutual_info_disjoint, [](const json& v, const std::string& f) {
      if (!v.is_object()) fail(f, "expected {block_len, separation}");
      DisjointSpec d;
      opt_count(v, "block_len", f, d.block_len);
      opt_count(v, "separation", f, d.separation);
      if (d.block_len == 0) fail(f + ".block_len", "must be positive");
      return d;
    }, true);
  }
  opt_bool(j, "trotter_pair", path, job.trotter_pair);

  if (!(job.dt > 0)) fail(path + ".dt", "must be positive");
  if (!(job.J > 0)) fail(path + ".J", "must be positive");
  for (std::size_t c : job.bond_cap)
    if (c == 0) fail(path + ".bond_cap", "entries must be positive");
  if (job.n_t_min == 0) fail(path + ".n_t_min", "must be >= 1");
  if (job.n_t_max < job.n_t_min) fail(path + ".n_t_max", "must be >= n_t_min");
  if (job.sample_every == 0) fail(path + ".sample_every", "must be >= 1");
}

void parse_toy(const json& j, ToyJob& job) {
  const std::string path = "toy";
  if (!j.is_object()) fail(path, "expected an object");
  opt_list(j, "models", path, job.models, read_model);
  opt_number(j, "T_min", path, job.T_min);
  opt_number(j, "T_max", path, job.T_max);
  opt_number(j, "T_step", path, job.T_step);
  opt_list(j, "delta", path, job.delta, read_pair, true);
  opt_list(j, "forward_backward", path, job.forward_backward, [](const json& v, const std::string& f) {
    const double n = read_number(v, f);
    if (!(n > 0) || n == 1.0) fail(f, "order must be positive and differ from 1");
    return n;
  }, true);
  if (job.models.empty()) fail(path + ".models", "list must not be empty");
  if (!(job.T_min >= 0)) fail(path + ".T_min", "must be >= 0");
  if (!(job.T_max > job.T_min)) fail(path + ".T_max", "must exceed T_min");
  if (!(job.T_step > 0)) fail(path + ".T_step", "must be positive");
}

void parse_echo(const json& j, EchoJob& job) {
  const std::string path = "echo";
  if (!j.is_object()) fail(path, "expected an object");
  opt_list(j, "L", path, job.L, read_count);
  opt_number(j, "J", path, job.J);
  opt_number(j, "h", path, job.h);
  opt_number(j, "g", path, job.g);
  opt_number(j, "dt", path, job.dt);
  opt_list(j, "bond_cap", path, job.bond_cap, read_count);
  opt_number(j, "t_max", path, job.t_max);
  if (const json* w = member(j, "fit_window")) {
    if (!w->is_array() || w->size() != 2) fail(path + ".fit_window", "expected [t_min, t_max]");
    job.fit_window = std::pair{read_number((*w)[0], path + ".fit_window[0]"),
                               read_number((*w)[1], path + ".fit_window[1]")};
  }
  for (std::size_t L : job.L)
    if (L < 4 || L % 2) fail(path + ".L", "entries must be even and >= 4");
  for (std::size_t c : job.bond_cap)
    if (c == 0) fail(path + ".bond_cap", "entries must be positive");
  if (!(job.dt > 0)) fail(path + ".dt", "must be positive");
  if (!(job.t_max >= 0)) fail(path + ".t_max", "must be >= 0");
}

void parse_fit(const json& j, FitJob& job) {
  const std::string path = "fit";
  if (!j.is_object()) fail(path, "expected an object");
  const json* in = member(j, "input");
  if (!in || !in->is_string()) fail(path + ".input", "expected a CSV path");
  job.input = in->get<std::string>();
  if (const json* q = member(j, "quantity")) {
    if (!q->is_string()) fail(path + ".quantity", "expected a string");
    job.quantity = q->get<std::string>();
  }
  if (const json* v = member(j, "n")) job.n = static_cast<int>(read_count(*v, path + ".n"));
  if (const json* v = member(j, "m")) job.m = static_cast<int>(read_count(*v, path + ".m"));
  opt_list(j, "kinds", path, job.kinds, [](const json& v, const std::string& f) {
    if (!v.is_string()) fail(f, "expected a model name");
    try {
      return fit_kind_from_string(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail(f, e.what());
    }
  });
  opt_list(j, "lower_bounds", path, job.lower_bounds, read_number, true);
  if (const json* v = member(j, "upper_bound")) job.upper_bound = read_number(*v, path + ".upper_bound");
  opt_bool(j, "derivative_mode", path, job.derivative_mode);
  opt_bool(j, "include_offset", path, job.include_offset);
  if (const json* mc = member(j, "monte_carlo")) {
    const std::string mp = path + ".monte_carlo";
    if (!mc->is_object()) fail(mp, "expected {trials, noise}");
    opt_count(*mc, "trials", mp, job.monte_carlo_trials);
    opt_number(*mc, "noise", mp, job.monte_carlo_noise);
    if (!(job.monte_carlo_noise >= 0)) fail(mp + ".noise", "must be >= 0");
  }
}

Command parse_command(const json& j) {
  const json* c = member(j, "command");
  if (!c || !c->is_string()) fail("command", "expected one of influence, toy, echo, fit");
  const auto s = c->get<std::string>();
  if (s == "influence") return Command::influence;
  if (s == "toy") return Command::toy;
  if (s == "echo") return Command::echo;
  if (s == "fit") return Command::fit;
  fail("command", "unknown command '" + s + "'");
}

std::string command_name(Command c) {
  switch (c) {
    case Command::influence: return "influence";
    case Command::toy: return "toy";
    case Command::echo: return "echo";
    case Command::fit: return "fit";
  }
  return "influence";
}

json model_json(const SpectrumModel& m) {
  return {{"variant", to_string(m.variant)}, {"alpha1", m.alpha1}, {"gamma1", m.gamma1},
          {"alpha2", m.alpha2}, {"gamma2", m.gamma2}, {"r", m.r}, {"r_prime", m.r_prime}};
}

json pairs_json(const std::vector<std::pair<int, int>>& v) {
  json out = json::array();
  for (auto [n, m] : v) out.push_back({n, m});
  return out;
}

// The resolved config with defaults filled in; only the active command's
// section is included so unrelated defaults do not perturb the hash.
std::string canonical_text(const ExperimentConfig& c) {
  json j;
  j["command"] = command_name(c.command);
  j["drift_threshold"] = c.drift_threshold;
  j["seed"] = c.seed;
  switch (c.command) {
    case Command::influence: {
      const auto& s = c.influence;
      json d = json::array();
      for (const auto& x : s.mutual_info_disjoint) d.push_back({{"block_len", x.block_len}, {"separation", x.separation}});
      j["influence"] = {{"J", s.J}, {"dt", s.dt}, {"h", s.h}, {"g", s.g}, {"bond_cap", s.bond_cap},
                        {"n_t_min", s.n_t_min}, {"n_t_max", s.n_t_max}, {"sample_every", s.sample_every},
                        {"power_bond_cap", s.power_bond_cap}, {"renyi", s.renyi},
                        {"delta", pairs_json(s.delta)}, {"forward_backward", s.forward_backward},
                        {"mutual_info", {{"bipartition", s.mutual_info_bipartition}, {"max", s.mutual_info_max}, {"disjoint", d}}},
                        {"trotter_pair", s.trotter_pair}};
      break;
    }
    case Command::toy: {
      json models = json::array();
      for (const auto& m : c.toy.models) models.push_back(model_json(m));
      j["toy"] = {{"models", models}, {"T_min", c.toy.T_min}, {"T_max", c.toy.T_max}, {"T_step", c.toy.T_step},
                  {"delta", pairs_json(c.toy.delta)}, {"forward_backward", c.toy.forward_backward}};
      break;
    }
    case Command::echo: {
      const auto& e = c.echo;
      j["echo"] = {{"L", e.L}, {"J", e.J}, {"h", e.h}, {"g", e.g}, {"dt", e.dt}, {"bond_cap", e.bond_cap}, {"t_max", e.t_max}};
      if (e.fit_window) j["echo"]["fit_window"] = {e.fit_window->first, e.fit_window->second};
      break;
    }
    case Command::fit: {
      const auto& f = c.fit;
      json kinds = json::array();
      for (auto k : f.kinds) kinds.push_back(to_string(k));
      j["fit"] = {{"input", f.input.string()}, {"quantity", f.quantity}, {"kinds", kinds},
                  {"lower_bounds", f.lower_bounds}, {"derivative_mode", f.derivative_mode},
                  {"include_offset", f.include_offset},
                  {"monte_carlo", {{"trials", f.monte_carlo_trials}, {"noise", f.monte_carlo_noise}}}};
      if (f.n) j["fit"]["n"] = *f.n;
      if (f.m) j["fit"]["m"] = *f.m;
      if (f.upper_bound) j["fit"]["upper_bound"] = *f.upper_bound;
      break;
    }
  }
  return j.dump();
}

// ---------------------------------------------------------------------------
// Output helpers

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void ensure_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("config: out: cannot create directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("config: out: directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string point_label(const IsingParams& p, std::size_t cap) {
  std::ostringstream s;
  s << "J=" << p.J << " h=" << p.h << " g=" << p.g << " dt=" << p.dt << " bond_cap=" << cap;
  return s.str();
}

Row base_row(const TemporalMps& l) {
  Row r;
  r.J = l.params.J;
  r.h = l.params.h;
  r.g = l.params.g;
  r.dt = l.params.dt;
  r.bond_cap = l.bond_cap;
  r.T = static_cast<double>(l.n_t()) * l.params.dt;
  r.flagged = !l.converged();
  return r;
}

int moments_needed(const InfluenceJob& job) {
  int n = 1;
  for (int k : job.renyi)
    if (k > 2) n = std::max(n, k);
  for (auto [a, b] : job.delta) n = std::max(n, a);
  for (int k : job.forward_backward) n = std::max(n, 2 * k);
  return n;
}

std::vector<Row> sample_rows(const TemporalMps& l, const InfluenceJob& job) {
  std::vector<Row> rows;
  const Row base = base_row(l);
  auto push = [&](const std::string& q, double value, bool flagged) {
    Row r = base;
    r.quantity = q;
    r.value = value;
    r.flagged = r.flagged || flagged;
    rows.push_back(r);
    return &rows.back();
  };
  push("trace_drift", l.trace_drift, false);

  MomentSeries moments;
  const int need = moments_needed(job);
  if (need > 1) moments = log_moments(l, need, job.power_bond_cap);
  for (int n : job.renyi) {
    const double v = n == 2 ? renyi2(l) : renyi_from_moments(moments, n);
    push("S", v, n == 2 ? false : moments.flagged)->n = n;
  }
  for (auto [n, m] : job.delta) {
    Row* r = push("Delta", delta_from_moments(moments, n, m), moments.flagged);
    r->n = n;
    r->m = m;
  }
  for (int n : job.forward_backward) {
    push("S_L", delta_from_moments(moments, 2 * n, 2) / (n - 1), moments.flagged)->n = n;
  }
  const std::size_t nt = l.n_t();
  if (job.mutual_info_bipartition) {
    for (std::size_t cut = 1; cut < nt; ++cut) {
      const Measured mi = mutual_info_bipartition(l, cut);
      push("I2_bipartition", mi.value, mi.flagged)->t_l = static_cast<double>(cut) * l.params.dt;
    }
  }
  if (job.mutual_info_max && nt > 1) {
    const Measured mi = max_mutual_info(l);
    push("I2_max", mi.value, mi.flagged);
  }
  for (const auto& d : job.mutual_info_disjoint) {
    if (2 * d.block_len + d.separation > nt) continue;
    const MutualInfoSample s = mutual_info_disjoint(l, d.block_len, d.separation);
    Row* r = push("I2_disjoint", s.value, s.flagged);
    r->t_l = s.t_l;
    r->delta_t = s.delta_t;
  }
  return rows;
}

bool sampled(std::size_t n_t, const InfluenceJob& job) {
  return n_t >= job.n_t_min && (n_t - job.n_t_min) % job.sample_every == 0;
}

struct PointResult {
  std::vector<Row> rows;
  PointSummary summary;
};

double max_drift(const std::vector<Row>& rows) {
  double d = 0.0;
  for (const auto& r : rows)
    if (r.quantity == "trace_drift") d = std::max(d, r.value);
  return d;
}

// Trotter-robustness harness: S2 at dt and dt/2 compared at equal T.
std::vector<Row> trotter_pair_rows(const TemporalMps& coarse, const InfluenceJob& job, double drift,
                                   double& max_diff) {
  IsingParams fine_p = coarse.params;
  fine_p.dt *= 0.5;
  const TemporalMps fine = contract_influence(fine_p, 2 * coarse.n_t(), coarse.bond_cap, drift);
  std::vector<Row> rows;
  max_diff = 0.0;
  for (std::size_t k = job.n_t_min; k <= coarse.n_t(); ++k) {
    const double d = std::abs(coarse.renyi2_history[k - 1] - fine.renyi2_history[2 * k - 1]);
    max_diff = std::max(max_diff, d);
    if (!sampled(k, job)) continue;
    Row r = base_row(coarse);
    r.T = static_cast<double>(k) * coarse.params.dt;
    r.quantity = "S2_trotter_diff";
    r.value = d;
    r.flagged = !coarse.converged() || !fine.converged();
    rows.push_back(r);
  }
  return rows;
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(count);
  auto body = [&](std::size_t w) {
    for (std::size_t i = w; i < count; i += workers) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body, w);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json summary_json(const ExperimentConfig& c, const std::vector<PointSummary>& points) {
  json pts = json::array();
  for (const auto& p : points) {
    json e = {{"point", p.label}, {"max_trace_drift", p.max_trace_drift}, {"wall_seconds", p.wall_seconds}};
    if (p.trotter_max_ds2) e["trotter_max_dS2"] = *p.trotter_max_ds2;
    pts.push_back(e);
  }
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(c.hash()));
  return {{"command", command_name(c.command)}, {"config_hash", hash}, {"points", pts}};
}

// ---------------------------------------------------------------------------
// Commands

RunReport run_influence(const ExperimentConfig& c) {
  const auto& job = c.influence;
  struct Point {
    IsingParams p;
    std::size_t cap;
  };
  std::vector<Point> grid;
  for (double h : job.h)
    for (double g : job.g)
      for (std::size_t cap : job.bond_cap) {
        IsingParams p{job.J, h, g, job.dt};
        try {
          p.validate();
        } catch (const std::invalid_argument& e) {
          fail("influence", e.what());
        }
        grid.push_back({p, cap});
      }

  std::vector<PointResult> results(grid.size());
  parallel_for(grid.size(), c.workers, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const auto ckpt = checkpoint_path_for(c, grid[i].p, grid[i].cap);
    TemporalMps l = contract_influence(grid[i].p, job.n_t_min, grid[i].cap, c.drift_threshold);
    PointResult& out = results[i];
    out.rows = sample_rows(l, job);
    auto more = influence_rows(l, job, job.n_t_max, ckpt);
    out.rows.insert(out.rows.end(), more.begin(), more.end());
    save_checkpoint(l, ckpt);
    out.summary.label = point_label(grid[i].p, grid[i].cap);
    out.summary.max_trace_drift = max_drift(out.rows);
    if (job.trotter_pair) {
      double diff = 0.0;
      auto pair_rows = trotter_pair_rows(l, job, c.drift_threshold, diff);
      out.rows.insert(out.rows.end(), pair_rows.begin(), pair_rows.end());
      out.summary.trotter_max_ds2 = diff;
    }
    out.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  RunReport report;
  for (auto& r : results) {
    report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
    report.points.push_back(r.summary);
  }
  return report;
}

RunReport run_toy(const ExperimentConfig& c) {
  const auto& job = c.toy;
  RunReport report;
  std::vector<double> grid;
  const auto steps = static_cast<std::size_t>(std::floor((job.T_max - job.T_min) / job.T_step + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) grid.push_back(job.T_min + static_cast<double>(i) * job.T_step);

  json extrema = json::array();
  for (std::size_t mi = 0; mi < job.models.size(); ++mi) {
    const auto& model = job.models[mi];
    const std::string prefix = "toy" + std::to_string(mi) + "_" + to_string(model.variant) + "_";
    for (auto [n, m] : job.delta) {
      for (double T : grid) {
        Row r;
        r.T = T;
        r.quantity = prefix + "Delta";
        r.n = n;
        r.m = m;
        r.value = delta_nm_toy(model, T, n, m);
        report.rows.push_back(r);
      }
      if (grid.size() >= 3) {
        json found = json::array();
        for (const auto& e : scan_extrema(model, n, m, grid))
          found.push_back({{"T", e.T}, {"kind", e.kind == ExtremumKind::max ? "max" : "min"}});
        extrema.push_back({{"model", mi}, {"variant", to_string(model.variant)}, {"n", n}, {"m", m}, {"extrema", found}});
      }
    }
    for (double n : job.forward_backward) {
      for (double T : grid) {
        Row r;
        r.T = T;
        r.quantity = prefix + "S_L";
        r.n = n;
        r.value = forward_backward_renyi_toy(model, T, n);
        report.rows.push_back(r);
      }
    }
  }
  report.fit_json = extrema.dump(2);
  return report;
}

RunReport run_echo(const ExperimentConfig& c) {
  const auto& job = c.echo;
  std::vector<EchoConfig> grid;
  for (std::size_t L : job.L)
    for (std::size_t cap : job.bond_cap) {
      EchoConfig e;
      e.L = L;
      e.params = {job.J, job.h, job.g, job.dt};
      e.bond_cap = cap;
      e.t_max = job.t_max;
      try {
        e.validate();
      } catch (const std::invalid_argument& err) {
        fail("echo", err.what());
      }
      grid.push_back(e);
    }
  std::vector<PointResult> results(grid.size());
  std::vector<json> fits(grid.size());
  parallel_for(grid.size(), c.workers, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const AmplitudeCurve curve = amplitude_curve(grid[i]);
    auto& out = results[i];
    for (const auto& s : curve.samples) {
      Row r;
      r.J = grid[i].params.J;
      r.h = grid[i].params.h;
      r.g = grid[i].params.g;
      r.dt = grid[i].params.dt;
      r.bond_cap = grid[i].bond_cap;
      r.T = s.t;
      r.quantity = "log_abs2_A";
      r.n = static_cast<double>(grid[i].L);
      r.value = s.log_abs2;
      r.flagged = s.flagged;
      out.rows.push_back(r);
    }
    std::ostringstream label;
    label << "L=" << grid[i].L << " " << point_label(grid[i].params, grid[i].bond_cap);
    out.summary.label = label.str();
    if (job.fit_window) {
      const ExponentFit f = diffusive_exponent(curve, job.fit_window->first, job.fit_window->second);
      fits[i] = {{"point", label.str()}, {"beta", f.beta}, {"beta_error", f.beta_error},
                 {"prefactor", f.prefactor}, {"converged", f.converged},
                 {"formatted", format_value_error(f.beta, f.beta_error)}};
    }
    out.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  RunReport report;
  json all = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    report.rows.insert(report.rows.end(), results[i].rows.begin(), results[i].rows.end());
    report.points.push_back(results[i].summary);
    if (!fits[i].is_null()) all.push_back(fits[i]);
  }
  if (job.fit_window) report.fit_json = all.dump(2);
  return report;
}

std::optional<double> cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<Row> read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: fit.input: cannot open " + path.string());
  std::vector<Row> rows;
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kCsvHeader) throw std::runtime_error(path.string() + ": unexpected CSV header");
      header = true;
      continue;
    }
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) c.push_back(tok);
    if (!line.empty() && line.back() == ',') c.emplace_back();
    if (c.size() != 13) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 13 columns");
    try {
      Row r;
      r.J = cell(c[0]);
      r.h = cell(c[1]);
      r.g = cell(c[2]);
      r.dt = cell(c[3]);
      if (!c[4].empty()) r.bond_cap = std::stoull(c[4]);
      r.T = std::stod(c[5]);
      r.quantity = c[6];
      r.n = cell(c[7]);
      r.m = cell(c[8]);
      r.t_l = cell(c[9]);
      r.delta_t = cell(c[10]);
      r.value = std::stod(c[11]);
      r.flagged = c[12] == "1";
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

json fit_json(const FitResult& f) {
  json errs = json::array();
  for (double e : f.errors) errs.push_back(std::isfinite(e) ? json(e) : json(nullptr));
  json formatted = json::array();
  for (std::size_t i = 0; i < f.params.size(); ++i) formatted.push_back(format_value_error(f.params[i], f.errors[i]));
  return {{"kind", to_string(f.kind)}, {"params", f.params}, {"errors", errs}, {"formatted", formatted},
          {"has_offset", f.has_offset}, {"rss", f.rss}, {"samples", f.samples},
          {"aic", std::isfinite(f.aic()) ? json(f.aic()) : json("-inf")}, {"converged", f.converged},
          {"iterations", f.iterations}, {"diagnostics", f.diagnostics}};
}

RunReport run_fit(const ExperimentConfig& c) {
  const auto& job = c.fit;
  const auto rows = read_csv(job.input);
  // Curves keyed by their parameter columns, in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> curves;
  std::size_t skipped_flagged = 0;
  for (const auto& r : rows) {
    if (r.quantity != job.quantity) continue;
    if (job.n && (!r.n || *r.n != *job.n)) continue;
    if (job.m && (!r.m || *r.m != *job.m)) continue;
    if (r.flagged) {
      ++skipped_flagged;
      continue;
    }
    std::ostringstream key;
    auto put = [&](const char* name, const std::optional<double>& v) {
      if (v) key << name << "=" << *v << " ";
    };
    put("J", r.J);
    put("h", r.h);
    put("g", r.g);
    put("dt", r.dt);
    if (r.bond_cap) key << "bond_cap=" << *r.bond_cap << " ";
    put("t_l", r.t_l);
    const std::string k = key.str();
    if (!curves.count(k)) order.push_back(k);
    curves[k].first.push_back(r.delta_t ? *r.delta_t : r.T);
    curves[k].second.push_back(r.value);
  }
  if (order.empty()) fail("fit.quantity", "no unflagged rows match '" + job.quantity + "'");

  FitOptions opt;
  opt.derivative_mode = job.derivative_mode;
  opt.include_offset = job.include_offset;
  std::mt19937_64 rng(c.seed);
  json groups = json::array();
  for (const auto& k : order) {
    auto [x, y] = curves.at(k);
    // Rows from a sweep arrive sorted; sort anyway so hand-made CSVs work.
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> xs, ys;
    for (std::size_t i : idx) {
      if (job.upper_bound && x[i] > *job.upper_bound) continue;
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
    json g = {{"curve", k}, {"samples", xs.size()}};
    json fits = json::array();
    for (FitKind kind : job.kinds) {
      if (job.lower_bounds.empty()) {
        fits.push_back(fit_json(fit_model(kind, xs, ys, opt)));
      } else {
        const FitEnsemble e = window_ensemble(kind, xs, ys, job.lower_bounds, job.upper_bound.value_or(xs.back()), opt);
        json members = json::array();
        for (const auto& m : e.members) members.push_back({{"lower_bound", m.lower_bound}, {"fit", fit_json(m.fit)}});
        json formatted = json::array();
        for (std::size_t i = 0; i < e.mean.size(); ++i) formatted.push_back(format_value_error(e.mean[i], e.error[i]));
        fits.push_back({{"kind", to_string(kind)}, {"mean", e.mean}, {"error", e.error}, {"formatted", formatted},
                        {"failures", e.failures}, {"trend_slope", e.trend_slope}, {"members", members}});
      }
    }
    g["fits"] = fits;
    if (job.kinds.size() > 1 && !job.lower_bounds.empty()) {
      const WinLoss w = compare_over_windows(job.kinds, xs, ys, job.lower_bounds, job.upper_bound.value_or(xs.back()), opt);
      g["aic_win_loss"] = format_win_loss(w);
    }
    if (job.monte_carlo_trials > 0) {
      const FitResult base = fit_model(job.kinds.front(), xs, ys, opt);
      std::normal_distribution<double> noise(0.0, job.monte_carlo_noise);
      std::vector<std::vector<double>> draws(base.params.size());
      std::size_t failed = 0;
      for (std::size_t t = 0; t < job.monte_carlo_trials; ++t) {
        std::vector<double> yn(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
          // In derivative mode the model has no offset; the synthetic curve
          // is the fitted non-derivative model, which is what the data encode.
          yn[i] = base.evaluate(xs[i]) + noise(rng);
        }
        const FitResult f = fit_model(job.kinds.front(), xs, yn, opt);
        if (!f.converged) {
          ++failed;
          continue;
        }
        for (std::size_t p = 0; p < f.params.size(); ++p) draws[p].push_back(f.params[p]);
      }
      json mean = json::array(), sd = json::array();
      for (const auto& d : draws) {
        double m = 0.0, v = 0.0;
        for (double s : d) m += s;
        m /= std::max<std::size_t>(1, d.size());
        for (double s : d) v += (s - m) * (s - m);
        v = d.size() > 1 ? v / static_cast<double>(d.size() - 1) : 0.0;
        mean.push_back(m);
        sd.push_back(std::sqrt(v));
      }
      g["monte_carlo"] = {{"trials", job.monte_carlo_trials}, {"noise", job.monte_carlo_noise},
                          {"failed", failed}, {"mean", mean}, {"std", sd}};
    }
    groups.push_back(g);
  }
  RunReport report;
  json doc = {{"quantity", job.quantity}, {"skipped_flagged_rows", skipped_flagged}, {"curves", groups}};
  report.fit_json = doc.dump(2);
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical); }

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig c;
  c.command = parse_command(j);
  if (const json* v = member(j, "out")) {
    if (!v->is_string() || v->get<std::string>().empty()) fail("out", "expected a directory path");
    c.out = v->get<std::string>();
  }
  opt_count(j, "workers", "config", c.workers);
  opt_number(j, "drift_threshold", "config", c.drift_threshold);
  if (const json* v = member(j, "seed")) c.seed = read_count(*v, "seed");
  if (c.workers == 0) fail("workers", "must be >= 1");
  if (!(c.drift_threshold > 0)) fail("drift_threshold", "must be positive");

  const char* section = nullptr;
  switch (c.command) {
    case Command::influence: section = "influence"; break;
    case Command::toy: section = "toy"; break;
    case Command::echo: section = "echo"; break;
    case Command::fit: section = "fit"; break;
  }
  const json* s = member(j, section);
  if (!s) fail(section, "section missing for this command");
  switch (c.command) {
    case Command::influence: parse_influence(*s, c.influence); break;
    case Command::toy: parse_toy(*s, c.toy); break;
    case Command::echo: parse_echo(*s, c.echo); break;
    case Command::fit: parse_fit(*s, c.fit); break;
  }
  c.canonical = canonical_text(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
  if (o.out) c.out = *o.out;
  if (o.workers) {
    if (*o.workers == 0) fail("workers", "must be >= 1");
    c.workers = *o.workers;
  }
  if (o.drift_threshold) {
    if (!(*o.drift_threshold > 0)) fail("drift_threshold", "must be positive");
    c.drift_threshold = *o.drift_threshold;
  }
  if (o.seed) c.seed = *o.seed;
  c.canonical = canonical_text(c);
}

std::string format_row(const Row& r) {
  std::string s;
  auto opt = [&](const std::optional<double>& v) {
    if (v) s += num(*v);
    s += ',';
  };
  opt(r.J);
  opt(r.h);
  opt(r.g);
  opt(r.dt);
  if (r.bond_cap) s += std::to_string(*r.bond_cap);
  s += ',';
  s += num(r.T) + ',' + r.quantity + ',';
  opt(r.n);
  opt(r.m);
  opt(r.t_l);
  opt(r.delta_t);
  s += num(r.value) + ',' + (r.flagged ? "1" : "0");
  return s;
}

void write_csv(const std::filesystem::path& path, std::uint64_t config_hash, const std::vector<Row>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
  f << "# config_hash=" << hash << '\n' << kCsvHeader << '\n';
  for (const auto& r : rows) f << format_row(r) << '\n';
}

std::filesystem::path checkpoint_path_for(const ExperimentConfig& c, const IsingParams& p, std::size_t bond_cap) {
  std::ostringstream key;
  key << num(p.J) << ',' << num(p.h) << ',' << num(p.g) << ',' << num(p.dt) << ',' << bond_cap;
  char name[48];
  std::snprintf(name, sizeof name, "ckpt_%016llx.bin", static_cast<unsigned long long>(fnv1a(key.str())));
  return c.out / name;
}

std::vector<Row> influence_rows(TemporalMps& l, const InfluenceJob& job, std::size_t n_t_last,
                                const std::filesystem::path& checkpoint_path) {
  std::vector<Row> rows;
  while (l.n_t() < n_t_last) {
    extend(l, 1);
    if (sampled(l.n_t(), job)) {
      auto r = sample_rows(l, job);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    if (job.checkpoint_every && l.n_t() % job.checkpoint_every == 0 && !checkpoint_path.empty()) {
      save_checkpoint(l, checkpoint_path);
    }
  }
  return rows;
}

RunReport run(const ExperimentConfig& c) {
  ensure_writable(c.out);
  RunReport report;
  std::string stem;
  switch (c.command) {
    case Command::influence: report = run_influence(c); stem = "influence"; break;
    case Command::toy: report = run_toy(c); stem = "toy"; break;
    case Command::echo: report = run_echo(c); stem = "echo"; break;
    case Command::fit: report = run_fit(c); stem = "fit"; break;
  }
  if (c.command != Command::fit) write_csv(c.out / (stem + ".csv"), c.hash(), report.rows);
  if (!report.fit_json.empty()) {
    const char* name = c.command == Command::toy ? "toy_extrema.json"
                       : c.command == Command::echo ? "echo_fits.json" : "fit_report.json";
    write_text(c.out / name, report.fit_json + "\n");
  }
  write_text(c.out / "summary.json", summary_json(c, report.points).dump(2) + "\n");
  return report;
}

RunReport resume(const ExperimentConfig& c, const ResumeRequest& req) {
  if (c.command != Command::influence) fail("command", "resume needs an influence config");
  TemporalMps l = load_checkpoint(req.checkpoint);
  auto check = [&](const char* name, const std::optional<double>& given, double stored) {
    if (given && *given != stored) {
      std::ostringstream msg;
      msg << "resume: --param-" << name << " " << *given << " disagrees with the checkpoint value " << stored;
      throw ConfigError(msg.str());
    }
  };
  check("J", req.J, l.params.J);
  check("h", req.h, l.params.h);
  check("g", req.g, l.params.g);
  check("dt", req.dt, l.params.dt);

  const auto& job = c.influence;
  const bool in_grid = l.params.J == job.J && l.params.dt == job.dt &&
                       std::find(job.h.begin(), job.h.end(), l.params.h) != job.h.end() &&
                       std::find(job.g.begin(), job.g.end(), l.params.g) != job.g.end() &&
                       std::find(job.bond_cap.begin(), job.bond_cap.end(), l.bond_cap) != job.bond_cap.end();
  if (!in_grid) throw ConfigError("resume: checkpoint parameters (" + point_label(l.params, l.bond_cap) + ") are not in the config grid");
  l.drift_threshold = c.drift_threshold;

  RunReport report;
  ensure_writable(c.out);
  if (req.extend == 0) return report;
  const auto start = std::chrono::steady_clock::now();
  report.rows = influence_rows(l, job, l.n_t() + req.extend, {});
  save_checkpoint(l, req.checkpoint);
  PointSummary s;
  s.label = point_label(l.params, l.bond_cap);
  s.max_trace_drift = max_drift(report.rows);
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.points.push_back(s);
  write_csv(c.out / "resume.csv", c.hash(), report.rows);
  write_text(c.out / "summary.json", summary_json(c, report.points).dump(2) + "\n");
  return report;
}

}  // namespace tempent
