// critsys: batch driver for the coupled critical system toolkit.
// Subcommands: constants, sync, flow, multi, sweep, pohozaev, bl.
// Exit codes: 0 all assertions pass, 1 scientific assertion failure,
// 2 configuration/usage error.

#include "critsys/diagnostics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace critsys;

namespace {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration, one pair per line, '#' comments.
class Config {
 public:
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error(path + ":" + std::to_string(lineno) +
                           ": expected key=value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  void set(const std::string& k, const std::string& v) { kv_[k] = v; }
  bool has(const std::string& k) const { return kv_.count(k) != 0; }

  std::string gets(const std::string& k, const std::string& def) const {
    auto it = kv_.find(k);
    return it == kv_.end() ? def : it->second;
  }
  double getd(const std::string& k, double def) const {
    auto it = kv_.find(k);
    if (it == kv_.end()) return def;
    try {
      std::size_t pos = 0;
      const double x = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(k);
      return x;
    } catch (const std::exception&) {
      throw config_error("config key '" + k + "': not a number: " + it->second);
    }
  }
  int geti(const std::string& k, int def) const {
    const double x = getd(k, def);
    if (x != static_cast<int>(x))
      throw config_error("config key '" + k + "': not an integer");
    return static_cast<int>(x);
  }
  std::vector<double> getlist(const std::string& k,
                              std::vector<double> def) const {
    auto it = kv_.find(k);
    if (it == kv_.end()) return def;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw config_error("config key '" + k + "': bad list entry: " + tok);
      }
    }
    return out;
  }

  // Canonical text (sorted keys) for the manifest content hash.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : kv_) s += k + "=" + v + "\n";
    return s;
  }
  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : kv_) j[k] = v;
    return j;
  }

 private:
  static std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  }
  std::map<std::string, std::string> kv_;
};

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

SystemParams params_from(const Config& c) {
  SystemParams p;
  p.N = c.geti("N", 4);
  p.mu1 = c.getd("mu1", 1.0);
  p.mu2 = c.getd("mu2", 1.0);
  p.lambda = c.getd("lambda", -1.0);
  const double def_half = (p.N > 2) ? critical_exponent(p.N) / 2.0 : 0.0;
  p.alpha = c.getd("alpha", def_half);
  p.beta = c.getd("beta", def_half);
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw config_error(e.what());
  }
  return p;
}

ReducedGeometry geometry_from(const Config& c, int N) {
  ReducedGeometry geom;
  geom.N = N;
  const std::string kind = c.gets("geometry", "annulus");
  if (kind == "annulus") {
    geom.kind = GeometryKind::radial_annulus;
    geom.a = c.getd("a", 1.0);
    geom.b = c.getd("b", 2.0);
  } else if (kind == "ball") {
    geom.kind = GeometryKind::radial_ball;
    geom.a = 0.0;
    geom.b = c.getd("b", 1.0);
  } else if (kind == "biradial") {
    geom.kind = GeometryKind::biradial;
    geom.a = c.getd("a", 0.5);
    geom.b = c.getd("b", 1.5);
    geom.a2 = c.getd("a2", 0.5);
    geom.b2 = c.getd("b2", 1.5);
    geom.m = c.geti("m", N / 2);
    geom.n = c.geti("n", N - N / 2);
  } else {
    throw config_error("geometry must be annulus, ball, or biradial");
  }
  try {
    geom.validate();
  } catch (const std::exception& e) {
    throw config_error(e.what());
  }
  return geom;
}

FlowConfig flow_from(const Config& c) {
  FlowConfig f;
  f.step = c.getd("step", 1.0);
  f.max_iters = c.geti("max_iters", 20000);
  f.grad_tol = c.getd("grad_tol", 1e-6);
  f.nehari_tol = c.getd("nehari_tol", 1e-8);
  f.seed = static_cast<unsigned>(c.geti("seed", 1234));
  f.snapshot_count = c.geti("snapshot_count", 8);
  return f;
}

struct OutputDir {
  fs::path dir;
  explicit OutputDir(const std::string& d) : dir(d) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory: " + d);
  }
  std::ofstream open(const std::string& name) const {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw config_error("cannot write " + (dir / name).string());
    return f;
  }
};

void write_manifest(const OutputDir& out, const Config& cfg,
                    const std::string& command, const json& results) {
  json m;
  m["command"] = command;
  m["config"] = cfg.to_json();
  m["config_hash"] = fnv1a_hex(cfg.canonical());
  m["version"] = "critsys 1.0";
  m["results"] = results;
  auto f = out.open("manifest.json");
  f << m.dump(2) << "\n";
}

void write_fields(const OutputDir& out, const std::string& name,
                  const PairState& st) {
  auto f = out.open(name);
  const Grid& g = *st.u.grid;
  if (g.radial()) {
    f << "r,u,v\n";
    for (int i = 0; i < g.ax1.nodes; ++i)
      f << num(g.ax1.x[i]) << "," << num(st.u.v[g.idx(i)]) << ","
        << num(st.v.v[g.idx(i)]) << "\n";
  } else {
    f << "s,t,u,v\n";
    for (int j = 0; j < g.ax2.nodes; ++j)
      for (int i = 0; i < g.ax1.nodes; ++i)
        f << num(g.ax1.x[i]) << "," << num(g.ax2.x[j]) << ","
          << num(st.u.v[g.idx(i, j)]) << "," << num(st.v.v[g.idx(i, j)])
          << "\n";
  }
}

void write_trace(const OutputDir& out, const FlowReport& rep) {
  auto f = out.open("trace.csv");
  f << "iter,energy,gradnorm\n";
  for (std::size_t i = 0; i < rep.energy_trace.size(); ++i)
    f << i + 1 << "," << num(rep.energy_trace[i]) << ","
      << num(rep.grad_norm_trace[i]) << "\n";
}

json concentration_report(const FlowReport& rep, const SystemParams& p) {
  json eps = json::array();
  for (const PairState& snap : rep.snapshots) {
    try {
      const double ts = p.two_star();
      double total = integrate2(snap.u, snap.v, [&](double a, double b) {
        return p.mu1 * apow(a, ts) + p.mu2 * apow(b, ts) +
               ts * std::max(p.lambda, 0.0) * apow(a, p.alpha) * apow(b, p.beta);
      });
      auto [e, c] = concentration_function(snap, p, 0.5 * total);
      eps.push_back({{"epsilon", e}, {"center", c}});
    } catch (const std::exception&) {
      eps.push_back(nullptr);
    }
  }
  return eps;
}

// ---- subcommands ----------------------------------------------------------

int cmd_constants(const Config& cfg, const OutputDir& out) {
  const SystemParams p = params_from(cfg);
  json r;
  r["two_star"] = p.two_star();
  r["S"] = sobolev_constant(p.N);
  r["nehari_inf_value"] =
      p.lambda < 0.0 ? json(nehari_inf_value(p)) : json(nullptr);
  const ShatBound sb = shat_lower_bound(p);
  r["shat_m"] = sb.m;
  r["shat_bound"] = sb.bound;
  json budgets;
  for (double om : {1.0, 2.0, 4.0}) budgets[num(om)] = energy_budget(p, om);
  budgets["inf"] =
      std::isinf(energy_budget(p, std::numeric_limits<double>::infinity()))
          ? json("inf")
          : json(0.0);
  r["energy_budget"] = budgets;
  std::printf("%s\n", r.dump(2).c_str());
  write_manifest(out, cfg, "constants", r);
  return 0;
}

int cmd_sync(const Config& cfg, const OutputDir& out) {
  const SystemParams p = params_from(cfg);
  const auto roots = sync_roots(p, cfg.getd("r_max", 1e3));
  auto f = out.open("sync.csv");
  f << "r,s,t,residual1,residual2\n";
  bool ok = true;
  for (const auto& root : roots) {
    f << num(root.r) << "," << num(root.s) << "," << num(root.t) << ","
      << num(root.residual1) << "," << num(root.residual2) << "\n";
    ok = ok && std::abs(root.residual1) <= 1e-10 &&
         std::abs(root.residual2) <= 1e-10;
  }
  json r;
  r["roots"] = roots.size();
  r["residuals_ok"] = ok;
  write_manifest(out, cfg, "sync", r);
  return ok ? 0 : 1;
}

int cmd_flow(const Config& cfg, const OutputDir& out) {
  const SystemParams p = params_from(cfg);
  const GridPtr grid = build_grid(geometry_from(cfg, p.N),
                                  cfg.geti("resolution", 128));
  const FlowConfig fc = flow_from(cfg);
  auto [st, rep] = flow_to_critical(genus_init(grid, 1, p).front(), p, fc);

  write_fields(out, "fields.csv", st);
  write_trace(out, rep);
  json r;
  r["converged"] = rep.converged;
  r["iterations"] = rep.iterations;
  r["energy"] = rep.final_energy;
  r["gradnorm"] = rep.final_grad_norm;
  r["norm_sq"] = rep.final_norm_sq;
  r["diagnostic"] = rep.diagnostic;
  bool ok = rep.converged;
  if (grid->radial()) {
    const double poho = pohozaev_residual(st, p);
    r["pohozaev"] = poho;
    ok = ok && std::abs(poho) <= 5e-3;
  }
  if (!rep.converged) r["concentration"] = concentration_report(rep, p);
  write_manifest(out, cfg, "flow", r);
  return ok ? 0 : 1;
}

int cmd_multi(const Config& cfg, const OutputDir& out) {
  const SystemParams p = params_from(cfg);
  const GridPtr grid = build_grid(geometry_from(cfg, p.N),
                                  cfg.geti("resolution", 128));
  const FlowConfig fc = flow_from(cfg);
  const int n = cfg.geti("n_starts", 3);
  const auto found = multi_start(grid, p, n, fc);

  json states = json::array();
  for (std::size_t k = 0; k < found.size(); ++k) {
    const auto& [st, rep] = found[k];
    write_fields(out, "fields_" + std::to_string(k) + ".csv", st);
    states.push_back({{"energy", st.energy},
                      {"gradnorm", rep.final_grad_norm},
                      {"norm_sq", rep.final_norm_sq},
                      {"diagnostic", rep.diagnostic}});
  }
  json r;
  r["requested"] = n;
  r["found"] = found.size();
  r["states"] = states;
  const bool ok = static_cast<int>(found.size()) >= n;
  if (!ok) {
    // Report the bubbling evidence from a fresh single run.
    auto [st, rep] = flow_to_critical(genus_init(grid, 1, p).front(), p, fc);
    r["concentration"] = concentration_report(rep, p);
    r["diagnostic"] = rep.diagnostic;
  }
  write_manifest(out, cfg, "multi", r);
  return ok ? 0 : 1;
}

int cmd_sweep(const Config& cfg, const OutputDir& out) {
  const SystemParams p = params_from(cfg);
  const GridPtr grid = build_grid(geometry_from(cfg, p.N),
                                  cfg.geti("resolution", 128));
  const FlowConfig fc = flow_from(cfg);
  const auto lambdas = cfg.getlist("lambdas", {-1.0, -10.0, -100.0, -1000.0});
  const auto records = separation_sweep(grid, p, lambdas, fc);

  auto f = out.open("sweep.csv");
  f << "lambda,overlap,energy,omega1_lo,omega1_hi,omega2_lo,omega2_hi\n";
  for (const auto& rec : records)
    f << num(rec.lambda) << "," << num(rec.overlap) << "," << num(rec.energy)
      << "," << num(rec.omega1_lo) << "," << num(rec.omega1_hi) << ","
      << num(rec.omega2_lo) << "," << num(rec.omega2_hi) << "\n";
  write_fields(out, "fields.csv", records.back().state);

  bool converged = true, monotone = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    converged = converged && records[i].converged;
    if (i > 0) monotone = monotone && records[i].overlap < records[i - 1].overlap;
  }
  const bool ratio_ok =
      records.back().overlap <= 1e-3 * records.front().overlap;
  json r;
  r["converged"] = converged;
  r["overlap_monotone"] = monotone;
  r["overlap_ratio"] = records.back().overlap / records.front().overlap;
  r["caveat"] =
      "warm-started minimizers presumed least-energy but not certified";
  write_manifest(out, cfg, "sweep", r);
  return (converged && monotone && ratio_ok) ? 0 : 1;
}

int cmd_pohozaev(const Config& cfg, const OutputDir& out) {
  const Config& c = cfg;
  const SystemParams p = params_from(c);
  const GridPtr grid = build_grid(geometry_from(c, p.N),
                                  c.geti("resolution", 128));
  const FlowConfig fc = flow_from(c);
  auto [st, rep] = flow_to_critical(genus_init(grid, 1, p).front(), p, fc);
  const double poho = pohozaev_residual(st, p);
  write_fields(out, "fields.csv", st);
  json r;
  r["converged"] = rep.converged;
  r["pohozaev"] = poho;
  write_manifest(out, cfg, "pohozaev", r);
  return (rep.converged && std::abs(poho) <= 5e-3) ? 0 : 1;
}

int cmd_bl(const Config& cfg, const OutputDir& out) {
  SystemParams p = params_from(cfg);
  ReducedGeometry geom;
  geom.kind = GeometryKind::radial_ball;
  geom.N = p.N;
  geom.a = 0.0;
  geom.b = cfg.getd("b", 6.0);
  const GridPtr grid = build_grid(geom, cfg.geti("resolution", 2048));
  const auto scales = cfg.getlist("bl_scales", {0.2, 0.1, 0.05, 0.025});

  PairState base(make_bump(grid, {0.55 * geom.b}, 0.25 * geom.b, 1.0),
                 make_bump(grid, {0.55 * geom.b}, 0.25 * geom.b, 0.7));

  auto f = out.open("deficits.csv");
  f << "scale,product,power,derivative\n";
  const auto dp = bl_deficit(BLKind::product, grid, base, scales, p);
  const auto dw = bl_deficit(BLKind::power, grid, base, scales, p);
  const auto dd = bl_deficit(BLKind::derivative, grid, base, scales, p);
  bool ok = true;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    f << num(scales[i]) << "," << num(dp[i]) << "," << num(dw[i]) << ","
      << num(dd[i]) << "\n";
    if (i > 0)
      ok = ok && dp[i] < dp[i - 1] && dw[i] < dw[i - 1] && dd[i] < dd[i - 1];
  }
  ok = ok && dp.back() <= 1e-3 * dp.front() && dw.back() <= 1e-3 * dw.front() &&
       dd.back() <= 1e-3 * dd.front();

  const long samples = cfg.geti("samples", 100000);
  const unsigned seed = static_cast<unsigned>(cfg.geti("seed", 20240817));
  const double eps = cfg.getd("epsilon", 0.5);
  const double c1 = bl_mixed_inequality_probe(p.alpha, p.beta, eps, samples, seed);
  const double c2 =
      bl_mixed_inequality_probe(p.alpha, p.beta, eps, 2 * samples, seed);
  const bool stable = std::abs(c2 - c1) <= 0.1 * std::max(c1, c2);
  json r;
  r["deficits_ok"] = ok;
  r["empirical_C"] = c1;
  r["empirical_C_doubled"] = c2;
  r["C_stable"] = stable;
  write_manifest(out, cfg, "bl", r);
  return (ok && stable) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nehari-flow toolkit for the coupled critical system"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  int seed = -1, resolution = -1;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "RNG seed override");
  app.add_option("--resolution", resolution, "grid resolution override");

  for (const char* name :
       {"constants", "sync", "flow", "multi", "sweep", "pohozaev", "bl"})
    app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg.load(config_path);
    if (seed >= 0) cfg.set("seed", std::to_string(seed));
    if (resolution >= 0) cfg.set("resolution", std::to_string(resolution));
    const OutputDir out(out_dir);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
      if (sub == "constants") return cmd_constants(cfg, out);
      if (sub == "sync") return cmd_sync(cfg, out);
      if (sub == "flow") return cmd_flow(cfg, out);
      if (sub == "multi") return cmd_multi(cfg, out);
      if (sub == "sweep") return cmd_sweep(cfg, out);
      if (sub == "pohozaev") return cmd_pohozaev(cfg, out);
      if (sub == "bl") return cmd_bl(cfg, out);
    } catch (const config_error&) {
      throw;
    } catch (const std::exception& e) {
      // Scientific failure inside a validated run: JSON error record, exit 1.
      json err;
      err["error"] = e.what();
      write_manifest(out, cfg, sub, err);
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
}
