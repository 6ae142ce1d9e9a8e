#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "nlc/nlc.hpp"

#ifndef NLC_VERSION
#define NLC_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string eps_tag(double e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", e);
  return std::string("eps") + buf;
}

struct Options {
  std::string config;
  std::string out;
  int threads = 0;
  long long seed = -1;
};

/// Output directory plus the inventory that ends up in the manifest.
class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), started_(utc_now()) {
    if (!o.out.empty()) dir_ = o.out;
    else if (const char* env = std::getenv("NLC_OUT_DIR"); env && *env) dir_ = env;
    else dir_ = "nlc_out";
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }

  void text(const std::string& name, const std::string& body) {
    fs::create_directories((dir_ / name).parent_path());
    nlc::io::write_text(dir_ / name, body);
    files_.push_back(name);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
  void state(const std::string& name, const nlc::SolverState& s) {
    fs::create_directories((dir_ / name).parent_path());
    nlc::io::write_state(dir_ / name, s);
    files_.push_back(name);
  }

  void manifest(const nlc::AppConfig& cfg, json extra = json::object()) {
    nlc::io::RunManifest m;
    m.command = command_;
    m.seed = cfg.solver.seed;
    m.config_hash = nlc::io::hex64(nlc::io::fnv1a(cfg.source.dump() + "\nseed=" + std::to_string(cfg.solver.seed)));
    m.code_version = NLC_VERSION;
    m.started = started_;
    m.finished = utc_now();
    m.files = files_;
    m.extra = std::move(extra);
    nlc::io::write_text(dir_ / "manifest.json", m.to_json().dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string started_;
  fs::path dir_;
  std::vector<std::string> files_;
};

nlc::AppConfig load(const Options& o) {
  nlc::AppConfig cfg = o.config.empty() ? nlc::parse_config(json::object()) : nlc::load_config(o.config);
  if (o.seed >= 0) cfg.set_seed(static_cast<std::uint64_t>(o.seed));
  int threads = o.threads;
  if (threads <= 0)
    if (const char* env = std::getenv("NLC_THREADS"); env && *env) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw nlc::ConfigError("NLC_THREADS", "not an integer");
      }
      if (threads < 1) throw nlc::ConfigError("NLC_THREADS", "must be >= 1");
    }
  cfg.set_threads(std::max(threads, 1));
  return cfg;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o) {
  const auto cfg = load(o);
  Run run("simulate", o);
  const auto data = nlc::make_initial_data(cfg.grid, cfg.initial, cfg.solver.epsilon_target, cfg.solver.seed,
                                           cfg.carleson());
  nlc::SolverState s = nlc::make_state(data.u0, data.d0);
  std::ostringstream diag;
  diag << "# nlc diagnostics v1\nstep,t,dt,max_divergence,sphere_deviation\n";
  auto log_state = [&](const nlc::SolverState& st) {
    diag << st.step_count << ',' << nlc::io::num(st.t) << ',' << nlc::io::num(st.diagnostics.dt_used) << ','
         << nlc::io::num(st.diagnostics.max_divergence) << ',' << nlc::io::num(st.diagnostics.sphere_deviation) << '\n';
  };
  run.state("snapshots/initial_state.nlcs", s);
  log_state(s);
  int written = 0;
  auto snapshot = [&](const nlc::SolverState& st) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshots/snapshot_%05d.nlcs", ++written);
    run.state(name, st);
  };
  int code = kExitOk;
  std::string halted;
  try {
    if (cfg.simulate.steps > 0) {
      for (int i = 1; i <= cfg.simulate.steps; ++i) {
        s = nlc::step(s, cfg.solver);
        log_state(s);
        if (i % cfg.simulate.snapshot_every == 0) snapshot(s);
      }
    } else {
      const int n = static_cast<int>(std::ceil(cfg.simulate.t_end / cfg.simulate.snapshot_interval - 1e-9));
      for (int i = 1; i <= n; ++i) {
        s = nlc::advance_to(std::move(s), cfg.solver, std::min(cfg.simulate.t_end, i * cfg.simulate.snapshot_interval),
                            [&](const nlc::SolverState& st) { log_state(st); });
        snapshot(s);
      }
    }
  } catch (const nlc::SolverHalt& h) {
    halted = h.what();
    run.state("snapshots/last_good.nlcs", h.last_good());
    code = kExitVerification;
    std::cerr << "simulate: " << halted << "\n";
  }
  run.text("diagnostics.csv", diag.str());
  run.manifest(cfg, {{"snapshots", written},
                     {"u0_bmo_minus1", data.u_bmo_minus1},
                     {"d0_bmo", data.d_bmo},
                     {"halted", halted}});
  std::cout << "simulate: " << written << " snapshots, t = " << s.t << ", output in " << run.dir().string() << "\n";
  return code;
}

// ---------------------------------------------------------------------------

std::string decay_plot(const nlc::DecayReport& rep, int k, int m) {
  std::vector<nlc::io::Curve> curves;
  for (const auto& r : rep.runs)
    for (const std::string field : {"u", "gradd"})
      if (const auto* s = r.find(k, m, field, nlc::NormKind::besov_sup, false))
        curves.push_back({field + " " + eps_tag(r.epsilon), s->samples});
  const std::string title = "d_t^" + std::to_string(k) + " grad^" + std::to_string(m) + " norms";
  return nlc::io::loglog_svg(title, curves, -0.5 * m - k);
}

int cmd_decay(const Options& o, bool plots) {
  const auto cfg = load(o);
  Run run("decay", o);
  const auto rep = nlc::run_campaign(cfg.grid, cfg.campaign, cfg.solver);
  for (const auto& r : rep.runs) run.text("norms_" + eps_tag(r.epsilon) + ".csv", nlc::io::norm_series_csv(r.series));
  run.json_file("verdict.json", nlc::io::to_json(rep));
  if (plots)
    for (const auto& od : cfg.campaign.orders)
      run.text("plots/decay_k" + std::to_string(od.k) + "_m" + std::to_string(od.m) + ".svg",
               decay_plot(rep, od.k, od.m));
  run.manifest(cfg, {{"exponents_pass", rep.exponents_pass}, {"constants_pass", rep.constants_pass}});
  std::cout << "decay: complete=" << rep.complete << " exponents_pass=" << rep.exponents_pass
            << " constants_pass=" << rep.constants_pass << ", output in " << run.dir().string() << "\n";
  for (const auto& r : rep.runs)
    for (const auto& f : r.fits)
      if (f.clean)
        std::cout << "  " << eps_tag(r.epsilon) << " " << f.field << " (k,m)=(" << f.k << "," << f.m
                  << ") alpha=" << f.fit.alpha << " expected=" << f.expected << (f.pass ? " PASS" : " FAIL")
                  << (f.note.empty() ? "" : " [" + f.note + "]") << "\n";
  return rep.complete && rep.exponents_pass && rep.constants_pass ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------

nlc::SnapshotSeries load_snapshots(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw nlc::ConfigError("--snapshots", "not a directory: " + dir.string());
  std::vector<nlc::SolverState> states;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".nlcs" && e.path().filename() != "last_good.nlcs")
      states.push_back(nlc::io::read_state(e.path()));
  std::sort(states.begin(), states.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  nlc::SnapshotSeries out;
  for (const auto& s : states) out.push(s);
  if (out.times.size() < 2) throw nlc::ConfigError("--snapshots", "need at least two snapshots");
  return out;
}

/// CSV rows "group,x0,x1[,x2]": the first seed of a group is the base, the others its partners.
nlc::TrajectorySet load_seeds(const fs::path& path, int n_dims) {
  std::istringstream in(nlc::io::read_text(path));
  std::string line;
  nlc::TrajectorySet set;
  set.n_dims = n_dims;
  std::map<long, int> base;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#' || line.rfind("group", 0) == 0) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(cells, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw nlc::ConfigError(path.string() + ":" + std::to_string(row), "not a number: '" + cell + "'");
      }
    }
    if (static_cast<int>(v.size()) != n_dims + 1)
      throw nlc::ConfigError(path.string() + ":" + std::to_string(row), "expected group and " +
                                                                            std::to_string(n_dims) + " coordinates");
    nlc::Point p{0, 0, 0};
    for (int a = 0; a < n_dims; ++a) p[a] = v[a + 1];
    const int idx = static_cast<int>(set.seeds.size());
    set.seeds.push_back(p);
    const long g = std::lround(v[0]);
    if (auto it = base.find(g); it != base.end()) set.pairs.emplace_back(it->second, idx);
    else base[g] = idx;
  }
  if (set.pairs.empty()) throw nlc::ConfigError(path.string(), "no seed pairs (groups need at least two seeds)");
  return set;
}

json holder_json(const nlc::HolderFit& h, double eps, double T) {
  return {{"epsilon", eps},     {"T", T},
          {"alpha", h.alpha},   {"C", h.C},
          {"residual", h.residual}, {"pairs_used", h.pairs_used},
          {"pairs_excluded", h.pairs_excluded}};
}

std::string separation_plot(const nlc::TrajectorySet& tr, const std::string& label) {
  nlc::io::Curve c{label, {}};
  for (const auto& [a, b] : tr.pairs)
    c.points.emplace_back(nlc::separation(tr.paths[a].front(), tr.paths[b].front(), tr.n_dims),
                          nlc::separation(tr.paths[a].back(), tr.paths[b].back(), tr.n_dims));
  std::sort(c.points.begin(), c.points.end());
  return nlc::io::loglog_svg("pair separation at T against initial separation", {c}, 1.0);
}

int cmd_trajectory(const Options& o, const std::string& snapshots, const std::string& seeds, double T, double dt,
                   bool plots) {
  const auto cfg = load(o);
  Run run("trajectory", o);
  const auto& tc = cfg.trajectory;
  if (!snapshots.empty()) {
    const auto snaps = load_snapshots(snapshots);
    const nlc::Grid g = snaps.u.front().grid();
    auto set = seeds.empty() ? nlc::make_pair_seeds(g, tc.layout) : load_seeds(seeds, g.n_dims);
    const double t_end = T > 0.0 ? T : snaps.times.back();
    const double step = dt > 0.0 ? dt : std::min(tc.dt, snaps.min_spacing());
    if (t_end > snaps.times.back() + 1e-12) throw nlc::ConfigError("--T", "beyond the last snapshot");
    auto tr = nlc::integrate_flow(snaps, set.seeds, t_end, step, tc.drift);
    tr.pairs = set.pairs;
    run.text("paths.csv", nlc::io::paths_csv(tr));
    const auto h = nlc::holder_exponent(tr, tr.times.back(), tc.exclude_fraction * g.period);
    json j = {{"schema", "nlc.holder_verdict"}, {"schema_version", 1}, {"mode", "snapshots"},
              {"drift", tc.drift.enabled ? "nonstandard" : "none"}, {"runs", json::array({holder_json(h, 0.0, t_end)})}};
    run.json_file("holder.json", j);
    if (plots) run.text("plots/holder.svg", separation_plot(tr, "pairs"));
    run.manifest(cfg);
    std::cout << "trajectory: alpha=" << h.alpha << " over " << h.pairs_used << " pairs, output in "
              << run.dir().string() << "\n";
    return kExitOk;
  }
  auto c = tc;
  if (T > 0.0) c.T = T;
  if (dt > 0.0) c.dt = dt;
  const auto rep = nlc::run_trajectory_campaign(cfg.grid, c, cfg.solver);
  json runs = json::array();
  for (const auto& r : rep.runs) {
    if (!r.complete) {
      runs.push_back({{"epsilon", r.epsilon}, {"complete", false}, {"message", r.message}});
      continue;
    }
    run.text("paths_" + eps_tag(r.epsilon) + ".csv", nlc::io::paths_csv(r.paths));
    auto jr = holder_json(r.fit, r.epsilon, c.T);
    jr["complete"] = true;
    runs.push_back(jr);
    if (plots) run.text("plots/holder_" + eps_tag(r.epsilon) + ".svg", separation_plot(r.paths, eps_tag(r.epsilon)));
  }
  json j = {{"schema", "nlc.holder_verdict"}, {"schema_version", 1}, {"mode", "campaign"},
            {"drift", c.drift.enabled ? "nonstandard" : "none"}, {"runs", runs},
            {"kappa", rep.kappa}, {"holder_floor", c.holder_floor}, {"complete", rep.complete},
            {"floor_pass", rep.floor_pass}, {"pass", rep.pass}};
  run.json_file("holder.json", j);
  run.manifest(cfg, {{"pass", rep.pass}});
  std::cout << "trajectory: kappa=" << rep.kappa << " pass=" << rep.pass << ", output in " << run.dir().string()
            << "\n";
  for (const auto& r : rep.runs)
    std::cout << "  " << eps_tag(r.epsilon) << " alpha=" << r.fit.alpha << " pairs=" << r.fit.pairs_used
              << (r.complete ? "" : " incomplete: " + r.message) << "\n";
  return rep.pass ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------

int cmd_verify(const Options& o, const std::string& fault) {
  const auto cfg = load(o);
  Run run("verify", o);
  nlc::VerifyOptions vo;
  vo.grid = cfg.grid;
  vo.threads = cfg.campaign.threads;
  if (fault == "partition") vo.renormalize_partition = false;
  else if (!fault.empty()) throw nlc::ConfigError("--inject-fault", "unknown fault '" + fault + "' (partition)");
  const auto rep = nlc::run_verify(vo);
  for (const auto& p : rep.properties) {
    std::printf("%-4s %-30s %-16s value=%-12.5g %s %g\n", p.pass ? "PASS" : "FAIL", p.name.c_str(), p.area.c_str(),
                p.value, p.relation.c_str(), p.threshold);
  }
  std::printf("%zu properties, %s\n", rep.properties.size(), rep.pass ? "all pass" : "FAILURES");
  auto j = nlc::to_json(rep);
  j["injected_fault"] = fault.empty() ? json(nullptr) : json(fault);
  run.json_file("verify.json", j);
  run.manifest(cfg, {{"pass", rep.pass}});
  return rep.pass ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------

int cmd_report(const std::string& dir_name) {
  const fs::path dir(dir_name);
  if (!fs::is_directory(dir)) throw nlc::ConfigError("report", "not a directory: " + dir_name);
  std::ostringstream md;
  bool any = false, all_pass = true;
  if (fs::exists(dir / "verdict.json")) {
    any = true;
    const auto rep = nlc::io::decay_report_from_json(json::parse(nlc::io::read_text(dir / "verdict.json")));
    all_pass = all_pass && rep.complete && rep.exponents_pass && rep.constants_pass;
    md << "## Decay campaign\n\ncomplete: " << rep.complete << ", exponents_pass: " << rep.exponents_pass
       << ", constants_pass: " << rep.constants_pass << "\n\n| epsilon | field | (k,m) | alpha | expected | residual | verdict |\n|---|---|---|---|---|---|---|\n";
    for (const auto& r : rep.runs)
      for (const auto& f : r.fits)
        md << "| " << r.epsilon << " | " << f.field << " | (" << f.k << "," << f.m << ") | "
           << (f.evaluated ? nlc::io::num(f.fit.alpha) : "-") << " | " << f.expected + 0.0 << " | "
           << (f.evaluated ? nlc::io::num(f.fit.residual) : "-") << " | "
           << (f.note.empty() ? (f.clean ? (f.pass ? "pass" : "fail") : (f.pass ? "within tol" : "outside tol"))
                              : f.note)
           << " |\n";
    md << "\n| field | (k,m) | norm | constants | ratio | pass |\n|---|---|---|---|---|---|\n";
    for (const auto& s : rep.sweep) {
      md << "| " << s.field << " | (" << s.k << "," << s.m << ") | " << nlc::to_string(s.kind) << " |";
      for (double c : s.constants) md << ' ' << c;
      md << " | " << s.ratio << " | " << (s.pass ? "yes" : "no") << " |\n";
    }
    md << "\n";
  }
  if (fs::exists(dir / "holder.json")) {
    any = true;
    const auto j = json::parse(nlc::io::read_text(dir / "holder.json"));
    if (j.contains("pass")) all_pass = all_pass && j["pass"].get<bool>();
    md << "## Trajectories\n\n| epsilon | alpha | C | residual | pairs |\n|---|---|---|---|---|\n";
    for (const auto& r : j.at("runs"))
      if (r.contains("alpha"))
        md << "| " << r["epsilon"] << " | " << r["alpha"] << " | " << r["C"] << " | " << r["residual"] << " | "
           << r["pairs_used"] << " |\n";
    if (j.contains("kappa")) md << "\nkappa: " << j["kappa"] << ", pass: " << j["pass"] << "\n";
    md << "\n";
  }
  if (fs::exists(dir / "verify.json")) {
    any = true;
    const auto j = json::parse(nlc::io::read_text(dir / "verify.json"));
    all_pass = all_pass && j.at("pass").get<bool>();
    md << "## Property suite\n\n| property | value | bound | pass |\n|---|---|---|---|\n";
    for (const auto& p : j.at("properties"))
      md << "| " << p["name"].get<std::string>() << " | " << p["value"] << " | " << p["relation"].get<std::string>()
         << ' ' << p["threshold"] << " | " << (p["pass"].get<bool>() ? "yes" : "no") << " |\n";
    md << "\n";
  }
  if (!any) throw nlc::ConfigError("report", "no verdict.json, holder.json or verify.json in " + dir_name);
  nlc::io::write_text(dir / "report.md", "# nlc report\n\n" + md.str());
  std::cout << md.str();
  return all_pass ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral simulator and estimate harnesses for the simplified nematic liquid crystal flow"};
  app.set_version_flag("--version", std::string(NLC_VERSION));
  app.require_subcommand(1);

  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "JSON config file (defaults apply when omitted)");
    sub->add_option("-o,--out", o.out, "output directory (env NLC_OUT_DIR, default ./nlc_out)");
    sub->add_option("-j,--threads", o.threads, "worker threads (env NLC_THREADS, default 1)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "overrides solver.seed")->check(CLI::NonNegativeNumber);
  };

  auto* sim = app.add_subcommand("simulate", "evolve initial data and write snapshots");
  common(sim);
  bool no_plots = false;
  auto* dec = app.add_subcommand("decay", "decay-rate campaign over epsilon");
  common(dec);
  dec->add_flag("--no-plots", no_plots, "skip SVG output");
  auto* tra = app.add_subcommand("trajectory", "flow-map integration and Hoelder regression");
  common(tra);
  std::string snaps, seeds;
  double T = 0.0, dt = 0.0;
  tra->add_option("--snapshots", snaps, "directory of state snapshots from `simulate`");
  tra->add_option("--seeds", seeds, "seed CSV (group,x0,x1[,x2]); default pair layout from the config");
  tra->add_option("--T", T, "final time (default: config, or last snapshot)");
  tra->add_option("--dt", dt, "integration step");
  tra->add_flag("--no-plots", no_plots, "skip SVG output");
  auto* ver = app.add_subcommand("verify", "run the property suite");
  common(ver);
  std::string fault;
  ver->add_option("--inject-fault", fault, "negative control: 'partition' builds the partition without renormalization");
  auto* rep = app.add_subcommand("report", "summarize verdict files in an output directory");
  std::string report_dir;
  rep->add_option("dir", report_dir, "output directory of a previous run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*dec) return cmd_decay(o, !no_plots);
    if (*tra) return cmd_trajectory(o, snaps, seeds, T, dt, !no_plots);
    if (*ver) return cmd_verify(o, fault);
    if (*rep) return cmd_report(report_dir);
  } catch (const nlc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
