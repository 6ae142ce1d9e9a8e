#pragma once

// JSON run configuration. Every section is optional and falls back to the
// library defaults; unknown keys and bad values are reported with their path.

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlc/decay.hpp"
#include "nlc/initial_data.hpp"
#include "nlc/solver.hpp"
#include "nlc/trajectory.hpp"

namespace nlc {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& msg) : std::runtime_error(path + ": " + msg), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct SimulateConfig {
  int steps = 10;           // step-count mode when > 0
  int snapshot_every = 1;   // steps between snapshots in step-count mode
  double t_end = 0.0;       // time mode when > 0
  double snapshot_interval = 0.0;
};

struct AppConfig {
  Grid grid;
  SolverConfig solver;
  InitialDataConfig initial;
  int carleson_stride = 4;
  int carleson_per_octave = 8;
  SimulateConfig simulate;
  CampaignConfig campaign;
  TrajectoryCampaignConfig trajectory;
  nlohmann::json source = nlohmann::json::object();  // parsed input, for hashing

  CarlesonConfig carleson() const { return CarlesonConfig::standard(grid, carleson_stride, carleson_per_octave); }

  /// The solver seed drives initial data in every subcommand.
  void set_seed(std::uint64_t seed) {
    solver.seed = seed;
    campaign.seed = seed;
    trajectory.seed = seed;
  }

  void set_threads(int threads) {
    campaign.threads = threads;
    trajectory.threads = threads;
  }
};

namespace detail {

/// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(at(key), "wrong type");
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, at(key));
  }

  const nlohmann::json* raw(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Runs a validator and re-labels its error with the given field path.
template <class F>
void check(const std::string& path, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    // validators already name "section.field ..." or "section: ..."; keep the most specific path
    std::string msg = e.what();
    if (msg.rfind(path + ": ", 0) == 0) throw ConfigError(path, msg.substr(path.size() + 2));
    if (msg.rfind(path + ".", 0) == 0) {
      const auto space = msg.find(' ');
      if (space != std::string::npos) {
        std::string field = msg.substr(0, space);
        if (field.back() == ':') field.pop_back();
        throw ConfigError(field, msg.substr(space + 1));
      }
    }
    throw ConfigError(path, msg);
  }
}

inline NormKind parse_norm_kind(const std::string& s, const std::string& path) {
  for (NormKind k : {NormKind::besov_sup, NormKind::chemin_lerner_l1, NormKind::x_norm, NormKind::z_norm})
    if (to_string(k) == s) return k;
  throw ConfigError(path, "unknown norm '" + s + "' (besov_m1_inf, cl_l1_b1_inf, x, z)");
}

inline std::vector<DerivativeOrder> parse_orders(const nlohmann::json* j, const std::string& path,
                                                 std::vector<DerivativeOrder> fallback) {
  if (!j) return fallback;
  if (!j->is_array()) throw ConfigError(path, "expected an array of [k, m] pairs");
  std::vector<DerivativeOrder> out;
  for (std::size_t i = 0; i < j->size(); ++i) {
    const auto& e = (*j)[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ConfigError(path + "[" + std::to_string(i) + "]", "expected [k, m]");
    out.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return out;
}

}  // namespace detail

inline AppConfig parse_config(const nlohmann::json& root) {
  AppConfig cfg;
  cfg.source = root;
  detail::Section top(root, "");
  int version = 1;
  top.get("schema_version", version);
  if (version != 1) throw ConfigError("schema_version", "unsupported version " + std::to_string(version));

  {
    auto s = top.child("grid");
    s.get("n_dims", cfg.grid.n_dims);
    s.get("points_per_dim", cfg.grid.points);
    if (s.has("period") && s.has("period_over_2pi")) throw ConfigError(s.at("period"), "give period or period_over_2pi, not both");
    double p2 = 0.0;
    s.get("period", cfg.grid.period);
    s.get("period_over_2pi", p2);
    if (p2 != 0.0) cfg.grid.period = kTwoPi * p2;
    s.finish();
    if (cfg.grid.n_dims != 2 && cfg.grid.n_dims != 3) throw ConfigError(s.at("n_dims"), "must be 2 or 3");
    if (cfg.grid.points < 16 || (cfg.grid.points & (cfg.grid.points - 1)) != 0)
      throw ConfigError(s.at("points_per_dim"), "must be a power of two >= 16, got " + std::to_string(cfg.grid.points));
    if (!(cfg.grid.period > 0.0)) throw ConfigError(s.at("period"), "must be > 0");
  }
  {
    auto s = top.child("solver");
    auto& v = cfg.solver;
    s.get("dt_max", v.dt_max);
    s.get("cfl_safety", v.cfl_safety);
    s.get("renormalize_director", v.renormalize_director);
    s.get("dealias", v.dealias);
    s.get("nonlinearity", v.nonlinearity);
    std::string scheme = to_string(v.scheme);
    s.get("scheme", scheme);
    if (scheme == "if_rk4") v.scheme = Scheme::if_rk4;
    else if (scheme == "if_euler") v.scheme = Scheme::if_euler;
    else throw ConfigError(s.at("scheme"), "must be if_rk4 or if_euler");
    s.get("epsilon_target", v.epsilon_target);
    s.get("seed", v.seed);
    s.get("sphere_tol", v.sphere_tol);
    s.finish();
    detail::check("solver", [&] { v.validate(); });
  }
  {
    auto s = top.child("initial_data");
    auto& v = cfg.initial;
    std::string kind = to_string(v.kind);
    s.get("kind", kind);
    if (kind == "gaussian") v.kind = InitialKind::gaussian;
    else if (kind == "critical") v.kind = InitialKind::critical;
    else throw ConfigError(s.at("kind"), "must be gaussian or critical");
    s.get("xi0", v.xi0);
    s.get("sources", v.sources);
    s.get("taper_fraction", v.taper_fraction);
    s.get("amplitude_scale", v.amplitude_scale);
    s.finish();
    detail::check("initial_data", [&] { v.validate(); });
  }
  {
    auto s = top.child("carleson");
    s.get("center_stride", cfg.carleson_stride);
    s.get("samples_per_octave", cfg.carleson_per_octave);
    s.finish();
    if (cfg.carleson_stride < 1) throw ConfigError(s.at("center_stride"), "must be >= 1");
    if (cfg.carleson_per_octave < 1) throw ConfigError(s.at("samples_per_octave"), "must be >= 1");
    detail::check("carleson", [&] { cfg.carleson().validate(cfg.grid); });
  }
  {
    auto s = top.child("simulate");
    auto& v = cfg.simulate;
    if (s.has("t_end") && !s.has("steps")) v.steps = 0;
    s.get("steps", v.steps);
    s.get("snapshot_every", v.snapshot_every);
    s.get("t_end", v.t_end);
    s.get("snapshot_interval", v.snapshot_interval);
    s.finish();
    if (v.steps < 0) throw ConfigError(s.at("steps"), "must be >= 0");
    if (v.steps == 0 && !(v.t_end > 0.0)) throw ConfigError(s.at("steps"), "give steps > 0 or t_end > 0");
    if (v.snapshot_every < 1) throw ConfigError(s.at("snapshot_every"), "must be >= 1");
    if (v.t_end < 0.0) throw ConfigError(s.at("t_end"), "must be >= 0");
    if (v.steps > 0 && v.t_end > 0.0) throw ConfigError(s.at("t_end"), "give steps or t_end, not both");
    if (v.t_end > 0.0 && !(v.snapshot_interval > 0.0))
      throw ConfigError(s.at("snapshot_interval"), "must be > 0 when t_end is set");
  }
  {
    auto s = top.child("campaign");
    auto& v = cfg.campaign;
    s.get("epsilons", v.epsilons);
    s.get("t0", v.t0);
    s.get("samples_per_octave", v.samples_per_octave);
    if (s.has("t_max") && s.raw("t_max")->is_string()) {
      if (s.raw("t_max")->get<std::string>() != "box") throw ConfigError(s.at("t_max"), "number or \"box\"");
      v.t_max = CampaignConfig::box_time(cfg.grid);
    } else {
      s.get("t_max", v.t_max);
    }
    v.orders = detail::parse_orders(s.raw("orders"), s.at("orders"), v.orders);
    v.clean_cases = detail::parse_orders(s.raw("clean_cases"), s.at("clean_cases"), v.clean_cases);
    if (const auto* norms = s.raw("norms")) {
      if (!norms->is_array()) throw ConfigError(s.at("norms"), "expected an array of strings");
      v.norms.clear();
      for (std::size_t i = 0; i < norms->size(); ++i) {
        const std::string p = s.at("norms") + "[" + std::to_string(i) + "]";
        if (!(*norms)[i].is_string()) throw ConfigError(p, "expected a string");
        v.norms.push_back(detail::parse_norm_kind((*norms)[i].get<std::string>(), p));
      }
    }
    if (const auto* w = s.raw("fit_window")) {
      if (!w->is_array() || w->size() != 2 || !(*w)[0].is_number_integer() || !(*w)[1].is_number_integer())
        throw ConfigError(s.at("fit_window"), "expected [first, last] sample indices");
      v.fit_window = {(*w)[0].get<int>(), (*w)[1].get<int>()};
    }
    s.get("exponent_tol", v.exponent_tol);
    s.get("residual_tol", v.residual_tol);
    s.get("constant_ratio_tol", v.constant_ratio_tol);
    s.finish();
    if (s.has("epsilons") && v.epsilons.empty()) throw ConfigError(s.at("epsilons"), "must not be empty");
    if (v.sample_times().empty()) throw ConfigError(s.at("t0"), "time grid is empty");
    v.initial = cfg.initial;
    v.seed = cfg.solver.seed;
    v.carleson_stride = cfg.carleson_stride;
    v.carleson_per_octave = cfg.carleson_per_octave;
    detail::check("campaign", [&] { v.validate(cfg.grid); });
  }
  {
    auto s = top.child("trajectory");
    auto& v = cfg.trajectory;
    s.get("epsilons", v.epsilons);
    s.get("T", v.T);
    s.get("dt", v.dt);
    s.get("snapshot_spacing", v.snapshot_spacing);
    s.get("bases", v.layout.bases);
    s.get("finest_exp", v.layout.finest_exp);
    s.get("coarsest_exp", v.layout.coarsest_exp);
    s.get("pair_seed", v.layout.seed);
    s.get("holder_floor", v.holder_floor);
    s.get("exclude_fraction", v.exclude_fraction);
    {
      auto d = s.child("drift");
      d.get("enabled", v.drift.enabled);
      d.get("beta", v.drift.beta);
      d.get("contraction", v.drift.contraction);
      d.finish();
    }
    s.finish();
    if (v.epsilons.empty()) throw ConfigError(s.at("epsilons"), "must not be empty");
    v.initial = cfg.initial;
    v.seed = cfg.solver.seed;
    v.carleson_stride = cfg.carleson_stride;
    v.carleson_per_octave = cfg.carleson_per_octave;
    detail::check("trajectory", [&] { v.validate(); });
  }
  top.finish();
  return cfg;
}

inline AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace nlc
