#pragma once

// File formats: binary field snapshots, norm-series CSV, run manifests and
// log-log SVG plots. Layouts are documented in docs/formats.md.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlc/decay.hpp"
#include "nlc/field.hpp"
#include "nlc/solver.hpp"
#include "nlc/trajectory.hpp"

namespace nlc::io {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

inline constexpr char kSnapshotMagic[8] = {'N', 'L', 'C', 'F', 'I', 'E', 'L', 'D'};
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr int kCsvVersion = 1;
inline constexpr int kJsonSchemaVersion = 1;

/// Shortest round-trip decimal form, identical across runs.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Snapshots

struct Snapshot {
  SpectralField field;
  double t = 0.0;
};

inline void write_snapshot(const std::filesystem::path& path, const SpectralField& f, double t) {
  const Grid& g = f.grid();
  const PhysicalField p = to_physical(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::uint32_t head[4] = {kSnapshotVersion, static_cast<std::uint32_t>(g.n_dims),
                                 static_cast<std::uint32_t>(g.points), static_cast<std::uint32_t>(f.components())};
  out.write(kSnapshotMagic, 8);
  out.write(reinterpret_cast<const char*>(head), sizeof head);
  out.write(reinterpret_cast<const char*>(&g.period), sizeof(double));
  out.write(reinterpret_cast<const char*>(&t), sizeof(double));
  out.write(reinterpret_cast<const char*>(p.values.data()), static_cast<std::streamsize>(p.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[8];
  std::uint32_t head[4];
  double L = 0.0, t = 0.0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(head), sizeof head);
  in.read(reinterpret_cast<char*>(&L), sizeof L);
  in.read(reinterpret_cast<char*>(&t), sizeof t);
  if (!in || std::memcmp(magic, kSnapshotMagic, 8) != 0) throw std::runtime_error(path.string() + ": not a snapshot");
  if (head[0] != kSnapshotVersion) throw std::runtime_error(path.string() + ": unsupported snapshot version");
  const Grid g = Grid::make(static_cast<int>(head[1]), static_cast<int>(head[2]), L);
  PhysicalField p(g, static_cast<int>(head[3]));
  in.read(reinterpret_cast<char*>(p.values.data()), static_cast<std::streamsize>(p.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path.string() + ": truncated snapshot");
  return {to_spectral(p), t};
}

/// A state snapshot stores u (n components) followed by d (3 components).
inline void write_state(const std::filesystem::path& path, const SolverState& s) {
  const int n = s.u.grid().n_dims;
  SpectralField both(s.u.grid(), n + 3);
  for (int c = 0; c < n; ++c) std::ranges::copy(s.u.component(c), both.component(c).begin());
  for (int c = 0; c < 3; ++c) std::ranges::copy(s.d.component(c), both.component(n + c).begin());
  write_snapshot(path, both, s.t);
}

inline SolverState read_state(const std::filesystem::path& path) {
  const Snapshot snap = read_snapshot(path);
  const int n = snap.field.grid().n_dims;
  if (snap.field.components() != n + 3) throw std::runtime_error(path.string() + ": not a state snapshot");
  SolverState s = make_state(slice_components(snap.field, 0, n), slice_components(snap.field, n, 3));
  s.t = snap.t;
  return s;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string kind_label(const NormSeries& s) {
  return s.field + "." + to_string(s.kind) + (s.weighted ? ".weighted" : "");
}

/// Columns t,k,m,kind,value; one row per sample of every series.
inline std::string norm_series_csv(const std::vector<NormSeries>& series) {
  std::ostringstream out;
  out << "# nlc norm series v" << kCsvVersion << "\n";
  out << "t,k,m,kind,value\n";
  for (const auto& s : series)
    for (const auto& [t, v] : s.samples) out << num(t) << ',' << s.k << ',' << s.m << ',' << kind_label(s) << ',' << num(v) << '\n';
  return out.str();
}

inline std::vector<NormSeries> parse_norm_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<NormSeries> out;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "t,k,m,kind,value") throw std::runtime_error("norm CSV: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell[5];
    for (auto& c : cell)
      if (!std::getline(row, c, ',')) throw std::runtime_error("norm CSV: short row '" + line + "'");
    NormSeries probe;
    probe.k = std::stoi(cell[1]);
    probe.m = std::stoi(cell[2]);
    const std::string& kind = cell[3];
    const auto dot = kind.find('.');
    if (dot == std::string::npos) throw std::runtime_error("norm CSV: bad kind '" + kind + "'");
    probe.field = kind.substr(0, dot);
    std::string rest = kind.substr(dot + 1);
    const std::string suffix = ".weighted";
    if (rest.size() > suffix.size() && rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) == 0) {
      probe.weighted = true;
      rest.resize(rest.size() - suffix.size());
    }
    bool known = false;
    for (NormKind k : {NormKind::besov_sup, NormKind::chemin_lerner_l1, NormKind::x_norm, NormKind::z_norm})
      if (to_string(k) == rest) probe.kind = k, known = true;
    if (!known) throw std::runtime_error("norm CSV: unknown norm '" + rest + "'");
    NormSeries* target = nullptr;
    for (auto& s : out)
      if (s.k == probe.k && s.m == probe.m && s.field == probe.field && s.kind == probe.kind &&
          s.weighted == probe.weighted)
        target = &s;
    if (!target) {
      out.push_back(probe);
      target = &out.back();
    }
    target->push(std::stod(cell[0]), std::stod(cell[4]));
  }
  return out;
}

/// Columns seed,t,x0,x1[,x2]: unwrapped positions.
inline std::string paths_csv(const TrajectorySet& tr) {
  std::ostringstream out;
  out << "# nlc trajectory paths v" << kCsvVersion << "\n";
  out << "seed,t";
  for (int a = 0; a < tr.n_dims; ++a) out << ",x" << a;
  out << '\n';
  for (std::size_t s = 0; s < tr.paths.size(); ++s)
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      out << s << ',' << num(tr.times[i]);
      for (int a = 0; a < tr.n_dims; ++a) out << ',' << num(tr.paths[s][i][a]);
      out << '\n';
    }
  return out.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const DecayReport& rep) {
  using nlohmann::json;
  json j;
  j["schema"] = "nlc.decay_verdict";
  j["schema_version"] = kJsonSchemaVersion;
  j["complete"] = rep.complete;
  j["exponents_pass"] = rep.exponents_pass;
  j["constants_pass"] = rep.constants_pass;
  j["epsilons"] = rep.epsilons;
  json runs = json::array();
  for (const auto& r : rep.runs) {
    json jr;
    jr["epsilon"] = r.epsilon;
    jr["complete"] = r.complete;
    jr["message"] = r.message;
    jr["steps"] = r.steps;
    jr["u0_bmo_minus1"] = r.u_bmo_minus1;
    jr["d0_bmo"] = r.d_bmo;
    json fits = json::array();
    for (const auto& f : r.fits)
      fits.push_back({{"k", f.k}, {"m", f.m}, {"field", f.field}, {"expected", f.expected},
                      {"alpha", f.fit.alpha}, {"intercept", f.fit.intercept}, {"residual", f.fit.residual},
                      {"samples", f.fit.samples}, {"evaluated", f.evaluated}, {"non_power_law", f.non_power_law},
                      {"clean", f.clean}, {"pass", f.pass}, {"note", f.note}});
    jr["fits"] = fits;
    json cs = json::array();
    for (const auto& c : r.constants)
      cs.push_back({{"k", c.k}, {"m", c.m}, {"field", c.field}, {"kind", to_string(c.kind)}, {"value", c.value},
                    {"constant", c.constant}});
    jr["constants"] = cs;
    runs.push_back(jr);
  }
  j["runs"] = runs;
  json sweep = json::array();
  for (const auto& s : rep.sweep)
    sweep.push_back({{"k", s.k}, {"m", s.m}, {"field", s.field}, {"kind", to_string(s.kind)},
                     {"constants", s.constants}, {"ratio", std::isfinite(s.ratio) ? json(s.ratio) : json(nullptr)},
                     {"pass", s.pass}});
  j["epsilon_sweep"] = sweep;
  return j;
}

/// Inverse of to_json for the fields a report consumer needs.
inline DecayReport decay_report_from_json(const nlohmann::json& j) {
  if (j.at("schema") != "nlc.decay_verdict") throw std::runtime_error("not a decay verdict");
  if (j.at("schema_version").get<int>() != kJsonSchemaVersion) throw std::runtime_error("unsupported verdict version");
  DecayReport rep;
  rep.complete = j.at("complete");
  rep.exponents_pass = j.at("exponents_pass");
  rep.constants_pass = j.at("constants_pass");
  rep.epsilons = j.at("epsilons").get<std::vector<double>>();
  auto kind_of = [](const std::string& s) {
    for (NormKind k : {NormKind::besov_sup, NormKind::chemin_lerner_l1, NormKind::x_norm, NormKind::z_norm})
      if (to_string(k) == s) return k;
    throw std::runtime_error("unknown norm kind " + s);
  };
  for (const auto& jr : j.at("runs")) {
    EpsilonRun r;
    r.epsilon = jr.at("epsilon");
    r.complete = jr.at("complete");
    r.message = jr.at("message");
    r.steps = jr.at("steps");
    r.u_bmo_minus1 = jr.at("u0_bmo_minus1");
    r.d_bmo = jr.at("d0_bmo");
    for (const auto& f : jr.at("fits")) {
      DecayFit d;
      d.k = f.at("k");
      d.m = f.at("m");
      d.field = f.at("field");
      d.expected = f.at("expected");
      d.fit.alpha = f.at("alpha");
      d.fit.intercept = f.at("intercept");
      d.fit.residual = f.at("residual");
      d.fit.samples = f.at("samples");
      d.evaluated = f.at("evaluated");
      d.non_power_law = f.at("non_power_law");
      d.clean = f.at("clean");
      d.pass = f.at("pass");
      d.note = f.at("note");
      r.fits.push_back(d);
    }
    for (const auto& c : jr.at("constants"))
      r.constants.push_back({c.at("k"), c.at("m"), c.at("field"), kind_of(c.at("kind")), c.at("value"), c.at("constant")});
    rep.runs.push_back(std::move(r));
  }
  for (const auto& s : j.at("epsilon_sweep")) {
    SweepRow row;
    row.k = s.at("k");
    row.m = s.at("m");
    row.field = s.at("field");
    row.kind = kind_of(s.at("kind"));
    row.constants = s.at("constants").get<std::vector<double>>();
    row.ratio = s.at("ratio").is_null() ? INFINITY : s.at("ratio").get<double>();
    row.pass = s.at("pass");
    rep.sweep.push_back(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Manifest

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string code_version;
  std::string started;
  std::string finished;
  std::vector<std::string> files;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j{{"schema", "nlc.manifest"},        {"schema_version", kJsonSchemaVersion},
                     {"command", command},              {"config_hash", config_hash},
                     {"seed", seed},                    {"code_version", code_version},
                     {"started", started},              {"finished", finished},
                     {"files", files}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j;
  }
};

// ---------------------------------------------------------------------------
// SVG

struct Curve {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Static log-log plot; a dashed guide of the given slope passes through the
/// first positive point of the first curve.
inline std::string loglog_svg(const std::string& title, const std::vector<Curve>& curves, double guide_slope) {
  const double W = 640, H = 440, left = 70, right = 170, top = 40, bottom = 50;
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& c : curves)
    for (const auto& [x, y] : c.points)
      if (x > 0 && y > 0) {
        xlo = std::min(xlo, std::log10(x));
        xhi = std::max(xhi, std::log10(x));
        ylo = std::min(ylo, std::log10(y));
        yhi = std::max(yhi, std::log10(y));
      }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  if (xhi - xlo < 1e-9) xhi = xlo + 1;
  if (yhi - ylo < 1e-9) yhi = ylo + 1;
  xlo = std::floor(xlo), xhi = std::ceil(xhi), ylo = std::floor(ylo), yhi = std::ceil(yhi);
  auto X = [&](double lx) { return left + (lx - xlo) / (xhi - xlo) * (W - left - right); };
  auto Y = [&](double ly) { return H - bottom - (ly - ylo) / (yhi - ylo) * (H - top - bottom); };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right
    << "\" height=\"" << H - top - bottom << "\"/></clipPath>\n";
  s << "<text x=\"" << left << "\" y=\"22\" font-size=\"14\">" << title << "</text>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\"" << H - top - bottom
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(xlo); e <= static_cast<int>(xhi); ++e)
    s << "<text x=\"" << X(e) - 10 << "\" y=\"" << H - bottom + 18 << "\">1e" << e << "</text>\n";
  for (int e = static_cast<int>(ylo); e <= static_cast<int>(yhi); ++e)
    s << "<text x=\"" << 20 << "\" y=\"" << Y(e) + 4 << "\">1e" << e << "</text>\n";
  s << "<text x=\"" << (W - right + left) / 2 << "\" y=\"" << H - 12 << "\">t</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* col = colours[i % 6];
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : curves[i].points)
      if (x > 0 && y > 0) s << X(std::log10(x)) << ',' << Y(std::log10(y)) << ' ';
    s << "\"/>\n";
    s << "<text x=\"" << W - right + 10 << "\" y=\"" << top + 16 * (i + 1) << "\" fill=\"" << col << "\">"
      << curves[i].label << "</text>\n";
  }
  for (const auto& c : curves) {
    auto it = std::find_if(c.points.begin(), c.points.end(), [](const auto& p) { return p.first > 0 && p.second > 0; });
    if (it == c.points.end()) continue;
    const double lx0 = std::log10(it->first), ly0 = std::log10(it->second);
    const double lx1 = xhi, ly1 = ly0 + guide_slope * (lx1 - lx0);
    s << "<line x1=\"" << X(lx0) << "\" y1=\"" << Y(ly0) << "\" x2=\"" << X(lx1) << "\" y2=\"" << Y(ly1)
      << "\" stroke=\"gray\" stroke-dasharray=\"6,4\" clip-path=\"url(#plot)\"/>\n";
    s << "<text x=\"" << W - right + 10 << "\" y=\"" << top + 16 * (curves.size() + 1) << "\" fill=\"gray\">guide slope "
      << guide_slope << "</text>\n";
    break;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace nlc::io
