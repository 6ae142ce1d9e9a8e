#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <regex>

#include "nlc/config.hpp"
#include "nlc/io.hpp"
#include "test_support.hpp"

using namespace nlc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nlc_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string config_error_path(const std::string& text) {
  try {
    parse_config(nlohmann::json::parse(text));
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

}  // namespace

TEST(Snapshot, RoundTripIsExactUpToTransform) {
  const Grid g = Grid::make(2, 32, kTwoPi * 4);
  const auto u = nlc::testing::random_field(g, 2, 3, 6);
  const auto d = nlc::testing::random_field(g, 3, 4, 6, false);
  SolverState s = make_state(u, d);
  s.t = 1.625;
  const auto path = scratch("state.bin");
  io::write_state(path, s);
  const auto back = io::read_state(path);
  EXPECT_EQ(back.t, 1.625);
  EXPECT_EQ(back.u.grid().points, 32);
  EXPECT_DOUBLE_EQ(back.u.grid().period, g.period);
  EXPECT_LT(nlc::testing::max_abs_diff(back.u, u), 1e-12);
  EXPECT_LT(nlc::testing::max_abs_diff(back.d, d), 1e-12);
  // header: magic, 4 x u32, 2 x f64, then 5 components of 32^2 doubles
  EXPECT_EQ(fs::file_size(path), 8u + 16u + 16u + 5u * 1024u * 8u);
}

TEST(Snapshot, RejectsForeignAndTruncatedFiles) {
  const auto path = scratch("junk.bin");
  io::write_text(path, "definitely not a field");
  EXPECT_THROW(io::read_snapshot(path), std::runtime_error);
  const Grid g = Grid::make(2, 16, kTwoPi);
  io::write_snapshot(path, nlc::testing::random_field(g, 1, 1, 4), 0.0);
  fs::resize_file(path, fs::file_size(path) - 8);
  EXPECT_THROW(io::read_snapshot(path), std::runtime_error);
}

TEST(NormCsv, RoundTripPreservesEveryDigit) {
  NormSeries a;
  a.k = 1, a.m = 0, a.field = "u", a.kind = NormKind::chemin_lerner_l1, a.weighted = true;
  a.push(0.25, 1.0 / 3.0);
  a.push(0.5, std::exp(-7.5));
  NormSeries b;
  b.k = 0, b.m = 2, b.field = "gradd", b.kind = NormKind::x_norm;
  b.push(1.0, 2.0e-17);
  const std::string csv = io::norm_series_csv({a, b});
  EXPECT_EQ(csv.rfind("# nlc norm series v1\nt,k,m,kind,value\n", 0), 0u);
  EXPECT_NE(csv.find(",u.cl_l1_b1_inf.weighted,"), std::string::npos) << csv;
  const auto back = io::parse_norm_series_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].samples, a.samples);
  EXPECT_TRUE(back[0].weighted);
  EXPECT_EQ(back[1].field, "gradd");
  EXPECT_EQ(back[1].kind, NormKind::x_norm);
  EXPECT_EQ(back[1].samples, b.samples);
  EXPECT_THROW(io::parse_norm_series_csv("t,k,m,kind,value\n1,0,0,u.nonsense,1\n"), std::runtime_error);
}

TEST(VerdictJson, RoundTripThroughText) {
  DecayReport rep;
  rep.epsilons = {0.01, 0.02, 0.05};
  rep.complete = true;
  rep.exponents_pass = false;
  rep.constants_pass = true;
  EpsilonRun r;
  r.epsilon = 0.02;
  r.steps = 812;
  r.u_bmo_minus1 = 0.01;
  r.d_bmo = 0.02;
  DecayFit f;
  f.k = 0, f.m = 1, f.field = "u", f.expected = -0.5, f.fit = {-0.52, 1.5, 0.04, 9};
  f.evaluated = f.clean = f.pass = true;
  r.fits = {f};
  r.constants = {{0, 1, "u", NormKind::z_norm, 0.3, 15.0}};
  rep.runs = {r};
  rep.sweep = {{0, 1, "u", NormKind::z_norm, {15.0, 16.0, 17.0}, INFINITY, false}};
  const auto text = io::to_json(rep).dump(2);
  const auto back = io::decay_report_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.epsilons, rep.epsilons);
  EXPECT_FALSE(back.exponents_pass);
  ASSERT_EQ(back.runs.size(), 1u);
  EXPECT_EQ(back.runs[0].steps, 812);
  EXPECT_EQ(back.runs[0].fits[0].fit.alpha, -0.52);
  EXPECT_EQ(back.runs[0].constants[0].kind, NormKind::z_norm);
  EXPECT_TRUE(std::isinf(back.sweep[0].ratio));
  EXPECT_EQ(io::to_json(back).dump(2), text);
}

TEST(Manifest, HashIsFnv1a) {
  // published FNV-1a 64 test vectors
  EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::fnv1a("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(io::hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
}

TEST(Svg, GuideLineHasRequestedSlope) {
  io::Curve c{"u", {{1.0, 1.0}, {10.0, 0.1}, {100.0, 0.01}}};
  const auto svg = io::loglog_svg("test", {c}, -0.5);
  const std::regex line("<line x1=\"([-0-9.e]+)\" y1=\"([-0-9.e]+)\" x2=\"([-0-9.e]+)\" y2=\"([-0-9.e]+)\"");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, line)) << svg;
  const double x1 = std::stod(m[1]), y1 = std::stod(m[2]), x2 = std::stod(m[3]), y2 = std::stod(m[4]);
  // both axes span two decades here, so pixel scales are (640-240)/2 and (440-90)/2 per decade
  const double sx = 400.0 / 2, sy = 350.0 / 2;
  EXPECT_NEAR(-(y2 - y1) / sy / ((x2 - x1) / sx), -0.5, 1e-3);
  EXPECT_NE(svg.find("clip-path=\"url(#plot)\""), std::string::npos);
}

TEST(Config, DefaultsAndOverrides) {
  const auto cfg = parse_config(nlohmann::json::parse(R"({
    "schema_version": 1,
    "grid": {"points_per_dim": 32, "period_over_2pi": 4},
    "solver": {"dt_max": 0.1},
    "campaign": {"epsilons": [0.01], "t_max": "box", "fit_window": [2, 5], "orders": [[0, 1]], "norms": ["besov_m1_inf"]}
  })"));
  EXPECT_EQ(cfg.grid.points, 32);
  EXPECT_DOUBLE_EQ(cfg.grid.period, kTwoPi * 4);
  EXPECT_DOUBLE_EQ(cfg.solver.dt_max, 0.1);
  EXPECT_DOUBLE_EQ(cfg.campaign.t_max, 4.0);
  EXPECT_EQ(cfg.campaign.fit_window.first, 2);
  EXPECT_EQ(cfg.campaign.orders.size(), 1u);
  EXPECT_EQ(cfg.campaign.norms, std::vector<NormKind>{NormKind::besov_sup});
}

TEST(Config, ErrorsNameTheOffendingField) {
  EXPECT_EQ(config_error_path(R"({"grid": {"points_per_dim": 24}})"), "grid.points_per_dim");
  EXPECT_EQ(config_error_path(R"({"grid": {"points_per_dim": "64"}})"), "grid.points_per_dim");
  EXPECT_EQ(config_error_path(R"({"grid": {"pionts_per_dim": 64}})"), "grid.pionts_per_dim");
  EXPECT_EQ(config_error_path(R"({"colour": 1})"), "colour");
  EXPECT_EQ(config_error_path(R"({"solver": {"scheme": "rk45"}})"), "solver.scheme");
  EXPECT_EQ(config_error_path(R"({"solver": {"cfl_safety": 2}})"), "solver.cfl_safety");
  EXPECT_EQ(config_error_path(R"({"campaign": {"t0": 0.25, "t_max": 0.3}})"), "campaign");
  EXPECT_EQ(config_error_path(R"({"campaign": {"orders": [[3, 0]]}})"), "campaign.orders");
  EXPECT_EQ(config_error_path(R"({"campaign": {"norms": ["l2"]}})"), "campaign.norms[0]");
  EXPECT_EQ(config_error_path(R"({"campaign": {"orders": [[0]]}})"), "campaign.orders[0]");
  EXPECT_EQ(config_error_path(R"({"simulate": {"steps": 5, "t_end": 1}})"), "simulate.t_end");
  EXPECT_EQ(config_error_path(R"({"trajectory": {"drift": {"strength": 1}}})"), "trajectory.drift.strength");
  EXPECT_EQ(config_error_path(R"({"schema_version": 2})"), "schema_version");
  EXPECT_EQ(config_error_path(R"({})"), "<accepted>");
}
