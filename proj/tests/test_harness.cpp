#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcgrad/config.hpp"
#include "mcgrad/error.hpp"
#include "mcgrad/harness.hpp"

namespace fs = std::filesystem;
using namespace mcgrad;
using namespace mcgrad::config;

namespace {

ExperimentConfig cfg_from(const std::string& text) {
  std::istringstream is(text);
  return load_config(parse_ini(is, "test.ini"));
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("mcgrad-test-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  harness::RunResult run(ExperimentKind kind, const std::string& text, const std::string& sub,
                         bool force = false, int jobs = 1) {
    harness::RunOptions o;
    o.out_dir = (dir / sub).string();
    o.force = force;
    o.jobs = jobs;
    auto cfg = cfg_from(text);
    cfg.kind = kind;
    return harness::run(cfg, o);
  }
  fs::path dir;
};

}  // namespace

TEST(Ini, ParsesSectionsAndComments) {
  std::istringstream is("# header\n[a]\nx = 1 ; trailing\n\n[b]\n  y=two words  \n");
  const auto ini = parse_ini(is);
  EXPECT_EQ(ini.find("a", "x")->value, "1");
  EXPECT_EQ(ini.find("a", "x")->line, 3);
  EXPECT_EQ(ini.find("b", "y")->value, "two words");
  EXPECT_FALSE(ini.has("a", "y"));
}

TEST(Ini, ErrorsCarryLineNumbers) {
  auto expect_error = [](const std::string& text, const std::string& where) {
    std::istringstream is(text);
    try {
      load_config(parse_ini(is, "f.ini"));
      ADD_FAILURE() << "no error for: " << text;
    } catch (const ConfigError& e) {
      EXPECT_EQ(std::string(e.what()).rfind(where, 0), 0u) << e.what() << " for: " << text;
    }
  };
  expect_error("x = 1\n", "f.ini:1:");
  expect_error("[experiment]\nmodel = zero\nmodel = ratio\n", "f.ini:3:");
  expect_error("[experiment]\n\nbogus = 1\n", "f.ini:3:");
  expect_error("[nosuch]\n", "f.ini:1:");
  expect_error("[geometry]\ngrid = 2\n", "f.ini:2:");
  expect_error("[geometry]\nR = -1\n", "f.ini:2:");
  expect_error("[experiment]\nmodel = power:\n", "f.ini:2:");
  expect_error("[theorem]\ncase = Q\n", "f.ini:2:");
  expect_error("[geometry]\nn = 1\n", "f.ini:2:");
  expect_error("[a\n", "f.ini:1:");
}

TEST(Ini, CanonicalSerializationIsSorted) {
  std::istringstream a("[z]\nb = 2\na = 1\n[m]\nk = v\n");
  std::istringstream b("[m]\nk = v\n[z]\na = 1\nb = 2\n");
  const auto sa = canonical_serialization(parse_ini(a));
  EXPECT_EQ(sa, "m.k=v\nz.a=1\nz.b=2\n");
  EXPECT_EQ(sa, canonical_serialization(parse_ini(b)));
}

TEST(Hash, Fnv1aVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(hex64(0xcbf29ce484222325ull), "cbf29ce484222325");
  EXPECT_EQ(hex64(1), "0000000000000001");
}

TEST(Config, TypedValues) {
  const auto c = cfg_from(
      "[experiment]\nkind = sweep\nmodel = imcf:0.5\nseed = 9\n[geometry]\nR_list = 4, 8,16\n"
      "[fit]\npairs = 1:1, 10:0.1\n[bernstein]\nplus_one = false\n");
  EXPECT_EQ(c.kind, ExperimentKind::Sweep);
  EXPECT_EQ(c.model, "imcf:0.5");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.R_list, (std::vector<double>{4, 8, 16}));
  ASSERT_EQ(c.pairs.size(), 2u);
  EXPECT_EQ(c.pairs[1].second, 0.1);
  EXPECT_FALSE(c.plus_one);
  EXPECT_EQ(parse_kind("bernstein"), ExperimentKind::BernsteinDiagnose);
  EXPECT_THROW(parse_kind("nope"), ConfigError);
}

TEST(Boundary, Specs) {
  EXPECT_EQ(harness::make_boundary("const:2.5", 1)(0.3, 0.4), 2.5);
  EXPECT_DOUBLE_EQ(harness::make_boundary("affine:1,2,3", 1)(1, 1), 6.0);
  EXPECT_DOUBLE_EQ(harness::make_boundary("cap:1", 1)(0, 0), -2.0);
  EXPECT_NEAR(harness::make_boundary("catenoid:-2.5,0", 1)(-0.5, 0), std::acosh(2.0), 1e-15);
  EXPECT_NEAR(harness::make_boundary("wave:2", 4)(4, 0), 2.0, 1e-15);
  EXPECT_NEAR(harness::make_boundary("wave:2", 4)(4, 4), 0.0, 1e-15);
  for (const char* bad : {"", "const", "const:", "const:a", "affine:1,2", "cap:0", "cap:1.5", "blob:1"}) {
    EXPECT_THROW(harness::make_boundary(bad, 1), ConfigError) << bad;
  }
}

TEST_F(TempDir, AtomicWriteReplaces) {
  const auto p = dir / "sub" / "f.txt";
  harness::write_atomic(p, "one");
  harness::write_atomic(p, "two");
  EXPECT_EQ(read_file(p), "two");
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST_F(TempDir, CheckConditionsRatioHolds) {
  const auto r = run(ExperimentKind::CheckConditions, "[experiment]\nmodel = ratio\n[condition]\ntag = A4\n", "o");
  EXPECT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(read_file(dir / "o" / "conditions.json"));
  EXPECT_EQ(j["status"], "holds");
}

TEST_F(TempDir, CheckConditionsViolationExitCode) {
  const auto r = run(ExperimentKind::CheckConditions, "[experiment]\nmodel = power:2\n[condition]\ntag = A1\nm1 = 0.5\nm2 = 1\ntheta = 2\n", "o");
  EXPECT_EQ(r.exit_code, harness::kPropertyViolation);
  const auto j = nlohmann::json::parse(read_file(dir / "o" / "conditions.json"));
  EXPECT_EQ(j["status"], "violated");
  EXPECT_TRUE(j.contains("witness"));
  const auto z = run(ExperimentKind::CheckConditions, "[experiment]\nmodel = zero\n[condition]\ntag = A1\n", "z");
  EXPECT_EQ(z.exit_code, harness::kPropertyViolation);
}

TEST_F(TempDir, Solve2dAffine) {
  const auto r = run(ExperimentKind::Solve2D, "[experiment]\nmodel = zero\n[geometry]\ngrid = 33\n[boundary]\ndata = affine:0.3,-0.2,1\nexact = true\n", "o");
  EXPECT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(read_file(dir / "o" / "solution.json"));
  EXPECT_LE(j["max_error"].get<double>(), 1e-8);
  const auto g = fd2d::read_grid_file((dir / "o" / "solution.grid").string());
  EXPECT_EQ(g.nx, 33);
}

TEST_F(TempDir, Solve2dNonConvergenceExitCode) {
  const auto r = run(ExperimentKind::Solve2D, "[experiment]\nmodel = const:1\n[geometry]\ngrid = 33\n[boundary]\ndata = cap:1\n[solver]\nmax_newton = 1\nnewton_atol = 1e-300\n", "o");
  EXPECT_EQ(r.exit_code, harness::kSolverFailure);
  EXPECT_TRUE(fs::exists(dir / "o" / "solution.json"));
}

TEST_F(TempDir, SolveRadialOriginAndAnnulus) {
  auto r = run(ExperimentKind::SolveRadial, "[experiment]\nmodel = const:1\n[geometry]\nR = 1.9\n[boundary]\nu0 = -2\n", "o");
  EXPECT_EQ(r.exit_code, 0);
  const std::string csv = read_file(dir / "o" / "profile.csv");
  EXPECT_EQ(csv.substr(0, 8), "r,u,w,q\n");
  r = run(ExperimentKind::SolveRadial, "[experiment]\nmodel = zero\n[geometry]\nr_in = 1\nr_out = 3\n[boundary]\nu_in = 0\nu_out = 1.762747174039086\n", "a");
  EXPECT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(read_file(dir / "a" / "radial.json"));
  EXPECT_EQ(j["status"], "converged");
}

TEST_F(TempDir, ImcfEnvelope) {
  const auto r = run(ExperimentKind::Sweep, "[experiment]\nmodel = imcf:1\n[sweep]\nkind = imcf-envelope\n", "o");
  EXPECT_EQ(r.exit_code, 0);
  std::istringstream csv(read_file(dir / "o" / "envelope.csv"));
  std::string head, row;
  std::getline(csv, head);
  std::getline(csv, row);
  EXPECT_EQ(head, "eps,R_star,C_star,slope,points,failed");
  const auto e = harness::imcf_envelope(1.0, 2, 1e-6, 1e-2);
  EXPECT_FALSE(e.failed);
  EXPECT_GE(e.slope, -1.0);
  EXPECT_LE(e.slope, 0.0);
  EXPECT_LT(e.R_star, 2.0);
}

TEST_F(TempDir, FitDecay) {
  const auto r = run(ExperimentKind::FitDecay, "[fit]\npairs = 1:1, 10:0.1, 100:0.01\n", "o");
  EXPECT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(read_file(dir / "o" / "decay.json"));
  EXPECT_NEAR(j["slope"].get<double>(), -1.0, 1e-12);
  EXPECT_THROW(run(ExperimentKind::FitDecay, "[fit]\npairs = 1:1, 10:0.1\n", "p"), ConfigError);
}

TEST_F(TempDir, ValidateBoundsAndBernstein) {
  const std::string base = "[experiment]\nmodel = zero\n[geometry]\ngrid = 33\n[boundary]\ndata = catenoid:-2.5,0\n";
  auto r = run(ExperimentKind::ValidateBounds, base + "[theorem]\ncase = E\n", "v");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(fs::exists(dir / "v" / "bounds.csv"));
  r = run(ExperimentKind::ValidateBounds, base + "[theorem]\ncase = E\nC = 1e-6\n", "w");
  EXPECT_EQ(r.exit_code, harness::kPropertyViolation);
  r = run(ExperimentKind::BernsteinDiagnose, base + "[bernstein]\nF = log1pz\nh = power\nplus_one = false\n", "b");
  EXPECT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(read_file(dir / "b" / "bernstein.json"));
  EXPECT_GE(j["margin"].get<double>(), 0.0);
}

TEST_F(TempDir, LiouvilleZeroModelDecreases) {
  const std::string text = "[experiment]\nmodel = zero\n[geometry]\nR_list = 32, 4, 16, 8\ngrid = 33\n";
  const auto r = run(ExperimentKind::Sweep, text, "o", false, 2);
  EXPECT_EQ(r.exit_code, 0);
  harness::ProbeOptions po;
  po.grid = 33;
  const auto rep = harness::liouville_probe(NonlinearityModel::zero(), 1.0, {32, 4, 16, 8}, po);
  ASSERT_EQ(rep.rows.size(), 4u);
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    EXPECT_LT(rep.rows[k - 1].R, rep.rows[k].R);
    EXPECT_LT(rep.rows[k].observed, rep.rows[k - 1].observed);
  }
  EXPECT_FALSE(rep.degenerate);
  EXPECT_LT(rep.fit.slope, 0.0);
}

TEST_F(TempDir, LiouvilleDegenerateCases) {
  harness::ProbeOptions po;
  po.grid = 17;
  auto rep = harness::liouville_probe(NonlinearityModel::zero(), 0.0, {4, 8, 16}, po);
  EXPECT_TRUE(rep.degenerate);
  for (const auto& row : rep.rows) EXPECT_EQ(row.observed, 0.0);
  po.radial = true;
  po.bound_case = estimates::BoundCase::A;
  rep = harness::liouville_probe(NonlinearityModel::power(1), 1.0, {4, 8, 16}, po);
  EXPECT_TRUE(rep.degenerate);
  for (const auto& row : rep.rows) {
    EXPECT_FALSE(row.failed);
    EXPECT_EQ(row.observed, 0.0);
  }
}

TEST_F(TempDir, ReproducibleAndCacheSound) {
  const std::string text =
      "[experiment]\nmodel = zero\n[geometry]\nR_list = 4, 8, 16\ngrid = 33\n[boundary]\namplitude = 1\n";
  run(ExperimentKind::Sweep, text, "o");
  const auto first = read_file(dir / "o" / "sweep.csv");
  std::vector<fs::path> grids;
  for (const auto& e : fs::directory_iterator(dir / "o" / "cache"))
    if (e.path().extension() == ".grid") grids.push_back(e.path());
  ASSERT_EQ(grids.size(), 3u);
  std::vector<std::string> cached;
  for (const auto& g : grids) cached.push_back(read_file(g));
  run(ExperimentKind::Sweep, text, "o");
  EXPECT_EQ(read_file(dir / "o" / "sweep.csv"), first);
  run(ExperimentKind::Sweep, text, "o", true, 3);
  EXPECT_EQ(read_file(dir / "o" / "sweep.csv"), first);
  for (std::size_t k = 0; k < grids.size(); ++k) EXPECT_EQ(read_file(grids[k]), cached[k]);
  run(ExperimentKind::Sweep, text, "p");
  EXPECT_EQ(read_file(dir / "p" / "sweep.csv"), first);
  EXPECT_EQ(read_file(dir / "p" / "sweep.json"), read_file(dir / "o" / "sweep.json"));
}

TEST_F(TempDir, GnuplotScripts) {
  harness::RunOptions o;
  o.out_dir = (dir / "o").string();
  o.gnuplot = true;
  auto cfg = cfg_from("[experiment]\nkind = solve-radial\nmodel = const:1\n[geometry]\nR = 1\n[boundary]\nu0 = -2\n");
  harness::run(cfg, o);
  const auto gp = read_file(dir / "o" / "profile.gp");
  EXPECT_NE(gp.find("'profile.csv'"), std::string::npos);
}

#ifdef MCGRAD_CLI
TEST_F(TempDir, CliExitCodes) {
  const auto ini = dir / "c.ini";
  auto cli = [&](const std::string& args) {
    const std::string cmd = std::string(MCGRAD_CLI) + " " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WEXITSTATUS(st);
  };
  std::ofstream(ini) << "[experiment]\nmodel = ratio\n[condition]\ntag = A4\n";
  EXPECT_EQ(cli("check-conditions --config " + ini.string() + " --out " + (dir / "o").string()), 0);
  std::ofstream(ini) << "[experiment]\nmodel = ratio\nbogus = 1\n";
  EXPECT_EQ(cli("check-conditions --config " + ini.string() + " --out " + (dir / "o").string()), 2);
  EXPECT_EQ(cli("check-conditions --config " + (dir / "missing.ini").string()), 2);
  EXPECT_EQ(cli("no-such-command"), 2);
  std::ofstream(ini) << "[experiment]\nkind = sweep\nmodel = ratio\n";
  EXPECT_EQ(cli("check-conditions --config " + ini.string() + " --out " + (dir / "o").string()), 2);
  std::ofstream(ini) << "[experiment]\nmodel = power:2\n[condition]\ntag = A1\nm1 = 0.5\nm2 = 1\ntheta = 2\n";
  EXPECT_EQ(cli("check-conditions --seed 5 --config " + ini.string() + " --out " + (dir / "o").string()), 4);
}
#endif
