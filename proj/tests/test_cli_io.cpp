#include "doctest.h"

#include "sblasso/cli.hpp"
#include "sblasso/io.hpp"
#include "support/oracles.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace sblasso;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("sblasso_cli_test_" + std::to_string(::getpid()));
  ScratchDir() { fs::create_directories(path); }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fs::path scratch_dir() {
  static const ScratchDir dir;
  return dir.path;
}

std::string path_in(const std::string& name) { return (scratch_dir() / name).string(); }

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

struct Proc {
  int code = -1;
  std::string err;
};

// Runs the real binary so exit codes and stderr are the ones a user sees.
Proc run_cli(const std::string& args) {
  const std::string err = path_in("stderr.txt");
  const std::string cmd = std::string("\"") + SBLASSO_CLI_PATH + "\" " + args + " > /dev/null 2> \"" + err + "\"";
  const int status = std::system(cmd.c_str());
  Proc p;
  p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  p.err = slurp(err);
  return p;
}

std::string working_csv() {
  static const std::string path = [] {
    WorkingExampleOptions o;
    o.seed = 5;
    const std::string p = path_in("working.csv");
    save_csv(p, generate_working_example(o).problem);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("csv round trip is bitwise") {
  CsvTable t;
  t.header = {"a", "b", "y"};
  t.data.resize(3, 3);
  t.data << 0.1, -2.5e10, 1.0, std::acos(-1.0), 1e-300, 0.0, -0.0, 123456789.123456789, 1.0 / 3.0;
  const std::string p = path_in("round.csv");
  write_csv(p, t);
  const CsvTable back = read_csv(p);
  CHECK(back.header == t.header);
  REQUIRE(back.data.rows() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(std::memcmp(&back.data(i, j), &t.data(i, j), sizeof(double)) == 0);
    }
  write_csv(path_in("round2.csv"), back);
  CHECK(slurp(p) == slurp(path_in("round2.csv")));
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("csv errors name the problem") {
  auto message = [](const std::string& path) {
    try {
      read_csv(path);
    } catch (const DomainError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(path_in("does_not_exist.csv")).find("cannot open") != std::string::npos);
  write_text(path_in("empty.csv"), "");
  CHECK(message(path_in("empty.csv")).find("empty") != std::string::npos);
  write_text(path_in("header_only.csv"), "x,y\n");
  CHECK(message(path_in("header_only.csv")).find("no data rows") != std::string::npos);
  write_text(path_in("bad_cell.csv"), "x,y\n1,2\n3,abc\n");
  const std::string m = message(path_in("bad_cell.csv"));
  CHECK(m.find("row 2") != std::string::npos);
  CHECK(m.find("'y'") != std::string::npos);
  write_text(path_in("ragged.csv"), "x,y\n1,2\n3\n");
  CHECK(message(path_in("ragged.csv")).find("row 2") != std::string::npos);

  write_text(path_in("ok.csv"), "x1,x2,y\n1,2,0\n3,4,1\n");
  CHECK_THROWS_AS(load_csv(path_in("ok.csv"), "target", {Family::normal}), DomainError);
  CHECK_THROWS_AS(load_csv(path_in("ok.csv"), "y", {Family::normal}, {"x9"}), DomainError);
  const GlmProblem by_index = load_csv(path_in("ok.csv"), "0", {Family::normal});
  CHECK(by_index.y[1] == 3.0);
  CHECK(by_index.column_names == std::vector<std::string>{"x2", "y"});
  const GlmProblem pr = load_csv(path_in("ok.csv"), "y", {Family::bernoulli}, {"x1"});
  CHECK_FALSE(pr.penalized[0]);
  CHECK(pr.penalized[1]);
}

TEST_CASE("bernoulli response of 0.5 is rejected with the row") {
  write_text(path_in("half.csv"), "x,y\n1,0\n2,1\n3,0.5\n");
  try {
    load_csv(path_in("half.csv"), "y", {Family::bernoulli});
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  const Proc p = run_cli("fit --data " + path_in("half.csv") + " --family bernoulli --mode map --tau 1");
  CHECK(p.code == 2);
  CHECK(p.err.find("\"domain_error\"") != std::string::npos);
  CHECK(p.err.find("row 3") != std::string::npos);
}

TEST_CASE("saved then loaded working example gives an identical fit") {
  WorkingExampleOptions o;
  o.seed = 5;
  const auto ex = generate_working_example(o);
  const GlmProblem loaded = load_csv(working_csv(), "y", {Family::normal});
  CHECK(loaded.X == ex.problem.X);
  CHECK(loaded.y == ex.problem.y);
  VistaConfig cfg;
  cfg.tau = 150.0;
  const MapFit a = fit_map(ex.problem, HyperPrior::half_cauchy(), cfg);
  const MapFit b = fit_map(loaded, HyperPrior::half_cauchy(), cfg);
  CHECK(a.run.state.x == b.run.state.x);
  CHECK(a.run.iterations == b.run.iterations);
}

TEST_CASE("prox subcommand reports the tie") {
  const std::string out = path_in("prox.json");
  REQUIRE(cli_main({"prox", "--x0", "1", "--lambda0", "1", "--sx", "2", "--slambda", "2", "--out", out}) == 0);
  const auto j = read_json(out);
  CHECK(j["tie"].get<bool>());
  REQUIRE(j["optima"].size() == 2);
  const double c0 = j["optima"][0]["cost"], c1 = j["optima"][1]["cost"];
  CHECK(std::abs(c0 - c1) <= 1e-12);
  CHECK(fs::exists(out + ".manifest.json"));

  REQUIRE(cli_main({"prox", "--x0", "1", "--lambda0", "0.8", "--sx", "0.5", "--slambda", "0.5", "--oracle", "--out",
                    out}) == 0);
  const auto k = read_json(out);
  CHECK_FALSE(k["tie"].get<bool>());
  CHECK(k["oracle"]["within_spacing"].get<bool>());
  CHECK(k["oracle"]["cost_gap"].get<double>() <= 1e-12);
}

TEST_CASE("invalid flags fail before any work, with an error document") {
  const std::string data = working_csv();
  struct Case {
    std::string args;
    int code;
  };
  const Case cases[] = {
      {"fit --data " + data + " --tau -1 --mode map", 2},
      {"fit --data " + data + " --tau 1 --tau-grid 10,1,5 --mode map", 2},
      {"fit --data " + data + " --tau 1 --mode sbl", 2},  // no seed
      {"fit --data " + data + " --tau 1 --mode map --prior uniform", 3},
      {"fit --data " + data + " --tau 1 --mode map --family gamma", 2},
      {"fit --data " + data + " --tau 1 --mode map --mc-samples 41", 2},
      {"fit --data " + data + " --tau 1 --mode map --bogus", 2},
      {"trajectory --data " + data + " --tau-grid 1,10,5 --mode map --out " + path_in("t.csv"), 2},
      {"simulate --tau 1 --reps 2", 2},  // no seed
      {"prox --x0 1 --lambda0 -1 --sx 1 --slambda 1", 2},
      {"fit --data " + path_in("nope.csv") + " --tau 1 --mode map", 2},
  };
  for (const Case& c : cases) {
    CAPTURE(c.args);
    const Proc p = run_cli(c.args + " --out " + path_in("never.json"));
    CHECK(p.code == c.code);
    CHECK(p.err.find("\"error\"") != std::string::npos);
    CHECK_FALSE(fs::exists(path_in("never.json")));
  }
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("").code == 2);
}

TEST_CASE("every subcommand is deterministic and reruns from its manifest") {
  const std::string data = working_csv();
  struct Case {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::string fit_out = path_in("fit.json"), trace = path_in("trace.csv");
  const std::string map_out = path_in("map.json");
  const std::string traj_out = path_in("traj.csv");
  const std::string sim_out = path_in("sim.json"), sim_data = path_in("sim_data.csv");
  const std::string prox_out = path_in("prox2.json");
  const Case cases[] = {
      {"fit sbl",
       {"fit", "--data", data, "--tau", "150", "--mode", "sbl", "--seed", "3", "--out", fit_out, "--trace", trace},
       {fit_out, trace}},
      {"fit map", {"fit", "--data", data, "--tau", "150", "--mode", "map", "--out", map_out}, {map_out}},
      {"trajectory",
       {"trajectory", "--data", data, "--tau-grid", "300,30,6", "--mode", "sbl", "--seed", "2", "--out", traj_out},
       {traj_out}},
      {"simulate",
       {"simulate", "--family", "normal", "--reps", "3", "--tau", "150", "--seed", "7", "--threads", "2", "--out",
        sim_out, "--data-out", sim_data},
       {sim_out, sim_data}},
      {"prox", {"prox", "--x0", "0.3", "--lambda0", "2", "--sx", "0.7", "--slambda", "0.4", "--out", prox_out},
       {prox_out}},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    REQUIRE(cli_main(c.args) == 0);
    std::vector<std::string> first;
    for (const auto& f : c.files) first.push_back(slurp(f));
    const std::string manifest = slurp(c.args[std::size_t(std::find(c.args.begin(), c.args.end(), "--out") -
                                                         c.args.begin()) + 1] + ".manifest.json");
    for (const auto& f : c.files) fs::remove(f);
    REQUIRE(cli_main(c.args) == 0);
    for (std::size_t i = 0; i < c.files.size(); ++i) CHECK(slurp(c.files[i]) == first[i]);

    const std::string out = c.files.front();
    const auto m = read_json(out + ".manifest.json");
    CHECK(slurp(out + ".manifest.json") == manifest);
    CHECK(m["seed"].is_null() == (c.name == "fit map" || c.name == "prox"));
    CHECK(m.contains("version"));
    CHECK(m["outputs"].size() == c.files.size());

    for (const auto& f : c.files) fs::remove(f);
    REQUIRE(cli_main({"rerun", out + ".manifest.json"}) == 0);
    for (std::size_t i = 0; i < c.files.size(); ++i) CHECK(slurp(c.files[i]) == first[i]);
  }

  // Content spot checks.
  const auto fit = read_json(fit_out);
  CHECK(fit.dump().find("ci_lo") != std::string::npos);
  const std::string traj = slurp(traj_out);
  CHECK(traj.rfind("tau,mode,param_name,eta_or_estimate,nu,lambda,ci_lo,ci_hi,sparsity_fraction,iterations,converged\n",
                   0) == 0);
  CHECK(std::count(traj.begin(), traj.end(), '\n') == 1 + 6 * (50 + 1));
  const auto sim = read_json(sim_out);
  CHECK_FALSE(sim.contains("wall_seconds"));
}

TEST_CASE("trajectory on the two-coefficient toy") {
  WorkingExampleOptions o;
  o.n = 100;
  o.p = 2;
  o.active_values = {-2.0, 2.0};
  o.seed = 1;
  const std::string data = path_in("toy.csv");
  save_csv(data, generate_working_example(o).problem);
  const std::string out = path_in("toy_traj.csv");
  REQUIRE(cli_main({"trajectory", "--data", data, "--tau-grid", "2000,0.5,100", "--mode", "map", "--out", out}) == 0);
  const CsvTable t = [&] {
    // The mode and name columns are text; keep the numeric ones.
    std::ifstream f(out);
    std::string line;
    std::getline(f, line);
    CsvTable r;
    std::vector<std::array<double, 2>> rows;
    while (std::getline(f, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      rows.push_back({std::stod(cells[0]), std::stod(cells[8])});
    }
    r.data.resize(Eigen::Index(rows.size()), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      r.data(Eigen::Index(i), 0) = rows[i][0];
      r.data(Eigen::Index(i), 1) = rows[i][1];
    }
    return r;
  }();
  // Two coefficients plus log sigma^2 per grid point.
  REQUIRE(t.data.rows() == 300);
  std::vector<double> tau, sp;
  for (Eigen::Index i = 0; i < t.data.rows(); i += 3) {
    tau.push_back(t.data(i, 0));
    sp.push_back(t.data(i, 1));
  }
  CHECK(sp.front() == 1.0);
  CHECK(sp.back() == 0.0);
  // Both coefficients enter together, so sparsity is a two-level step; a rank
  // correlation against it tops out at sqrt(3)/2. Check the order directly.
  for (std::size_t i = 1; i < sp.size(); ++i) {
    CHECK(tau[i] < tau[i - 1]);
    CHECK(sp[i] <= sp[i - 1]);
  }
}
