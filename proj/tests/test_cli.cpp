// End-to-end checks of the command-line surface: exit codes, file schemas,
// bit-identical reruns, and plot-data round trips. The binary path comes in
// through BPP_CLI_PATH at compile time.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bpp/models.hpp"
#include "bpp/runio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() /
          ("bpp-cli-" + std::to_string(std::rand()) + std::to_string(std::rand()));
    fs::create_directories(dir);
  }
  ~Sandbox() { std::error_code ec; fs::remove_all(dir, ec); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args) {
  std::string cmd = std::string(BPP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("cross: zero intensity row with the pinned schema") {
  Sandbox sb;
  int rc = run_cli("cross --set lambda=0 --set N=5 --set replicas=50 -o " +
                   sb.path("zero"));
  CHECK(rc == 0);
  std::string csv = slurp(sb.path("zero.csv"));
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == bpp::kEstimateCsvHeader);
  CHECK(row.find(",0,0,") != std::string::npos);  // p_hat = 0
  json summary = json::parse(slurp(sb.path("zero.json")));
  CHECK(summary["version"]["format"] == bpp::kFormatVersion);
  CHECK(summary["rng"]["algorithm"] == bpp::kRngAlgorithm);
  CHECK(summary["results"][0]["estimate"]["p_hat"] == 0.0);
}

TEST_CASE("cross: invalid config exits 1 and writes nothing") {
  Sandbox sb;
  int rc = run_cli("cross --set t=-0.5 -o " + sb.path("bad"));
  CHECK(rc == 1);
  CHECK(!fs::exists(sb.path("bad.csv")));
  CHECK(!fs::exists(sb.path("bad.json")));
}

TEST_CASE("cross: unknown config keys are rejected") {
  Sandbox sb;
  std::ofstream cfg(sb.path("cfg"));
  cfg << "# comment line\nlambda = 0.5\nlambda_typo = 1\n";
  cfg.close();
  int rc = run_cli("cross -c " + sb.path("cfg") + " -o " + sb.path("out"));
  CHECK(rc == 1);
}

TEST_CASE("cross: reruns are byte-identical") {
  Sandbox sb;
  std::string args =
      " --set lambda=0.6 --set t=0.1 --set N=4 --set step=0.02 --set replicas=60"
      " --set seed=42 -o ";
  CHECK(run_cli("cross" + args + sb.path("a")) == 0);
  CHECK(run_cli("cross" + args + sb.path("b")) == 0);
  CHECK(slurp(sb.path("a.csv")) == slurp(sb.path("b.csv")));
}

TEST_CASE("flags override config file values") {
  Sandbox sb;
  std::ofstream cfg(sb.path("cfg"));
  cfg << "lambda = 0.5\nN = 4\nt = 0.1\nreplicas = 30\nstep = 0.02\n";
  cfg.close();
  CHECK(run_cli("cross -c " + sb.path("cfg") + " -o " + sb.path("base")) == 0);
  CHECK(run_cli("cross -c " + sb.path("cfg") + " --set lambda=0 -o " +
                sb.path("over")) == 0);
  json over = json::parse(slurp(sb.path("over.json")));
  CHECK(over["config"]["lambda"] == "0");
  CHECK(over["results"][0]["estimate"]["p_hat"] == 0.0);
}

TEST_CASE("sweep + plot pcurve: exact column layout") {
  Sandbox sb;
  int rc = run_cli(
      "sweep --set lambda=0.5 --set t_list=0.05,0.1 --set N=4 --set step=0.02"
      " --set replicas=40 -o " +
      sb.path("sweep"));
  CHECK(rc == 0);
  rc = run_cli("plot --record " + sb.path("sweep.json") + " --kind pcurve --out " +
               sb.path("curve.csv"));
  CHECK(rc == 0);
  std::string csv = slurp(sb.path("curve.csv"));
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "param,p_hat,ci_lo,ci_hi,replicas,seed");
  int rows = 0;
  std::string row;
  while (std::getline(lines, row))
    if (!row.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("plot snapshot: empty sample gives a header-only file") {
  Sandbox sb;
  CHECK(run_cli("cross --set lambda=0 --set N=4 --set replicas=10 -o " +
                sb.path("empty")) == 0);
  CHECK(run_cli("plot --record " + sb.path("empty.json") + " --kind snapshot --out " +
                sb.path("snap.csv")) == 0);
  std::string csv = slurp(sb.path("snap.csv"));
  CHECK(csv == "chain_id,vertex,radius,x1,x2\n");
}

TEST_CASE("plot snapshot: reproduces the sampled chains") {
  Sandbox sb;
  std::string args =
      " --set lambda=0.4 --set t=0.1 --set N=4 --set step=0.02 --set replicas=5"
      " --set seed=11 -o ";
  CHECK(run_cli("cross" + args + sb.path("run")) == 0);
  CHECK(run_cli("plot --record " + sb.path("run.json") + " --kind snapshot --out " +
                sb.path("snap.csv")) == 0);

  // Rebuild the sample the record points at and compare chain counts and
  // the bounding box of all vertices.
  bpp::ModelConfig mc;
  mc.d = 2;
  mc.lambda = 0.4;
  mc.t = 0.1;
  mc.step = 0.02;
  mc.extents = {4.0, 12.0};
  mc.master_seed = 11;
  bpp::OccupiedSetSample sample = bpp::sample_occupied_set(
      mc, bpp::derive_stream(11, {{"cross", 0}}).sub("replica", 0));

  std::string csv = slurp(sb.path("snap.csv"));
  std::istringstream lines(csv);
  std::string row;
  std::getline(lines, row);  // header
  std::set<int> ids;
  double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
  while (std::getline(lines, row)) {
    if (row.empty()) continue;
    std::istringstream cells(row);
    std::string cell;
    std::getline(cells, cell, ',');
    ids.insert(std::stoi(cell));
    std::getline(cells, cell, ',');  // vertex
    std::getline(cells, cell, ',');  // radius
    for (int j = 0; j < 2; ++j) {
      std::getline(cells, cell, ',');
      double x = std::stod(cell);
      lo[j] = std::min(lo[j], x);
      hi[j] = std::max(hi[j], x);
    }
  }
  CHECK(ids.size() == sample.chains.size());
  double slo[2] = {1e300, 1e300}, shi[2] = {-1e300, -1e300};
  for (const auto& c : sample.chains)
    for (int v = 0; v < c.path.count(); ++v)
      for (int j = 0; j < 2; ++j) {
        slo[j] = std::min(slo[j], c.path.point(v)[j]);
        shi[j] = std::max(shi[j], c.path.point(v)[j]);
      }
  for (int j = 0; j < 2; ++j) {
    CHECK(lo[j] == doctest::Approx(slo[j]).epsilon(1e-12));
    CHECK(hi[j] == doctest::Approx(shi[j]).epsilon(1e-12));
  }
}

TEST_CASE("threshold + plot bracket-trace") {
  Sandbox sb;
  int rc = run_cli(
      "threshold --set lambda=1 --set N=4 --set d=2 --set step=0.01"
      " --set axis=t --set lo=0.02 --set hi=1.5 --set replicas=80 -o " +
      sb.path("th"));
  CHECK(rc == 0);
  json summary = json::parse(slurp(sb.path("th.json")));
  const auto& bracket = summary["results"][0]["bracket"];
  double lo = bracket["lo"].get<double>();
  double hi = bracket["hi"].get<double>();
  CHECK(lo < hi);
  CHECK(bracket["p_lo"]["ci_hi"].get<double>() < 0.5);
  CHECK(bracket["p_hi"]["ci_lo"].get<double>() > 0.5);
  CHECK(run_cli("plot --record " + sb.path("th.json") +
                " --kind bracket-trace --out " + sb.path("trace.csv")) == 0);
  std::string header;
  std::istringstream lines(slurp(sb.path("trace.csv")));
  std::getline(lines, header);
  CHECK(header == "eval,param,p_hat,ci_lo,ci_hi,replicas,seed");
}

TEST_CASE("plot: unknown kind exits 1") {
  Sandbox sb;
  CHECK(run_cli("cross --set lambda=0 --set N=4 --set replicas=5 -o " +
                sb.path("r")) == 0);
  CHECK(run_cli("plot --record " + sb.path("r.json") + " --kind sausage --out " +
                sb.path("x.csv")) == 1);
}

TEST_CASE("counting: valid and violated instances") {
  Sandbox sb;
  {
    std::ofstream inst(sb.path("ok.json"));
    inst << R"({"k":1,"elements":[0,1,2,3],"pivots":[0],"families":[[[1],[2],[3]]]})";
  }
  CHECK(run_cli("counting --set instance=" + sb.path("ok.json") + " -o " +
                sb.path("ok")) == 0);
  {
    std::ofstream inst(sb.path("bad.json"));
    inst << R"({"k":1,"elements":[0,1,2,3],"pivots":[0],"families":[[[1],[2]]]})";
  }
  CHECK(run_cli("counting --set instance=" + sb.path("bad.json") + " -o " +
                sb.path("bad")) == 2);
  CHECK(run_cli("counting -o " + sb.path("none")) == 1);
}

TEST_CASE("certify: passing grid point and failing seed") {
  Sandbox sb;
  CHECK(run_cli("certify --set d=2 --set R=2 --set c3=0 -o " + sb.path("ok")) == 0);
  CHECK(run_cli("certify --set d=2 --set R=2 --set c3=0 --set a0=1 -o " +
                sb.path("fail")) == 2);
  json rep = json::parse(slurp(sb.path("ok.json")));
  CHECK(rep["results"][0]["pass"] == true);
  CHECK(rep["results"][0]["exact_arithmetic"] == true);
  CHECK(rep["results"][0]["epsilon_max"].get<double>() > 0.0);
}

TEST_CASE("mono: tiny battery exits clean") {
  Sandbox sb;
  int rc = run_cli(
      "mono --set d=2 --set t=1 --set separations=0.5,2.5 --set step=0.02"
      " --set replicas=60 -o " +
      sb.path("mono"));
  CHECK(rc == 0);
  std::string csv = slurp(sb.path("mono.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
}

TEST_CASE("edges: paired grids are validated") {
  Sandbox sb;
  CHECK(run_cli("edges --set R_list=1,2 --set t_list=1 -o " + sb.path("bad")) == 1);
  int rc = run_cli(
      "edges --set R_list=1 --set t_list=0.5 --set step=0.05 --set replicas=40 -o " +
      sb.path("e"));
  CHECK(rc == 0);
}
