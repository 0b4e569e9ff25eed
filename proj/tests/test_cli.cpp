// Drives the installed CLI binary end to end; the path arrives in TUBELAB_BIN.

#include "tubelab/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/stat.h>
#include <sys/wait.h>

namespace {

std::string bin() {
  const char* v = std::getenv("TUBELAB_BIN");
  REQUIRE(v != nullptr);
  return v;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

struct TmpDir {
  std::string path = "cli_tmp";
  TmpDir() {
    std::system(("rm -rf " + path).c_str());
    mkdir(path.c_str(), 0755);
  }
};

}  // namespace

TEST_CASE("gen: writes family files and validates specs") {
  TmpDir tmp;
  const std::string fam = tmp.path + "/single.txt";
  CHECK(run("gen single --n 3 --delta 2^-5 --out " + fam) == 0);
  const tubelab::TubeFamily f = tubelab::read_family(fam);
  CHECK(f.size() == 1);
  CHECK(f.delta == 0.03125);

  CHECK(run("gen 'bush count=5' --delta 2^-5 --out " + tmp.path + "/bush.txt") == 0);
  CHECK(tubelab::read_family(tmp.path + "/bush.txt").size() == 5);

  CHECK(run("gen 'warp drive=1' --out " + tmp.path + "/x.txt") == 1);
  CHECK(run("gen 'bush count'") == 1);
}

TEST_CASE("gen then read round-trips the family exactly") {
  TmpDir tmp;
  const std::string fam = tmp.path + "/fam.txt";
  REQUIRE(run("gen 'random m=2' --delta 2^-4 --seed 11 --out " + fam) == 0);
  const tubelab::TubeFamily f = tubelab::read_family(fam);
  const std::string again = tmp.path + "/again.txt";
  tubelab::write_family(again, f);
  CHECK(slurp(fam) == slurp(again));
}

TEST_CASE("eval: report plus CSV row, failure modes") {
  TmpDir tmp;
  const std::string fam = tmp.path + "/fam.txt";
  REQUIRE(run("gen 'bush count=8' --delta 2^-5 --out " + fam) == 0);
  const std::string rep = tmp.path + "/report.json";
  CHECK(run("eval " + fam + " --out " + rep) == 0);

  const auto j = nlohmann::json::parse(slurp(rep));
  CHECK(j["ratio"].get<double>() > 0);
  CHECK(j["params"]["n"].get<int>() == 3);
  CHECK(j["params"]["m_realized"].get<int>() == 1);
  CHECK(j["params"]["profile"]["p"].get<std::string>() == "5/2");

  const std::string csv = slurp(tmp.path + "/report.csv");
  CHECK(csv.rfind("delta,lhs,rhs,ratio\n", 0) == 0);

  CHECK(run("eval " + tmp.path + "/missing.txt --out " + rep) == 1);

  // A family file with no records is an input error.
  const std::string empty = tmp.path + "/empty.txt";
  tubelab::atomic_write_text(empty,
                             "# tubelab family v1\n# n=3 delta=0.03125 m=1 seed=0\nx0,x1,v0,v1\n");
  CHECK(run("eval " + empty + " --out " + rep) == 1);

  // Budget refusal exits 2.
  CHECK(run("eval " + fam + " --budget-cells 1000 --out " + rep) == 2);

  // Single tube: the pipeline keeps the ratio small.
  const std::string solo = tmp.path + "/solo.txt";
  REQUIRE(run("gen single --delta 2^-5 --out " + solo) == 0);
  REQUIRE(run("eval " + solo + " --out " + rep) == 0);
  const auto js = nlohmann::json::parse(slurp(rep));
  CHECK(js["ratio"].get<double>() < 5.0);
}

TEST_CASE("sweep: csv, dat and slope") {
  TmpDir tmp;
  const std::string out = tmp.path + "/sweep.json";
  CHECK(run("sweep 'single v0=0.25' --deltas 2^-4,2^-5,2^-6 --out " + out) == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["sweep"].size() == 3);
  CHECK(std::abs(j["slope"].get<double>()) < 0.2);
  const std::string csv = slurp(tmp.path + "/sweep.csv");
  CHECK(csv.rfind("delta,lhs,rhs,ratio\n", 0) == 0);
  CHECK(slurp(tmp.path + "/sweep.dat").rfind("# delta lhs rhs ratio\n", 0) == 0);

  CHECK(run("sweep 'single' --deltas 0.3,0.1 --out " + out) == 1);
}

TEST_CASE("structure subcommands") {
  TmpDir tmp;
  const std::string fam = tmp.path + "/brush.txt";
  REQUIRE(run("gen 'hairbrush sigma=0.25 count=16' --delta 2^-5 --seed 2 --out " + fam) == 0);

  const std::string out = tmp.path + "/s.json";
  CHECK(run("structure plate " + fam + " --out " + out) == 0);
  auto plate = nlohmann::json::parse(slurp(out));
  CHECK(plate["value"].get<double>() >= 0.99);
  CHECK(plate["witness"]["half_lengths"].size() == 3);

  CHECK(run("structure brush " + fam + " --sigma 0.25 --out " + out) == 0);
  auto brush = nlohmann::json::parse(slurp(out));
  CHECK(brush["brush_size"].get<int>() == 16);

  CHECK(run("structure cordoba " + fam + " --out " + out) == 0);
  auto cord = nlohmann::json::parse(slurp(out));
  CHECK(cord["measured_l2_sq"].get<double>() <= cord["incidence_bound"].get<double>() * 1.05);

  CHECK(run("structure twoends " + fam + " --out " + out) == 0);
  auto te = nlohmann::json::parse(slurp(out));
  CHECK(te["checked"].get<int>() == 16);

  CHECK(run("structure slab " + fam + " --out " + out) == 0);
  auto slab = nlohmann::json::parse(slurp(out));
  CHECK(slab["mass"].get<double>() > 0);

  // One-direction family cannot be split.
  const std::string one = tmp.path + "/one.txt";
  REQUIRE(run("gen single --delta 2^-5 --out " + one) == 0);
  CHECK(run("structure bilinear " + one + " --out " + out) == 1);

  CHECK(run("structure nonsense " + fam + " --out " + out) == 1);
}

TEST_CASE("bilinear split on a bush succeeds through the CLI") {
  TmpDir tmp;
  const std::string fam = tmp.path + "/bush.txt";
  REQUIRE(run("gen 'bush count=24' --delta 2^-5 --out " + fam) == 0);
  const std::string out = tmp.path + "/bi.json";
  CHECK(run("structure bilinear " + fam + " --c0 0.25 --out " + out) == 0);
  auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["norm"].get<double>() >= 0);
  CHECK(j["first_size"].get<int>() >= 1);
}

TEST_CASE("dim: box counts and fitted dimension") {
  TmpDir tmp;
  const std::string fam = tmp.path + "/tube.txt";
  REQUIRE(run("gen 'single v0=0.3' --delta 2^-5 --out " + fam) == 0);
  const std::string out = tmp.path + "/dim.csv";
  CHECK(run("dim " + fam + " --scales 2^-5,2^-4,2^-3,2^-2 --out " + out) == 0);
  const std::string csv = slurp(out);
  CHECK(csv.rfind("scale,count\n", 0) == 0);

  CHECK(run("dim " + fam + " --scales 2^-5,2^-4 --out " + out) == 1);  // < 3 scales

  // A full-box field snapshot counts like the whole space.
  const tubelab::GridSpec spec = tubelab::GridSpec::standard(3, 1.0 / 16);
  tubelab::ScalarField full(spec);
  for (double& v : full.values()) v = 1.0;
  const std::string fld = tmp.path + "/full.fld";
  tubelab::write_field(fld, full);
  const std::string cmd = bin() + " dim " + fld + " --scales 2^-4,2^-3,2^-2 --out " + tmp.path +
                          "/fdim.csv > " + tmp.path + "/fdim.stdout 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const std::string line = slurp(tmp.path + "/fdim.stdout");
  const double dim = std::stod(line.substr(line.find(' ')));
  CHECK(std::abs(dim - 3.0) <= 0.2);
}

TEST_CASE("every command is byte-identical across repeated runs") {
  TmpDir tmp;
  auto rerun = [&](const std::string& args, const std::string& outfile) {
    REQUIRE(run(args + " --out " + tmp.path + "/a_" + outfile) == 0);
    REQUIRE(run(args + " --out " + tmp.path + "/b_" + outfile) == 0);
    CHECK(slurp(tmp.path + "/a_" + outfile) == slurp(tmp.path + "/b_" + outfile));
  };
  rerun("gen 'sticky m=1' --delta 2^-4 --seed 5", "fam.txt");
  REQUIRE(run("gen 'sticky m=1' --delta 2^-4 --seed 5 --out " + tmp.path + "/fam.txt") == 0);
  rerun("eval " + tmp.path + "/fam.txt --epsilon 0.1", "rep.json");
  rerun("sweep 'bush count=8' --deltas 2^-4,2^-5 --seed 3", "sweep.json");
  rerun("structure plate " + tmp.path + "/fam.txt --pairs 100 --seed 4", "plate.json");
  rerun("dim " + tmp.path + "/fam.txt --scales 2^-4,2^-3,2^-2", "dim.csv");
}

TEST_CASE("config file supplies defaults, flags win") {
  TmpDir tmp;
  {
    std::ofstream cfg(tmp.path + "/lab.cfg");
    cfg << "[gen]\ndelta=0.0625\nseed=9\nn=3\n";
  }
  const std::string out = tmp.path + "/fam.txt";
  CHECK(run("gen 'bush count=4' --config " + tmp.path + "/lab.cfg --out " + out) == 0);
  CHECK(tubelab::read_family(out).delta == 0.0625);
  // A flag overrides the config value.
  CHECK(run("gen 'bush count=4' --config " + tmp.path + "/lab.cfg --delta 2^-5 --out " + out) == 0);
  CHECK(tubelab::read_family(out).delta == 0.03125);
}
