#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(SIRUS_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t got = fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  auto dir = fs::temp_directory_path() / "sirus_cli_test";
  fs::create_directories(dir);
  return dir;
}

const std::string kMachine = std::string(SIRUS_DATA_DIR) + "/machine.csv";

}  // namespace

TEST_CASE("fit then predict") {
  const auto dir = scratch();
  const auto model = (dir / "m.json").string();
  const auto table = (dir / "rules.md").string();
  auto fit = run("fit --data " + kMachine + " --response PRP --p0 0.05 --trees 500 --model " + model + " --out " + table);
  REQUIRE(fit.code == 0);
  CHECK(slurp(table).find("|---|---|---|") != std::string::npos);

  {
    std::ofstream q(dir / "query.csv");
    q << "MYCT,MMIN,MMAX,CACH,CHMIN,CHMAX\n125,256,6000,256,16,128\n29,8000,32000,32,8,32\n";
  }
  auto pred = run("predict --model " + model + " --data " + (dir / "query.csv").string());
  REQUIRE(pred.code == 0);
  std::istringstream lines(pred.out);
  std::string header, a, b;
  std::getline(lines, header);
  std::getline(lines, a);
  std::getline(lines, b);
  CHECK(header == "prediction");
  CHECK(std::stod(a) > 0);
  CHECK(std::stod(b) > 0);

  {
    std::ofstream q(dir / "empty.csv");
    q << "MYCT,MMIN,MMAX,CACH,CHMIN,CHMAX\n";
  }
  auto empty = run("predict --model " + model + " --data " + (dir / "empty.csv").string());
  CHECK(empty.code == 0);
  CHECK(empty.out == "prediction\n");

  auto again = run("fit --data " + kMachine + " --response PRP --p0 0.05 --trees 500 --model " + (dir / "m2.json").string());
  REQUIRE(again.code == 0);
  CHECK(slurp(model) == slurp(dir / "m2.json"));
  CHECK(again.out.rfind("Average PRP = ", 0) == 0);
}

TEST_CASE("exit codes") {
  CHECK(run("fit --data /nonexistent.csv --response y --p0 0.05").code == 3);
  CHECK(run("fit --data " + kMachine + " --response nope --p0 0.05").code == 3);
  CHECK(run("fit --data " + kMachine + " --response PRP --q 1 --p0 0.05").code == 2);
  CHECK(run("fit --data " + kMachine + " --response PRP --trees many").code == 2);
  CHECK(run("bogus").code == 2);
  CHECK(run("predict --model /nonexistent.json --data " + kMachine).code == 3);
}

TEST_CASE("stability and benchmark outputs") {
  const auto dir = scratch();
  auto st = run("stability --data " + kMachine + " --response PRP --p0 0.05 --trees 300 --folds 3 --repeats 1");
  REQUIRE(st.code == 0);
  CHECK(st.out.find("stability") != std::string::npos);
  const auto csv = (dir / "bench.csv").string();
  auto bench = run("benchmark --data " + kMachine + " --response PRP --p0 0.05 --trees 300 --folds 3 --repeats 1 --out " + csv);
  REQUIRE(bench.code == 0);
  const auto text = slurp(csv);
  CHECK(text.rfind("dataset,method,p0,size,stability,error,M,seed\n", 0) == 0);
  CHECK(text.find(",sirus,") != std::string::npos);
  CHECK(text.find(",quantile_forest,") != std::string::npos);
}
