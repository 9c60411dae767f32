#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string(SELBOOT_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::string out;
  std::array<char, 4096> buf;
  std::size_t k;
  while ((k = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), k);
  int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string fixture(int id) { return std::string(SELBOOT_TEST_DATA) + "/lung_cluster" + std::to_string(id) + "_S.tsv"; }

fs::path scratch() {
  auto d = fs::temp_directory_path() / ("selboot_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::vector<std::string> split(const std::string& line, char sep = '\t') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, sep)) out.push_back(f);
  return out;
}

// second line of a TSV report (the data row)
std::vector<std::string> report_row(const std::string& out) {
  std::stringstream ss(out);
  std::string header, row;
  std::getline(ss, header);
  std::getline(ss, row);
  return split(row);
}

}  // namespace

TEST_CASE("fit on the cluster 57 fixture") {
  auto r = run("fit --complement " + fixture(57));
  REQUIRE(r.code == 0);
  auto row = report_row(r.out);
  REQUIRE(row.size() == 8);
  CHECK(row[6] == "poly.3");
  CHECK(std::abs(1 - std::stod(row[3]) - 0.799) < 0.01);
  CHECK(r.out.find("sing.3") != std::string::npos);  // model table
}

TEST_CASE("complement flag equals H-side input") {
  auto dir = scratch();
  std::ifstream in(fixture(62));
  std::string line, h = "";
  std::getline(in, line);
  h += line + "\n";
  while (std::getline(in, line)) {
    auto f = split(line);
    h += f[0] + "\t" + f[1] + "\t" + f[2] + "\t" + std::to_string(std::stol(f[2]) - std::stol(f[3])) + "\n";
  }
  write_file(dir / "h62.tsv", h);
  auto a = run("fit --name c62 --complement " + fixture(62));
  auto b = run("fit --name c62 " + (dir / "h62.tsv").string());
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("degenerate and malformed input") {
  auto dir = scratch();
  write_file(dir / "one.tsv", "sigma2\tnprime\tB\tC\n1\t916\t10000\t6807\n");
  auto r = run("fit " + (dir / "one.tsv").string());
  CHECK(r.code == 3);
  CHECK(r.out.find("degenerate") != std::string::npos);
  write_file(dir / "bad.tsv", "sigma2\tnprime\tB\tC\n1\t916\t10000\t6807\n2\t458\tten\t1\n");
  std::string cmd = std::string(SELBOOT_CLI) + " fit " + (dir / "bad.tsv").string() + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  std::string err;
  char buf[512];
  while (fgets(buf, sizeof buf, p)) err += buf;
  int status = pclose(p);
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(err.find("bad.tsv") != std::string::npos);
  CHECK(err.find("3") != std::string::npos);
}

TEST_CASE("json and tsv agree") {
  auto t = run("fit --complement " + fixture(37));
  auto j = run("--format json fit --complement " + fixture(37));
  REQUIRE(t.code == 0);
  REQUIRE(j.code == 0);
  auto row = report_row(t.out);
  auto js = nlohmann::json::parse(j.out);
  auto& rep = js["report"];
  CHECK(std::abs(rep["bp"].get<double>() - std::stod(row[1])) < 5e-5);
  CHECK(std::abs(rep["au"].get<double>() - std::stod(row[2])) < 5e-5);
  CHECK(std::abs(rep["si"].get<double>() - std::stod(row[3])) < 5e-5);
  CHECK(std::abs(rep["t"].get<double>() - std::stod(row[4])) < 5e-5);
  CHECK(std::abs(rep["gamma"].get<double>() - std::stod(row[5])) < 5e-5);
  CHECK(rep["model"] == row[6]);
}

TEST_CASE("config precedence and validation") {
  auto dir = scratch();
  auto cfg = dir / "run.toml";
  write_file(cfg, "format = \"json\"\n[sphere]\ndims = [10]\ngammas = [1.0]\nmethods = [\"si3\"]\n");
  auto from_cfg = run("--config " + cfg.string() + " sphere");
  REQUIRE(from_cfg.code == 0);
  auto js = nlohmann::json::parse(from_cfg.out);
  CHECK(js.size() == 1);
  CHECK(js[0]["key"] == "si3");
  // a flag overrides the file
  auto flag = run("--config " + cfg.string() + " --format tsv sphere --methods 2bp");
  REQUIRE(flag.code == 0);
  CHECK(flag.out.rfind("method\t", 0) == 0);
  CHECK(flag.out.find("2BP") != std::string::npos);
  CHECK(flag.out.find("SI") == std::string::npos);
  // defaults when neither is given
  auto def = run("sphere --dims 10");
  CHECK(def.out.find("SI (k=3)") != std::string::npos);
  CHECK(def.out.find("2AU (k=2)") != std::string::npos);
  write_file(dir / "bad.toml", "format = \"json\"\nverbosity = 3\n");
  CHECK(run("--config " + (dir / "bad.toml").string() + " sphere --dims 10").code != 0);
  write_file(dir / "bad2.toml", "[sphere]\ndimz = [10]\n");
  CHECK(run("--config " + (dir / "bad2.toml").string() + " sphere").code != 0);
}

TEST_CASE("simulate on the halfspace") {
  auto r = run("simulate --region halfspace --methods si2,si3 --format json");
  REQUIRE(r.code == 0);
  auto js = nlohmann::json::parse(r.out);
  for (auto& row : js["rows"]) {
    if (row["key"] == "selection") continue;
    // JSON carries fractions; the TSV table shows percentages
    for (auto& v : row["values"]) CHECK(std::abs(v.get<double>() - 0.10) < 5e-5);
    CHECK(std::abs(row["bias"].get<double>()) < 5e-5);
  }
}

TEST_CASE("pvclust on separated data") {
  auto dir = scratch();
  std::ostringstream csv;
  csv << "gene,A,B,C\n";
  for (int i = 0; i < 60; ++i) {
    double s = std::sin(i * 1.7) * 3, e1 = std::cos(i * 3.1), e2 = std::sin(i * 5.3), e3 = std::cos(i * 0.9 + 1);
    csv << "g" << i << "," << s + 1.5 * e1 << "," << s + 1.5 * e2 << "," << 2 * e3 << "\n";
  }
  write_file(dir / "sep.csv", csv.str());
  auto a = run("--seed 3 pvclust -B 500 " + (dir / "sep.csv").string());
  REQUIRE(a.code == 0);
  auto row = report_row(a.out);
  CHECK(row[1] == "A,B");
  MESSAGE(a.out);
  // some small-n' replicates lose the cluster, so the fit is informative
  REQUIRE(row[4] != "NA");
  CHECK(1 - std::stod(row[4]) > 0.99);
  auto b = run("--seed 3 --threads 4 pvclust -B 500 " + (dir / "sep.csv").string());
  CHECK(a.out == b.out);
}

TEST_CASE("mixture data and pvclust smoke") {
  auto dir = scratch();
  auto d = run("--seed 4 mixture-sim --a 1 -n 1000 --emit-data");
  REQUIRE(d.code == 0);
  write_file(dir / "mix.csv", d.out);
  auto r = run("--seed 4 --threads 4 pvclust -B 200 " + (dir / "mix.csv").string());
  REQUIRE(r.code == 0);
  auto row = report_row(r.out);
  REQUIRE(row.size() == 9);
  for (int c : {2, 3, 4}) CHECK(!row[c].empty());
}

TEST_CASE("sphere smoke") {
  auto r = run("sphere --dims 10 --gammas 1");
  CHECK(r.code == 0);
  CHECK(r.out.find("\t10\t") != std::string::npos);
}

TEST_CASE("unknown subcommand and bad flags fail") {
  CHECK(run("frobnicate").code != 0);
  CHECK(run("fit --k 9 x").code != 0);
  CHECK(run("--format xml sphere").code != 0);
}
