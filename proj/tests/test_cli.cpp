#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "roa/cct.hpp"
#include "roa/cli.hpp"

using roa::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"cct", "--case", "wscc9", "--bogus"}).code == 2);
  CHECK(call({"cct", "--case", "wscc9", "--contingency", "bus8-9"}).code == 2);
  CHECK(call({"cct", "--case", "wscc9", "--dt", "0"}).code == 2);
  CHECK(call({"cct", "--case", "wscc9", "--dt", "0.01", "--tmax", "0.005"}).code == 2);
  CHECK(call({"cct", "--case", "wscc9", "--format", "xml"}).code == 2);
  CHECK(call({"roa"}).code == 2);
  CHECK(call({"roa", "--example", "example1", "--param", "a"}).code == 2);
  const auto r = call({"cct"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--case") != std::string::npos);
}

TEST_CASE("runtime errors exit with 1") {
  CHECK(call({"cct", "--case", "/nonexistent/x.json"}).code == 1);
  CHECK(call({"roa", "--example", "example9"}).code == 1);
  CHECK(call({"cct", "--case", "wscc9", "--contingency", "bus:4,line:4-8"}).code == 0);  // captured per row
}

TEST_CASE("help exits with 0") { CHECK(call({"--help"}).code == 0); }

TEST_CASE("roa on an example") {
  const auto csv = call({"roa", "--example", "example1", "--resolution", "3", "--box", "-4,4,-4,4"});
  REQUIRE(csv.code == 0);
  CHECK(lines(csv.out) == 10);
  CHECK(csv.out.rfind("x1,x2,f1,f2\n", 0) == 0);

  const auto js = call({"roa", "--example", "example1", "--format", "json", "--resolution", "4"});
  REQUIRE(js.code == 0);
  const auto doc = nlohmann::json::parse(js.out);
  CHECK(doc.at("omega_e").at("A").size() == 4);
  CHECK(doc.at("sets").size() == 3);
  CHECK(doc.at("grid").size() == 16);

  const auto e3 = call({"roa", "--example", "example3", "--param", "c=2.7", "--format", "json"});
  REQUIRE(e3.code == 0);
  CHECK(nlohmann::json::parse(e3.out).at("equilibrium")[1].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("roa on a case writes the sets file") {
  const auto path = std::filesystem::temp_directory_path() / "roa_cli_sets.json";
  const auto r = call({"roa", "--case", "wscc9", "--contingency", "bus:8,line:8-9", "--resolution", "5", "--sets",
                       path.string()});
  REQUIRE(r.code == 0);
  CHECK(lines(r.out) == 26);
  std::ifstream in(path);
  const auto doc = nlohmann::json::parse(in);
  CHECK(doc.at("omega_e").at("A").size() == 6);
}

TEST_CASE("cct table and JSON round trip") {
  const auto r = call({"cct", "--case", "wscc9", "--contingency", "bus:8,line:8-9", "--dt", "0.001", "--tmax", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("faulted_bus,tripped_line,t_c_polytope,t_c_oracle,status\n8,8-9,", 0) == 0);

  const auto j = call({"cct", "--case", "wscc9", "--format", "json", "--no-oracle"});
  REQUIRE(j.code == 0);
  const auto parsed = nlohmann::json::parse(j.out);
  CHECK(parsed.size() == 3);
  CHECK(roa::cct::results_to_json(roa::cct::results_from_json(parsed)) == parsed);
}

TEST_CASE("identical flags give identical bytes") {
  const std::vector<std::string> v{"verify", "--example", "example2", "--samples", "30", "--tend", "50", "--seed", "3"};
  const auto a = call(v);
  const auto b = call(v);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const std::vector<std::string> c{"cct", "--case", "wscc9", "--random", "2", "--seed", "5", "--jobs", "2"};
  CHECK(call(c).out == call(c).out);
}

TEST_CASE("verify reports a pass") {
  const auto r = call({"verify", "--example", "example3", "--samples", "40"});
  CHECK(r.code == 0);
  CHECK(r.out.find("exits=0") != std::string::npos);
  CHECK(r.out.find("verify PASS") != std::string::npos);
}

TEST_CASE("simulate writes trajectories") {
  const auto e = call({"simulate", "--example", "example3", "--x0", "0.1,0.6", "--tend", "1", "--dt", "0.1"});
  REQUIRE(e.code == 0);
  CHECK(lines(e.out) == 12);
  CHECK(e.out.rfind("t,x1,x2\n0,0.10000000000000001,0.59999999999999998\n", 0) == 0);

  const auto path = std::filesystem::temp_directory_path() / "roa_cli_sim.csv";
  const auto p = call({"simulate", "--case", "wscc9", "--contingency", "bus:8,line:8-9", "--clear", "0.1", "--tmax",
                       "0.5", "--dt", "0.01", "--output", path.string()});
  REQUIRE(p.code == 0);
  CHECK(p.out.empty());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,delta1,delta2,delta3,omega1,omega2,omega3");
}
