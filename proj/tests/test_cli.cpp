#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cli.hpp"

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = pg::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    else if (ch == ',' && !quoted) f.push_back(std::exchange(cur, {}));
    else cur += ch;
  }
  f.push_back(cur);
  return f;
}

// Data rows keyed by header name; comment lines are skipped.
std::vector<std::map<std::string, std::string>> rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      continue;
    }
    auto f = split(line);
    std::map<std::string, std::string> r;
    for (std::size_t i = 0; i < header.size() && i < f.size(); ++i) r[header[i]] = f[i];
    out.push_back(std::move(r));
  }
  return out;
}

std::set<std::string> distinct(const std::vector<std::map<std::string, std::string>>& rs, const std::string& col) {
  std::set<std::string> s;
  for (const auto& r : rs) s.insert(r.at(col));
  return s;
}

double prob(const std::vector<std::map<std::string, std::string>>& rs, const std::string& eq, const std::string& action) {
  for (const auto& r : rs)
    if (r.at("eq_index") == eq && r.at("action") == action) return std::stod(r.at("prob"));
  ADD_FAILURE() << "no row for " << action;
  return -1;
}

}  // namespace

TEST(Solve, ConfidenceAll) {
  auto r = run({"solve", "confidence", "--all"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rs = rows(r.out);
  EXPECT_EQ(distinct(rs, "eq_index").size(), 3u);
  EXPECT_NEAR(std::stod(rs.front().at("welfare")), 1.0, 1e-6);
  EXPECT_NEAR(prob(rs, "2", "a2"), 1.0 / 3, 1e-6);
}

TEST(Solve, CrossingHighMuIsUnique) {
  auto r = run({"solve", "crossing", "-c", "mu=5", "--all"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rs = rows(r.out);
  EXPECT_EQ(distinct(rs, "eq_index").size(), 1u);
  EXPECT_NEAR(prob(rs, "0", "m"), 1.0, 1e-6);
  EXPECT_NEAR(prob(rs, "0", "w"), 1.0, 1e-6);
  EXPECT_EQ(rs.front().at("param:mu"), "5");
}

TEST(Solve, BeliefDependentPartner) {
  auto r = run({"solve", "example2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(prob(rows(r.out), "0", "a2"), 0.45, 1e-6);
}

TEST(Solve, CyclistMixedNature) {
  auto r = run({"solve", "cyclist_vehicle", "--all"});
  ASSERT_EQ(r.code, 0) << r.err;
  int hits = 0;
  for (const auto& row : rows(r.out))
    if (row.at("player") == "nature" && row.at("action") == "a" && std::abs(std::stod(row.at("prob")) - 14.0 / 17) < 1e-6)
      ++hits;
  EXPECT_EQ(hits, 2);
}

TEST(Sweep, UltimatumGrid) {
  auto r = run({"sweep", "ultimatum", "--sweep", "theta1=0:1:0.25", "--sweep", "theta2=0:1:0.25"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::set<std::pair<std::string, std::string>> points;
  for (const auto& row : rows(r.out)) points.insert({row.at("param:theta1"), row.at("param:theta2")});
  EXPECT_EQ(points.size(), 25u);
}

TEST(Sweep, CrossingCandidateCounts) {
  auto r = run({"sweep", "crossing", "--sweep", "mu=1:5:1", "--all"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::map<std::string, std::set<std::string>> per_mu;
  for (const auto& row : rows(r.out)) per_mu[row.at("param:mu")].insert(row.at("eq_index"));
  ASSERT_EQ(per_mu.size(), 5u);
  EXPECT_EQ(per_mu["5"].size(), 1u);
  EXPECT_GT(per_mu["1"].size(), 1u);
}

TEST(Sweep, DegenerateRangeMatchesSolve) {
  auto a = run({"sweep", "crossing", "--sweep", "mu=2:2:1"});
  auto b = run({"solve", "crossing", "-c", "mu=2"});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Csg, GammaZeroVisitsOnlyTheStageCounter) {
  auto r = run({"csg", "crossing_multi", "-c", "gamma=0", "-k", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rs = rows(r.out);
  EXPECT_NE(r.out.find("# reachable_states=6\n"), std::string::npos);
  // Only the absorbing state has no stage left to solve.
  EXPECT_EQ(distinct(rs, "state").size(), 5u);
  EXPECT_EQ(distinct(rs, "t"), (std::set<std::string>{"1", "2", "3", "4", "5"}));
  EXPECT_EQ(rs.front().at("param:k"), "5");
}

TEST(Csg, ExperimentsReportAggregates) {
  auto r = run({"csg", "crossing_multi", "-c", "gamma=1/2", "-k", "3", "-r", "10", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# seed=7", 0), 0u);
  auto rs = rows(r.out);
  auto runs = distinct(rs, "run");
  EXPECT_TRUE(runs.count("mean"));
  EXPECT_TRUE(runs.count("stddev"));
  EXPECT_EQ(runs.size(), 12u);
}

TEST(Verify, ExitCodes) {
  auto ok = run({"verify", "crossing", "-c", "mu=5", "--profile", "m=1,w=1"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  auto bad = run({"verify", "crossing", "-c", "mu=5", "--profile", "r=1,w=1"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("residual"), std::string::npos);
}

TEST(Usage, Errors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"solve"}).code, 1);
  EXPECT_EQ(run({"solve", "no_such_model"}).code, 1);
  EXPECT_EQ(run({"solve", "crossing", "-c", "mu=9"}).code, 1);
  EXPECT_EQ(run({"solve", "crossing", "-c", "zeta=1"}).code, 1);
  EXPECT_EQ(run({"solve", "crossing", "--format", "xml"}).code, 1);
  EXPECT_EQ(run({"sweep", "crossing", "--sweep", "mu=3:1:1"}).code, 1);
  EXPECT_EQ(run({"csg", "crossing", "-k", "2"}).code, 1);
  EXPECT_EQ(run({"solve", "crossing_multi"}).code, 1);
  EXPECT_EQ(run({"verify", "crossing", "--profile", "q=1"}).code, 1);
}

TEST(Output, Deterministic) {
  auto a = run({"solve", "cyclist_vehicle_bayes", "--all", "--seed", "3"});
  auto b = run({"solve", "cyclist_vehicle_bayes", "--all", "--seed", "3"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Output, Json) {
  auto r = run({"solve", "confidence", "--all", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  ASSERT_TRUE(j.contains("records"));
  ASSERT_EQ(j["records"].size(), 1u);
  EXPECT_EQ(j["records"][0]["model"], "confidence");
  EXPECT_EQ(j["records"][0]["rows"].size(), 3u);
}

TEST(Output, FileTarget) {
  const auto path = std::filesystem::temp_directory_path() / "pgsolve_cli_test.csv";
  auto r = run({"solve", "crossing", "-c", "mu=5", "-o", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), run({"solve", "crossing", "-c", "mu=5"}).out);
  std::filesystem::remove(path);
}

TEST(Stats, HorizonSix) {
  auto r = run({"stats", "crossing_multi", "-c", "gamma=1", "-k", "6", "--no-solve"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rs = rows(r.out);
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0].at("states"), "140");
  EXPECT_EQ(rs[0].at("transitions"), "413");
  EXPECT_TRUE(rs[0].at("seconds").empty());
}

TEST(Models, ListAndFile) {
  auto r = run({"list-models"});
  ASSERT_EQ(r.code, 0);
  for (const char* name : {"confidence", "example2", "ultimatum", "reciprocity", "crossing", "cyclist_vehicle",
                           "cyclist_vehicle_bayes", "crossing_multi"})
    EXPECT_NE(r.out.find(name), std::string::npos) << name;

  const auto path = std::filesystem::temp_directory_path() / "pgsolve_cli_test.pg";
  std::ofstream(path) << "nfpg\nplayer p: a, b;\nplayer q: c, d;\nrewards \"p\"\n  [a,c] true : 1;\nendrewards\n"
                         "rewards \"q\"\n  [a,c] true : 1;\nendrewards\n";
  auto s = run({"solve", path.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  auto rs = rows(s.out);
  EXPECT_NEAR(prob(rs, "0", "a"), 1.0, 1e-6);
  EXPECT_NEAR(prob(rs, "0", "c"), 1.0, 1e-6);
  std::filesystem::remove(path);
}
