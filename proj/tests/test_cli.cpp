#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "pgu/ensemble_io.hpp"
#include "pgu/observations.hpp"
#include "pgu/pipeline.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run pgu_cli(const fs::path& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(PGU_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j, const std::string& name = "cfg.json") {
  std::ofstream(dir / name) << j.dump(2);
  return dir / name;
}

nlohmann::json small() { return nlohmann::json::parse(testing::kSmallConfig); }

}  // namespace

TEST_CASE("prior: success, byte-identical reruns, config errors") {
  const auto dir = testing::temp_dir("cli_prior");
  auto j = small();
  j["grid"]["n"] = {20, 20, 1};
  j["prior"]["n_realizations"] = 4;
  j.erase("grades");
  j["synthetic"].erase("grade_targets");
  const auto cfg = write_config(dir, j);
  const auto a = pgu_cli(dir, "prior --config " + cfg.string() + " --output " + (dir / "a").string());
  CHECK(a.code == 0);
  CHECK(a.out.find("realizations 4") != std::string::npos);
  const auto b = pgu_cli(dir, "prior --config " + cfg.string() + " --threads 2 --output " + (dir / "b").string());
  CHECK(b.code == 0);
  CHECK(slurp(dir / "a" / "prior.pgue") == slurp(dir / "b" / "prior.pgue"));
  CHECK(pgu::read_ensemble(dir / "a" / "prior.pgue").n_real() == 4);
  CHECK(fs::exists(dir / "a" / "most_probable.pgm"));

  j.erase("variograms");
  const auto bad = write_config(dir, j, "bad.json");
  const auto c = pgu_cli(dir, "prior --config " + bad.string() + " --output " + (dir / "c").string());
  CHECK(c.code == 2);
  CHECK(c.err.find("variograms") != std::string::npos);
  CHECK(pgu_cli(dir, "prior --config " + cfg.string() + " --bogus-flag").code == 2);
  CHECK(pgu_cli(dir, "prior --config " + (dir / "missing.json").string()).code == 2);
}

TEST_CASE("synth writes 20 periods with the shipped config") {
  const auto dir = testing::temp_dir("cli_synth");
  const auto cfg = fs::path(PGU_SOURCE_DIR) / "configs" / "synthetic.json";
  const auto r = pgu_cli(dir, "synth --config " + cfg.string() + " --output " + dir.string());
  REQUIRE(r.code == 0);
  const auto obs = pgu::load_observations(dir / "observations.csv");
  std::set<int> periods;
  for (const auto& rec : obs.records) periods.insert(rec.period);
  CHECK(periods.size() == 20);
  CHECK(obs.size() == 2000);
  CHECK(fs::exists(dir / "truth_domain.csv"));
}

TEST_CASE("update, resume, evaluate and export") {
  const auto dir = testing::temp_dir("cli_update");
  const auto cfg = write_config(dir, small()).string();
  REQUIRE(pgu_cli(dir, "synth --config " + cfg + " --output " + (dir / "syn").string()).code == 0);
  REQUIRE(pgu_cli(dir, "prior --config " + cfg + " --observations " + (dir / "syn" / "drill.csv").string() +
                           " --output " + (dir / "prior").string()).code == 0);
  const std::string common = " --config " + cfg + " --ensemble " + (dir / "prior" / "prior.pgue").string() +
                             " --observations " + (dir / "syn" / "observations.csv").string();
  const auto full = pgu_cli(dir, "update" + common + " --output " + (dir / "full").string());
  REQUIRE(full.code == 0);
  CHECK(full.out.find("final_score") != std::string::npos);

  const auto part = pgu_cli(dir, "update" + common + " --stop-after 2 --output " + (dir / "part").string());
  CHECK(part.code == 0);
  CHECK_FALSE(fs::exists(dir / "part" / "updated.pgue"));
  const auto res = pgu_cli(dir, "update" + common + " --resume --output " + (dir / "part").string());
  CHECK(res.code == 0);
  CHECK(slurp(dir / "part" / "updated.pgue") == slurp(dir / "full" / "updated.pgue"));

  const auto truth = (dir / "syn" / "truth_domain.csv").string();
  const auto ev_prior = pgu_cli(dir, "evaluate --config " + cfg + " --ensemble " + (dir / "prior" / "prior.pgue").string() +
                                         " --truth " + truth + " --output " + (dir / "ev0").string());
  const auto ev_upd = pgu_cli(dir, "evaluate --config " + cfg + " --ensemble " + (dir / "full" / "updated.pgue").string() +
                                       " --truth " + truth + " --output " + (dir / "ev1").string());
  REQUIRE(ev_prior.code == 0);
  REQUIRE(ev_upd.code == 0);
  const auto acc = [](const std::string& out) { return std::stod(out.substr(out.find("accuracy ") + 9)); };
  CHECK(acc(ev_upd.out) > acc(ev_prior.out));
  CHECK(fs::exists(dir / "ev1" / "confusion.csv"));

  const auto ex = pgu_cli(dir, "export --config " + cfg + " --ensemble " + (dir / "full" / "updated.pgue").string() +
                                   " --output " + (dir / "ex").string());
  CHECK(ex.code == 0);
  CHECK(fs::exists(dir / "ex" / "etype_Cu.csv"));

  std::string bytes = slurp(dir / "prior" / "prior.pgue");
  bytes[1] = 'X';
  std::ofstream(dir / "bad.pgue", std::ios::binary) << bytes;
  const auto bad = pgu_cli(dir, "update --config " + cfg + " --ensemble " + (dir / "bad.pgue").string() +
                                    " --observations " + (dir / "syn" / "observations.csv").string() + " --output " +
                                    (dir / "bad").string());
  CHECK(bad.code == 3);
}

TEST_CASE("empty period still reports a row; unknown domains exit 3") {
  const auto dir = testing::temp_dir("cli_empty");
  auto j = small();
  j["grid"]["n"] = {20, 20, 1};
  j["prior"]["n_realizations"] = 4;
  j.erase("grades");
  j["synthetic"].erase("grade_targets");
  const auto cfg = write_config(dir, j).string();
  REQUIRE(pgu_cli(dir, "prior --config " + cfg + " --output " + dir.string()).code == 0);
  std::ofstream(dir / "obs.csv") << "x,y,z,period,domain\n12,12,2,0,A\n52,52,2,2,B\n";
  const std::string base = " --config " + cfg + " --ensemble " + (dir / "prior.pgue").string();
  const auto r = pgu_cli(dir, "update" + base + " --observations " + (dir / "obs.csv").string() + " --output " +
                                  (dir / "u").string());
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "u" / "periods.csv");
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[2].rfind("1,0,0,", 0) == 0);

  std::ofstream(dir / "bad.csv") << "x,y,z,period,domain\n12,12,2,0,XYZ\n";
  const auto bad = pgu_cli(dir, "update" + base + " --observations " + (dir / "bad.csv").string() + " --output " +
                                    (dir / "b").string());
  CHECK(bad.code == 3);
  CHECK(bad.err.find("XYZ") != std::string::npos);
}

TEST_CASE("evaluate on the truth itself scores 1") {
  const auto dir = testing::temp_dir("cli_eval");
  auto j = small();
  j.erase("grades");
  j["synthetic"].erase("grade_targets");
  const auto cfg = write_config(dir, j).string();
  pgu::GridSpec g;
  g.nx = 30;
  g.ny = 24;
  g.dx = g.dy = g.dz = 5;
  pgu::Ensemble e(g, 3, {pgu::kG1, pgu::kG2, pgu::kDomain});
  std::vector<double> truth(g.size());
  for (std::size_t b = 0; b < g.size(); ++b) truth[b] = static_cast<double>(b % 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t b = 0; b < g.size(); ++b) e.at(r, 2, b) = truth[b];
  pgu::write_ensemble(dir / "t.pgue", e);
  pgu::write_raster_csv(dir / "truth.csv", g, truth);
  const auto r = pgu_cli(dir, "evaluate --config " + cfg + " --ensemble " + (dir / "t.pgue").string() + " --truth " +
                                  (dir / "truth.csv").string() + " --output " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.rfind("accuracy 1.0000", 0) == 0);
}
