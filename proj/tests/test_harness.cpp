#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "maller/harness.hpp"

using namespace maller;

namespace {

std::string tmp(const std::string& name) {
  return std::string("/tmp/maller_harness_") + name;
}

int run_cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"maller"};
  argv.insert(argv.end(), args.begin(), args.end());
  return cli_main(int(argv.size()), argv.data());
}

struct CoutCapture {
  std::stringstream stream;
  std::streambuf* old;
  CoutCapture() : old(std::cout.rdbuf(stream.rdbuf())) {}
  ~CoutCapture() { std::cout.rdbuf(old); }
};

ExperimentConfig tiny_klein() {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::klein_rase;
  cfg.n = 220;
  cfg.n_test = 5;
  cfg.replications = 2;
  cfg.snrdb = 5.0;
  cfg.grid_count = 5;
  cfg.block_size = 40;
  cfg.seed = 7;
  cfg.output = "";
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("config parsing with comments and overrides") {
  const std::string path = tmp("klein.cfg");
  {
    std::ofstream out(path);
    out << "# klein bottle benchmark\n"
        << "experiment = klein_rase\n"
        << "n = 300\n"
        << "snrdb = 2.0   # low signal\n"
        << "replications = 4\n"
        << "output = /tmp/maller_harness_report.json\n";
  }
  ExperimentConfig cfg = load_config(path);
  CHECK(cfg.experiment == ExperimentKind::klein_rase);
  CHECK(cfg.n == 300);
  CHECK(cfg.snrdb == doctest::Approx(2.0));
  CHECK(cfg.replications == 4);

  apply_override(cfg, "n", "500");
  CHECK(cfg.n == 500);
  CHECK_THROWS_AS(apply_override(cfg, "bogus_key", "1"), ParseError);
  CHECK_THROWS_AS(apply_override(cfg, "n", "not_a_number"), ParseError);
  CHECK_THROWS_AS(apply_override(cfg, "replications", "0"), ParseError);

  {
    std::ofstream out(path);
    out << "this line has no equals sign\n";
  }
  CHECK_THROWS_AS(load_config(path), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("experiment reruns are identical under a fixed seed") {
  const ExperimentConfig cfg = tiny_klein();
  const ExperimentReport a = run_experiment(cfg);
  const ExperimentReport b = run_experiment(cfg);
  REQUIRE(a.replications.size() == b.replications.size());
  for (std::size_t i = 0; i < a.replications.size(); ++i) {
    CHECK(a.replications[i].value == b.replications[i].value);
    CHECK(a.replications[i].d_hat == b.replications[i].d_hat);
    CHECK_FALSE(a.replications[i].failed);
  }
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
}

TEST_CASE("report aggregates recompute from the replication list") {
  ExperimentConfig cfg = tiny_klein();
  cfg.replications = 3;
  const ExperimentReport rep = run_experiment(cfg);
  double mean = 0.0;
  for (const auto& r : rep.replications) mean += r.value;
  mean /= double(rep.replications.size());
  double ss = 0.0;
  for (const auto& r : rep.replications) ss += (r.value - mean) * (r.value - mean);
  const double sd = std::sqrt(ss / double(rep.replications.size() - 1));
  CHECK(rep.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(rep.stddev == doctest::Approx(sd).epsilon(1e-12));
  for (const auto& r : rep.replications) CHECK(r.seconds >= 0.0);
}

TEST_CASE("cli dim prints the estimated dimension") {
  // 200 points along a segment in R^3, plus a response column
  const std::string path = tmp("segment.csv");
  {
    std::ofstream out(path);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      const double t = unif(rng);
      out << t << "," << 2.0 * t << "," << -t << "," << 0.0 << "\n";
    }
  }
  CoutCapture capture;
  const int rc = run_cli({"dim", "--input", path.c_str()});
  std::cout.flush();
  CHECK(rc == 0);
  CHECK(capture.stream.str() == "1\n");
  std::remove(path.c_str());
}

TEST_CASE("cli fit reproduces affine plane data") {
  // train: affine responses on a 2-plane in R^4; test: 10 more plane points
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::string train = tmp("train.csv"), test = tmp("test.csv"),
                    pred = tmp("pred.csv");
  auto emit = [&](const std::string& path, int n) {
    std::ofstream out(path);
    out.precision(17);
    for (int i = 0; i < n; ++i) {
      const double t1 = gauss(rng), t2 = gauss(rng);
      // plane spanned by (1,0,1,0)/sqrt2 and (0,1,0,-1)/sqrt2
      const double s = 1.0 / std::sqrt(2.0);
      out << s * t1 << "," << s * t2 << "," << s * t1 << "," << -s * t2 << ","
          << 1.5 + 2.0 * t1 - 0.5 * t2 << "\n";
    }
  };
  emit(train, 400);
  emit(test, 10);
  const int rc = run_cli({"fit", "--train", train.c_str(), "--test",
                          test.c_str(), "--output", pred.c_str(), "--d", "2"});
  CHECK(rc == 0);

  // compare predictions against the affine truth stored in the test file
  const Dataset truth = load_csv(test);
  std::ifstream in(pred);
  std::string line;
  std::getline(in, line);
  CHECK(line == "m_hat");
  int i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CHECK(std::abs(std::stod(line) - truth.responses(i)) < 1e-6);
    ++i;
  }
  CHECK(i == 10);
  for (const auto& p : {train, test, pred}) std::remove(p.c_str());
}

TEST_CASE("cli run writes a parsable report") {
  const std::string cfg_path = tmp("run.cfg"), report = tmp("run_report.json");
  {
    std::ofstream out(cfg_path);
    out << "experiment = klein_rase\nn = 220\nn_test = 4\nreplications = 1\n"
        << "grid_count = 5\nblock_size = 40\nseed = 3\n"
        << "output = " << report << "\n";
  }
  const int rc = run_cli({"run", "--config", cfg_path.c_str()});
  CHECK(rc == 0);
  std::ifstream in(report);
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  CHECK(j["experiment"] == "klein_rase");
  CHECK(j["failures"] == 0);
  CHECK(j["replications_detail"].size() == 1);
  CHECK(j["replications_detail"][0]["d_hat"] == 2);
  // side table with the per-replication values
  std::ifstream values(tmp("run_report_values.csv"));
  CHECK(values.good());
  for (const auto& p : {cfg_path, report, tmp("run_report_values.csv")})
    std::remove(p.c_str());
}

TEST_CASE("cli spectrum on the interval emits the five-column table") {
  const std::string out_path = tmp("spec.csv");
  const int rc = run_cli({"spectrum", "--manifold", "interval", "--n", "300",
                          "--h", "0.02", "--h-pca", "0.0005", "--k", "6",
                          "--output", out_path.c_str()});
  CHECK(rc == 0);
  std::ifstream in(out_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,real,imag,cluster_id,residual");
  std::remove(out_path.c_str());
}

TEST_CASE("cli usage errors exit with code one") {
  CHECK(run_cli({"frobnicate"}) == 1);
  CHECK(run_cli({"dim", "--no-such-flag"}) == 1);
  CHECK(run_cli({}) == 1);
}

TEST_CASE("cli runtime failures exit with code two") {
  CHECK(run_cli({"dim", "--input", "/nonexistent/file.csv"}) == 2);
  const std::string cfg_path = tmp("bad.cfg");
  {
    std::ofstream out(cfg_path);
    out << "experiment = no_such_experiment\n";
  }
  CHECK(run_cli({"run", "--config", cfg_path.c_str()}) == 2);
  std::remove(cfg_path.c_str());
}

TEST_SUITE_END();
