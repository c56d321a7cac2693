#include "maller/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "maller/bandwidth.hpp"
#include "maller/dimension.hpp"
#include "maller/laplace.hpp"
#include "maller/llr.hpp"

namespace maller {

namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MALLER_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return 0.5 * (v[mid - 1] + hi);
}

std::string csv_sibling(const std::string& output, const std::string& suffix) {
  std::string base = output;
  const std::string ext = ".json";
  if (base.size() > ext.size() &&
      base.compare(base.size() - ext.size(), ext.size(), ext) == 0)
    base.resize(base.size() - ext.size());
  return base + suffix;
}

BandwidthGrid grid_for(const ExperimentConfig& cfg, int d) {
  const double lo = cfg.grid_lo > 0.0 ? cfg.grid_lo : 0.01;
  const double hi = cfg.grid_hi > 0.0 ? cfg.grid_hi : grid_upper_bound(d);
  return candidate_grid(d, cfg.grid_count, lo, hi);
}

struct PipelineOutput {
  Eigen::VectorXd predictions;
  Eigen::MatrixXd gradients;  // one row per test point
  int d_hat = 0;
  double pilot_m = 0.0;
  double pilot_r = 0.0;
};

// Full MALLER pipeline on a train/test pair that has already been normalized:
// dimension, frames, pilot bandwidths, per-point variance, per-query
// bandwidth selection, prediction (and gradient) at every test point.
PipelineOutput run_pipeline(const Dataset& train, const Dataset& test,
                            const ExperimentConfig& cfg, std::uint64_t seed) {
  PipelineOutput out;
  if (cfg.d_override > 0) {
    out.d_hat = cfg.d_override;
  } else {
    out.d_hat = mle_dimension(train).d_hat;
  }

  FitOptions options;
  options.h_pca = cfg.h_pca;
  options.filter.seed = seed;
  FitEngine engine(train, out.d_hat, Kernel::gauss7(), options);

  const BandwidthGrid grid = grid_for(cfg, out.d_hat);

  if (cfg.h > 0.0) {
    // fixed-bandwidth mode: no selection stage
    out.predictions.resize(test.n());
    out.gradients.resize(test.n(), train.p());
    for (Eigen::Index i = 0; i < test.n(); ++i) {
      const LocalFit fit =
          engine.fit(test.predictors.row(i).transpose(), cfg.h);
      out.predictions(i) = fit.beta(0);
      out.gradients.row(i) = estimate_gradient(fit).transpose();
    }
    return out;
  }

  const BandwidthPlan plan =
      make_bandwidth_plan(engine, grid, cfg.block_size, mix_seed(seed, 0xb10c));
  out.pilot_m = plan.pilot_m;
  out.pilot_r = plan.pilot_r;

  out.predictions.resize(test.n());
  out.gradients.resize(test.n(), train.p());
  const double h_max = grid.values.back();
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    FitEngine::Query query =
        engine.query(test.predictors.row(i).transpose(), h_max);
    const PointSelection sel = select_optimal(query, grid, plan.sigma2);
    const LocalFit fit = query.fit(sel.h_opt);
    out.predictions(i) = fit.beta(0);
    out.gradients.row(i) = estimate_gradient(fit).transpose();
  }
  return out;
}

void aggregate(ExperimentReport& report) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : report.replications) {
    if (r.failed) {
      ++report.failures;
      continue;
    }
    sum += r.value;
    ++n;
  }
  report.mean = n > 0 ? sum / n : 0.0;
  double ss = 0.0;
  for (const auto& r : report.replications)
    if (!r.failed) ss += (r.value - report.mean) * (r.value - report.mean);
  report.stddev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
}

void run_klein(const ExperimentConfig& cfg, ExperimentReport& report) {
  const int workers = resolve_workers(cfg.workers);
  report.replications.resize(std::size_t(cfg.replications));
  parallel_for(cfg.replications, workers, [&](int rep) {
    ReplicationResult& rr = report.replications[std::size_t(rep)];
    rr.replication = rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      NoiseSpec noise{cfg.snrdb, cfg.sigma_x};
      const Dataset train_raw =
          sample_klein_bottle(cfg.n, noise, mix_seed(cfg.seed, 2 * rep));
      const Dataset test_raw = sample_klein_bottle(
          cfg.n_test, noise, mix_seed(cfg.seed, 2 * rep + 1));
      auto [train, test] = normalize_joint(train_raw, test_raw);
      const PipelineOutput pipe =
          run_pipeline(train, test, cfg, mix_seed(cfg.seed, 7000 + rep));
      rr.value = rase(pipe.predictions, *test.meta.m_true);
      rr.d_hat = pipe.d_hat;
      rr.extra["pilot_m"] = pipe.pilot_m;
      rr.extra["pilot_r"] = pipe.pilot_r;
    } catch (const std::exception& e) {
      rr.failed = true;
      rr.error = e.what();
    }
    rr.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  });
}

void run_torus(const ExperimentConfig& cfg, ExperimentReport& report) {
  const int workers = resolve_workers(cfg.workers);
  report.replications.resize(std::size_t(cfg.replications));
  parallel_for(cfg.replications, workers, [&](int rep) {
    ReplicationResult& rr = report.replications[std::size_t(rep)];
    rr.replication = rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      NoiseSpec noise{cfg.snrdb, cfg.sigma_x};
      const Dataset train_raw =
          sample_torus(cfg.n, noise, mix_seed(cfg.seed, 2 * rep));
      const Dataset test_raw =
          sample_torus(cfg.n_test, noise, mix_seed(cfg.seed, 2 * rep + 1));
      auto [train, test] = normalize_joint(train_raw, test_raw);
      const PipelineOutput pipe =
          run_pipeline(train, test, cfg, mix_seed(cfg.seed, 7000 + rep));

      std::vector<double> angles, relmags;
      angles.reserve(std::size_t(test.n()));
      for (Eigen::Index i = 0; i < test.n(); ++i) {
        const Eigen::VectorXd truth = test.meta.grad_true->row(i).transpose();
        const Eigen::VectorXd est = pipe.gradients.row(i).transpose();
        const double tn = truth.norm(), en = est.norm();
        if (tn < 1e-12) continue;  // gradient vanishes: angle undefined
        double c = en > 0.0 ? truth.dot(est) / (tn * en) : 0.0;
        c = std::min(1.0, std::max(-1.0, c));
        angles.push_back(std::acos(c) * 180.0 / M_PI);
        relmags.push_back(std::abs(en - tn) / tn);
      }
      rr.value = median(angles);
      rr.extra["median_rel_mag_err"] = median(relmags);
      rr.d_hat = pipe.d_hat;
      rr.extra["pilot_m"] = pipe.pilot_m;
    } catch (const std::exception& e) {
      rr.failed = true;
      rr.error = e.what();
    }
    rr.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  });
}

int sphere_multiplicity(int d, int l) {
  const auto binom = [](int a, int b) -> long {
    if (b < 0 || b > a) return 0;
    long r = 1;
    for (int i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
    return r;
  };
  return int(binom(d + l, d) - binom(d + l - 2, d));
}

void run_sphere_spectrum(const ExperimentConfig& cfg, ExperimentReport& report) {
  const int d = cfg.sphere_d;
  const double h = cfg.h > 0.0 ? cfg.h : 0.1;
  const int workers = resolve_workers(cfg.workers);
  report.replications.resize(std::size_t(cfg.replications));

  int k_default = 0;
  for (int l = 0; l < 4; ++l) k_default += sphere_multiplicity(d, l);
  const int k = cfg.spectrum_k > 0 ? cfg.spectrum_k : k_default;

  std::mutex csv_mutex;
  parallel_for(cfg.replications, workers, [&](int rep) {
    ReplicationResult& rr = report.replications[std::size_t(rep)];
    rr.replication = rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Dataset ds = sample_sphere(d, cfg.n, mix_seed(cfg.seed, rep));
      FilterParams filter;
      filter.seed = mix_seed(cfg.seed, 9000 + rep);
      auto [ap, lp] =
          build_maller_operator(ds, h, cfg.h_pca, d, Kernel::gauss7(), filter);
      const double scale = delta_unit_scale(Kernel::gauss7(), d);
      const SpectrumReport spec =
          spectrum(lp, k, scale, GapRule::absolute(0.25 * double(d)));

      double err = 0.0;
      int checked = 0;
      for (std::size_t c = 0; c < spec.clusters.size() && c < 4; ++c) {
        std::vector<double> reals;
        for (int i : spec.clusters[c])
          reals.push_back(spec.eigenvalues(i).real());
        const double med = median(reals);
        const double target = -double(int(c)) * (int(c) + d - 1);
        rr.extra["cluster" + std::to_string(c) + "_median"] = med;
        rr.extra["cluster" + std::to_string(c) + "_size"] =
            double(spec.clusters[c].size());
        if (c > 0) {
          err += std::abs(med - target) / std::abs(target);
          ++checked;
        }
      }
      rr.value = checked > 0 ? err / checked : 1.0;
      rr.d_hat = d;
      if (rep == 0) {
        std::lock_guard<std::mutex> lock(csv_mutex);
        write_spectrum_csv(csv_sibling(cfg.output, "_spectrum.csv"), spec);
      }
    } catch (const std::exception& e) {
      rr.failed = true;
      rr.error = e.what();
    }
    rr.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  });
}

void run_interval_spectrum(const ExperimentConfig& cfg,
                           ExperimentReport& report) {
  const double h = cfg.h > 0.0 ? cfg.h : 0.01;
  const int k = cfg.spectrum_k > 0 ? cfg.spectrum_k : 10;
  report.replications.resize(std::size_t(cfg.replications));
  for (int rep = 0; rep < cfg.replications; ++rep) {
    ReplicationResult& rr = report.replications[std::size_t(rep)];
    rr.replication = rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Dataset ds = sample_interval(cfg.n, mix_seed(cfg.seed, rep));
      FilterParams filter;
      filter.seed = mix_seed(cfg.seed, 9000 + rep);
      auto [ap, lp] =
          build_maller_operator(ds, h, cfg.h_pca, 1, Kernel::gauss7(), filter);
      const double scale = delta_unit_scale(Kernel::gauss7(), 1);
      const SpectrumReport spec = spectrum(lp, k, scale);

      rr.value = std::abs(spec.eigenvalues(1).real());
      for (int i = 0; i < std::min(k, 6); ++i)
        rr.extra["lambda" + std::to_string(i)] = spec.eigenvalues(i).real();
      rr.d_hat = 1;

      if (rep == 0) {
        write_spectrum_csv(csv_sibling(cfg.output, "_spectrum.csv"), spec);
        // plot-ready eigenvector table: position, first four eigenvectors
        std::ofstream out(csv_sibling(cfg.output, "_eigenvectors.csv"));
        out.precision(12);
        out << "x,v1,v2,v3,v4\n";
        for (Eigen::Index i = 0; i < ds.n(); ++i) {
          out << ds.predictors(i, 0);
          for (int j = 0; j < std::min(k, 4); ++j)
            out << "," << spec.vectors(i, j).real();
          out << "\n";
        }
      }
    } catch (const std::exception& e) {
      rr.failed = true;
      rr.error = e.what();
    }
    rr.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  }
}

void run_csv_regression(const ExperimentConfig& cfg, ExperimentReport& report) {
  report.replications.resize(1);
  ReplicationResult& rr = report.replications[0];
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ResponseColumn rc;
    if (!cfg.response.empty()) {
      try {
        rc = std::stoi(cfg.response);
      } catch (...) {
        rc = cfg.response;
      }
    }
    Dataset train_raw = load_csv(cfg.train_path, rc);
    Dataset test_raw = load_csv(cfg.test_path, rc);
    Dataset train = train_raw, test = test_raw;
    if (cfg.normalize) std::tie(train, test) = normalize_joint(train_raw, test_raw);
    const PipelineOutput pipe =
        run_pipeline(train, test, cfg, mix_seed(cfg.seed, 7000));
    rr.d_hat = pipe.d_hat;
    rr.value = rase(pipe.predictions, test.responses);
    rr.extra["pilot_m"] = pipe.pilot_m;

    std::ofstream out(cfg.predictions_path);
    if (!out)
      throw ParseError("cannot open '" + cfg.predictions_path + "' for writing");
    out.precision(17);
    out << "m_hat\n";
    for (Eigen::Index i = 0; i < pipe.predictions.size(); ++i)
      out << pipe.predictions(i) << "\n";
  } catch (const std::exception& e) {
    rr.failed = true;
    rr.error = e.what();
  }
  rr.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
}

void write_values_csv(const ExperimentConfig& cfg,
                      const ExperimentReport& report) {
  std::ofstream out(csv_sibling(cfg.output, "_values.csv"));
  if (!out) return;
  out.precision(12);
  out << "replication,value,d_hat,failed,seconds\n";
  for (const auto& r : report.replications)
    out << r.replication << "," << r.value << "," << r.d_hat << ","
        << int(r.failed) << "," << r.seconds << "\n";
}

}  // namespace

ExperimentKind experiment_from_string(const std::string& name) {
  if (name == "klein_rase") return ExperimentKind::klein_rase;
  if (name == "torus_gradient") return ExperimentKind::torus_gradient;
  if (name == "sphere_spectrum") return ExperimentKind::sphere_spectrum;
  if (name == "interval_spectrum") return ExperimentKind::interval_spectrum;
  if (name == "csv_regression") return ExperimentKind::csv_regression;
  throw ParseError("unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::klein_rase: return "klein_rase";
    case ExperimentKind::torus_gradient: return "torus_gradient";
    case ExperimentKind::sphere_spectrum: return "sphere_spectrum";
    case ExperimentKind::interval_spectrum: return "interval_spectrum";
    case ExperimentKind::csv_regression: return "csv_regression";
  }
  return "unknown";
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  try {
    if (key == "experiment") cfg.experiment = experiment_from_string(value);
    else if (key == "n") cfg.n = std::stoi(value);
    else if (key == "n_test") cfg.n_test = std::stoi(value);
    else if (key == "replications") cfg.replications = std::stoi(value);
    else if (key == "snrdb") cfg.snrdb = std::stod(value);
    else if (key == "sigma_x") cfg.sigma_x = std::stod(value);
    else if (key == "h_pca") cfg.h_pca = std::stod(value);
    else if (key == "grid_lo") cfg.grid_lo = std::stod(value);
    else if (key == "grid_hi") cfg.grid_hi = std::stod(value);
    else if (key == "grid_count") cfg.grid_count = std::stoi(value);
    else if (key == "block_size") cfg.block_size = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "workers") cfg.workers = std::stoi(value);
    else if (key == "output") cfg.output = value;
    else if (key == "sphere_d") cfg.sphere_d = std::stoi(value);
    else if (key == "h") cfg.h = std::stod(value);
    else if (key == "spectrum_k") cfg.spectrum_k = std::stoi(value);
    else if (key == "train") cfg.train_path = value;
    else if (key == "test") cfg.test_path = value;
    else if (key == "response") cfg.response = value;
    else if (key == "predictions") cfg.predictions_path = value;
    else if (key == "d") cfg.d_override = std::stoi(value);
    else if (key == "normalize") cfg.normalize = (value == "1" || value == "true");
    else throw ParseError("unknown config key '" + key + "'");
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("bad value '" + value + "' for config key '" + key + "'");
  }
  if (cfg.replications < 1) throw ParseError("replications must be >= 1");
  if (cfg.h < 0.0 || cfg.h_pca <= 0.0 || cfg.grid_lo < 0.0 || cfg.grid_hi < 0.0)
    throw ParseError("bandwidths must be positive");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ParseError("config line " + std::to_string(lineno) +
                         ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\"");
      const auto e = s.find_last_not_of(" \t\r\"");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    apply_override(cfg, key, value);
  }
  return cfg;
}

std::string ExperimentReport::to_json() const {
  ordered_json j;
  j["experiment"] = to_string(config.experiment);
  j["version"] = version;
  ordered_json jc;
  jc["n"] = config.n;
  jc["n_test"] = config.n_test;
  jc["replications"] = config.replications;
  jc["snrdb"] = config.snrdb;
  jc["sigma_x"] = config.sigma_x;
  jc["h_pca"] = config.h_pca;
  jc["h"] = config.h;
  jc["grid_lo"] = config.grid_lo;
  jc["grid_hi"] = config.grid_hi;
  jc["grid_count"] = config.grid_count;
  jc["block_size"] = config.block_size;
  jc["seed"] = config.seed;
  jc["sphere_d"] = config.sphere_d;
  jc["output"] = config.output;
  j["config"] = jc;
  j["mean"] = mean;
  j["stddev"] = stddev;
  j["failures"] = failures;
  if (!summary.empty()) j["summary"] = summary;
  ordered_json reps = ordered_json::array();
  for (const auto& r : replications) {
    ordered_json jr;
    jr["replication"] = r.replication;
    jr["value"] = r.value;
    jr["d_hat"] = r.d_hat;
    jr["failed"] = r.failed;
    if (!r.error.empty()) jr["error"] = r.error;
    for (const auto& [k, v] : r.extra) jr[k] = v;
    jr["seconds"] = r.seconds;
    reps.push_back(jr);
  }
  j["replications_detail"] = reps;
  return j.dump(2);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.config = cfg;
  switch (cfg.experiment) {
    case ExperimentKind::klein_rase: run_klein(cfg, report); break;
    case ExperimentKind::torus_gradient: run_torus(cfg, report); break;
    case ExperimentKind::sphere_spectrum: run_sphere_spectrum(cfg, report); break;
    case ExperimentKind::interval_spectrum:
      run_interval_spectrum(cfg, report);
      break;
    case ExperimentKind::csv_regression: run_csv_regression(cfg, report); break;
  }
  aggregate(report);
  if (report.failures * 5 > int(report.replications.size())) {
    std::string first;
    for (const auto& r : report.replications)
      if (r.failed) {
        first = r.error;
        break;
      }
    throw Error("run_experiment: " + std::to_string(report.failures) + "/" +
                std::to_string(report.replications.size()) +
                " replications failed; first error: " + first);
  }
  if (!cfg.output.empty()) {
    std::ofstream out(cfg.output);
    if (!out) throw ParseError("cannot open '" + cfg.output + "' for writing");
    out << report.to_json() << "\n";
    write_values_csv(cfg, report);
  }
  return report;
}

namespace {

int cmd_dim(const std::string& input, const std::string& response, int kmin,
            int kmax) {
  ResponseColumn rc;
  if (!response.empty()) {
    try {
      rc = std::stoi(response);
    } catch (...) {
      rc = response;
    }
  }
  const Dataset ds = load_csv(input, rc);
  const DimensionEstimate est = mle_dimension(ds, kmin, kmax);
  std::cout << est.d_hat << std::endl;
  std::cerr << "raw=" << est.raw << " k=[" << est.k_min << "," << est.k_max
            << "] excluded=" << est.excluded << std::endl;
  return 0;
}

int cmd_spectrum(const std::string& manifold, const std::string& input, int d,
                 int n, double h, double h_pca, int k, std::uint64_t seed,
                 const std::string& output) {
  Dataset ds;
  int dim = d;
  double h_eff = h;
  if (!manifold.empty()) {
    if (manifold == "sphere2" || manifold == "sphere3" || manifold == "sphere4") {
      dim = manifold.back() - '0';
      ds = sample_sphere(dim, n > 0 ? n : (dim == 2 ? 1000 : dim == 3 ? 2000 : 4000),
                         seed);
      if (h_eff <= 0.0) h_eff = 0.1;
    } else if (manifold == "interval") {
      dim = 1;
      ds = sample_interval(n > 0 ? n : 2000, seed);
      if (h_eff <= 0.0) h_eff = 0.01;
    } else {
      throw ParseError("unknown manifold '" + manifold +
                       "' (use sphere2|sphere3|sphere4|interval)");
    }
  } else {
    if (input.empty())
      throw ParseError("spectrum needs --manifold or --input");
    ds = load_csv(input);
    if (dim <= 0) dim = mle_dimension(ds).d_hat;
    if (h_eff <= 0.0) h_eff = 0.1;
  }
  FilterParams filter;
  filter.seed = seed;
  auto [ap, lp] =
      build_maller_operator(ds, h_eff, h_pca, dim, Kernel::gauss7(), filter);
  const double scale = delta_unit_scale(Kernel::gauss7(), dim);
  const int k_eff = k > 0 ? std::min<int>(k, int(ds.n())) : std::min<int>(30, int(ds.n()));
  const SpectrumReport spec = spectrum(lp, k_eff, scale);
  write_spectrum_csv(output, spec);
  std::cerr << "wrote " << k_eff << " eigenvalues (scale " << scale << ") to "
            << output << std::endl;
  return 0;
}

int cmd_fit(ExperimentConfig cfg, bool gradient) {
  cfg.experiment = ExperimentKind::csv_regression;
  ResponseColumn rc;
  if (!cfg.response.empty()) {
    try {
      rc = std::stoi(cfg.response);
    } catch (...) {
      rc = cfg.response;
    }
  }
  Dataset train_raw = load_csv(cfg.train_path, rc);
  Dataset test_raw = load_csv(cfg.test_path, rc);
  Dataset train = train_raw, test = test_raw;
  if (cfg.normalize) std::tie(train, test) = normalize_joint(train_raw, test_raw);
  const PipelineOutput pipe =
      run_pipeline(train, test, cfg, mix_seed(cfg.seed, 7000));

  std::ofstream out(cfg.predictions_path);
  if (!out)
    throw ParseError("cannot open '" + cfg.predictions_path + "' for writing");
  out.precision(17);
  out << "m_hat";
  if (gradient)
    for (Eigen::Index jcol = 0; jcol < train_raw.p(); ++jcol)
      out << ",g" << jcol + 1;
  out << "\n";
  // report gradients in the original (pre-normalization) coordinates
  const double s =
      cfg.normalize
          ? normalization_scale((Eigen::MatrixXd(train_raw.n() + test_raw.n(),
                                                 train_raw.p())
                                     << train_raw.predictors,
                                 test_raw.predictors)
                                    .finished())
          : 1.0;
  for (Eigen::Index i = 0; i < pipe.predictions.size(); ++i) {
    out << pipe.predictions(i);
    if (gradient) {
      for (Eigen::Index jcol = 0; jcol < train_raw.p(); ++jcol)
        out << "," << pipe.gradients(i, jcol) / s;
    }
    out << "\n";
  }
  std::cerr << "d_hat=" << pipe.d_hat << " pilot_m=" << pipe.pilot_m
            << " wrote " << pipe.predictions.size() << " predictions to "
            << cfg.predictions_path << std::endl;
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"MALLER: local linear regression on unknown manifolds"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  std::string config_path;
  std::vector<std::string> overrides;
  run->add_option("--config", config_path, "key = value config file")->required();
  run->add_option("--set", overrides, "override config entries (key=value)");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a CSV training set and predict");
  ExperimentConfig fit_cfg;
  bool fit_gradient = false;
  bool no_normalize = false;
  fit->add_option("--train", fit_cfg.train_path, "training CSV")->required();
  fit->add_option("--test", fit_cfg.test_path, "query CSV")->required();
  fit->add_option("--output", fit_cfg.predictions_path, "predictions CSV");
  fit->add_option("--response", fit_cfg.response, "response column (name or index)");
  fit->add_option("--d", fit_cfg.d_override, "override the intrinsic dimension");
  fit->add_option("--bandwidth", fit_cfg.h, "fixed bandwidth (skips selection)");
  fit->add_option("--h-pca", fit_cfg.h_pca, "tangent-plane bandwidth");
  fit->add_option("--seed", fit_cfg.seed, "seed");
  fit->add_option("--block-size", fit_cfg.block_size, "mGCV block size");
  fit->add_flag("--gradient", fit_gradient, "also emit embedded gradients");
  fit->add_flag("--no-normalize", no_normalize, "skip dataset normalization");

  // spectrum
  auto* spec = app.add_subcommand("spectrum", "operator spectrum to CSV");
  std::string sp_manifold, sp_input, sp_output = "spectrum.csv";
  int sp_d = 0, sp_n = 0, sp_k = 0;
  double sp_h = 0.0, sp_hpca = 0.015;
  std::uint64_t sp_seed = 42;
  spec->add_option("--manifold", sp_manifold, "sphere2|sphere3|sphere4|interval");
  spec->add_option("--input", sp_input, "dataset CSV");
  spec->add_option("--d", sp_d, "intrinsic dimension (CSV input)");
  spec->add_option("--n", sp_n, "sample size for synthetic manifolds");
  spec->add_option("--bandwidth", sp_h, "bandwidth");
  spec->add_option("--h-pca", sp_hpca, "tangent-plane bandwidth");
  spec->add_option("--k", sp_k, "number of eigenvalues");
  spec->add_option("--seed", sp_seed, "seed");
  spec->add_option("--output", sp_output, "spectrum CSV path");

  // dim
  auto* dim = app.add_subcommand("dim", "estimate the intrinsic dimension");
  std::string dim_input, dim_response;
  int dim_kmin = 10, dim_kmax = 20;
  dim->add_option("--input", dim_input, "dataset CSV")->required();
  dim->add_option("--response", dim_response, "response column (name or index)");
  dim->add_option("--kmin", dim_kmin, "smallest neighbor count");
  dim->add_option("--kmax", dim_kmax, "largest neighbor count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw ParseError("--set expects key=value, got '" + kv + "'");
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
      }
      const ExperimentReport report = run_experiment(cfg);
      std::cerr << to_string(cfg.experiment) << ": mean=" << report.mean
                << " std=" << report.stddev << " failures=" << report.failures
                << " -> " << cfg.output << std::endl;
      return 0;
    }
    if (*fit) {
      if (no_normalize) fit_cfg.normalize = false;
      return cmd_fit(fit_cfg, fit_gradient);
    }
    if (*spec)
      return cmd_spectrum(sp_manifold, sp_input, sp_d, sp_n, sp_h, sp_hpca,
                          sp_k, sp_seed, sp_output);
    if (*dim) return cmd_dim(dim_input, dim_response, dim_kmin, dim_kmax);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}

}  // namespace maller
