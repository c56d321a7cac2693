#include "maller/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

namespace maller {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::mt19937_64 make_rng(std::uint64_t seed) {
  // splitmix64 scramble so that nearby seeds give unrelated streams
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return std::mt19937_64(z ^ (z >> 31));
}

double sample_variance(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / double(v.size() - 1);
}

}  // namespace

Eigen::Vector4d klein_point(double u, double v) {
  const double r = 2.0 * std::cos(v) + 1.0;
  return {r * std::cos(u), r * std::sin(u), 2.0 * std::sin(v) * std::cos(0.5 * u),
          2.0 * std::sin(v) * std::sin(0.5 * u)};
}

double klein_m(double u, double v) {
  const double c2v = std::cos(2.0 * v);
  const double du = u - M_PI, dv = v - M_PI;
  return 7.0 * std::sin(4.0 * u) + 5.0 * c2v * c2v +
         6.0 * std::exp(-32.0 * (du * du + dv * dv));
}

Eigen::Vector3d torus_point(double u, double v) {
  const double r = 2.0 + std::cos(v);
  return {r * std::cos(u), r * std::sin(u), std::sin(v)};
}

double torus_m(double u, double v) { return std::cos(u) * std::sin(4.0 * v + 1.0); }

Eigen::Vector3d torus_gradient(double u, double v) {
  // grad = (d1 m) E1 + (d2 m) E2 with the unit frames
  //   E1 = (-sin u, cos u, 0),  E2 = (-sin v cos u, -sin v sin u, cos v),
  // where d1 m = -sin(u) sin(4v+1) / (2 + cos v) and d2 m = 4 cos(u) cos(4v+1).
  const double d1m = -std::sin(u) * std::sin(4.0 * v + 1.0) / (2.0 + std::cos(v));
  const double d2m = 4.0 * std::cos(u) * std::cos(4.0 * v + 1.0);
  Eigen::Vector3d e1(-std::sin(u), std::cos(u), 0.0);
  Eigen::Vector3d e2(-std::sin(v) * std::cos(u), -std::sin(v) * std::sin(u),
                     std::cos(v));
  return d1m * e1 + d2m * e2;
}

Eigen::Vector3d torus_normal(double u, double v) {
  return {std::cos(v) * std::cos(u), std::cos(v) * std::sin(u), std::sin(v)};
}

double sigma0_from_snrdb(const Eigen::VectorXd& m_values, double snrdb) {
  if (m_values.size() < 2)
    throw DegenerateDataset("snrdb calibration needs at least two points");
  const double var_m = sample_variance(m_values);
  return std::sqrt(var_m * std::pow(10.0, -snrdb / 10.0));
}

double empirical_snrdb(const Eigen::VectorXd& m_values, double sigma0) {
  return 10.0 * std::log10(sample_variance(m_values) / (sigma0 * sigma0));
}

Dataset sample_klein_bottle(int n, const NoiseSpec& noise, std::uint64_t seed) {
  if (n < 1) throw DegenerateDataset("sample size must be positive");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, kTwoPi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.seed = seed;
  ds.predictors.resize(n, 4);
  ds.responses.resize(n);
  Eigen::MatrixXd latent(n, 2);
  Eigen::VectorXd m_true(n);
  Eigen::VectorXd sig_shape(n);

  for (int i = 0; i < n; ++i) {
    const double u = unif(rng), v = unif(rng);
    latent(i, 0) = u;
    latent(i, 1) = v;
    ds.predictors.row(i) = klein_point(u, v).transpose();
    m_true(i) = klein_m(u, v);
    sig_shape(i) = 1.0 + 0.1 * std::cos(u) + 0.1 * std::sin(v);
  }
  const double sigma0 = n >= 2 ? sigma0_from_snrdb(m_true, noise.snrdb) : 0.0;
  for (int i = 0; i < n; ++i)
    ds.responses(i) = m_true(i) + sigma0 * sig_shape(i) * gauss(rng);
  if (noise.sigma_x > 0.0)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < 4; ++k)
        ds.predictors(i, k) += noise.sigma_x * gauss(rng);

  ds.meta.latent = std::move(latent);
  ds.meta.m_true = std::move(m_true);
  ds.meta.sigma0 = sigma0;
  return ds;
}

Dataset sample_torus(int n, const NoiseSpec& noise, std::uint64_t seed) {
  if (n < 1) throw DegenerateDataset("sample size must be positive");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, kTwoPi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.seed = seed;
  ds.predictors.resize(n, 3);
  ds.responses.resize(n);
  Eigen::MatrixXd latent(n, 2);
  Eigen::VectorXd m_true(n);
  Eigen::MatrixXd grad(n, 3);
  Eigen::VectorXd sig_shape(n);

  for (int i = 0; i < n; ++i) {
    const double u = unif(rng), v = unif(rng);
    latent(i, 0) = u;
    latent(i, 1) = v;
    ds.predictors.row(i) = torus_point(u, v).transpose();
    m_true(i) = torus_m(u, v);
    grad.row(i) = torus_gradient(u, v).transpose();
    sig_shape(i) = 1.0 + 0.1 * std::cos(u) + 0.1 * std::sin(v);
  }
  const double sigma0 = n >= 2 ? sigma0_from_snrdb(m_true, noise.snrdb) : 0.0;
  for (int i = 0; i < n; ++i)
    ds.responses(i) = m_true(i) + sigma0 * sig_shape(i) * gauss(rng);
  if (noise.sigma_x > 0.0)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < 3; ++k)
        ds.predictors(i, k) += noise.sigma_x * gauss(rng);

  ds.meta.latent = std::move(latent);
  ds.meta.m_true = std::move(m_true);
  ds.meta.grad_true = std::move(grad);
  ds.meta.sigma0 = sigma0;
  return ds;
}

Dataset sample_sphere(int d, int n, std::uint64_t seed) {
  if (d < 1) throw DegenerateDataset("sphere dimension must be positive");
  if (n < 1) throw DegenerateDataset("sample size must be positive");
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.seed = seed;
  ds.predictors.resize(n, d + 1);
  ds.responses = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd g(d + 1);
    do {
      for (int k = 0; k <= d; ++k) g(k) = gauss(rng);
    } while (g.norm() < 1e-12);
    ds.predictors.row(i) = (g / g.norm()).transpose();
  }
  return ds;
}

Dataset sample_interval(int n, std::uint64_t seed) {
  if (n < 1) throw DegenerateDataset("sample size must be positive");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Dataset ds;
  ds.seed = seed;
  ds.predictors.resize(n, 1);
  ds.responses = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) ds.predictors(i, 0) = unif(rng);
  return ds;
}

double normalization_scale(const Eigen::MatrixXd& predictors) {
  const Eigen::Index n = predictors.rows();
  double max_d2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      max_d2 = std::max(max_d2,
                        (predictors.row(i) - predictors.row(j)).squaredNorm());
  return std::sqrt(max_d2);
}

namespace {

Dataset apply_normalization(const Dataset& ds, const Eigen::RowVectorXd& mu,
                            double s) {
  Dataset out = ds;
  out.predictors = (ds.predictors.rowwise() - mu) / s;
  if (out.meta.grad_true)
    *out.meta.grad_true = *ds.meta.grad_true * s;  // chain rule for x -> x/s
  return out;
}

}  // namespace

Dataset normalize_dataset(const Dataset& ds) {
  if (ds.n() < 2)
    throw DegenerateDataset("normalization needs at least two points");
  const Eigen::RowVectorXd mu = ds.predictors.colwise().mean();
  const double s = normalization_scale(ds.predictors);
  if (s <= 0.0)
    throw DegenerateDataset("all predictors identical: zero spread");
  return apply_normalization(ds, mu, s);
}

std::pair<Dataset, Dataset> normalize_joint(const Dataset& train,
                                            const Dataset& test) {
  if (train.p() != test.p())
    throw DegenerateDataset("train/test predictor dimensions differ");
  Eigen::MatrixXd all(train.n() + test.n(), train.p());
  all << train.predictors, test.predictors;
  if (all.rows() < 2)
    throw DegenerateDataset("normalization needs at least two points");
  const Eigen::RowVectorXd mu = all.colwise().mean();
  const double s = normalization_scale(all);
  if (s <= 0.0)
    throw DegenerateDataset("all predictors identical: zero spread");
  return {apply_normalization(train, mu, s), apply_normalization(test, mu, s)};
}

namespace {

bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
  if (begin < end && *begin == '+') ++begin;
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset load_csv(const std::string& path, const ResponseColumn& response) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t lineno = 0;
  std::size_t ncols = 0;
  bool saw_header = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto toks = split_csv_line(line);
    std::vector<double> vals(toks.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t j = 0; j < toks.size(); ++j) {
      if (!parse_double(toks[j], vals[j])) {
        numeric = false;
        bad_col = j;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && !saw_header) {
        header = toks;  // non-numeric first row: treat as header
        saw_header = true;
        ncols = toks.size();
        continue;
      }
      throw ParseError("non-numeric cell at row " + std::to_string(lineno) +
                       ", column " + std::to_string(bad_col + 1) + " of '" +
                       path + "'");
    }
    if (ncols == 0) ncols = toks.size();
    if (toks.size() != ncols)
      throw ParseError("ragged row " + std::to_string(lineno) + " in '" + path +
                       "': expected " + std::to_string(ncols) + " fields, got " +
                       std::to_string(toks.size()));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError("no data rows in '" + path + "'");
  if (ncols < 2)
    throw ParseError("'" + path + "' needs at least one predictor column and a response column");

  std::size_t resp = ncols - 1;
  if (std::holds_alternative<int>(response)) {
    const int idx = std::get<int>(response);
    if (idx < 0 || std::size_t(idx) >= ncols)
      throw ParseError("response column index " + std::to_string(idx) +
                       " out of range for " + std::to_string(ncols) + " columns");
    resp = std::size_t(idx);
  } else if (std::holds_alternative<std::string>(response)) {
    const std::string& name = std::get<std::string>(response);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ParseError("response column '" + name + "' not found in header of '" +
                       path + "'");
    resp = std::size_t(it - header.begin());
  }

  Dataset ds;
  const std::size_t n = rows.size();
  ds.predictors.resize(Eigen::Index(n), Eigen::Index(ncols - 1));
  ds.responses.resize(Eigen::Index(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < ncols; ++j) {
      if (j == resp)
        ds.responses(Eigen::Index(i)) = rows[i][j];
      else
        ds.predictors(Eigen::Index(i), Eigen::Index(c++)) = rows[i][j];
    }
  }
  return ds;
}

void save_csv(const std::string& path, const Dataset& ds, bool with_header) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out.precision(17);
  if (with_header) {
    for (Eigen::Index j = 0; j < ds.p(); ++j) out << "x" << j + 1 << ",";
    out << "y\n";
  }
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.p(); ++j) out << ds.predictors(i, j) << ",";
    out << ds.responses(i) << "\n";
  }
}

double rase(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
  if (predictions.size() != truth.size())
    throw Error("rase: length mismatch (" + std::to_string(predictions.size()) +
                " vs " + std::to_string(truth.size()) + ")");
  if (predictions.size() == 0) throw Error("rase: empty vectors");
  return std::sqrt((predictions - truth).squaredNorm() / double(truth.size()));
}

}  // namespace maller
