#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "maller/errors.hpp"

namespace maller {

/// Optional ground truth attached to synthetic datasets. Latent parameters are
/// stored so that true function values and gradients stay exact instead of
/// being re-inverted from (possibly noisy) predictors.
struct DatasetMeta {
  std::optional<Eigen::MatrixXd> latent;     // n x q latent parameters
  std::optional<Eigen::VectorXd> m_true;     // true regression values
  std::optional<Eigen::MatrixXd> grad_true;  // n x p embedded gradients
  double sigma0 = 0.0;                       // calibrated base noise level
};

struct Dataset {
  Eigen::MatrixXd predictors;  // n x p, one observation per row
  Eigen::VectorXd responses;   // length n
  DatasetMeta meta;
  std::uint64_t seed = 0;

  Eigen::Index n() const { return predictors.rows(); }
  Eigen::Index p() const { return predictors.cols(); }
};

struct NoiseSpec {
  double snrdb = 5.0;   // 10 log10(Var m / sigma0^2)
  double sigma_x = 0.0; // ambient predictor-noise standard deviation
};

// Closed forms for the synthetic manifolds; exposed so tests can build
// independent oracles from the same parametrizations.
Eigen::Vector4d klein_point(double u, double v);
double klein_m(double u, double v);
Eigen::Vector3d torus_point(double u, double v);
double torus_m(double u, double v);
Eigen::Vector3d torus_gradient(double u, double v);
Eigen::Vector3d torus_normal(double u, double v);

/// sigma0 so that 10 log10(var(m_values)/sigma0^2) = snrdb,
/// using the sample variance of the noiseless function values.
double sigma0_from_snrdb(const Eigen::VectorXd& m_values, double snrdb);
double empirical_snrdb(const Eigen::VectorXd& m_values, double sigma0);

Dataset sample_klein_bottle(int n, const NoiseSpec& noise, std::uint64_t seed);
Dataset sample_torus(int n, const NoiseSpec& noise, std::uint64_t seed);
Dataset sample_sphere(int d, int n, std::uint64_t seed);
Dataset sample_interval(int n, std::uint64_t seed);

/// Center by the predictor sample mean and divide by the max pairwise
/// Euclidean distance; responses and ground truth pass through (gradients are
/// rescaled to stay consistent with the new coordinates).
Dataset normalize_dataset(const Dataset& ds);

/// Normalize a train/test pair with the mean and scale of their union.
std::pair<Dataset, Dataset> normalize_joint(const Dataset& train,
                                            const Dataset& test);

/// Scale factor (max pairwise distance) that normalize_dataset would divide by.
double normalization_scale(const Eigen::MatrixXd& predictors);

/// Response column designator: by name (requires a header) or 0-based index.
/// Default: last column.
using ResponseColumn = std::variant<std::monostate, int, std::string>;

Dataset load_csv(const std::string& path,
                 const ResponseColumn& response = std::monostate{});
void save_csv(const std::string& path, const Dataset& ds,
              bool with_header = false);

/// Root average square estimation error.
double rase(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);

}  // namespace maller
