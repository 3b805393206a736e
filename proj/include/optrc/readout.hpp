#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "optrc/mackey_glass.hpp"

namespace optrc {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Linear multi-horizon readout, one weight row per horizon.
struct ReadoutModel {
  Eigen::MatrixXd w_out;  // k x n_res
  double alpha = 0.0;
  std::vector<int> horizons;
  std::optional<Eigen::VectorXd> feature_means;
  std::optional<Eigen::VectorXd> target_means;
  /// Normalization of the target series; predictions are mapped back through
  /// it when present.
  std::optional<AffineMap> output_map;

  std::size_t n_features() const { return static_cast<std::size_t>(w_out.cols()); }
  std::size_t n_outputs() const { return static_cast<std::size_t>(w_out.rows()); }
  void validate() const;
};

struct FitOptions {
  bool center = false;
  /// Relative residual of the normal equations above which the fit is rejected.
  double residual_tolerance = 1e-8;
};

/// Ridge regression through (X^T X + alpha I) W^T = X^T Y and a Cholesky
/// factorization. With alpha = 0 a singular Gram matrix raises SingularError.
ReadoutModel fit_ridge(const Eigen::Ref<const FeatureMatrix>& features,
                       const Eigen::Ref<const Eigen::MatrixXd>& targets, double alpha,
                       std::vector<int> horizons, const FitOptions& options = {});

Eigen::VectorXd predict(const ReadoutModel& model, const Eigen::Ref<const Eigen::VectorXd>& state);
/// Row-wise predictions, N x k.
Eigen::MatrixXd predict_rows(const ReadoutModel& model, const Eigen::Ref<const FeatureMatrix>& features);

/// Relative residual ||(X^T X + alpha I) W^T - X^T Y|| / ||X^T Y|| on the
/// centered data the model was fit on.
double normal_equation_residual(const ReadoutModel& model, const Eigen::Ref<const FeatureMatrix>& features,
                                const Eigen::Ref<const Eigen::MatrixXd>& targets);

/// Binary weights at `path` plus JSON metadata at `path`.json.
void save_model(const std::filesystem::path& path, const ReadoutModel& model);
ReadoutModel load_model(const std::filesystem::path& path);

}  // namespace optrc
