#include "optrc/readout.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include <nlohmann/json.hpp>

#include "optrc/error.hpp"

namespace optrc {

namespace {

constexpr std::array<char, 8> kModelMagic{'O', 'P', 'T', 'R', 'C', 'R', 'O', '\0'};
constexpr std::uint32_t kModelVersion = 1;
constexpr double kSingularRcond = 1e-13;

struct Centered {
  FeatureMatrix x;
  Eigen::MatrixXd y;
};

Centered centered(const ReadoutModel& model, const Eigen::Ref<const FeatureMatrix>& features,
                  const Eigen::Ref<const Eigen::MatrixXd>& targets) {
  Centered c{features, targets};
  if (model.feature_means) c.x.rowwise() -= model.feature_means->transpose();
  if (model.target_means) c.y.rowwise() -= model.target_means->transpose();
  return c;
}

Eigen::MatrixXd gram(const Eigen::Ref<const FeatureMatrix>& x, double alpha) {
  const auto n = x.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  g.diagonal().array() += alpha;
  return g.selfadjointView<Eigen::Lower>();
}

void check_horizons(const std::vector<int>& horizons) {
  if (horizons.empty()) throw ConfigError("readout needs at least one horizon");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) throw ConfigError("readout horizons must be >= 1");
    if (i > 0 && horizons[i] <= horizons[i - 1])
      throw ConfigError("readout horizons must be strictly increasing");
  }
}

}  // namespace

void ReadoutModel::validate() const {
  check_horizons(horizons);
  if (static_cast<std::size_t>(w_out.rows()) != horizons.size())
    throw DimensionError("w_out has " + std::to_string(w_out.rows()) + " rows for " +
                         std::to_string(horizons.size()) + " horizons");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (feature_means && feature_means->size() != w_out.cols())
    throw DimensionError("feature_means length does not match w_out");
  if (target_means && target_means->size() != w_out.rows())
    throw DimensionError("target_means length does not match w_out");
}

ReadoutModel fit_ridge(const Eigen::Ref<const FeatureMatrix>& features,
                       const Eigen::Ref<const Eigen::MatrixXd>& targets, double alpha,
                       std::vector<int> horizons, const FitOptions& options) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0, got " + std::to_string(alpha));
  if (features.rows() < 1) throw DimensionError("fit_ridge needs at least one training row");
  if (features.rows() != targets.rows())
    throw DimensionError("fit_ridge: " + std::to_string(features.rows()) + " feature rows vs " +
                         std::to_string(targets.rows()) + " target rows");
  if (static_cast<std::size_t>(targets.cols()) != horizons.size())
    throw DimensionError("fit_ridge: target columns do not match the horizon list");
  check_horizons(horizons);

  ReadoutModel model;
  model.alpha = alpha;
  model.horizons = std::move(horizons);
  if (options.center) {
    model.feature_means = features.colwise().mean().transpose();
    model.target_means = targets.colwise().mean().transpose();
  }
  const Centered c = centered(model, features, targets);

  const Eigen::MatrixXd g = gram(c.x, alpha);
  const Eigen::MatrixXd rhs = c.x.transpose() * c.y;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success || (alpha == 0.0 && llt.rcond() < kSingularRcond))
    throw SingularError("fit_ridge: X^T X is singular with alpha = " + std::to_string(alpha) +
                        "; use alpha > 0");
  model.w_out = llt.solve(rhs).transpose();
  if (!model.w_out.allFinite()) throw NumericalError("fit_ridge: non-finite weights");

  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0.0) {
    const double residual = (g * model.w_out.transpose() - rhs).norm() / rhs_norm;
    if (residual > options.residual_tolerance)
      throw NumericalError("fit_ridge: normal-equation residual " + std::to_string(residual) +
                           " exceeds tolerance; increase alpha");
  }
  return model;
}

Eigen::VectorXd predict(const ReadoutModel& model, const Eigen::Ref<const Eigen::VectorXd>& state) {
  if (static_cast<std::size_t>(state.size()) != model.n_features())
    throw DimensionError("predict: state has " + std::to_string(state.size()) + " components, model expects " +
                         std::to_string(model.n_features()));
  Eigen::VectorXd out = model.feature_means ? Eigen::VectorXd(model.w_out * (state - *model.feature_means))
                                            : Eigen::VectorXd(model.w_out * state);
  if (model.target_means) out += *model.target_means;
  if (model.output_map) out = out.unaryExpr([&](double v) { return model.output_map->invert(v); });
  return out;
}

Eigen::MatrixXd predict_rows(const ReadoutModel& model, const Eigen::Ref<const FeatureMatrix>& features) {
  if (static_cast<std::size_t>(features.cols()) != model.n_features())
    throw DimensionError("predict: features have " + std::to_string(features.cols()) +
                         " columns, model expects " + std::to_string(model.n_features()));
  Eigen::MatrixXd out;
  if (model.feature_means) {
    out = (features.rowwise() - model.feature_means->transpose()) * model.w_out.transpose();
  } else {
    out = features * model.w_out.transpose();
  }
  if (model.target_means) out.rowwise() += model.target_means->transpose();
  if (model.output_map) out = out.unaryExpr([&](double v) { return model.output_map->invert(v); });
  return out;
}

double normal_equation_residual(const ReadoutModel& model, const Eigen::Ref<const FeatureMatrix>& features,
                                const Eigen::Ref<const Eigen::MatrixXd>& targets) {
  const Centered c = centered(model, features, targets);
  const Eigen::MatrixXd rhs = c.x.transpose() * c.y;
  const double rhs_norm = rhs.norm();
  const Eigen::MatrixXd lhs = gram(c.x, model.alpha) * model.w_out.transpose();
  return rhs_norm > 0.0 ? (lhs - rhs).norm() / rhs_norm : lhs.norm();
}

void save_model(const std::filesystem::path& path, const ReadoutModel& model) {
  model.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kModelMagic.data(), kModelMagic.size());
  os.write(reinterpret_cast<const char*>(&kModelVersion), sizeof kModelVersion);
  const std::uint64_t dims[2] = {model.n_outputs(), model.n_features()};
  os.write(reinterpret_cast<const char*>(dims), sizeof dims);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = model.w_out;
  os.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
  if (!os) throw IoError("failed writing " + path.string());

  auto to_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json meta{{"alpha", model.alpha},
                      {"horizons", model.horizons},
                      {"n_outputs", model.n_outputs()},
                      {"n_features", model.n_features()}};
  if (model.feature_means) meta["feature_means"] = to_vec(*model.feature_means);
  if (model.target_means) meta["target_means"] = to_vec(*model.target_means);
  if (model.output_map)
    meta["output_map"] = {{"scale", model.output_map->scale}, {"offset", model.output_map->offset}};
  std::ofstream js(path.string() + ".json");
  if (!js) throw IoError("cannot open metadata for " + path.string());
  js << meta.dump(2) << '\n';
}

ReadoutModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof version);
  if (magic != kModelMagic || version != kModelVersion)
    throw IoError(path.string() + " is not a readout model file");
  std::uint64_t dims[2] = {0, 0};
  is.read(reinterpret_cast<char*>(dims), sizeof dims);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(
      static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  is.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
  if (!is) throw IoError(path.string() + ": truncated weights");

  std::ifstream js(path.string() + ".json");
  if (!js) throw IoError("missing metadata " + path.string() + ".json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ".json: " + e.what());
  }
  auto to_eigen = [](const std::vector<double>& v) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  ReadoutModel model;
  model.w_out = w;
  model.alpha = meta.at("alpha").get<double>();
  model.horizons = meta.at("horizons").get<std::vector<int>>();
  if (meta.contains("feature_means")) model.feature_means = to_eigen(meta["feature_means"].get<std::vector<double>>());
  if (meta.contains("target_means")) model.target_means = to_eigen(meta["target_means"].get<std::vector<double>>());
  if (meta.contains("output_map"))
    model.output_map = AffineMap{meta["output_map"].at("scale").get<double>(), meta["output_map"].at("offset").get<double>()};
  model.validate();
  return model;
}

}  // namespace optrc
