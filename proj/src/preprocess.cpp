#include "cuq/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cuq/cohort.hpp"
#include "cuq/errors.hpp"
#include "cuq/rng.hpp"
#include "cuq/stats.hpp"

namespace cuq {

ScalerParams fit_scaler(const Matrix& train) {
  if (train.rows() < 2) throw ValidationError("fit_scaler: need >= 2 rows");
  const std::size_t p = train.cols();
  ScalerParams params;
  params.center.assign(p, 0.0);
  params.scale.assign(p, 1.0);
  const double n = static_cast<double>(train.rows());
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < train.rows(); ++i) sum += train.at(i, j);
    params.center[j] = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < train.rows(); ++i) {
      double d = train.at(i, j) - params.center[j];
      ss += d * d;
    }
    double sd = std::sqrt(ss / (n - 1.0));
    params.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return params;
}

std::vector<double> transform_row(const ScalerParams& params, std::span<const double> row) {
  if (row.size() != params.center.size())
    throw ValidationError("transform: column count does not match scaler");
  std::vector<double> out(row.size());
  double norm_sq = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = (row[j] - params.center[j]) / params.scale[j];
    norm_sq += out[j] * out[j];
  }
  if (norm_sq > 0.0) {
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : out) v *= inv;
  }
  return out;
}

Matrix transform(const ScalerParams& params, const Matrix& data) {
  if (data.cols() != params.center.size())
    throw ValidationError("transform: column count does not match scaler");
  Matrix out(data.rows(), data.cols());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto t = transform_row(params, data.row(i));
    auto dst = out.row(i);
    std::copy(t.begin(), t.end(), dst.begin());
  }
  return out;
}

FeatureSubset full_subset(const std::vector<std::string>& feature_names) {
  FeatureSubset s;
  s.names = feature_names;
  s.columns.resize(feature_names.size());
  std::iota(s.columns.begin(), s.columns.end(), 0);
  return s;
}

FeatureSubset rfe_select(const Matrix& X, const std::vector<int>& y,
                         const std::vector<std::string>& feature_names,
                         const RfeConfig& config) {
  const std::size_t p = X.cols();
  if (p < 2) throw ValidationError("rfe_select: need >= 2 features");
  if (feature_names.size() != p || y.size() != X.rows())
    throw ValidationError("rfe_select: shape mismatch");

  std::set<std::size_t> candidates;
  if (config.candidate_sizes.empty()) {
    for (std::size_t s = 1; s <= p; ++s) candidates.insert(s);
  } else {
    for (std::size_t s : config.candidate_sizes) {
      if (s < 1 || s > p)
        throw ValidationError("rfe_select: candidate size " + std::to_string(s) +
                              " outside [1, " + std::to_string(p) + "]");
      candidates.insert(s);
    }
  }
  const std::size_t min_size = *candidates.begin();

  auto splits = stratified_cv_splits(y, config.inner_folds, derive_seed(config.seed, "rfe-cv"));

  std::vector<std::size_t> active(p);
  std::iota(active.begin(), active.end(), 0);

  std::vector<double> score_by_size(p + 1, 0.0);
  std::vector<std::string> removal_order;  // first removed first
  std::vector<double> score_at_removal;

  while (true) {
    const std::size_t size = active.size();
    Matrix Xa = X.select_cols(active);

    double auc_sum = 0.0;
    std::vector<double> coef_abs(size, 0.0);
    for (const auto& split : splits) {
      Matrix Xtr = Xa.select_rows(split.train);
      auto ytr = select(y, split.train);
      LogisticModel model = fit_elastic_net(Xtr, ytr, config.base);
      for (std::size_t j = 0; j < size; ++j) coef_abs[j] += std::fabs(model.coefficients[j]);

      std::vector<double> val_probs;
      val_probs.reserve(split.val.size());
      for (std::size_t i : split.val) val_probs.push_back(predict_proba(model, Xa.row(i)));
      auc_sum += stats::auc(select(y, split.val), val_probs);
    }
    double score = auc_sum / static_cast<double>(splits.size());
    score_by_size[size] = score;

    if (size == min_size) break;

    std::size_t weakest = 0;
    for (std::size_t j = 1; j < size; ++j)
      if (coef_abs[j] < coef_abs[weakest]) weakest = j;
    removal_order.push_back(feature_names[active[weakest]]);
    score_at_removal.push_back(score);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(weakest));
  }

  std::size_t best_size = 0;
  double best_score = -1.0;
  for (std::size_t s : candidates) {
    if (s < min_size) continue;
    double sc = score_by_size[s];
    if (sc > best_score || (sc == best_score && s < best_size)) {
      best_score = sc;
      best_size = s;
    }
  }

  // reconstruct the retained set: everything minus the first p - best_size removals
  std::set<std::string> removed(removal_order.begin(),
                                removal_order.begin() +
                                    static_cast<std::ptrdiff_t>(p - best_size));
  FeatureSubset subset;
  for (std::size_t j = 0; j < p; ++j) {
    if (!removed.count(feature_names[j])) {
      subset.names.push_back(feature_names[j]);
      subset.columns.push_back(j);
    }
  }
  subset.selected_score = best_score;
  for (std::size_t i = 0; i < p - best_size; ++i)
    subset.trace.push_back({removal_order[i], score_at_removal[i]});
  return subset;
}

}  // namespace cuq
