#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cuq/elastic_net.hpp"
#include "cuq/linalg.hpp"

namespace cuq {

// Per-column centering/scaling parameters, fit on training data only.
struct ScalerParams {
  std::vector<double> center;
  std::vector<double> scale;  // sample sd; zero-variance columns get 1
};

// center = column mean, scale = column sample sd (guarded); needs >= 2 rows
ScalerParams fit_scaler(const Matrix& train);

// Standardize each column, then project every row onto the unit sphere
// (spatial sign). Rows equal to the training center stay at zero.
Matrix transform(const ScalerParams& params, const Matrix& data);
std::vector<double> transform_row(const ScalerParams& params, std::span<const double> row);

struct RfeTraceEntry {
  std::string removed_feature;
  double score_before_removal = 0.0;  // inner-CV AUC including that feature
};

struct FeatureSubset {
  std::vector<std::string> names;         // retained features, schema order
  std::vector<std::size_t> columns;       // their column indices, ascending
  double selected_score = 0.0;            // inner-CV AUC of the returned subset
  std::vector<RfeTraceEntry> trace;       // removals from full size down to |names|
};

// identity subset over all columns (used when feature selection is disabled)
FeatureSubset full_subset(const std::vector<std::string>& feature_names);

struct RfeConfig {
  ElasticNetConfig base;                      // ranking model
  std::size_t inner_folds = 5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> candidate_sizes;   // empty = every size 1..p
};

// Backward elimination: fit the base model on each inner fold, rank features
// by mean |coefficient| (inputs are standardized so magnitudes compare),
// drop the weakest feature, record inner-CV AUC per size, and return the
// size with the best AUC (ties -> smaller).
FeatureSubset rfe_select(const Matrix& X, const std::vector<int>& y,
                         const std::vector<std::string>& feature_names,
                         const RfeConfig& config);

}  // namespace cuq
