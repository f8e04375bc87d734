#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cuq/elastic_net.hpp"
#include "cuq/linalg.hpp"
#include "cuq/preprocess.hpp"

namespace cuq {

struct EnsembleConfig {
  std::size_t n_models = 25;      // M
  double sample_fraction = 0.95;  // phi, fraction of training rows per member
  ElasticNetConfig base;
  std::uint64_t seed = 0;

  void validate() const;
};

// Bag of base learners, each fit on a seeded random row subsample drawn
// without replacement at fraction phi.
struct Ensemble {
  EnsembleConfig config;
  std::vector<std::string> feature_names;
  std::vector<std::size_t> feature_columns;  // into the stage feature matrix
  std::vector<LogisticModel> models;         // ordered by member index
  std::vector<std::vector<std::size_t>> subsamples;  // rows used per member
};

struct UncertainPrediction {
  double mean = 0.0;
  double std = 0.0;  // sample sd across members; 0 when M = 1
  std::vector<double> per_model;
};

// X holds the full stage feature columns (already preprocessed); members are
// fit on subset columns only. phi * rows must be >= 10 and both classes
// present. Single-class subsamples are redrawn, up to 100 times per member.
Ensemble fit_ensemble(const Matrix& X, const std::vector<int>& y, const FeatureSubset& subset,
                      const EnsembleConfig& config);

UncertainPrediction predict_uncertain(const Ensemble& ensemble,
                                      std::span<const double> full_stage_row);
std::vector<UncertainPrediction> predict_uncertain(const Ensemble& ensemble, const Matrix& X);

struct EnsembleGrids {
  std::vector<std::size_t> n_models;
  std::vector<double> sample_fractions;
  std::vector<double> lambdas;
  std::vector<double> alphas;

  void validate() const;
};

struct TuneResult {
  EnsembleConfig config;
  double inner_cv_auc = 0.0;
};

// Full grid search over (M, phi, lambda, alpha) maximizing mean inner-CV AUC
// of the aggregated probability. Ties prefer smaller M, then larger phi, then
// earlier grid position. Members are shared across M values of the same
// (phi, base) cell, which reproduces the brute-force result exactly because
// member subsamples depend only on (seed, member index).
TuneResult tune_ensemble(const Matrix& X, const std::vector<int>& y, const FeatureSubset& subset,
                         const EnsembleGrids& grids, std::size_t inner_folds,
                         std::uint64_t seed, const ElasticNetConfig& base_defaults);

}  // namespace cuq
