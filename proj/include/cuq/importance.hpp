#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cuq/ensemble.hpp"
#include "cuq/linalg.hpp"

namespace cuq {

struct ImportanceEntry {
  std::string feature;
  std::vector<double> per_fold;  // signed per-fold values
  double overall = 0.0;          // mean of |per-fold| across folds
  std::size_t rank = 0;          // 1 = most important
};

struct ImportanceReport {
  std::string method;  // "coefficient" or "permutation"
  std::vector<ImportanceEntry> entries;

  std::string to_csv() const;
  static ImportanceReport from_csv(const std::string& text);
};

// Per fold: mean coefficient per feature across the ensemble's members
// (features outside the fold's subset contribute 0). Overall: mean absolute
// per-fold value. Ranks are dense over the universe, ties kept in universe
// order.
ImportanceReport coefficient_importance(const std::vector<const Ensemble*>& per_fold_ensembles,
                                        const std::vector<std::string>& feature_universe);

// Batch predictor over one or two preprocessed stage matrices; X2 may be an
// empty matrix for single-stage models.
using BatchPredictor = std::function<std::vector<double>(const Matrix& X1, const Matrix& X2)>;

// Mean AUC drop over seeded column shuffles. A feature present in both stage
// matrices is shuffled with the same permutation in each, so the predictor
// always sees a consistent row.
ImportanceReport permutation_importance(const BatchPredictor& predict, const Matrix& X1,
                                        const Matrix& X2,
                                        const std::vector<std::string>& x1_names,
                                        const std::vector<std::string>& x2_names,
                                        const std::vector<std::string>& feature_universe,
                                        const std::vector<int>& labels, std::size_t repeats,
                                        std::uint64_t seed);

// single ensemble over its own (already transformed) stage matrix
ImportanceReport permutation_importance(const Ensemble& ensemble, const Matrix& X_transformed,
                                        const std::vector<std::string>& feature_names,
                                        const std::vector<int>& labels, std::size_t repeats,
                                        std::uint64_t seed);

}  // namespace cuq
