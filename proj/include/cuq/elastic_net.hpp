#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cuq/linalg.hpp"

namespace cuq {

struct ElasticNetConfig {
  double alpha = 0.5;    // L1/L2 mixing in [0,1]; 1 = lasso, 0 = ridge
  double lambda = 0.0;   // penalty strength >= 0
  std::size_t max_iterations = 100000;  // total coordinate sweeps
  double tolerance = 1e-7;              // max-change convergence threshold

  void validate() const;
};

struct LogisticModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
  ElasticNetConfig config;
  bool converged = false;
  std::size_t iterations = 0;  // coordinate sweeps consumed
};

// objective value after each outer (IRLS) iteration; exposed for tests of
// the descent property
struct FitDiagnostics {
  std::vector<double> objective_per_outer;
};

// Minimizes (1/n) sum logistic-loss + lambda * (alpha*|b|_1 + (1-alpha)/2*|b|_2^2)
// with an unpenalized intercept. IRLS outer loop, cyclic coordinate descent
// with soft-thresholding on the weighted quadratic subproblem, and step
// halving whenever a full IRLS step would increase the objective.
// warm_start, when given, must have X.cols() coefficients.
LogisticModel fit_elastic_net(const Matrix& X, const std::vector<int>& y,
                              const ElasticNetConfig& config,
                              const LogisticModel* warm_start = nullptr,
                              FitDiagnostics* diagnostics = nullptr);

// sigmoid(intercept + b.x) clamped to [1e-12, 1 - 1e-12]
double predict_proba(const LogisticModel& model, std::span<const double> x);
std::vector<double> predict_proba(const LogisticModel& model, const Matrix& X);

// the exact quantity fit_elastic_net minimizes, with the penalty taken from
// `config`; serves as the solver's test oracle
double penalized_objective(const LogisticModel& model, const Matrix& X,
                           const std::vector<int>& y, const ElasticNetConfig& config);

}  // namespace cuq
