#include "cuq/elastic_net.hpp"

#include <algorithm>
#include <cmath>

#include "cuq/errors.hpp"

namespace cuq {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr double kWeightFloor = 1e-8;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) - y*z, computed without overflow
double logistic_loss(double z, int y) {
  double yz = y ? z : 0.0;
  if (z > 0.0) return z - yz + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z)) - yz;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double objective_at(const Matrix& X, const std::vector<int>& y, double intercept,
                    const std::vector<double>& beta, const ElasticNetConfig& config) {
  const std::size_t n = X.rows();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    loss += logistic_loss(intercept + dot(X.row(i), beta), y[i]);
  loss /= static_cast<double>(n);
  double l1 = 0.0, l2 = 0.0;
  for (double b : beta) {
    l1 += std::fabs(b);
    l2 += b * b;
  }
  return loss + config.lambda * (config.alpha * l1 + 0.5 * (1.0 - config.alpha) * l2);
}

}  // namespace

void ElasticNetConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ValidationError("elastic net: alpha must be in [0,1]");
  if (!(lambda >= 0.0)) throw ValidationError("elastic net: lambda must be >= 0");
  if (!(tolerance > 0.0)) throw ValidationError("elastic net: tolerance must be > 0");
  if (max_iterations == 0) throw ValidationError("elastic net: max_iterations must be > 0");
}

LogisticModel fit_elastic_net(const Matrix& X, const std::vector<int>& y,
                              const ElasticNetConfig& config, const LogisticModel* warm_start,
                              FitDiagnostics* diagnostics) {
  config.validate();
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (n == 0 || y.size() != n) throw ValidationError("fit_elastic_net: shape mismatch");
  if (!X.all_finite()) throw ValidationError("fit_elastic_net: non-finite input");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0)
      has0 = true;
    else if (v == 1)
      has1 = true;
    else
      throw ValidationError("fit_elastic_net: labels must be 0/1");
  }
  if (!has0 || !has1) throw ValidationError("fit_elastic_net: both classes required");

  LogisticModel model;
  model.config = config;
  model.coefficients.assign(p, 0.0);
  if (warm_start) {
    if (warm_start->coefficients.size() != p)
      throw ValidationError("fit_elastic_net: warm start size mismatch");
    model.coefficients = warm_start->coefficients;
    model.intercept = warm_start->intercept;
  }

  std::vector<double>& beta = model.coefficients;
  double& beta0 = model.intercept;

  std::vector<double> eta(n), weight(n), residual(n), col_scale(p);
  const double l1 = config.lambda * config.alpha;
  const double l2 = config.lambda * (1.0 - config.alpha);
  const double inv_n = 1.0 / static_cast<double>(n);

  double objective = objective_at(X, y, beta0, beta, config);
  std::size_t sweeps = 0;

  while (sweeps < config.max_iterations) {
    // linearize: weights and working residuals at the current iterate
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      eta[i] = beta0 + dot(X.row(i), beta);
      double prob = sigmoid(eta[i]);
      weight[i] = std::max(prob * (1.0 - prob), kWeightFloor);
      residual[i] = (static_cast<double>(y[i]) - prob) / weight[i];
      weight_sum += weight[i];
    }
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double x = X.at(i, j);
        s += weight[i] * x * x;
      }
      col_scale[j] = s * inv_n;
    }

    const std::vector<double> beta_prev = beta;
    const double beta0_prev = beta0;

    // cyclic coordinate descent on the weighted quadratic subproblem
    while (sweeps < config.max_iterations) {
      ++sweeps;
      double max_change = 0.0;

      double num0 = 0.0;
      for (std::size_t i = 0; i < n; ++i) num0 += weight[i] * residual[i];
      double delta0 = num0 / weight_sum;
      beta0 += delta0;
      for (std::size_t i = 0; i < n; ++i) residual[i] -= delta0;
      max_change = std::fabs(delta0);

      for (std::size_t j = 0; j < p; ++j) {
        double corr = 0.0;
        for (std::size_t i = 0; i < n; ++i) corr += weight[i] * X.at(i, j) * residual[i];
        double g = corr * inv_n + col_scale[j] * beta[j];
        double denom = col_scale[j] + l2;
        double updated = denom > 0.0 ? soft_threshold(g, l1) / denom : 0.0;
        double delta = updated - beta[j];
        if (delta != 0.0) {
          beta[j] = updated;
          for (std::size_t i = 0; i < n; ++i) residual[i] -= X.at(i, j) * delta;
          max_change = std::max(max_change, std::fabs(delta));
        }
      }
      if (max_change < config.tolerance) break;
    }

    // step halving: accept the IRLS step only if it does not increase the
    // true objective
    const double accept_slack = 1e-12 * (1.0 + std::fabs(objective));
    double candidate = objective_at(X, y, beta0, beta, config);
    if (candidate > objective + accept_slack) {
      const std::vector<double> beta_cand = beta;
      const double beta0_cand = beta0;
      double step = 1.0;
      for (int halvings = 0; candidate > objective + accept_slack && halvings < 50; ++halvings) {
        step *= 0.5;
        for (std::size_t j = 0; j < p; ++j)
          beta[j] = beta_prev[j] + step * (beta_cand[j] - beta_prev[j]);
        beta0 = beta0_prev + step * (beta0_cand - beta0_prev);
        candidate = objective_at(X, y, beta0, beta, config);
      }
      if (candidate > objective + accept_slack) {
        // no descent along this direction; stay put
        beta = beta_prev;
        beta0 = beta0_prev;
        candidate = objective;
      }
    }
    objective = std::min(candidate, objective);
    if (diagnostics) diagnostics->objective_per_outer.push_back(objective);

    double outer_change = std::fabs(beta0 - beta0_prev);
    for (std::size_t j = 0; j < p; ++j)
      outer_change = std::max(outer_change, std::fabs(beta[j] - beta_prev[j]));
    if (outer_change < config.tolerance) {
      model.converged = true;
      break;
    }
  }

  model.iterations = sweeps;
  return model;
}

double predict_proba(const LogisticModel& model, std::span<const double> x) {
  if (x.size() != model.coefficients.size())
    throw ValidationError("predict_proba: feature vector length mismatch");
  double prob = sigmoid(model.intercept + dot(x, model.coefficients));
  return std::clamp(prob, kProbClamp, 1.0 - kProbClamp);
}

std::vector<double> predict_proba(const LogisticModel& model, const Matrix& X) {
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_proba(model, X.row(i));
  return out;
}

double penalized_objective(const LogisticModel& model, const Matrix& X,
                           const std::vector<int>& y, const ElasticNetConfig& config) {
  config.validate();
  if (X.rows() != y.size() || model.coefficients.size() != X.cols())
    throw ValidationError("penalized_objective: shape mismatch");
  return objective_at(X, y, model.intercept, model.coefficients, config);
}

}  // namespace cuq
