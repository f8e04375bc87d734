#include "cuq/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "cuq/cohort.hpp"
#include "cuq/errors.hpp"
#include "cuq/rng.hpp"
#include "cuq/stats.hpp"

namespace cuq {

namespace {

std::size_t subsample_count(double phi, std::size_t n) {
  // epsilon guard so phi*n that is mathematically integral does not round up
  double target = phi * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(target - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

bool has_both_classes(const std::vector<int>& y, std::span<const std::size_t> idx) {
  bool h0 = false, h1 = false;
  for (std::size_t i : idx) (y[i] == 1 ? h1 : h0) = true;
  return h0 && h1;
}

// seeded per-member row draw; redraws on single-class subsets
std::vector<std::size_t> draw_member_rows(std::uint64_t ensemble_seed, std::size_t member,
                                          double phi, const std::vector<int>& y) {
  const std::size_t n = y.size();
  const std::size_t k = subsample_count(phi, n);
  Rng rng(derive_seed(ensemble_seed, "member", {member}));
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto idx = rng.sample_without_replacement(n, k);
    if (has_both_classes(y, idx)) {
      std::sort(idx.begin(), idx.end());
      return idx;
    }
  }
  throw RuntimeFailure("fit_ensemble: member " + std::to_string(member) +
                       " drew a single-class subsample 100 times");
}

}  // namespace

void EnsembleConfig::validate() const {
  if (n_models < 1) throw ValidationError("ensemble: n_models must be >= 1");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
    throw ValidationError("ensemble: sample_fraction must be in (0,1]");
  base.validate();
}

Ensemble fit_ensemble(const Matrix& X, const std::vector<int>& y, const FeatureSubset& subset,
                      const EnsembleConfig& config) {
  config.validate();
  if (X.rows() != y.size()) throw ValidationError("fit_ensemble: shape mismatch");
  if (subset.columns.empty()) throw ValidationError("fit_ensemble: empty feature subset");
  for (std::size_t c : subset.columns)
    if (c >= X.cols()) throw ValidationError("fit_ensemble: subset column out of range");
  if (config.sample_fraction * static_cast<double>(X.rows()) < 10.0)
    throw ValidationError("fit_ensemble: sample_fraction * n must be >= 10");

  Ensemble ens;
  ens.config = config;
  ens.feature_names = subset.names;
  ens.feature_columns = subset.columns;

  Matrix Xs = X.select_cols(subset.columns);
  for (std::size_t m = 0; m < config.n_models; ++m) {
    auto rows = draw_member_rows(config.seed, m, config.sample_fraction, y);
    Matrix Xm = Xs.select_rows(rows);
    auto ym = select(y, rows);
    try {
      ens.models.push_back(fit_elastic_net(Xm, ym, config.base));
    } catch (const std::exception& e) {
      throw RuntimeFailure("fit_ensemble: member " + std::to_string(m) + ": " + e.what());
    }
    ens.subsamples.push_back(std::move(rows));
  }
  return ens;
}

UncertainPrediction predict_uncertain(const Ensemble& ensemble,
                                      std::span<const double> full_stage_row) {
  std::vector<double> x(ensemble.feature_columns.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    std::size_t c = ensemble.feature_columns[j];
    if (c >= full_stage_row.size())
      throw ValidationError("predict_uncertain: row shorter than ensemble feature space");
    x[j] = full_stage_row[c];
  }
  UncertainPrediction pred;
  pred.per_model.reserve(ensemble.models.size());
  for (const auto& model : ensemble.models) pred.per_model.push_back(predict_proba(model, x));
  pred.mean = mean(pred.per_model);
  pred.std = pred.per_model.size() > 1 ? sample_sd(pred.per_model) : 0.0;
  return pred;
}

std::vector<UncertainPrediction> predict_uncertain(const Ensemble& ensemble, const Matrix& X) {
  std::vector<UncertainPrediction> out;
  out.reserve(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out.push_back(predict_uncertain(ensemble, X.row(i)));
  return out;
}

void EnsembleGrids::validate() const {
  if (n_models.empty() || sample_fractions.empty() || lambdas.empty() || alphas.empty())
    throw ValidationError("tune_ensemble: all grids must be non-empty");
  for (std::size_t m : n_models)
    if (m < 1) throw ValidationError("tune_ensemble: n_models grid values must be >= 1");
  for (double phi : sample_fractions)
    if (!(phi > 0.0 && phi <= 1.0))
      throw ValidationError("tune_ensemble: sample_fraction grid values must be in (0,1]");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw ValidationError("tune_ensemble: lambda grid values must be >= 0");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0))
      throw ValidationError("tune_ensemble: alpha grid values must be in [0,1]");
}

TuneResult tune_ensemble(const Matrix& X, const std::vector<int>& y, const FeatureSubset& subset,
                         const EnsembleGrids& grids, std::size_t inner_folds,
                         std::uint64_t seed, const ElasticNetConfig& base_defaults) {
  grids.validate();
  if (X.rows() != y.size()) throw ValidationError("tune_ensemble: shape mismatch");

  const std::size_t max_m = *std::max_element(grids.n_models.begin(), grids.n_models.end());

  // lambda path in decreasing order for warm starts; remember grid positions
  std::vector<std::size_t> lambda_order(grids.lambdas.size());
  for (std::size_t i = 0; i < lambda_order.size(); ++i) lambda_order[i] = i;
  std::sort(lambda_order.begin(), lambda_order.end(),
            [&](std::size_t a, std::size_t b) { return grids.lambdas[a] > grids.lambdas[b]; });

  auto splits = stratified_cv_splits(y, inner_folds, derive_seed(seed, "tune-cv"));
  Matrix Xs = X.select_cols(subset.columns);

  const std::size_t n_phi = grids.sample_fractions.size();
  const std::size_t n_lam = grids.lambdas.size();
  const std::size_t n_alp = grids.alphas.size();
  const std::size_t n_m = grids.n_models.size();

  auto cell = [&](std::size_t mi, std::size_t pi, std::size_t li, std::size_t ai) {
    return ((mi * n_phi + pi) * n_lam + li) * n_alp + ai;
  };
  std::vector<double> score(n_m * n_phi * n_lam * n_alp, 0.0);

  for (std::size_t f = 0; f < splits.size(); ++f) {
    const auto& split = splits[f];
    Matrix Xtr = Xs.select_rows(split.train);
    auto ytr = select(y, split.train);
    Matrix Xva = Xs.select_rows(split.val);
    auto yva = select(y, split.val);
    const std::uint64_t fold_seed = derive_seed(seed, "tune-fold", {f});

    for (std::size_t pi = 0; pi < n_phi; ++pi) {
      const double phi = grids.sample_fractions[pi];
      if (phi * static_cast<double>(Xtr.rows()) < 10.0)
        throw ValidationError("tune_ensemble: inner fold too small for sample_fraction " +
                              std::to_string(phi));

      // per-member validation probabilities for every base config
      // probs[li][ai][m][i]
      std::vector<std::vector<std::vector<std::vector<double>>>> probs(
          n_lam, std::vector<std::vector<std::vector<double>>>(
                     n_alp, std::vector<std::vector<double>>(max_m)));

      for (std::size_t m = 0; m < max_m; ++m) {
        auto rows = draw_member_rows(fold_seed, m, phi, ytr);
        Matrix Xm = Xtr.select_rows(rows);
        auto ym = select(ytr, rows);

        for (std::size_t ai = 0; ai < n_alp; ++ai) {
          ElasticNetConfig cfg = base_defaults;
          cfg.alpha = grids.alphas[ai];
          const LogisticModel* warm = nullptr;
          LogisticModel prev;
          for (std::size_t li : lambda_order) {
            cfg.lambda = grids.lambdas[li];
            LogisticModel model = fit_elastic_net(Xm, ym, cfg, warm);
            probs[li][ai][m] = predict_proba(model, Xva);
            prev = std::move(model);
            warm = &prev;
          }
        }
      }

      // prefix aggregation over members reproduces every M in the grid
      std::vector<std::size_t> m_sorted(grids.n_models.begin(), grids.n_models.end());
      std::sort(m_sorted.begin(), m_sorted.end());
      m_sorted.erase(std::unique(m_sorted.begin(), m_sorted.end()), m_sorted.end());
      for (std::size_t li = 0; li < n_lam; ++li) {
        for (std::size_t ai = 0; ai < n_alp; ++ai) {
          std::vector<double> prefix_sum(Xva.rows(), 0.0);
          std::size_t next_mi = 0;
          for (std::size_t m = 0; m < max_m && next_mi < m_sorted.size(); ++m) {
            for (std::size_t i = 0; i < Xva.rows(); ++i) prefix_sum[i] += probs[li][ai][m][i];
            while (next_mi < m_sorted.size() && m_sorted[next_mi] == m + 1) {
              std::vector<double> agg(Xva.rows());
              for (std::size_t i = 0; i < Xva.rows(); ++i)
                agg[i] = prefix_sum[i] / static_cast<double>(m + 1);
              double a = stats::auc(yva, agg);
              // map back to the grid position(s) holding this M
              for (std::size_t mi = 0; mi < n_m; ++mi)
                if (grids.n_models[mi] == m + 1) score[cell(mi, pi, li, ai)] += a;
              ++next_mi;
            }
          }
        }
      }
    }
  }

  const double n_folds = static_cast<double>(splits.size());
  for (double& s : score) s /= n_folds;

  // ties: smaller M, then larger phi, then earlier grid position
  std::size_t best = 0;
  bool first = true;
  std::size_t best_mi = 0, best_pi = 0;
  for (std::size_t mi = 0; mi < n_m; ++mi) {
    for (std::size_t pi = 0; pi < n_phi; ++pi) {
      for (std::size_t li = 0; li < n_lam; ++li) {
        for (std::size_t ai = 0; ai < n_alp; ++ai) {
          std::size_t c = cell(mi, pi, li, ai);
          if (first) {
            best = c;
            best_mi = mi;
            best_pi = pi;
            first = false;
            continue;
          }
          bool better = false;
          if (score[c] > score[best]) {
            better = true;
          } else if (score[c] == score[best]) {
            if (grids.n_models[mi] < grids.n_models[best_mi]) better = true;
            else if (grids.n_models[mi] == grids.n_models[best_mi] &&
                     grids.sample_fractions[pi] > grids.sample_fractions[best_pi])
              better = true;
          }
          if (better) {
            best = c;
            best_mi = mi;
            best_pi = pi;
          }
        }
      }
    }
  }

  std::size_t rem = best;
  const std::size_t ai = rem % n_alp;
  rem /= n_alp;
  const std::size_t li = rem % n_lam;
  rem /= n_lam;
  const std::size_t pi = rem % n_phi;
  rem /= n_phi;
  const std::size_t mi = rem;

  TuneResult result;
  result.config.n_models = grids.n_models[mi];
  result.config.sample_fraction = grids.sample_fractions[pi];
  result.config.base = base_defaults;
  result.config.base.lambda = grids.lambdas[li];
  result.config.base.alpha = grids.alphas[ai];
  result.config.seed = 0;  // caller assigns the fit seed
  result.inner_cv_auc = score[best];
  return result;
}

}  // namespace cuq
