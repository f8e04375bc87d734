#include "cuq/cascade.hpp"

#include <algorithm>
#include <cmath>

#include "cuq/errors.hpp"
#include "cuq/stats.hpp"

namespace cuq {

void CascadeThresholds::validate() const {
  if (!(std_threshold >= 0.0 && std_threshold <= 0.5))
    throw ValidationError("cascade: std_threshold must be in [0, 0.5]");
  if (!(midway_threshold >= 0.0 && midway_threshold <= 0.5))
    throw ValidationError("cascade: midway_threshold must be in [0, 0.5]");
  if (!(scaling_weight >= 0.5 && scaling_weight <= 9.0))
    throw ValidationError("cascade: scaling_weight must be in [0.5, 9]");
}

std::string to_string(RoutingReason reason) {
  switch (reason) {
    case RoutingReason::low_uncertainty: return "low_uncertainty";
    case RoutingReason::high_std: return "high_std";
    case RoutingReason::near_midway: return "near_midway";
  }
  return "unknown";
}

RoutingDecision route(const UncertainPrediction& pred, const CascadeThresholds& thresholds) {
  RoutingDecision d;
  d.stage1_mean = pred.mean;
  d.stage1_std = pred.std;
  if (pred.std > thresholds.std_threshold) {
    d.stage_used = 2;
    d.reason = RoutingReason::high_std;
  } else if (std::fabs(pred.mean - 0.5) < thresholds.midway_threshold) {
    d.stage_used = 2;
    d.reason = RoutingReason::near_midway;
  } else {
    d.stage_used = 1;
    d.reason = RoutingReason::low_uncertainty;
    d.final_probability = pred.mean;
  }
  return d;
}

namespace {

std::vector<double> record_stage_vector(const PatientRecord& record, const Schema& schema,
                                        bool include_stage2) {
  std::vector<double> row;
  row.reserve(schema.stage1.size() + (include_stage2 ? schema.stage2.size() : 0));
  for (const auto& def : schema.stage1) {
    auto it = record.stage1.find(def.name);
    if (it == record.stage1.end())
      throw ValidationError("record '" + record.id + "': missing stage-1 feature '" + def.name +
                            "'");
    row.push_back(it->second);
  }
  if (include_stage2) {
    for (const auto& def : schema.stage2) {
      auto it = record.stage2.find(def.name);
      if (it == record.stage2.end())
        throw ValidationError("record '" + record.id + "': missing stage-2 feature '" + def.name +
                              "'");
      row.push_back(it->second);
    }
  }
  return row;
}

}  // namespace

RoutingDecision predict_cascade(const CascadeModel& model, const PatientRecord& record,
                                const Schema& schema, const StagePreprocessors& preprocessors) {
  model.thresholds.validate();
  auto stage1_raw = record_stage_vector(record, schema, false);
  auto stage1_row = transform_row(preprocessors.stage1, stage1_raw);
  auto pred = predict_uncertain(model.ensemble1, stage1_row);
  RoutingDecision decision = route(pred, model.thresholds);
  if (decision.stage_used == 1) return decision;

  if (!record.has_stage2()) throw AcquisitionRequired(record.id);
  auto full_raw = record_stage_vector(record, schema, true);
  auto full_row = transform_row(preprocessors.stage2, full_raw);
  decision.final_probability = predict_uncertain(model.ensemble2, full_row).mean;
  return decision;
}

std::vector<RoutingDecision> predict_cascade_rows(const Ensemble& ensemble1,
                                                  const Ensemble& ensemble2,
                                                  const CascadeThresholds& thresholds,
                                                  const Matrix& X1_transformed,
                                                  const Matrix& X2_transformed) {
  if (X1_transformed.rows() != X2_transformed.rows())
    throw ValidationError("predict_cascade_rows: row count mismatch");
  std::vector<RoutingDecision> out;
  out.reserve(X1_transformed.rows());
  for (std::size_t i = 0; i < X1_transformed.rows(); ++i) {
    auto pred = predict_uncertain(ensemble1, X1_transformed.row(i));
    RoutingDecision d = route(pred, thresholds);
    if (d.stage_used == 2)
      d.final_probability = predict_uncertain(ensemble2, X2_transformed.row(i)).mean;
    out.push_back(d);
  }
  return out;
}

double escalation_fraction(const std::vector<RoutingDecision>& decisions) {
  if (decisions.empty()) return 0.0;
  std::size_t escalated = 0;
  for (const auto& d : decisions)
    if (d.stage_used == 2) ++escalated;
  return static_cast<double>(escalated) / static_cast<double>(decisions.size());
}

double weight_function(double retained_fraction, double scaling_weight) {
  if (!(retained_fraction >= 0.0 && retained_fraction <= 1.0))
    throw ValidationError("weight_function: retained fraction must be in [0,1]");
  if (!(scaling_weight >= 0.5 && scaling_weight <= 9.0))
    throw ValidationError("weight_function: scaling weight must be in [0.5, 9]");
  return std::pow(retained_fraction, 1.0 / scaling_weight);
}

double scaled_weighted_auc(std::span<const int> labels, std::span<const double> probabilities,
                           double retained_fraction, double scaling_weight) {
  return stats::auc(labels, probabilities) * weight_function(retained_fraction, scaling_weight);
}

void ThresholdGrids::validate() const {
  if (std_thresholds.empty() || midway_thresholds.empty() || scaling_weights.empty())
    throw ValidationError("tune_thresholds: all grids must be non-empty");
  for (double v : std_thresholds)
    if (!(v >= 0.0 && v <= 0.5))
      throw ValidationError("tune_thresholds: std threshold grid outside [0, 0.5]");
  for (double v : midway_thresholds)
    if (!(v >= 0.0 && v <= 0.5))
      throw ValidationError("tune_thresholds: midway threshold grid outside [0, 0.5]");
  for (double v : scaling_weights)
    if (!(v >= 0.5 && v <= 9.0))
      throw ValidationError("tune_thresholds: scaling weight grid outside [0.5, 9]");
}

namespace {

struct CellOutcome {
  double auc = 0.0;       // plain AUC of the gated predictions on val1
  double retained = 0.0;  // fraction of val1 kept at stage 1
};

CellOutcome evaluate_cell(const std::vector<UncertainPrediction>& stage1,
                          const std::vector<double>& stage2_mean, const std::vector<int>& labels,
                          double sigma, double tau) {
  CascadeThresholds t;
  t.std_threshold = sigma;
  t.midway_threshold = tau;
  t.scaling_weight = 0.5;  // unused by route()
  std::vector<double> final_probs(labels.size());
  std::size_t kept = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    RoutingDecision d = route(stage1[i], t);
    if (d.stage_used == 1) {
      final_probs[i] = d.final_probability;
      ++kept;
    } else {
      final_probs[i] = stage2_mean[i];
    }
  }
  CellOutcome out;
  out.auc = stats::auc(labels, final_probs);
  out.retained = static_cast<double>(kept) / static_cast<double>(labels.size());
  return out;
}

}  // namespace

CascadeThresholds tune_thresholds(const std::vector<UncertainPrediction>& val1_stage1,
                                  const std::vector<double>& val1_stage2_mean,
                                  const std::vector<int>& val1_labels,
                                  const std::vector<UncertainPrediction>& val2_stage1,
                                  const std::vector<double>& val2_stage2_mean,
                                  const std::vector<int>& val2_labels,
                                  const ThresholdGrids& grids) {
  grids.validate();
  if (val1_stage1.size() != val1_labels.size() || val1_stage2_mean.size() != val1_labels.size() ||
      val2_stage1.size() != val2_labels.size() || val2_stage2_mean.size() != val2_labels.size())
    throw ValidationError("tune_thresholds: size mismatch");
  auto has_both = [](const std::vector<int>& y) {
    bool h0 = false, h1 = false;
    for (int v : y) (v == 1 ? h1 : h0) = true;
    return h0 && h1;
  };
  if (!has_both(val1_labels) || !has_both(val2_labels))
    throw ValidationError("tune_thresholds: degenerate validation labels");

  const std::size_t n_sigma = grids.std_thresholds.size();
  const std::size_t n_tau = grids.midway_thresholds.size();
  std::vector<CellOutcome> cells(n_sigma * n_tau);
  for (std::size_t si = 0; si < n_sigma; ++si)
    for (std::size_t ti = 0; ti < n_tau; ++ti)
      cells[si * n_tau + ti] = evaluate_cell(val1_stage1, val1_stage2_mean, val1_labels,
                                             grids.std_thresholds[si],
                                             grids.midway_thresholds[ti]);

  // winner per scaling weight on val1's scaled weighted AUC
  struct Winner {
    std::size_t si = 0, ti = 0;
  };
  std::vector<Winner> winners(grids.scaling_weights.size());
  for (std::size_t wi = 0; wi < grids.scaling_weights.size(); ++wi) {
    const double s = grids.scaling_weights[wi];
    bool first = true;
    double best_score = 0.0;
    Winner best;
    for (std::size_t si = 0; si < n_sigma; ++si) {
      for (std::size_t ti = 0; ti < n_tau; ++ti) {
        const CellOutcome& cell = cells[si * n_tau + ti];
        double score = cell.auc * weight_function(cell.retained, s);
        bool better = false;
        if (first) {
          better = true;
          first = false;
        } else if (score > best_score) {
          better = true;
        } else if (score == best_score) {
          const CellOutcome& bc = cells[best.si * n_tau + best.ti];
          if (cell.retained > bc.retained) better = true;
          else if (cell.retained == bc.retained) {
            if (grids.std_thresholds[si] > grids.std_thresholds[best.si]) better = true;
            else if (grids.std_thresholds[si] == grids.std_thresholds[best.si] &&
                     grids.midway_thresholds[ti] < grids.midway_thresholds[best.ti])
              better = true;
          }
        }
        if (better) {
          best_score = score;
          best = {si, ti};
        }
      }
    }
    winners[wi] = best;
  }

  // judge the per-s winners by plain AUC on val2; ties -> smaller s
  std::size_t best_wi = 0;
  double best_val2 = -1.0;
  std::vector<double> val2_cache(n_sigma * n_tau, -1.0);
  for (std::size_t wi = 0; wi < winners.size(); ++wi) {
    std::size_t key = winners[wi].si * n_tau + winners[wi].ti;
    if (val2_cache[key] < 0.0)
      val2_cache[key] = evaluate_cell(val2_stage1, val2_stage2_mean, val2_labels,
                                      grids.std_thresholds[winners[wi].si],
                                      grids.midway_thresholds[winners[wi].ti])
                            .auc;
    double v = val2_cache[key];
    bool better = v > best_val2 ||
                  (v == best_val2 &&
                   grids.scaling_weights[wi] < grids.scaling_weights[best_wi]);
    if (wi == 0 || better) {
      best_val2 = v;
      best_wi = wi;
    }
  }

  CascadeThresholds out;
  out.std_threshold = grids.std_thresholds[winners[best_wi].si];
  out.midway_threshold = grids.midway_thresholds[winners[best_wi].ti];
  out.scaling_weight = grids.scaling_weights[best_wi];
  out.validate();
  return out;
}

}  // namespace cuq
