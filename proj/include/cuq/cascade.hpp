#pragma once

#include <string>
#include <vector>

#include "cuq/cohort.hpp"
#include "cuq/ensemble.hpp"
#include "cuq/preprocess.hpp"

namespace cuq {

struct CascadeThresholds {
  double std_threshold = 0.1;     // sigma_th, on the prediction std
  double midway_threshold = 0.05; // tau, on |mean - 0.5|
  double scaling_weight = 1.0;    // s, the retention penalty exponent

  void validate() const;  // sigma in [0,0.5], tau in [0,0.5], s in [0.5,9]
};

enum class RoutingReason { low_uncertainty, high_std, near_midway };

std::string to_string(RoutingReason reason);

struct RoutingDecision {
  int stage_used = 1;  // 1 or 2
  double stage1_mean = 0.0;
  double stage1_std = 0.0;
  double final_probability = 0.0;
  RoutingReason reason = RoutingReason::low_uncertainty;
};

// Escalate iff std > sigma_th or |mean - 0.5| < tau (std clause checked
// first). Keeping stage 1 copies the stage-1 mean into final_probability
// unchanged. The escalated decision carries no final probability yet.
RoutingDecision route(const UncertainPrediction& pred, const CascadeThresholds& thresholds);

struct StagePreprocessors {
  ScalerParams stage1;
  ScalerParams stage2;  // over stage-1 + stage-2 columns
};

// Two-stage gated model: stage-1 ensemble plus the escalation rule, with the
// stage-2 ensemble consulted only for escalated records.
struct CascadeModel {
  Ensemble ensemble1;  // stage-1 feature space
  Ensemble ensemble2;  // stage-1 + stage-2 feature space
  CascadeThresholds thresholds;
};

// Record-level prediction. Escalation with no stage-2 features on the record
// throws AcquisitionRequired, distinct from other failures.
RoutingDecision predict_cascade(const CascadeModel& model, const PatientRecord& record,
                                const Schema& schema, const StagePreprocessors& preprocessors);

// Batch form over already-transformed stage matrices of the same rows.
std::vector<RoutingDecision> predict_cascade_rows(const Ensemble& ensemble1,
                                                  const Ensemble& ensemble2,
                                                  const CascadeThresholds& thresholds,
                                                  const Matrix& X1_transformed,
                                                  const Matrix& X2_transformed);

double escalation_fraction(const std::vector<RoutingDecision>& decisions);

// w(f, s) = f^(1/s); monotone increasing in both arguments, w(1, s) = 1
double weight_function(double retained_fraction, double scaling_weight);

// AUC(labels, probabilities) * w(retained_fraction, s)
double scaled_weighted_auc(std::span<const int> labels, std::span<const double> probabilities,
                           double retained_fraction, double scaling_weight);

struct ThresholdGrids {
  std::vector<double> std_thresholds;
  std::vector<double> midway_thresholds;
  std::vector<double> scaling_weights;

  void validate() const;
};

// Per scaling weight s, grid-search (sigma_th, tau) maximizing the scaled
// weighted AUC on validation slice 1 (f = fraction kept at stage 1); the
// per-s winners are then judged by plain AUC on validation slice 2.
// Ties on val1 prefer retention (larger f, larger sigma_th, smaller tau);
// ties on val2 prefer smaller s. Stage predictions are passed in
// precomputed so tuning never refits the ensembles.
CascadeThresholds tune_thresholds(const std::vector<UncertainPrediction>& val1_stage1,
                                  const std::vector<double>& val1_stage2_mean,
                                  const std::vector<int>& val1_labels,
                                  const std::vector<UncertainPrediction>& val2_stage1,
                                  const std::vector<double>& val2_stage2_mean,
                                  const std::vector<int>& val2_labels,
                                  const ThresholdGrids& grids);

}  // namespace cuq
