#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "cuq/linalg.hpp"

namespace cuq {

enum class FeatureKind { continuous, binary };

struct FeatureDef {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  // validity range; loader rejects values outside it, the synthetic
  // generator clamps into it
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

// Feature layout for one cohort: stage-1 (clinical + ECG) columns, stage-2
// (SPECT-derived) columns, and the one-hot groups whose members must sum to 1.
struct Schema {
  std::vector<FeatureDef> stage1;
  std::vector<FeatureDef> stage2;
  std::vector<std::vector<std::string>> one_hot_groups;

  bool has_stage2() const { return !stage2.empty(); }
  std::vector<std::string> stage1_names() const;
  std::vector<std::string> stage2_names() const;
  // stage-1 names followed by stage-2 names (the "full" feature space)
  std::vector<std::string> all_names() const;
  const FeatureDef* find(const std::string& name) const;

  // The 44-variable CRT layout: 20 clinical/ECG features and 24 SPECT
  // features, with race and NYHA class encoded as one-hots.
  static Schema crt_default();
  Schema without_stage2() const;
};

struct PatientRecord {
  std::string id;
  std::map<std::string, double> stage1;
  std::map<std::string, double> stage2;  // empty when stage 2 was never acquired
  int label = 0;                         // 1 = responder

  bool has_stage2() const { return !stage2.empty(); }
};

// throws ValidationError naming the offending feature
void validate_record(const PatientRecord& record, const Schema& schema);

struct Cohort {
  std::vector<PatientRecord> records;
  Schema schema;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  std::vector<int> labels() const;
  std::vector<std::string> ids() const;
  // rows in record order, columns in schema order
  Matrix stage1_matrix() const;
  Matrix full_matrix() const;  // stage-1 columns then stage-2 columns
};

struct LoadReport {
  Cohort cohort;
  std::vector<std::string> exclusions;  // human-readable, one per rejected row
  std::size_t input_rows = 0;
};

// Delimited text with a header of feature names plus `response` (0/1) and an
// optional leading `id`. Rows with missing values are excluded and reported;
// malformed values, unknown columns, or a header that does not cover the
// schema are errors.
LoadReport load_cohort(const std::filesystem::path& path, const Schema& schema);

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

struct ClassParams {
  double mean = 0.0;  // binary features: probability of 1
  double sd = 0.0;
};

struct FeatureDistribution {
  ClassParams responder;      // class 1
  ClassParams non_responder;  // class 0
};

struct CategoricalDistribution {
  std::vector<std::string> members;  // one-hot feature names, in schema order
  std::vector<double> responder;     // per-member proportions (normalized)
  std::vector<double> non_responder;
};

struct CorrelationGroup {
  std::vector<std::string> features;  // continuous features sharing one factor
  double rho = 0.0;                   // pairwise correlation in [0, 1)
};

struct SyntheticSpec {
  double prevalence = 0.5;
  std::map<std::string, FeatureDistribution> features;
  std::vector<CategoricalDistribution> categoricals;
  std::vector<CorrelationGroup> correlations;

  void validate(const Schema& schema) const;

  // INI-style text: a [cohort] section with prevalence, one [feature <name>]
  // section per feature (class1/class0 parameter lines), [categorical <name>]
  // sections for one-hot groups, and optional [correlation <name>] blocks.
  static SyntheticSpec parse(const std::string& text);
  static SyntheticSpec parse_file(const std::filesystem::path& path);

  // Parameters matching the published cohort summary statistics.
  static SyntheticSpec crt_reference();
};

Cohort synthesize_cohort(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed,
                         const Schema& schema = Schema::crt_default());

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct FoldPlan {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignments;  // record id -> fold
  std::uint64_t seed = 0;
};

// index-level core: fold index per position, stratified by label
std::vector<std::size_t> stratified_fold_indices(const std::vector<int>& labels,
                                                 std::size_t k, std::uint64_t seed);

FoldPlan stratified_kfold(const Cohort& cohort, std::size_t k, std::uint64_t seed);

struct CvSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Stratified k-fold train/val index splits for inner cross-validation.
// k is reduced to the smaller class count when that class has fewer than k
// members; fewer than 2 per class is an error.
std::vector<CvSplit> stratified_cv_splits(const std::vector<int>& labels, std::size_t k,
                                          std::uint64_t seed);

struct ValidationSlices {
  std::vector<std::size_t> core;  // positions into the input list, ascending
  std::vector<std::size_t> val1;
  std::vector<std::size_t> val2;
};

// stratified disjoint slices of the requested sizes; remainder is core
ValidationSlices slice_validation_indices(const std::vector<int>& labels, std::size_t n1,
                                          std::size_t n2, std::uint64_t seed);

struct IdSlices {
  std::vector<std::string> core, val1, val2;
};

IdSlices slice_validation(const std::vector<std::string>& train_ids,
                          const std::vector<int>& labels, std::size_t n1, std::size_t n2,
                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Summary (baseline characteristics table)
// ---------------------------------------------------------------------------

struct SummaryRow {
  std::string feature;
  FeatureKind kind = FeatureKind::continuous;
  // continuous: (mean, sd); binary: (count, percent)
  double overall_a = 0.0, overall_b = 0.0;
  double responder_a = 0.0, responder_b = 0.0;
  double non_responder_a = 0.0, non_responder_b = 0.0;
  double p_value = 1.0;
  std::string method;
};

struct SummaryTable {
  std::size_t n = 0, n_responder = 0, n_non_responder = 0;
  std::vector<SummaryRow> rows;
};

SummaryTable cohort_summary(const Cohort& cohort);
void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path);

}  // namespace cuq
