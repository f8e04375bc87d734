#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cuq::stats {

// ---------------------------------------------------------------------------
// Special functions. Implemented from scratch (erfc-based normal tail,
// regularized gamma via series/continued fraction, incomplete beta) so the
// statistical tests carry no library dependency. Accurate to ~1e-12.
// ---------------------------------------------------------------------------

double normal_cdf(double x);
double normal_sf(double x);
// inverse of normal_cdf; p in (0,1)
double normal_quantile(double p);

// regularized lower/upper incomplete gamma P(a,x), Q(a,x)
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// regularized incomplete beta I_x(a,b)
double beta_inc(double a, double b, double x);

// P(X > x) for chi-square with df degrees of freedom
double chi_square_sf(double x, double df);

// two-sided tail P(|T| > |t|) for Student t with (possibly fractional) df
double student_t_two_sided(double t, double df);

// ---------------------------------------------------------------------------
// Result types
// ---------------------------------------------------------------------------

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
  std::optional<ConfidenceInterval> ci;
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct ClassificationMetrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct McNemarResult {
  std::size_t b = 0;  // A correct, B wrong
  std::size_t c = 0;  // B correct, A wrong
  TestResult test;
};

// ---------------------------------------------------------------------------
// Operations. labels are 0/1; scores/probabilities are finite doubles.
// ---------------------------------------------------------------------------

// Probability a random positive outscores a random negative, ties counted
// half. Rank-based; agrees exactly with brute-force pairwise counting.
double auc(std::span<const int> labels, std::span<const double> scores);

// ROC staircase from (0,0) to (1,1), one step per distinct score value.
// Trapezoidal area over these points reproduces auc().
std::vector<RocPoint> roc_points(std::span<const int> labels, std::span<const double> scores);

// DeLong structural-component variance with a Wald CI clamped to [0,1].
// Perfect separation collapses the CI to a point and tags the method.
TestResult delong_ci(std::span<const int> labels, std::span<const double> scores, double level);

// Paired DeLong z-test for AUC(scores_a) vs AUC(scores_b) on shared labels.
TestResult delong_paired_test(std::span<const int> labels, std::span<const double> scores_a,
                              std::span<const double> scores_b);

// McNemar on per-sample correctness indicators. Exact binomial branch for
// b+c < 25 (statistic = signed b-c), else continuity-corrected chi-square.
McNemarResult mcnemar(std::span<const int> correct_a, std::span<const int> correct_b);

// predict positive iff probability >= threshold
ClassificationMetrics classification_metrics(std::span<const int> labels,
                                             std::span<const double> probabilities,
                                             double threshold);

// Welch two-sample t-test (unequal variances, Welch-Satterthwaite df).
TestResult two_sample_t(std::span<const double> group_a, std::span<const double> group_b);

// Pearson chi-square of independence on a 2x2 table, no continuity
// correction. table[i][j] are non-negative counts; all marginals must be > 0.
TestResult chi_square_independence(const double (&table)[2][2]);

}  // namespace cuq::stats
