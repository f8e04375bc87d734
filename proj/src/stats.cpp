#include "cuq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "cuq/errors.hpp"

namespace cuq::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_binary_labels(std::span<const int> labels) {
  for (int y : labels)
    if (y != 0 && y != 1) throw ValidationError("labels must be 0/1");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  return {pos, neg};
}

}  // namespace

// ===========================================================================
// Special functions
// ===========================================================================

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0,1)");
  // Acklam's rational approximation, then one Newton step through the
  // erfc-based CDF to push the error below 1e-13.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = normal_cdf(x) - p;
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  if (pdf > 0.0) x -= e / pdf;
  return x;
}

namespace {

// series expansion of P(a,x), valid for x < a+1
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// continued fraction for Q(a,x) (modified Lentz), valid for x >= a+1
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ValidationError("gamma_p: require a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ValidationError("gamma_q: require a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

namespace {

double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace

double beta_inc(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw ValidationError("beta_inc: require a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x));
  // use the continued fraction on whichever side converges fast
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double chi_square_sf(double x, double df) {
  if (df <= 0.0) throw ValidationError("chi_square_sf: df must be > 0");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

double student_t_two_sided(double t, double df) {
  if (df <= 0.0) throw ValidationError("student_t_two_sided: df must be > 0");
  if (std::isinf(t)) return 0.0;
  double x = df / (df + t * t);
  return beta_inc(0.5 * df, 0.5, x);
}

// ===========================================================================
// ROC / AUC
// ===========================================================================

double auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw ValidationError("auc: size mismatch");
  require_binary_labels(labels);
  for (double s : scores)
    if (!std::isfinite(s)) throw ValidationError("auc: scores must be finite");
  auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw ValidationError("auc: both classes required");

  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks within tie groups; ranks are 1-based
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
    i = j + 1;
  }
  double m = static_cast<double>(pos);
  return (pos_rank_sum - m * (m + 1.0) / 2.0) / (m * static_cast<double>(neg));
}

std::vector<RocPoint> roc_points(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw ValidationError("roc_points: size mismatch");
  require_binary_labels(labels);
  auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw ValidationError("roc_points: both classes required");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> pts;
  pts.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0, i = 0;
  const std::size_t n = labels.size();
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1)
        ++tp;
      else
        ++fp;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
    i = j + 1;
  }
  return pts;
}

// ===========================================================================
// DeLong
// ===========================================================================

namespace {

struct DelongComponents {
  double auc = 0.0;
  std::vector<double> v10;  // one per positive
  std::vector<double> v01;  // one per negative
};

DelongComponents delong_components(std::span<const int> labels, std::span<const double> scores) {
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == 1 ? pos : neg).push_back(scores[i]);
  if (pos.size() < 2 || neg.size() < 2)
    throw ValidationError("delong: need at least 2 samples per class");

  DelongComponents out;
  out.v10.assign(pos.size(), 0.0);
  out.v01.assign(neg.size(), 0.0);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (std::size_t j = 0; j < neg.size(); ++j) {
      double psi = pos[i] > neg[j] ? 1.0 : (pos[i] == neg[j] ? 0.5 : 0.0);
      out.v10[i] += psi;
      out.v01[j] += psi;
    }
  }
  for (double& v : out.v10) v /= static_cast<double>(neg.size());
  for (double& v : out.v01) v /= static_cast<double>(pos.size());
  out.auc = std::accumulate(out.v10.begin(), out.v10.end(), 0.0) /
            static_cast<double>(pos.size());
  return out;
}

double sample_cov(std::span<const double> a, std::span<const double> b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

}  // namespace

TestResult delong_ci(std::span<const int> labels, std::span<const double> scores, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("delong_ci: level must be in (0,1)");
  require_binary_labels(labels);
  auto comp = delong_components(labels, scores);
  double m = static_cast<double>(comp.v10.size());
  double n = static_cast<double>(comp.v01.size());
  double var = sample_cov(comp.v10, comp.v10) / m + sample_cov(comp.v01, comp.v01) / n;

  TestResult result;
  result.method = "delong-ci";
  result.statistic = comp.auc;
  result.p_value = 1.0;
  double se = var > 0.0 ? std::sqrt(var) : 0.0;
  ConfidenceInterval ci;
  ci.level = level;
  if (se == 0.0) {
    result.method = "delong-ci-degenerate";
    ci.lower = ci.upper = comp.auc;
  } else {
    double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    ci.lower = std::max(0.0, comp.auc - z * se);
    ci.upper = std::min(1.0, comp.auc + z * se);
  }
  result.ci = ci;
  return result;
}

TestResult delong_paired_test(std::span<const int> labels, std::span<const double> scores_a,
                              std::span<const double> scores_b) {
  if (labels.size() != scores_a.size() || labels.size() != scores_b.size())
    throw ValidationError("delong_paired_test: size mismatch");
  require_binary_labels(labels);
  auto ca = delong_components(labels, scores_a);
  auto cb = delong_components(labels, scores_b);
  double m = static_cast<double>(ca.v10.size());
  double n = static_cast<double>(ca.v01.size());

  double s10 = sample_cov(ca.v10, ca.v10) + sample_cov(cb.v10, cb.v10) -
               2.0 * sample_cov(ca.v10, cb.v10);
  double s01 = sample_cov(ca.v01, ca.v01) + sample_cov(cb.v01, cb.v01) -
               2.0 * sample_cov(ca.v01, cb.v01);
  double var = s10 / m + s01 / n;
  double diff = ca.auc - cb.auc;

  TestResult result;
  result.method = "delong-paired";
  if (var <= 0.0 || !(std::sqrt(var) > 0.0)) {
    // identical ranking structure; no sampling variability in the difference
    result.statistic = 0.0;
    result.p_value = diff == 0.0 ? 1.0 : 0.0;
    return result;
  }
  result.statistic = diff / std::sqrt(var);
  result.p_value = 2.0 * normal_sf(std::fabs(result.statistic));
  if (result.p_value > 1.0) result.p_value = 1.0;
  return result;
}

// ===========================================================================
// McNemar / classification metrics / t-test / chi-square
// ===========================================================================

McNemarResult mcnemar(std::span<const int> correct_a, std::span<const int> correct_b) {
  if (correct_a.size() != correct_b.size()) throw ValidationError("mcnemar: size mismatch");
  require_binary_labels(correct_a);
  require_binary_labels(correct_b);

  McNemarResult r;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] == 1 && correct_b[i] == 0) ++r.b;
    if (correct_a[i] == 0 && correct_b[i] == 1) ++r.c;
  }
  std::size_t total = r.b + r.c;
  if (total == 0) {
    r.test.statistic = 0.0;
    r.test.p_value = 1.0;
    r.test.method = "mcnemar-exact";
    return r;
  }
  if (total < 25) {
    // exact two-sided binomial: 2 * P(X <= min(b,c)), X ~ Binom(b+c, 1/2)
    std::size_t k = std::min(r.b, r.c);
    double tail = 0.0;
    double term = std::pow(0.5, static_cast<double>(total));  // C(n,0) * 0.5^n
    for (std::size_t i = 0; i <= k; ++i) {
      tail += term;
      term *= static_cast<double>(total - i) / static_cast<double>(i + 1);
    }
    r.test.statistic = static_cast<double>(r.b) - static_cast<double>(r.c);
    r.test.p_value = std::min(1.0, 2.0 * tail);
    r.test.method = "mcnemar-exact";
  } else {
    double diff = std::fabs(static_cast<double>(r.b) - static_cast<double>(r.c));
    double stat = (diff - 1.0) * (diff - 1.0) / static_cast<double>(total);
    r.test.statistic = stat;
    r.test.p_value = chi_square_sf(stat, 1.0);
    r.test.method = "mcnemar-chi2";
  }
  return r;
}

ClassificationMetrics classification_metrics(std::span<const int> labels,
                                             std::span<const double> probabilities,
                                             double threshold) {
  if (labels.size() != probabilities.size())
    throw ValidationError("classification_metrics: size mismatch");
  require_binary_labels(labels);
  auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0)
    throw ValidationError("classification_metrics: both classes required");

  ClassificationMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool predicted = probabilities[i] >= threshold;
    if (labels[i] == 1)
      predicted ? ++m.counts.tp : ++m.counts.fn;
    else
      predicted ? ++m.counts.fp : ++m.counts.tn;
  }
  m.accuracy = static_cast<double>(m.counts.tp + m.counts.tn) /
               static_cast<double>(labels.size());
  m.sensitivity = static_cast<double>(m.counts.tp) / static_cast<double>(pos);
  m.specificity = static_cast<double>(m.counts.tn) / static_cast<double>(neg);
  return m;
}

TestResult two_sample_t(std::span<const double> group_a, std::span<const double> group_b) {
  if (group_a.size() < 2 || group_b.size() < 2)
    throw ValidationError("two_sample_t: each group needs >= 2 values");

  auto moments = [](std::span<const double> g) {
    double m = 0.0;
    for (double v : g) m += v;
    m /= static_cast<double>(g.size());
    double ss = 0.0;
    for (double v : g) ss += (v - m) * (v - m);
    return std::pair{m, ss / static_cast<double>(g.size() - 1)};
  };
  auto [ma, va] = moments(group_a);
  auto [mb, vb] = moments(group_b);
  double na = static_cast<double>(group_a.size());
  double nb = static_cast<double>(group_b.size());
  double se2 = va / na + vb / nb;

  TestResult r;
  r.method = "welch-t";
  if (se2 <= 0.0) {
    // no within-group variation at all
    r.statistic = ma == mb ? 0.0 : (ma > mb ? kInf : -kInf);
    r.p_value = ma == mb ? 1.0 : 0.0;
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(se2);
  double df = se2 * se2 /
              (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  r.p_value = student_t_two_sided(r.statistic, df);
  return r;
}

TestResult chi_square_independence(const double (&table)[2][2]) {
  double r0 = table[0][0] + table[0][1];
  double r1 = table[1][0] + table[1][1];
  double c0 = table[0][0] + table[1][0];
  double c1 = table[0][1] + table[1][1];
  for (const auto& row : table)
    for (double v : row)
      if (v < 0.0 || !std::isfinite(v))
        throw ValidationError("chi_square_independence: counts must be finite and >= 0");
  if (r0 <= 0.0 || r1 <= 0.0 || c0 <= 0.0 || c1 <= 0.0)
    throw ValidationError("chi_square_independence: zero marginal");

  double n = r0 + r1;
  TestResult r;
  r.method = "chi-square";
  double stat = 0.0;
  const double rows[2] = {r0, r1};
  const double cols[2] = {c0, c1};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double expected = rows[i] * cols[j] / n;
      double d = table[i][j] - expected;
      stat += d * d / expected;
    }
  }
  r.statistic = stat;
  r.p_value = chi_square_sf(stat, 1.0);
  return r;
}

}  // namespace cuq::stats
