#include "cuq/importance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cuq/errors.hpp"
#include "cuq/ioutil.hpp"
#include "cuq/rng.hpp"
#include "cuq/stats.hpp"

namespace cuq {

namespace {

void assign_ranks(ImportanceReport& report) {
  std::vector<std::size_t> order(report.entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.entries[a].overall > report.entries[b].overall;
  });
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    report.entries[order[pos]].rank = pos + 1;
}

}  // namespace

ImportanceReport coefficient_importance(const std::vector<const Ensemble*>& per_fold_ensembles,
                                        const std::vector<std::string>& feature_universe) {
  if (per_fold_ensembles.empty())
    throw ValidationError("coefficient_importance: no ensembles given");
  for (const Ensemble* e : per_fold_ensembles)
    if (!e || e->models.empty())
      throw ValidationError("coefficient_importance: empty ensemble");

  ImportanceReport report;
  report.method = "coefficient";
  const std::size_t folds = per_fold_ensembles.size();

  for (const auto& feature : feature_universe) {
    ImportanceEntry entry;
    entry.feature = feature;
    entry.per_fold.assign(folds, 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
      const Ensemble& ens = *per_fold_ensembles[f];
      auto it = std::find(ens.feature_names.begin(), ens.feature_names.end(), feature);
      if (it == ens.feature_names.end()) continue;  // eliminated -> contributes 0
      std::size_t j = static_cast<std::size_t>(it - ens.feature_names.begin());
      double sum = 0.0;
      for (const auto& model : ens.models) sum += model.coefficients[j];
      entry.per_fold[f] = sum / static_cast<double>(ens.models.size());
    }
    double abs_sum = 0.0;
    for (double v : entry.per_fold) abs_sum += std::fabs(v);
    entry.overall = abs_sum / static_cast<double>(folds);
    report.entries.push_back(std::move(entry));
  }
  assign_ranks(report);
  return report;
}

ImportanceReport permutation_importance(const BatchPredictor& predict, const Matrix& X1,
                                        const Matrix& X2,
                                        const std::vector<std::string>& x1_names,
                                        const std::vector<std::string>& x2_names,
                                        const std::vector<std::string>& feature_universe,
                                        const std::vector<int>& labels, std::size_t repeats,
                                        std::uint64_t seed) {
  if (repeats < 1) throw ValidationError("permutation_importance: repeats must be >= 1");
  if (X1.cols() != x1_names.size() || X2.cols() != x2_names.size())
    throw ValidationError("permutation_importance: name/column mismatch");
  if (X1.rows() != labels.size() || (X2.cols() > 0 && X2.rows() != labels.size()))
    throw ValidationError("permutation_importance: row/label mismatch");

  const double baseline = stats::auc(labels, predict(X1, X2));
  const std::size_t n = labels.size();

  ImportanceReport report;
  report.method = "permutation";
  for (std::size_t fi = 0; fi < feature_universe.size(); ++fi) {
    const std::string& feature = feature_universe[fi];
    auto col_in = [&](const std::vector<std::string>& names) -> std::ptrdiff_t {
      auto it = std::find(names.begin(), names.end(), feature);
      return it == names.end() ? -1 : it - names.begin();
    };
    const std::ptrdiff_t c1 = col_in(x1_names);
    const std::ptrdiff_t c2 = col_in(x2_names);

    double drop_sum = 0.0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      Rng rng(derive_seed(seed, "perm", {fi, rep}));
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);

      Matrix X1p = X1;
      Matrix X2p = X2;
      if (c1 >= 0)
        for (std::size_t i = 0; i < n; ++i)
          X1p.at(i, static_cast<std::size_t>(c1)) = X1.at(perm[i], static_cast<std::size_t>(c1));
      if (c2 >= 0)
        for (std::size_t i = 0; i < n; ++i)
          X2p.at(i, static_cast<std::size_t>(c2)) = X2.at(perm[i], static_cast<std::size_t>(c2));
      drop_sum += baseline - stats::auc(labels, predict(X1p, X2p));
    }
    ImportanceEntry entry;
    entry.feature = feature;
    entry.per_fold = {drop_sum / static_cast<double>(repeats)};
    entry.overall = std::fabs(entry.per_fold[0]);
    report.entries.push_back(std::move(entry));
  }
  assign_ranks(report);
  return report;
}

ImportanceReport permutation_importance(const Ensemble& ensemble, const Matrix& X_transformed,
                                        const std::vector<std::string>& feature_names,
                                        const std::vector<int>& labels, std::size_t repeats,
                                        std::uint64_t seed) {
  BatchPredictor predict = [&ensemble](const Matrix& X1, const Matrix&) {
    auto preds = predict_uncertain(ensemble, X1);
    std::vector<double> probs(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) probs[i] = preds[i].mean;
    return probs;
  };
  return permutation_importance(predict, X_transformed, Matrix{}, feature_names, {},
                                feature_names, labels, repeats, seed);
}

std::string ImportanceReport::to_csv() const {
  std::size_t folds = 0;
  for (const auto& e : entries) folds = std::max(folds, e.per_fold.size());
  std::string out = "feature,method,overall,rank";
  for (std::size_t f = 0; f < folds; ++f) out += ",fold_" + std::to_string(f);
  out += "\n";
  for (const auto& e : entries) {
    out += e.feature + "," + method + "," + format_double(e.overall) + "," +
           std::to_string(e.rank);
    for (std::size_t f = 0; f < folds; ++f)
      out += "," + (f < e.per_fold.size() ? format_double(e.per_fold[f]) : std::string());
    out += "\n";
  }
  return out;
}

ImportanceReport ImportanceReport::from_csv(const std::string& text) {
  ImportanceReport report;
  std::istringstream ss(text);
  std::string line;
  bool header = true;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (header) {
      if (fields.size() < 4 || fields[0] != "feature")
        throw ValidationError("importance csv: bad header");
      header = false;
      continue;
    }
    if (fields.size() < 4) throw ValidationError("importance csv: short row");
    ImportanceEntry e;
    e.feature = fields[0];
    report.method = fields[1];
    e.overall = std::stod(fields[2]);
    e.rank = static_cast<std::size_t>(std::stoul(fields[3]));
    for (std::size_t f = 4; f < fields.size(); ++f)
      if (!fields[f].empty()) e.per_fold.push_back(std::stod(fields[f]));
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace cuq
