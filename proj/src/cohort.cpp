#include "cuq/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "cuq/errors.hpp"
#include "cuq/ioutil.hpp"
#include "cuq/rng.hpp"
#include "cuq/stats.hpp"

namespace cuq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_missing_token(const std::string& s) {
  static const std::set<std::string> tokens = {"", "NA", "na", "NaN", "nan", "NULL", "null", "?"};
  return tokens.count(s) > 0;
}

double parse_double_strict(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw ValidationError(context + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

// ===========================================================================
// Schema
// ===========================================================================

std::vector<std::string> Schema::stage1_names() const {
  std::vector<std::string> out;
  for (const auto& f : stage1) out.push_back(f.name);
  return out;
}

std::vector<std::string> Schema::stage2_names() const {
  std::vector<std::string> out;
  for (const auto& f : stage2) out.push_back(f.name);
  return out;
}

std::vector<std::string> Schema::all_names() const {
  auto out = stage1_names();
  for (const auto& f : stage2) out.push_back(f.name);
  return out;
}

const FeatureDef* Schema::find(const std::string& name) const {
  for (const auto& f : stage1)
    if (f.name == name) return &f;
  for (const auto& f : stage2)
    if (f.name == name) return &f;
  return nullptr;
}

Schema Schema::without_stage2() const {
  Schema s = *this;
  s.stage2.clear();
  // drop groups that lived entirely in stage 2
  std::erase_if(s.one_hot_groups, [&](const std::vector<std::string>& g) {
    for (const auto& name : g)
      if (!s.find(name)) return true;
    return false;
  });
  return s;
}

Schema Schema::crt_default() {
  Schema s;
  auto cont = [](std::string name, double lo, double hi) {
    return FeatureDef{std::move(name), FeatureKind::continuous, lo, hi};
  };
  auto bin = [](std::string name) {
    return FeatureDef{std::move(name), FeatureKind::binary, 0.0, 1.0};
  };

  s.stage1 = {
      cont("age", 18.0, 95.0),
      bin("male"),
      bin("race_african"),
      bin("race_asian"),
      bin("race_caucasian"),
      bin("race_hispanic"),
      bin("race_indian"),
      bin("smoking"),
      bin("dm"),
      bin("htn"),
      bin("mi"),
      bin("cad"),
      bin("cabg"),
      bin("pci"),
      bin("nyha_ii"),
      bin("nyha_iii"),
      bin("nyha_iv"),
      bin("acei_arb"),
      cont("qrsd", 40.0, 300.0),
      bin("lbbb"),
  };
  s.stage2 = {
      cont("srs", 0.0, 80.0),
      cont("esv", 0.0, kInf),
      cont("lvef", 0.0, 100.0),
      cont("mass", 0.0, kInf),
      cont("stroke_volume", 0.0, kInf),
      cont("wt_pct", 0.0, 100.0),
      cont("wt_sum", 0.0, kInf),
      bin("concordance"),
      cont("scar_pct", 0.0, 100.0),
      cont("dia_pbw", 0.0, 360.0),
      cont("dia_pk", -kInf, kInf),
      cont("dia_ps", -kInf, kInf),
      cont("dia_pp", 0.0, 360.0),
      cont("dia_psd", 0.0, kInf),
      cont("sys_pbw", 0.0, 360.0),
      cont("sys_pk", -kInf, kInf),
      cont("sys_ps", -kInf, kInf),
      cont("sys_pp", 0.0, 360.0),
      cont("sys_psd", 0.0, kInf),
      cont("ede", 0.0, 1.0),
      cont("edsi", 0.0, 1.0),
      cont("edv", 0.0, kInf),
      cont("ese", 0.0, 1.0),
      cont("essi", 0.0, 1.0),
  };
  s.one_hot_groups = {
      {"race_african", "race_asian", "race_caucasian", "race_hispanic", "race_indian"},
      {"nyha_ii", "nyha_iii", "nyha_iv"},
  };
  return s;
}

// ===========================================================================
// Records and cohort accessors
// ===========================================================================

void validate_record(const PatientRecord& record, const Schema& schema) {
  auto check_stage = [&](const std::vector<FeatureDef>& defs,
                         const std::map<std::string, double>& values, const char* stage) {
    for (const auto& def : defs) {
      auto it = values.find(def.name);
      if (it == values.end())
        throw ValidationError("record '" + record.id + "': missing " + stage + " feature '" +
                              def.name + "'");
      double v = it->second;
      if (!std::isfinite(v))
        throw ValidationError("record '" + record.id + "': feature '" + def.name +
                              "' is not finite");
      if (def.kind == FeatureKind::binary) {
        if (v != 0.0 && v != 1.0)
          throw ValidationError("record '" + record.id + "': binary feature '" + def.name +
                                "' must be 0 or 1, got " + format_double(v));
      } else if (v < def.lo || v > def.hi) {
        throw ValidationError("record '" + record.id + "': feature '" + def.name + "' value " +
                              format_double(v) + " outside [" + format_double(def.lo) + ", " +
                              format_double(def.hi) + "]");
      }
    }
  };
  check_stage(schema.stage1, record.stage1, "stage-1");
  if (schema.has_stage2()) check_stage(schema.stage2, record.stage2, "stage-2");

  if (record.label != 0 && record.label != 1)
    throw ValidationError("record '" + record.id + "': label must be 0 or 1");

  auto lookup = [&](const std::string& name) -> const double* {
    if (auto it = record.stage1.find(name); it != record.stage1.end()) return &it->second;
    if (auto it = record.stage2.find(name); it != record.stage2.end()) return &it->second;
    return nullptr;
  };
  for (const auto& group : schema.one_hot_groups) {
    double sum = 0.0;
    bool applicable = true;
    for (const auto& name : group) {
      if (!schema.find(name)) {
        applicable = false;
        break;
      }
      const double* v = lookup(name);
      if (!v) {
        applicable = false;
        break;
      }
      sum += *v;
    }
    if (applicable && sum != 1.0)
      throw ValidationError("record '" + record.id + "': one-hot group starting at '" +
                            group.front() + "' sums to " + format_double(sum) + ", expected 1");
  }
}

std::vector<int> Cohort::labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

std::vector<std::string> Cohort::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

Matrix Cohort::stage1_matrix() const {
  Matrix m(records.size(), schema.stage1.size());
  for (std::size_t r = 0; r < records.size(); ++r)
    for (std::size_t c = 0; c < schema.stage1.size(); ++c)
      m.at(r, c) = records[r].stage1.at(schema.stage1[c].name);
  return m;
}

Matrix Cohort::full_matrix() const {
  const std::size_t p1 = schema.stage1.size();
  Matrix m(records.size(), p1 + schema.stage2.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t c = 0; c < p1; ++c)
      m.at(r, c) = records[r].stage1.at(schema.stage1[c].name);
    for (std::size_t c = 0; c < schema.stage2.size(); ++c)
      m.at(r, p1 + c) = records[r].stage2.at(schema.stage2[c].name);
  }
  return m;
}

// ===========================================================================
// CSV ingestion / emission
// ===========================================================================

LoadReport load_cohort(const std::filesystem::path& path, const Schema& schema) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ValidationError("empty cohort file: " + path.string());

  const auto& header = rows[0];
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (col.count(header[i]))
      throw ValidationError("duplicate column '" + header[i] + "' in " + path.string());
    col[header[i]] = i;
  }

  std::set<std::string> known = {"id", "response"};
  auto require_columns = [&](const std::vector<FeatureDef>& defs, const char* stage) {
    for (const auto& def : defs) {
      known.insert(def.name);
      if (!col.count(def.name))
        throw ValidationError("header missing required " + std::string(stage) + " column '" +
                              def.name + "'");
    }
  };
  require_columns(schema.stage1, "stage-1");
  if (schema.has_stage2()) require_columns(schema.stage2, "stage-2");
  if (!col.count("response")) throw ValidationError("header missing 'response' column");
  for (const auto& name : header)
    if (!known.count(name)) throw ValidationError("unknown column '" + name + "'");

  LoadReport report;
  report.cohort.schema = schema;
  report.cohort.provenance = path.string();
  report.input_rows = rows.size() - 1;

  std::set<std::string> seen_ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    std::string row_tag = "row " + std::to_string(r + 1);  // 1-based file line
    if (fields.size() != header.size())
      throw ValidationError(row_tag + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));

    PatientRecord record;
    record.id = col.count("id") ? fields[col.at("id")] : "row" + std::to_string(r);
    if (record.id.empty()) throw ValidationError(row_tag + ": empty id");
    if (!seen_ids.insert(record.id).second)
      throw ValidationError(row_tag + ": duplicate id '" + record.id + "'");

    std::string missing;
    auto read_stage = [&](const std::vector<FeatureDef>& defs,
                          std::map<std::string, double>& out) {
      for (const auto& def : defs) {
        const std::string& raw = fields[col.at(def.name)];
        if (is_missing_token(raw)) {
          if (missing.empty()) missing = def.name;
          continue;
        }
        out[def.name] = parse_double_strict(raw, row_tag + ", column '" + def.name + "'");
      }
    };
    read_stage(schema.stage1, record.stage1);
    if (schema.has_stage2()) read_stage(schema.stage2, record.stage2);

    const std::string& raw_label = fields[col.at("response")];
    if (is_missing_token(raw_label)) {
      if (missing.empty()) missing = "response";
    } else {
      double v = parse_double_strict(raw_label, row_tag + ", column 'response'");
      if (v != 0.0 && v != 1.0)
        throw ValidationError(row_tag + ": response must be 0 or 1, got " + raw_label);
      record.label = static_cast<int>(v);
    }

    if (!missing.empty()) {
      report.exclusions.push_back(row_tag + " (id '" + record.id + "'): missing '" + missing +
                                  "'");
      continue;
    }
    validate_record(record, schema);
    report.cohort.records.push_back(std::move(record));
  }
  if (report.cohort.records.empty())
    throw ValidationError("no usable rows in " + path.string());
  return report;
}

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path) {
  std::string out = "id";
  for (const auto& f : cohort.schema.stage1) out += "," + f.name;
  for (const auto& f : cohort.schema.stage2) out += "," + f.name;
  out += ",response\n";
  for (const auto& rec : cohort.records) {
    out += rec.id;
    for (const auto& f : cohort.schema.stage1) out += "," + format_double(rec.stage1.at(f.name));
    for (const auto& f : cohort.schema.stage2) out += "," + format_double(rec.stage2.at(f.name));
    out += ",";
    out += rec.label ? '1' : '0';
    out += '\n';
  }
  write_text_atomic(path, out);
}

// ===========================================================================
// Synthetic specification
// ===========================================================================

void SyntheticSpec::validate(const Schema& schema) const {
  if (!(prevalence > 0.0 && prevalence < 1.0))
    throw ValidationError("synthetic spec: prevalence must be in (0,1)");

  std::set<std::string> covered;
  for (const auto& [name, dist] : features) {
    const FeatureDef* def = schema.find(name);
    if (!def) throw ValidationError("synthetic spec: unknown feature '" + name + "'");
    for (const ClassParams* p : {&dist.responder, &dist.non_responder}) {
      if (def->kind == FeatureKind::binary) {
        if (p->mean < 0.0 || p->mean > 1.0)
          throw ValidationError("synthetic spec: '" + name + "' proportion outside [0,1]");
      } else if (p->sd < 0.0) {
        throw ValidationError("synthetic spec: '" + name + "' has sd < 0");
      }
    }
    covered.insert(name);
  }
  for (const auto& cat : categoricals) {
    if (cat.members.size() < 2)
      throw ValidationError("synthetic spec: categorical needs >= 2 members");
    if (cat.responder.size() != cat.members.size() ||
        cat.non_responder.size() != cat.members.size())
      throw ValidationError("synthetic spec: categorical proportions do not match members");
    for (const auto& probs : {cat.responder, cat.non_responder}) {
      double sum = 0.0;
      for (double p : probs) {
        if (p < 0.0 || p > 1.0)
          throw ValidationError("synthetic spec: categorical proportion outside [0,1]");
        sum += p;
      }
      if (sum <= 0.0) throw ValidationError("synthetic spec: categorical proportions sum to 0");
    }
    bool in_schema_group = false;
    for (const auto& group : schema.one_hot_groups)
      if (group == cat.members) in_schema_group = true;
    if (!in_schema_group)
      throw ValidationError("synthetic spec: categorical members do not form a schema one-hot group");
    for (const auto& m : cat.members) {
      if (covered.count(m))
        throw ValidationError("synthetic spec: feature '" + m + "' specified twice");
      covered.insert(m);
    }
  }
  std::set<std::string> correlated;
  for (const auto& grp : correlations) {
    if (!(grp.rho >= 0.0 && grp.rho < 1.0))
      throw ValidationError("synthetic spec: correlation rho must be in [0,1)");
    if (grp.features.size() < 2)
      throw ValidationError("synthetic spec: correlation group needs >= 2 features");
    for (const auto& name : grp.features) {
      const FeatureDef* def = schema.find(name);
      if (!def || def->kind != FeatureKind::continuous)
        throw ValidationError("synthetic spec: correlation group member '" + name +
                              "' must be a continuous feature");
      if (!features.count(name))
        throw ValidationError("synthetic spec: correlation group member '" + name +
                              "' has no distribution");
      if (!correlated.insert(name).second)
        throw ValidationError("synthetic spec: feature '" + name +
                              "' appears in two correlation groups");
    }
  }
  for (const auto& def : schema.stage1)
    if (!covered.count(def.name))
      throw ValidationError("synthetic spec: no distribution for '" + def.name + "'");
  for (const auto& def : schema.stage2)
    if (!covered.count(def.name))
      throw ValidationError("synthetic spec: no distribution for '" + def.name + "'");
}

namespace {

std::vector<double> parse_number_list(const std::string& s, const std::string& context) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(parse_double_strict(tok, context));
  return out;
}

std::vector<std::string> parse_word_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

SyntheticSpec SyntheticSpec::parse(const std::string& text) {
  SyntheticSpec spec;
  std::istringstream ss(text);
  std::string line;
  std::string section_kind, section_name;
  // per-section scratch
  std::map<std::string, std::string> kv;
  int line_no = 0;

  auto flush_section = [&]() {
    if (section_kind.empty()) return;
    auto need = [&](const char* key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end())
        throw ValidationError("spec section [" + section_kind + " " + section_name +
                              "]: missing '" + key + "'");
      return it->second;
    };
    if (section_kind == "cohort") {
      spec.prevalence = parse_double_strict(need("prevalence"), "prevalence");
    } else if (section_kind == "feature") {
      FeatureDistribution dist;
      auto parse_class = [&](const char* key) {
        auto nums = parse_number_list(need(key), section_name);
        ClassParams p;
        if (nums.size() == 1) {
          p.mean = nums[0];
        } else if (nums.size() == 2) {
          p.mean = nums[0];
          p.sd = nums[1];
        } else {
          throw ValidationError("spec feature '" + section_name + "': '" + key +
                                "' expects 1 (proportion) or 2 (mean sd) numbers");
        }
        return p;
      };
      dist.responder = parse_class("class1");
      dist.non_responder = parse_class("class0");
      spec.features[section_name] = dist;
    } else if (section_kind == "categorical") {
      CategoricalDistribution cat;
      cat.members = parse_word_list(need("members"));
      cat.responder = parse_number_list(need("class1"), section_name);
      cat.non_responder = parse_number_list(need("class0"), section_name);
      spec.categoricals.push_back(std::move(cat));
    } else if (section_kind == "correlation") {
      CorrelationGroup grp;
      grp.features = parse_word_list(need("features"));
      grp.rho = parse_double_strict(need("rho"), "rho");
      spec.correlations.push_back(std::move(grp));
    } else {
      throw ValidationError("spec: unknown section kind '" + section_kind + "'");
    }
    kv.clear();
  };

  while (std::getline(ss, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ValidationError("spec line " + std::to_string(line_no) + ": unterminated section");
      flush_section();
      std::string inner = trim(t.substr(1, t.size() - 2));
      auto space = inner.find(' ');
      section_kind = space == std::string::npos ? inner : inner.substr(0, space);
      section_name = space == std::string::npos ? "" : trim(inner.substr(space + 1));
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("spec line " + std::to_string(line_no) + ": expected key = value");
    if (section_kind.empty())
      throw ValidationError("spec line " + std::to_string(line_no) + ": key outside any section");
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  flush_section();
  return spec;
}

SyntheticSpec SyntheticSpec::parse_file(const std::filesystem::path& path) {
  return parse(read_text(path));
}

SyntheticSpec SyntheticSpec::crt_reference() {
  SyntheticSpec s;
  s.prevalence = 0.555;
  auto cont = [&](const char* name, double m1, double sd1, double m0, double sd0) {
    s.features[name] = FeatureDistribution{{m1, sd1}, {m0, sd0}};
  };
  auto bin = [&](const char* name, double p1, double p0) {
    s.features[name] = FeatureDistribution{{p1, 0.0}, {p0, 0.0}};
  };

  // stage 1
  cont("age", 60.5, 12.1, 63.2, 11.5);
  bin("male", 0.649, 0.579);
  s.categoricals.push_back(
      {{"race_african", "race_asian", "race_caucasian", "race_hispanic", "race_indian"},
       {0.093, 0.216, 0.113, 0.464, 0.113},
       {0.050, 0.455, 0.083, 0.256, 0.157}});
  bin("smoking", 0.186, 0.190);
  bin("dm", 0.278, 0.215);
  bin("htn", 0.588, 0.496);
  bin("mi", 0.237, 0.091);
  bin("cad", 0.423, 0.223);
  bin("cabg", 0.010, 0.017);
  bin("pci", 0.072, 0.041);
  s.categoricals.push_back({{"nyha_ii", "nyha_iii", "nyha_iv"},
                            {0.216, 0.670, 0.113},
                            {0.314, 0.512, 0.174}});
  bin("acei_arb", 0.753, 0.876);
  cont("qrsd", 157.8, 27.3, 159.2, 27.1);
  bin("lbbb", 0.990, 0.975);

  // stage 2
  cont("srs", 21.6, 12.5, 15.5, 11.3);
  cont("esv", 207.1, 118.7, 181.0, 97.5);
  cont("lvef", 28.8, 11.1, 26.9, 10.9);
  cont("mass", 224.3, 61.6, 207.9, 54.9);
  cont("stroke_volume", 71.0, 24.1, 56.4, 20.1);
  cont("wt_pct", 24.9, 16.6, 19.8, 16.9);
  cont("wt_sum", 12.7, 8.5, 10.1, 8.6);
  bin("concordance", 0.258, 0.198);
  cont("scar_pct", 27.0, 16.0, 19.2, 11.1);
  cont("dia_pbw", 171.6, 78.9, 167.7, 82.0);
  cont("dia_pk", 8.8, 7.8, 8.1, 6.8);
  cont("dia_ps", 2.5, 0.9, 2.5, 0.8);
  cont("dia_pp", 220.6, 34.2, 221.4, 43.7);
  cont("dia_psd", 52.7, 20.0, 52.0, 21.4);
  cont("sys_pbw", 159.8, 77.3, 157.1, 77.9);
  cont("sys_pk", 9.2, 9.3, 7.5, 6.9);
  cont("sys_ps", 2.5, 0.9, 2.5, 0.8);
  cont("sys_pp", 131.0, 32.8, 133.6, 40.4);
  cont("sys_psd", 50.5, 20.8, 49.7, 20.5);
  cont("ede", 0.5, 0.2, 0.6, 0.1);
  cont("edsi", 0.8, 0.1, 0.7, 0.1);
  cont("edv", 278.2, 129.4, 237.4, 105.1);
  cont("ese", 0.55, 0.2, 0.62, 0.1);
  cont("essi", 0.78, 0.1, 0.82, 0.1);

  s.correlations.push_back({{"esv", "edv", "mass"}, 0.6});
  return s;
}

// ===========================================================================
// Synthesis
// ===========================================================================

Cohort synthesize_cohort(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed,
                         const Schema& schema) {
  if (n < 2) throw ValidationError("synthesize_cohort: n must be >= 2");
  spec.validate(schema);

  // lookup tables: feature -> categorical group / correlation group
  std::map<std::string, std::pair<std::size_t, std::size_t>> cat_of;  // -> (group, member)
  for (std::size_t g = 0; g < spec.categoricals.size(); ++g)
    for (std::size_t m = 0; m < spec.categoricals[g].members.size(); ++m)
      cat_of[spec.categoricals[g].members[m]] = {g, m};
  std::map<std::string, std::size_t> corr_of;
  for (std::size_t g = 0; g < spec.correlations.size(); ++g)
    for (const auto& name : spec.correlations[g].features) corr_of[name] = g;

  Cohort cohort;
  cohort.schema = schema;
  cohort.provenance = "synthetic(seed=" + std::to_string(seed) + ", n=" + std::to_string(n) + ")";

  Rng label_rng(derive_seed(seed, "labels"));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = label_rng.bernoulli(spec.prevalence) ? 1 : 0;

  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "record", {i}));
    PatientRecord rec;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "s%05zu", i + 1);
    rec.id = buf;
    rec.label = labels[i];
    const bool responder = rec.label == 1;

    // one shared factor per correlation group, drawn up front
    std::vector<double> factors(spec.correlations.size());
    for (double& f : factors) f = rng.normal();

    // one category draw per categorical group
    std::vector<std::size_t> chosen(spec.categoricals.size());
    for (std::size_t g = 0; g < spec.categoricals.size(); ++g) {
      const auto& probs =
          responder ? spec.categoricals[g].responder : spec.categoricals[g].non_responder;
      double total = std::accumulate(probs.begin(), probs.end(), 0.0);
      double u = rng.uniform() * total;
      double cum = 0.0;
      std::size_t pick = probs.size() - 1;
      for (std::size_t m = 0; m < probs.size(); ++m) {
        cum += probs[m];
        if (u <= cum) {
          pick = m;
          break;
        }
      }
      chosen[g] = pick;
    }

    auto draw_feature = [&](const FeatureDef& def) -> double {
      if (auto it = cat_of.find(def.name); it != cat_of.end())
        return chosen[it->second.first] == it->second.second ? 1.0 : 0.0;
      const auto& dist = spec.features.at(def.name);
      const ClassParams& p = responder ? dist.responder : dist.non_responder;
      if (def.kind == FeatureKind::binary) return rng.bernoulli(p.mean) ? 1.0 : 0.0;
      double z;
      if (auto it = corr_of.find(def.name); it != corr_of.end()) {
        double rho = spec.correlations[it->second].rho;
        z = std::sqrt(rho) * factors[it->second] + std::sqrt(1.0 - rho) * rng.normal();
      } else {
        z = rng.normal();
      }
      return std::clamp(p.mean + p.sd * z, def.lo, def.hi);
    };

    for (const auto& def : schema.stage1) rec.stage1[def.name] = draw_feature(def);
    for (const auto& def : schema.stage2) rec.stage2[def.name] = draw_feature(def);

    validate_record(rec, schema);
    cohort.records.push_back(std::move(rec));
  }
  return cohort;
}

// ===========================================================================
// Splitting
// ===========================================================================

std::vector<std::size_t> stratified_fold_indices(const std::vector<int>& labels, std::size_t k,
                                                 std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_kfold: k must be >= 2");
  std::vector<std::size_t> fold(labels.size());
  std::size_t offset = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    if (members.size() < k)
      throw ValidationError("stratified_kfold: class " + std::to_string(cls) + " has " +
                            std::to_string(members.size()) + " members, need >= k = " +
                            std::to_string(k));
    Rng rng(derive_seed(seed, "kfold-class", {static_cast<std::uint64_t>(cls)}));
    rng.shuffle(members);
    // rotating start keeps total fold sizes within 1 of each other even
    // though each class is dealt independently
    for (std::size_t p = 0; p < members.size(); ++p)
      fold[members[p]] = (offset + p) % k;
    offset = (offset + members.size()) % k;
  }
  return fold;
}

std::vector<CvSplit> stratified_cv_splits(const std::vector<int>& labels, std::size_t k,
                                          std::uint64_t seed) {
  std::size_t n0 = 0, n1 = 0;
  for (int y : labels) (y == 1 ? n1 : n0)++;
  std::size_t min_class = std::min(n0, n1);
  if (min_class < 2)
    throw ValidationError("stratified_cv_splits: need >= 2 members per class, smaller class has " +
                          std::to_string(min_class));
  std::size_t k_eff = std::min(k, min_class);
  if (k_eff < 2) k_eff = 2;

  auto fold = stratified_fold_indices(labels, k_eff, seed);
  std::vector<CvSplit> splits(k_eff);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t f = 0; f < k_eff; ++f)
      (fold[i] == f ? splits[f].val : splits[f].train).push_back(i);
  return splits;
}

FoldPlan stratified_kfold(const Cohort& cohort, std::size_t k, std::uint64_t seed) {
  auto fold = stratified_fold_indices(cohort.labels(), k, seed);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < cohort.size(); ++i)
    plan.assignments[cohort.records[i].id] = fold[i];
  return plan;
}

namespace {

// largest-remainder apportionment of `target` slots over class counts
std::vector<std::size_t> apportion(const std::vector<std::size_t>& counts, std::size_t target) {
  std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> base(counts.size());
  std::vector<double> frac(counts.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    double quota = n == 0 ? 0.0
                          : static_cast<double>(target) * static_cast<double>(counts[c]) /
                                static_cast<double>(n);
    base[c] = static_cast<std::size_t>(quota);
    frac[c] = quota - static_cast<double>(base[c]);
    assigned += base[c];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  for (std::size_t i = 0; assigned < target && i < order.size(); ++i) {
    base[order[i]] += 1;
    ++assigned;
  }
  return base;
}

}  // namespace

ValidationSlices slice_validation_indices(const std::vector<int>& labels, std::size_t n1,
                                          std::size_t n2, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n1 + n2 >= n)
    throw ValidationError("slice_validation: requested sizes " + std::to_string(n1) + "+" +
                          std::to_string(n2) + " leave no core train from " + std::to_string(n));

  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  if (by_class[0].empty() || by_class[1].empty())
    throw ValidationError("slice_validation: both classes must be present");

  for (int cls : {0, 1}) {
    Rng rng(derive_seed(seed, "slice-class", {static_cast<std::uint64_t>(cls)}));
    rng.shuffle(by_class[cls]);
  }

  std::vector<std::size_t> counts = {by_class[0].size(), by_class[1].size()};
  auto take1 = apportion(counts, n1);
  std::vector<std::size_t> remaining = {counts[0] - take1[0], counts[1] - take1[1]};
  auto take2 = apportion(remaining, n2);

  ValidationSlices out;
  for (int cls : {0, 1}) {
    const auto& pool = by_class[cls];
    std::size_t a = take1[cls], b = take2[cls];
    out.val1.insert(out.val1.end(), pool.begin(), pool.begin() + a);
    out.val2.insert(out.val2.end(), pool.begin() + a, pool.begin() + a + b);
    out.core.insert(out.core.end(), pool.begin() + a + b, pool.end());
  }
  std::sort(out.core.begin(), out.core.end());
  std::sort(out.val1.begin(), out.val1.end());
  std::sort(out.val2.begin(), out.val2.end());
  return out;
}

IdSlices slice_validation(const std::vector<std::string>& train_ids,
                          const std::vector<int>& labels, std::size_t n1, std::size_t n2,
                          std::uint64_t seed) {
  if (train_ids.size() != labels.size())
    throw ValidationError("slice_validation: ids/labels size mismatch");
  auto slices = slice_validation_indices(labels, n1, n2, seed);
  IdSlices out;
  for (std::size_t i : slices.core) out.core.push_back(train_ids[i]);
  for (std::size_t i : slices.val1) out.val1.push_back(train_ids[i]);
  for (std::size_t i : slices.val2) out.val2.push_back(train_ids[i]);
  return out;
}

// ===========================================================================
// Summary table
// ===========================================================================

SummaryTable cohort_summary(const Cohort& cohort) {
  if (cohort.records.empty()) throw ValidationError("cohort_summary: empty cohort");
  SummaryTable table;
  table.n = cohort.size();
  for (const auto& r : cohort.records) (r.label == 1 ? table.n_responder : table.n_non_responder)++;
  if (table.n_responder < 2 || table.n_non_responder < 2)
    throw ValidationError("cohort_summary: need >= 2 records per class");

  auto summarize = [&](const FeatureDef& def, bool stage2) {
    SummaryRow row;
    row.feature = def.name;
    row.kind = def.kind;
    std::vector<double> all, grp1, grp0;
    for (const auto& rec : cohort.records) {
      double v = stage2 ? rec.stage2.at(def.name) : rec.stage1.at(def.name);
      all.push_back(v);
      (rec.label == 1 ? grp1 : grp0).push_back(v);
    }
    if (def.kind == FeatureKind::continuous) {
      row.overall_a = mean(all);
      row.overall_b = sample_sd(all);
      row.responder_a = mean(grp1);
      row.responder_b = sample_sd(grp1);
      row.non_responder_a = mean(grp0);
      row.non_responder_b = sample_sd(grp0);
      auto t = stats::two_sample_t(grp1, grp0);
      row.p_value = t.p_value;
      row.method = t.method;
    } else {
      auto count_ones = [](const std::vector<double>& v) {
        return static_cast<double>(std::count(v.begin(), v.end(), 1.0));
      };
      double c_all = count_ones(all), c1 = count_ones(grp1), c0 = count_ones(grp0);
      row.overall_a = c_all;
      row.overall_b = 100.0 * c_all / static_cast<double>(all.size());
      row.responder_a = c1;
      row.responder_b = 100.0 * c1 / static_cast<double>(grp1.size());
      row.non_responder_a = c0;
      row.non_responder_b = 100.0 * c0 / static_cast<double>(grp0.size());
      double n1 = static_cast<double>(grp1.size()), n0 = static_cast<double>(grp0.size());
      if (c_all == 0.0 || c_all == static_cast<double>(all.size())) {
        // constant feature: independence is vacuous
        row.p_value = 1.0;
        row.method = "chi-square-degenerate";
      } else {
        double tab[2][2] = {{c1, n1 - c1}, {c0, n0 - c0}};
        auto chi = stats::chi_square_independence(tab);
        row.p_value = chi.p_value;
        row.method = chi.method;
      }
    }
    table.rows.push_back(std::move(row));
  };

  for (const auto& def : cohort.schema.stage1) summarize(def, false);
  for (const auto& def : cohort.schema.stage2) summarize(def, true);
  return table;
}

void write_summary_csv(const SummaryTable& table, const std::filesystem::path& path) {
  std::string out =
      "feature,kind,overall_mean_or_count,overall_sd_or_pct,responder_mean_or_count,"
      "responder_sd_or_pct,non_responder_mean_or_count,non_responder_sd_or_pct,p_value,method\n";
  for (const auto& r : table.rows) {
    out += r.feature;
    out += r.kind == FeatureKind::continuous ? ",continuous," : ",binary,";
    out += format_double(r.overall_a) + "," + format_double(r.overall_b) + "," +
           format_double(r.responder_a) + "," + format_double(r.responder_b) + "," +
           format_double(r.non_responder_a) + "," + format_double(r.non_responder_b) + "," +
           format_double(r.p_value) + "," + r.method + "\n";
  }
  write_text_atomic(path, out);
}

}  // namespace cuq
