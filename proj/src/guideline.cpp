#include "cuq/guideline.hpp"

#include "cuq/errors.hpp"

namespace cuq {

std::string to_string(GuidelineClass cls) {
  switch (cls) {
    case GuidelineClass::class_i: return "I";
    case GuidelineClass::class_iia: return "IIa";
    case GuidelineClass::none: return "none";
  }
  return "none";
}

namespace {

double require_feature(const PatientRecord& record, const std::string& name) {
  if (auto it = record.stage1.find(name); it != record.stage1.end()) return it->second;
  if (auto it = record.stage2.find(name); it != record.stage2.end()) return it->second;
  throw ValidationError("classify_guideline: record '" + record.id + "' missing feature '" +
                        name + "'");
}

}  // namespace

GuidelineResult classify_guideline(const PatientRecord& record) {
  const double lvef = require_feature(record, "lvef");
  const bool lbbb = require_feature(record, "lbbb") == 1.0;
  const double qrsd = require_feature(record, "qrsd");
  const bool nyha_ii = require_feature(record, "nyha_ii") == 1.0;
  const bool nyha_iii = require_feature(record, "nyha_iii") == 1.0;
  const bool nyha_iv = require_feature(record, "nyha_iv") == 1.0;
  if (!nyha_ii && !nyha_iii && !nyha_iv)
    throw ValidationError("classify_guideline: record '" + record.id + "' has no NYHA class set");

  GuidelineResult result;
  if (lvef > 35.0) {
    result.cls = GuidelineClass::none;
    result.trace = "LVEF>35";
    return result;
  }
  if (lbbb && qrsd >= 150.0) {
    result.cls = GuidelineClass::class_i;
    result.trace = "LVEF<=35 & LBBB & QRSd>=150 & NYHA II-IV";
    return result;
  }
  if (lbbb && qrsd >= 120.0) {  // qrsd < 150 here
    result.cls = GuidelineClass::class_iia;
    result.trace = "LVEF<=35 & LBBB & 120<=QRSd<150";
    return result;
  }
  if (!lbbb && qrsd >= 150.0 && (nyha_iii || nyha_iv)) {
    result.cls = GuidelineClass::class_iia;
    result.trace = "LVEF<=35 & no LBBB & QRSd>=150 & NYHA III-IV";
    return result;
  }
  result.cls = GuidelineClass::none;
  result.trace = "no class criteria met";
  return result;
}

int guideline_predict(const PatientRecord& record) {
  return classify_guideline(record).cls == GuidelineClass::none ? 0 : 1;
}

}  // namespace cuq
