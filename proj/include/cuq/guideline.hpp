#pragma once

#include <string>

#include "cuq/cohort.hpp"

namespace cuq {

enum class GuidelineClass { class_i, class_iia, none };

std::string to_string(GuidelineClass cls);

struct GuidelineResult {
  GuidelineClass cls = GuidelineClass::none;
  std::string trace;  // the satisfied predicate, for audit output
};

// Device-therapy recommendation classes over the features available here
// (LVEF, LBBB, QRSd, NYHA); sinus rhythm and medical-therapy criteria are
// treated as satisfied since the dataset does not carry them.
//   Class I:   LVEF <= 35, LBBB, QRSd >= 150, NYHA II-IV
//   Class IIa: LVEF <= 35 and either (LBBB, 120 <= QRSd < 150)
//              or (no LBBB, QRSd >= 150, NYHA III-IV)
GuidelineResult classify_guideline(const PatientRecord& record);

// 1 iff Class I or Class IIa
int guideline_predict(const PatientRecord& record);

}  // namespace cuq
