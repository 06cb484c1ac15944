#pragma once

#include <limits>
#include <string>
#include <vector>

namespace starris {

enum class TraceLevel { kDinkelbach, kSca, kRelaxation, kAo };

inline const char* ToString(TraceLevel level) {
  switch (level) {
    case TraceLevel::kDinkelbach: return "dinkelbach";
    case TraceLevel::kSca: return "sca";
    case TraceLevel::kRelaxation: return "relaxation";
    case TraceLevel::kAo: return "ao";
  }
  return "?";
}

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

// One record per iteration of any loop. Fields that do not apply to a level
// stay NaN.
struct TraceRow {
  TraceLevel level = TraceLevel::kAo;
  int outer = 0;      // AO iteration the row belongs to (1-based, 0 = standalone)
  int iteration = 0;  // 1-based within its loop; relaxation rows count tau from 0
  double lambda = kNoValue;
  double mu = kNoValue;
  double objective = kNoValue;   // F(lambda) for Dinkelbach, mu for relaxation, min-EE for AO
  double epsilon_t = kNoValue;
  double epsilon_r = kNoValue;
  double min_ee = kNoValue;
  double residual = kNoValue;    // solver constraint residual
  double sca_slack = kNoValue;   // min true rate-constraint slack at the solution
  double step = kNoValue;        // relaxation step size after the iteration
  std::string status;
};

struct ConvergenceTrace {
  std::vector<TraceRow> rows;

  void Append(const ConvergenceTrace& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  }
  std::vector<TraceRow> Level(TraceLevel level) const {
    std::vector<TraceRow> out;
    for (const auto& r : rows)
      if (r.level == level) out.push_back(r);
    return out;
  }
};

}  // namespace starris
