#pragma once

#include <vector>

#include "starris/conic.hpp"
#include "starris/types.hpp"

namespace starris {

// log2(x0) + (x - x0) / (x0 ln 2), an upper bound on log2(x) for x > 0.
double Log2Tangent(double x0, double x);

// Largest gap in bits between log2 and the lower envelope of the tangents at
// a and b (a < b), reached where the two tangents cross.
double TangentPairGap(double a, double b);

// Tangent points for the outer approximation t <= min_j tangent_j(s) of the
// hypograph t <= log2(s). A fixed geometric base covers the whole range;
// extra points are added near solutions and the oldest extras are dropped
// once there are more than max_extra of them.
class LogCuts {
 public:
  LogCuts() = default;
  LogCuts(double lo, double hi, int base_count = 32, int max_extra = 28);

  // Adds x and x * (1 +- 1e-2), x * (1 +- 1e-3), x * (1 +- 1e-4).
  void AddCluster(double x);
  void Add(double x);

  std::vector<double> Points() const;
  // min_j tangent_j(s) over all points.
  double Envelope(double s) const;
  // Worst gap over [lo, hi] between adjacent points.
  double MaxGap() const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_ = 1.0, hi_ = 1.0;
  int max_extra_ = 28;
  std::vector<double> base_;
  std::vector<double> extra_;
};

struct LogHypograph {
  ScalarId t;
  ScalarId s;
};

// Declares free scalars t, s, adds s - expr = offset and one cut
// t - s / (x ln 2) <= log2(x) - 1/ln 2 per tangent point.
LogHypograph AddLogHypograph(ConicProblem& problem, const LinearExpr& expr, double offset,
                             const LogCuts& cuts, const std::string& name);

// First-order expansion of log2(sum_{j != k} tr(H_k V_j) + noise) around
// V_prev, written as constant + sum_j Re tr(coeffs[j] V_j) with coeffs[k] = 0.
struct InterferenceLinearization {
  double x0 = 0.0;        // interference plus noise at V_prev
  double constant = 0.0;
  std::vector<CMatrix> coeffs;

  double Value(const std::vector<CMatrix>& V) const;
};

InterferenceLinearization ScaLinearizeInterference(const std::vector<CMatrix>& V_prev,
                                                   const CMatrix& H_k, int k, double noise);

}  // namespace starris
