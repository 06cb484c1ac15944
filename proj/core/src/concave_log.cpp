#include "starris/concave_log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace starris {

namespace {
constexpr double kLn2 = std::numbers::ln2;
}

double Log2Tangent(double x0, double x) { return std::log2(x0) + (x - x0) / (x0 * kLn2); }

double TangentPairGap(double a, double b) {
  if (!(a > 0.0) || !(b > a)) return 0.0;
  // Crossing point of the two tangents in natural-log form.
  const double x = std::log(b / a) * a * b / (b - a);
  return (std::log(a) + x / a - 1.0 - std::log(x)) / kLn2;
}

LogCuts::LogCuts(double lo, double hi, int base_count, int max_extra)
    : lo_(lo), hi_(std::max(hi, lo)), max_extra_(max_extra) {
  if (!(lo > 0.0) || base_count < 2) throw ContractError("LogCuts: need lo > 0 and >= 2 points");
  if (hi_ <= lo_ * (1.0 + 1e-12)) hi_ = lo_ * 2.0;
  const double ratio = std::pow(hi_ / lo_, 1.0 / (base_count - 1));
  for (int i = 0; i < base_count; ++i) base_.push_back(lo_ * std::pow(ratio, i));
  base_.back() = hi_;
}

void LogCuts::Add(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) return;
  auto close = [x](double p) { return std::abs(p - x) <= 1e-10 * x; };
  if (std::any_of(base_.begin(), base_.end(), close)) return;
  auto it = std::find_if(extra_.begin(), extra_.end(), close);
  if (it != extra_.end()) {
    // Refresh: move to the back so it is dropped last.
    const double p = *it;
    extra_.erase(it);
    extra_.push_back(p);
    return;
  }
  extra_.push_back(x);
  while (static_cast<int>(extra_.size()) > max_extra_) extra_.erase(extra_.begin());
}

void LogCuts::AddCluster(double x) {
  for (double f : {1e-2, -1e-2, 1e-3, -1e-3, 1e-4, -1e-4}) Add(x * (1.0 + f));
  Add(x);
}

std::vector<double> LogCuts::Points() const {
  std::vector<double> p = base_;
  p.insert(p.end(), extra_.begin(), extra_.end());
  std::sort(p.begin(), p.end());
  return p;
}

double LogCuts::Envelope(double s) const {
  double best = std::numeric_limits<double>::infinity();
  for (double x : Points()) best = std::min(best, Log2Tangent(x, s));
  return best;
}

double LogCuts::MaxGap() const {
  const std::vector<double> p = Points();
  double gap = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) gap = std::max(gap, TangentPairGap(p[i - 1], p[i]));
  return gap;
}

LogHypograph AddLogHypograph(ConicProblem& problem, const LinearExpr& expr, double offset,
                             const LogCuts& cuts, const std::string& name) {
  LogHypograph h{problem.AddScalar("t_" + name), problem.AddScalar("s_" + name)};
  LinearExpr def = expr;
  def.AddScalar(h.s, -1.0);
  // expr - s = -offset
  problem.AddConstraint(std::move(def), Relation::kEqual, -offset, "def_" + name);
  for (double x : cuts.Points()) {
    LinearExpr cut;
    cut.AddScalar(h.t, 1.0).AddScalar(h.s, -1.0 / (x * kLn2));
    problem.AddConstraint(std::move(cut), Relation::kLessEqual, std::log2(x) - 1.0 / kLn2,
                          "cut_" + name);
  }
  return h;
}

double InterferenceLinearization::Value(const std::vector<CMatrix>& V) const {
  double v = constant;
  for (std::size_t j = 0; j < coeffs.size(); ++j) v += (coeffs[j] * V[j]).trace().real();
  return v;
}

InterferenceLinearization ScaLinearizeInterference(const std::vector<CMatrix>& V_prev,
                                                   const CMatrix& H_k, int k, double noise) {
  InterferenceLinearization lin;
  lin.x0 = noise;
  for (std::size_t j = 0; j < V_prev.size(); ++j) {
    if (static_cast<int>(j) != k) lin.x0 += (H_k * V_prev[j]).trace().real();
  }
  const double slope = 1.0 / (lin.x0 * kLn2);
  lin.constant = std::log2(lin.x0) + (noise - lin.x0) * slope;
  for (std::size_t j = 0; j < V_prev.size(); ++j) {
    lin.coeffs.push_back(static_cast<int>(j) == k ? CMatrix::Zero(H_k.rows(), H_k.cols())
                                                  : CMatrix(H_k * slope));
  }
  return lin;
}

}  // namespace starris
