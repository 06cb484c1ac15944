#pragma once

#include <iosfwd>
#include <string>

#include "starris/ao_driver.hpp"
#include "starris/trace.hpp"

namespace starris {

// Human-readable summary: headline numbers, per-user table, coefficients and
// beamformers.
void WriteReportText(std::ostream& out, const SolveReport& report);

// JSON object with every report field. Complex values are [re, im] pairs;
// NaN trace fields become null. The trace is included when with_trace is set.
std::string ReportJson(const SolveReport& report, bool with_trace = false, int indent = 2);

// Header level,outer,iteration,lambda,mu,objective,epsilon_t,epsilon_r,
// min_ee,residual,sca_slack,step,status. Empty cells for NaN.
void WriteTraceCsv(std::ostream& out, const ConvergenceTrace& trace);

}  // namespace starris
