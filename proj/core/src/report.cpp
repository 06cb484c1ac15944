#include "starris/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "starris/experiments.hpp"

namespace starris {

namespace {

using nlohmann::json;

json Number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json Vector(const RVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json Doubles(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(Number(x));
  return a;
}

std::string Cell(double x) { return std::isnan(x) ? std::string() : FormatNumber(x); }

}  // namespace

void WriteReportText(std::ostream& out, const SolveReport& r) {
  out << "mode            " << ToString(r.mode) << "\n"
      << "status          " << ToString(r.status) << "\n"
      << "min_ee          " << FormatNumber(r.min_ee) << " bit/s/Hz/W (user " << r.min_user << ")\n"
      << "avg_se          " << FormatNumber(r.avg_se) << " bit/s/Hz\n"
      << "feasible        " << (r.feasible ? "yes" : "no") << " (budget " << (r.budget_ok ? "ok" : "violated")
      << ", qos " << (r.qos_ok ? "ok" : "violated") << ")\n"
      << "outer_iters     " << r.outer_iterations << " (start " << r.start << " of " << r.starts_run << ")\n"
      << "flags           rank_one_failure=" << r.rank_one_failure
      << " randomized_beams=" << r.randomized_beams << " degenerate_baseline=" << r.degenerate_baseline
      << "\n"
      << "wall_seconds    " << FormatNumber(r.wall_seconds) << "\n";
  if (!r.message.empty()) out << "message         " << r.message << "\n";
  out << "history        ";
  for (double h : r.history) out << ' ' << FormatNumber(h);
  out << "\n\nuser  rate        power_w     ee\n";
  for (std::size_t k = 0; k < r.rates.size(); ++k) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-5zu %-11.6g %-11.6g %.6g\n", k, r.rates[k], r.powers[k], r.ees[k]);
    out << buf;
  }
  out << "\nelement  beta_t    theta_t   beta_r    theta_r\n";
  for (int n = 0; n < r.phi.size(); ++n) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8d %-9.6f %-9.6f %-9.6f %.6f\n", n, r.phi.beta_t[n], r.phi.theta_t[n],
                  r.phi.beta_r[n], r.phi.theta_r[n]);
    out << buf;
  }
  out << "\nbeamformers (re,im per antenna)\n";
  for (std::size_t k = 0; k < r.beamformers.v.size(); ++k) {
    out << "  v" << k << ":";
    for (Eigen::Index m = 0; m < r.beamformers.v[k].size(); ++m) {
      out << " (" << FormatNumber(r.beamformers.v[k][m].real()) << ","
          << FormatNumber(r.beamformers.v[k][m].imag()) << ")";
    }
    out << "\n";
  }
}

std::string ReportJson(const SolveReport& r, bool with_trace, int indent) {
  json j;
  j["mode"] = ToString(r.mode);
  j["status"] = ToString(r.status);
  j["min_ee"] = Number(r.min_ee);
  j["min_user"] = r.min_user;
  j["avg_se"] = Number(r.avg_se);
  j["rates"] = Doubles(r.rates);
  j["powers"] = Doubles(r.powers);
  j["ees"] = Doubles(r.ees);
  j["beta_t"] = Vector(r.phi.beta_t);
  j["beta_r"] = Vector(r.phi.beta_r);
  j["theta_t"] = Vector(r.phi.theta_t);
  j["theta_r"] = Vector(r.phi.theta_r);
  json beams = json::array();
  for (const CVector& v : r.beamformers.v) {
    json b = json::array();
    for (Eigen::Index m = 0; m < v.size(); ++m) b.push_back({v[m].real(), v[m].imag()});
    beams.push_back(b);
  }
  j["beamformers"] = beams;
  j["budget_ok"] = r.budget_ok;
  j["qos_ok"] = r.qos_ok;
  j["feasible"] = r.feasible;
  j["rank_one_failure"] = r.rank_one_failure;
  j["randomized_beams"] = r.randomized_beams;
  j["degenerate_baseline"] = r.degenerate_baseline;
  j["outer_iterations"] = r.outer_iterations;
  j["start"] = r.start;
  j["starts_run"] = r.starts_run;
  j["history"] = Doubles(r.history);
  j["wall_seconds"] = r.wall_seconds;
  j["message"] = r.message;
  if (with_trace) {
    json rows = json::array();
    for (const TraceRow& t : r.trace.rows) {
      rows.push_back({{"level", ToString(t.level)},
                      {"outer", t.outer},
                      {"iteration", t.iteration},
                      {"lambda", Number(t.lambda)},
                      {"mu", Number(t.mu)},
                      {"objective", Number(t.objective)},
                      {"epsilon_t", Number(t.epsilon_t)},
                      {"epsilon_r", Number(t.epsilon_r)},
                      {"min_ee", Number(t.min_ee)},
                      {"residual", Number(t.residual)},
                      {"sca_slack", Number(t.sca_slack)},
                      {"step", Number(t.step)},
                      {"status", t.status}});
    }
    j["trace"] = rows;
  }
  return j.dump(indent);
}

void WriteTraceCsv(std::ostream& out, const ConvergenceTrace& trace) {
  out << "level,outer,iteration,lambda,mu,objective,epsilon_t,epsilon_r,min_ee,residual,sca_slack,step,"
         "status\n";
  for (const TraceRow& t : trace.rows) {
    std::string status = t.status;
    for (char& c : status)
      if (c == ',') c = ';';
    out << ToString(t.level) << ',' << t.outer << ',' << t.iteration << ',' << Cell(t.lambda) << ','
        << Cell(t.mu) << ',' << Cell(t.objective) << ',' << Cell(t.epsilon_t) << ','
        << Cell(t.epsilon_r) << ',' << Cell(t.min_ee) << ',' << Cell(t.residual) << ','
        << Cell(t.sca_slack) << ',' << Cell(t.step) << ',' << status << '\n';
  }
}

}  // namespace starris
