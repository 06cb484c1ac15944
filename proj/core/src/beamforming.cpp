#include "starris/beamforming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "starris/channel.hpp"

namespace starris {

double LiftedBeamformers::TotalPower() const {
  double p = 0.0;
  for (const auto& Vk : V) p += Vk.trace().real();
  return p;
}

LiftedBeamformers LiftedBeamformers::FromVectors(const BeamformerSet& beamformers) {
  LiftedBeamformers out;
  for (const auto& v : beamformers.v) out.V.push_back(v * v.adjoint());
  return out;
}

const char* ToString(BeamformingStatus status) {
  switch (status) {
    case BeamformingStatus::kConverged: return "converged";
    case BeamformingStatus::kIterationLimit: return "iteration_limit";
    case BeamformingStatus::kQosInfeasible: return "qos_infeasible";
    case BeamformingStatus::kSolverFailure: return "solver_failure";
  }
  return "?";
}

std::vector<CMatrix> ChannelGrams(const SystemInstance& instance, const StarCoefficients& phi) {
  std::vector<CMatrix> grams;
  for (const auto& h : EffectiveChannels(instance, phi)) grams.push_back(h.adjoint() * h);
  return grams;
}

LiftedMetrics EvaluateLifted(const SystemInstance& instance, const std::vector<CMatrix>& grams,
                             const LiftedBeamformers& V, double lambda) {
  const int K = instance.dims.num_users;
  const double noise = instance.power.noise_power_watts;
  LiftedMetrics m;
  m.min_ee = std::numeric_limits<double>::infinity();
  m.f_value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    double signal = 0.0, interference = 0.0;
    for (int j = 0; j < K; ++j) {
      const double p = std::max(0.0, (grams[k] * V.V[j]).trace().real());
      (j == k ? signal : interference) += p;
    }
    const double rate = std::log2(1.0 + signal / (interference + noise));
    const double power = V.V[k].trace().real() + instance.power.static_power_watts;
    m.rates.push_back(rate);
    m.powers.push_back(power);
    m.min_ee = std::min(m.min_ee, rate / power);
    m.f_value = std::min(m.f_value, rate - lambda * power);
  }
  return m;
}

LogCuts DefaultBeamformingCuts(const SystemInstance& instance, const std::vector<CMatrix>& grams,
                               int base_tangents) {
  double g = 0.0;
  for (const auto& Hk : grams) g = std::max(g, Hk.trace().real());  // = ||h_k||^2
  const double hi = 1.0 + instance.power.p_max_watts * g / instance.power.noise_power_watts;
  return LogCuts(1.0, hi, base_tangents);
}

BeamformingSdp BuildBeamformingSdp(double lambda, const StarCoefficients& phi,
                                   const SystemInstance& instance, const LiftedBeamformers& V_prev,
                                   const std::vector<LogCuts>& cuts) {
  const int K = instance.dims.num_users;
  const int M = instance.dims.num_bs_antennas;
  const double noise = instance.power.noise_power_watts;
  const double p_static = instance.power.static_power_watts;
  const double gamma = instance.power.SinrThreshold();
  const std::vector<CMatrix> grams = ChannelGrams(instance, phi);
  if (static_cast<int>(cuts.size()) != K || static_cast<int>(V_prev.V.size()) != K) {
    throw ContractError("BuildBeamformingSdp: expected one cut set and one V_prev per user");
  }

  BeamformingSdp sdp;
  sdp.scale = instance.power.p_max_watts;
  const double scale = sdp.scale;
  ConicProblem& prob = sdp.problem;
  for (int k = 0; k < K; ++k) sdp.W.push_back(prob.AddHermitianBlock("W" + std::to_string(k), M));
  sdp.mu = prob.AddScalar("mu");
  const CMatrix eye = CMatrix::Identity(M, M);

  for (int k = 0; k < K; ++k) {
    // Noise-normalized received power minus the noise term.
    LinearExpr total;
    const CMatrix Hn = grams[k] * (scale / noise);
    for (int j = 0; j < K; ++j) total.AddHermitian(sdp.W[j], Hn);
    sdp.rate.push_back(AddLogHypograph(prob, total, 1.0, cuts[k], std::to_string(k)));

    sdp.lin.push_back(ScaLinearizeInterference(V_prev.V, grams[k], k, noise));
    const InterferenceLinearization& lin = sdp.lin.back();
    // t_k + log2(noise) - lin(V) - lambda (tr V_k + P) >= mu
    LinearExpr row;
    row.AddScalar(sdp.rate[k].t, 1.0).AddScalar(sdp.mu, -1.0);
    for (int j = 0; j < K; ++j) {
      CMatrix c = -scale * lin.coeffs[j];
      if (j == k) c -= (lambda * scale) * eye;
      if (c.cwiseAbs().maxCoeff() > 0.0) row.AddHermitian(sdp.W[j], c);
    }
    prob.AddConstraint(std::move(row), Relation::kGreaterEqual,
                       lin.constant - std::log2(noise) + lambda * p_static, "ee_" + std::to_string(k));

    if (gamma > 0.0) {
      LinearExpr qos;
      for (int j = 0; j < K; ++j) qos.AddHermitian(sdp.W[j], j == k ? Hn / gamma : CMatrix(-Hn));
      prob.AddConstraint(std::move(qos), Relation::kGreaterEqual, 1.0, "qos_" + std::to_string(k));
    }
  }
  LinearExpr budget;
  for (int k = 0; k < K; ++k) budget.AddHermitian(sdp.W[k], eye);
  prob.AddConstraint(std::move(budget), Relation::kLessEqual, 1.0, "budget");

  LinearExpr obj;
  obj.AddScalar(sdp.mu, 1.0);
  prob.SetObjective(std::move(obj), Sense::kMaximize);
  return sdp;
}

BeamformingSdp BuildBeamformingSdp(double lambda, const StarCoefficients& phi,
                                   const SystemInstance& instance,
                                   const LiftedBeamformers& V_prev) {
  const LogCuts base = DefaultBeamformingCuts(instance, ChannelGrams(instance, phi));
  return BuildBeamformingSdp(lambda, phi, instance, V_prev,
                             std::vector<LogCuts>(instance.dims.num_users, base));
}

LiftedBeamformers MrtInitialization(const SystemInstance& instance, const StarCoefficients& phi) {
  const int K = instance.dims.num_users;
  const int M = instance.dims.num_bs_antennas;
  const double p = instance.power.p_max_watts / K;
  LiftedBeamformers out;
  for (const auto& h : EffectiveChannels(instance, phi)) {
    CVector d = h.adjoint();
    const double n = d.norm();
    if (n > 0.0) {
      d /= n;
    } else {
      d = CVector::Zero(M);
      d[0] = 1.0;
    }
    out.V.push_back(p * d * d.adjoint());
  }
  return out;
}

namespace {

struct SdpOutcome {
  SolveStatus status = SolveStatus::kFailed;
  LiftedBeamformers V;
  double mu = 0.0;
  double min_slack = 0.0;
  double residual = 0.0;
  int cut_rounds = 0;
};

// Solves P3 at (lambda, V_lin), adding tangents until the cut envelope is
// tight at every user's solution.
SdpOutcome SolveWithCutRefinement(double lambda, const StarCoefficients& phi,
                                  const SystemInstance& instance, const std::vector<CMatrix>& grams,
                                  const LiftedBeamformers& V_lin, std::vector<LogCuts>& cuts,
                                  const BeamformingOptions& options, int& solves) {
  const int K = instance.dims.num_users;
  const double noise = instance.power.noise_power_watts;
  SdpOutcome out;
  // The solution usually lands near the linearization point.
  for (int k = 0; k < K; ++k) {
    double total = 1.0;
    for (int j = 0; j < K; ++j) total += std::max(0.0, (grams[k] * V_lin.V[j]).trace().real()) / noise;
    cuts[k].AddCluster(total);
  }
  for (int round = 0; round < options.max_cut_rounds; ++round) {
    BeamformingSdp sdp = BuildBeamformingSdp(lambda, phi, instance, V_lin, cuts);
    const ConicSolution sol = SolveConic(sdp.problem, options.solver);
    ++solves;
    out.status = sol.status;
    if (sol.status == SolveStatus::kInfeasible || sol.status == SolveStatus::kFailed) return out;

    out.V.V.clear();
    for (int k = 0; k < K; ++k) out.V.V.push_back(sdp.scale * sol.Hermitian(sdp.W[k]));
    out.mu = sol.Scalar(sdp.mu);
    out.residual = sol.max_constraint_residual;

    double worst_gap = 0.0;
    std::vector<double> s_values(K);
    for (int k = 0; k < K; ++k) {
      s_values[k] = sol.Scalar(sdp.rate[k].s);
      const double gap = sol.Scalar(sdp.rate[k].t) - std::log2(std::max(s_values[k], 1e-300));
      worst_gap = std::max(worst_gap, gap);
    }

    // Slack of the exact rate constraint R_k - lambda P_k >= mu at the solution.
    const LiftedMetrics m = EvaluateLifted(instance, grams, out.V, lambda);
    out.min_slack = m.f_value - out.mu;
    if (worst_gap <= options.cut_gap_tol) break;
    for (int k = 0; k < K; ++k) cuts[k].AddCluster(s_values[k]);
    ++out.cut_rounds;
  }
  return out;
}

}  // namespace

DinkelbachResult DinkelbachBeamforming(const SystemInstance& instance, const StarCoefficients& phi,
                                       const LiftedBeamformers& V_init,
                                       const BeamformingOptions& options) {
  instance.Validate();
  const int K = instance.dims.num_users;
  if (static_cast<int>(V_init.V.size()) != K) {
    throw ContractError("DinkelbachBeamforming: V_init needs one matrix per user");
  }
  const std::vector<CMatrix> grams = ChannelGrams(instance, phi);
  std::vector<LogCuts> cuts(K, DefaultBeamformingCuts(instance, grams, options.base_tangents));

  DinkelbachResult res;
  res.V = V_init;
  res.min_sca_slack = std::numeric_limits<double>::infinity();
  double lambda = options.initial_lambda;
  bool have_incumbent = false;

  for (int n = 1; n <= options.max_iterations; ++n) {
    res.iterations = n;
    res.lambdas.push_back(lambda);
    LiftedBeamformers V_lin = res.V;
    std::vector<double> prev_lhs;
    bool solver_failed = false;
    double mu = 0.0;
    for (int r = 1; r <= options.max_sca_rounds; ++r) {
      SdpOutcome o = SolveWithCutRefinement(lambda, phi, instance, grams, V_lin, cuts, options,
                                            res.solves);
      TraceRow row;
      row.level = TraceLevel::kSca;
      row.iteration = r;
      row.lambda = lambda;
      row.status = ToString(o.status);
      if (o.status == SolveStatus::kInfeasible && !have_incumbent && r == 1) {
        res.trace.rows.push_back(row);
        res.status = BeamformingStatus::kQosInfeasible;
        res.min_sca_slack = 0.0;
        return res;
      }
      if (o.status == SolveStatus::kInfeasible || o.status == SolveStatus::kFailed) {
        res.trace.rows.push_back(row);
        solver_failed = r == 1;
        break;
      }
      row.mu = o.mu;
      row.residual = o.residual;
      row.sca_slack = o.min_slack;
      res.min_sca_slack = std::min(res.min_sca_slack, o.min_slack);
      const LiftedMetrics m = EvaluateLifted(instance, grams, o.V, lambda);
      row.objective = m.f_value;
      row.min_ee = m.min_ee;
      res.trace.rows.push_back(row);

      std::vector<double> lhs(K);
      for (int k = 0; k < K; ++k) lhs[k] = m.rates[k] - lambda * m.powers[k];
      V_lin = std::move(o.V);
      mu = o.mu;
      double change = std::numeric_limits<double>::infinity();
      if (!prev_lhs.empty()) {
        change = 0.0;
        for (int k = 0; k < K; ++k) change = std::max(change, std::abs(lhs[k] - prev_lhs[k]));
      }
      prev_lhs = lhs;
      if (change < options.sca_tol) break;
    }

    TraceRow drow;
    drow.level = TraceLevel::kDinkelbach;
    drow.iteration = n;
    drow.lambda = lambda;
    if (solver_failed) {
      drow.status = "solver_failure";
      res.trace.rows.push_back(drow);
      res.status = BeamformingStatus::kSolverFailure;
      break;
    }
    LiftedMetrics m = EvaluateLifted(instance, grams, V_lin, lambda);
    if (have_incumbent && m.f_value < 0.0) {
      // Worse than the incumbent at this lambda; the incumbent has F = 0.
      m = EvaluateLifted(instance, grams, res.V, lambda);
      drow.status = "kept_incumbent";
    } else {
      res.V = std::move(V_lin);
      res.mu = mu;
      drow.status = "accepted";
    }
    have_incumbent = true;
    res.f_value = m.f_value;
    drow.mu = res.mu;
    drow.objective = m.f_value;
    drow.min_ee = m.min_ee;
    res.trace.rows.push_back(drow);
    const double next_lambda = std::max(lambda, m.min_ee);
    if (std::abs(m.f_value) <= options.epsilon_tol) {
      res.status = BeamformingStatus::kConverged;
      break;
    }
    lambda = next_lambda;
    res.status = BeamformingStatus::kIterationLimit;
  }
  if (res.status != BeamformingStatus::kQosInfeasible) {
    res.lambda = EvaluateLifted(instance, grams, res.V).min_ee;
  }
  if (!std::isfinite(res.min_sca_slack)) res.min_sca_slack = 0.0;
  return res;
}

ExtractionResult ExtractBeamformers(const LiftedBeamformers& V, const SystemInstance& instance,
                                    const StarCoefficients& phi, const BeamformingOptions& options) {
  const int K = instance.dims.num_users;
  const int M = instance.dims.num_bs_antennas;
  const double p_max = instance.power.p_max_watts;
  if (static_cast<int>(V.V.size()) != K) throw ContractError("ExtractBeamformers: wrong user count");

  std::vector<Eigen::SelfAdjointEigenSolver<CMatrix>> eig;
  BeamformerSet principal;
  bool all_rank_one = true;
  for (int k = 0; k < K; ++k) {
    const CMatrix Vk = (0.5 * (V.V[k] + V.V[k].adjoint())).eval();
    eig.emplace_back(Vk);
    const double tr = Vk.trace().real();
    const double xi = std::max(0.0, eig.back().eigenvalues()[M - 1]);
    if (tr > 1e-14 && xi / tr < options.rank_one_threshold) all_rank_one = false;
    principal.v.push_back(std::sqrt(xi) * eig.back().eigenvectors().col(M - 1));
  }

  auto fit_budget = [p_max](BeamformerSet& b) {
    const double total = b.TotalPower();
    if (total > p_max) {
      const double f = std::sqrt(p_max / total);
      for (auto& v : b.v) v *= f;
    }
  };
  fit_budget(principal);

  ExtractionResult best;
  best.beamformers = principal;
  {
    const UserMetrics m = EvaluateUsers(instance, phi, principal);
    best.feasible = m.budget_ok && m.qos_ok;
    best.min_ee = m.min_ee.value;
  }
  best.rank_one = all_rank_one;
  if (all_rank_one) return best;

  GaussianStream rng(options.randomization_seed);
  for (int i = 0; i < options.num_randomizations; ++i) {
    BeamformerSet cand;
    for (int k = 0; k < K; ++k) {
      const RVector lam = eig[k].eigenvalues().cwiseMax(0.0);
      CVector r(M);
      for (int m = 0; m < M; ++m) r[m] = rng.NextComplex(1.0);
      CVector v = eig[k].eigenvectors() * (lam.cwiseSqrt().cast<Complex>().asDiagonal() * r);
      const double tr = V.V[k].trace().real();
      const double n = v.norm();
      if (n > 0.0 && tr > 0.0) v *= std::sqrt(tr) / n;
      cand.v.push_back(v);
    }
    fit_budget(cand);
    const UserMetrics m = EvaluateUsers(instance, phi, cand);
    const bool feasible = m.budget_ok && m.qos_ok;
    // Feasible beats infeasible, then higher min-EE.
    if ((feasible && !best.feasible) ||
        (feasible == best.feasible && m.min_ee.value > best.min_ee)) {
      best.beamformers = std::move(cand);
      best.feasible = feasible;
      best.min_ee = m.min_ee.value;
    }
  }
  return best;
}

}  // namespace starris
