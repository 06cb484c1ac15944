#include "starris/phase_shift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace starris {

namespace {

constexpr double kLn2 = std::numbers::ln2;

CMatrix SubMatrix(const CMatrix& A, const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  CMatrix S(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) S(a, b) = A(idx[a], idx[b]);
  return S;
}

CVector SubVector(const CVector& v, const std::vector<int>& idx) {
  CVector s(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) s[a] = v[idx[a]];
  return s;
}

double ReTrace(const CMatrix& A, const CMatrix& B) { return (A.cwiseProduct(B.transpose())).sum().real(); }

}  // namespace

const char* ToString(RisMode mode) {
  switch (mode) {
    case RisMode::kStarEs: return "star_es";
    case RisMode::kReflectOnly: return "reflect_only";
    case RisMode::kTransmitOnly: return "transmit_only";
  }
  return "?";
}

RisMode ParseRisMode(const std::string& text) {
  if (text == "star_es") return RisMode::kStarEs;
  if (text == "reflect_only") return RisMode::kReflectOnly;
  if (text == "transmit_only") return RisMode::kTransmitOnly;
  throw ContractError("unknown RIS mode '" + text + "'");
}

ElementLayout MakeLayout(RisMode mode, int num_elements) {
  if (num_elements < 1) throw ContractError("MakeLayout: need at least one element");
  ElementLayout layout;
  layout.mode = mode;
  const int half = (num_elements + 1) / 2;
  for (int n = 0; n < num_elements; ++n) {
    switch (mode) {
      case RisMode::kStarEs:
        layout.elements[0].push_back(n);
        layout.elements[1].push_back(n);
        break;
      case RisMode::kReflectOnly:
        layout.elements[n < half ? 1 : 0].push_back(n);
        break;
      case RisMode::kTransmitOnly:
        layout.elements[n < half ? 0 : 1].push_back(n);
        break;
    }
  }
  return layout;
}

PassiveData ComputePassiveData(const SystemInstance& instance, const BeamformerSet& beamformers) {
  instance.Validate();
  const int K = instance.dims.num_users;
  const int M = instance.dims.num_bs_antennas;
  if (beamformers.size() != K) throw ContractError("ComputePassiveData: need one beamformer per user");
  for (const auto& v : beamformers.v)
    if (v.size() != M) throw ContractError("ComputePassiveData: beamformer length differs from M");
  PassiveData out;
  out.b.resize(K);
  out.B.resize(K);
  for (int k = 0; k < K; ++k) {
    const CVector gk = instance.channels.g[k].transpose();
    for (int j = 0; j < K; ++j) {
      CVector b = gk.cwiseProduct(instance.channels.H * beamformers.v[j]);
      out.B[k].push_back(b.conjugate() * b.transpose());
      out.b[k].push_back(std::move(b));
    }
  }
  return out;
}

LiftedPhases LiftedPhases::FromCoefficients(const StarCoefficients& phi) {
  LiftedPhases out;
  const CVector dt = phi.Diagonal(UserSide::kTransmission);
  const CVector dr = phi.Diagonal(UserSide::kReflection);
  out.Phi_t = dt * dt.adjoint();
  out.Phi_r = dr * dr.adjoint();
  return out;
}

double PrincipalRatio(const CMatrix& Phi) {
  if (Phi.size() == 0) return 1.0;
  const CMatrix S = (0.5 * (Phi + Phi.adjoint())).eval();
  const double tr = S.trace().real();
  if (!(tr > 0.0)) return 1.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(S, Eigen::EigenvaluesOnly);
  return std::min(1.0, std::max(0.0, eig.eigenvalues()[S.rows() - 1]) / tr);
}

CVector PrincipalEigenvector(const CMatrix& Phi) {
  const CMatrix S = (0.5 * (Phi + Phi.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(S);
  return eig.eigenvectors().col(S.rows() - 1);
}

double UpdateEpsilon(const CMatrix& Phi, double delta) {
  if (delta < 0.0) throw ContractError("UpdateEpsilon: negative step");
  if (Phi.size() == 0 || !(Phi.trace().real() > 0.0)) throw ContractError("UpdateEpsilon: zero trace");
  return std::min(1.0, PrincipalRatio(Phi) + delta);
}

LogCuts DefaultPhaseCuts(const SystemInstance& instance, const PassiveData& passive, int k,
                         int base_tangents) {
  double total = 0.0;
  for (const auto& b : passive.b[k]) total += b.squaredNorm();
  const double hi =
      1.0 + instance.dims.num_ris_elements * total / instance.power.noise_power_watts;
  return LogCuts(1.0, hi, base_tangents);
}

PhaseSdp BuildPhaseSdp(const SystemInstance& instance, const BeamformerSet& beamformers,
                       const PassiveData& passive, double lambda, const std::array<double, 2>& epsilon,
                       const std::array<CVector, 2>& anchors, const LiftedPhases& Phi_prev,
                       const ElementLayout& layout, const std::vector<LogCuts>& cuts) {
  const int K = instance.dims.num_users;
  const int N = instance.dims.num_ris_elements;
  const double noise = instance.power.noise_power_watts;
  const double gamma = instance.power.SinrThreshold();
  if (static_cast<int>(cuts.size()) != K) throw ContractError("BuildPhaseSdp: one cut set per user");

  PhaseSdp sdp;
  sdp.layout = layout;
  ConicProblem& prob = sdp.problem;
  for (int c = 0; c < 2; ++c) {
    if (layout.elements[c].empty()) continue;
    sdp.block[c] = prob.AddHermitianBlock(c == 0 ? "Phi_t" : "Phi_r",
                                          static_cast<int>(layout.elements[c].size()));
    sdp.has_block[c] = true;
  }
  sdp.mu = prob.AddScalar("mu");

  for (int k = 0; k < K; ++k) {
    const int c = SideIndex(instance.channels.sides[k]);
    const double p_k = beamformers.v[k].squaredNorm() + instance.power.static_power_watts;
    LinearExpr total;
    double x0 = noise;
    CMatrix interf;
    if (sdp.has_block[c]) {
      const auto& idx = layout.elements[c];
      CMatrix all = CMatrix::Zero(idx.size(), idx.size());
      interf = CMatrix::Zero(idx.size(), idx.size());
      for (int j = 0; j < K; ++j) {
        const CMatrix Bs = SubMatrix(passive.B[k][j], idx);
        all += Bs;
        if (j != k) {
          interf += Bs;
          x0 += std::max(0.0, ReTrace(Phi_prev.Side(c), passive.B[k][j]));
        }
      }
      total.AddHermitian(sdp.block[c], all / noise);
    }
    sdp.rate.push_back(AddLogHypograph(prob, total, 1.0, cuts[k], std::to_string(k)));

    // t_k - [log2(x0) + (x - x0)/(x0 ln2) - log2(noise)] - lambda P_k >= mu,
    // x = noise + tr(Phi interf).
    LinearExpr row;
    row.AddScalar(sdp.rate[k].t, 1.0).AddScalar(sdp.mu, -1.0);
    if (sdp.has_block[c] && interf.cwiseAbs().maxCoeff() > 0.0)
      row.AddHermitian(sdp.block[c], -interf / (x0 * kLn2));
    const double rhs = std::log2(x0) + (noise - x0) / (x0 * kLn2) - std::log2(noise) + lambda * p_k;
    prob.AddConstraint(std::move(row), Relation::kGreaterEqual, rhs, "ee_" + std::to_string(k));

    if (gamma > 0.0) {
      LinearExpr qos;
      if (sdp.has_block[c]) {
        const auto& idx = layout.elements[c];
        const CMatrix Q = SubMatrix(passive.B[k][k], idx) / gamma - interf;
        qos.AddHermitian(sdp.block[c], Q / noise);
      }
      prob.AddConstraint(std::move(qos), Relation::kGreaterEqual, 1.0, "qos_" + std::to_string(k));
    }
  }

  // Amplitude constraints on the diagonals.
  for (int n = 0; n < N; ++n) {
    LinearExpr diag;
    int terms = 0;
    for (int c = 0; c < 2; ++c) {
      if (!sdp.has_block[c]) continue;
      const auto& idx = layout.elements[c];
      const auto it = std::find(idx.begin(), idx.end(), n);
      if (it == idx.end()) continue;
      const int a = static_cast<int>(it - idx.begin());
      CMatrix E = CMatrix::Zero(idx.size(), idx.size());
      E(a, a) = 1.0;
      diag.AddHermitian(sdp.block[c], E);
      ++terms;
    }
    if (terms > 0) prob.AddConstraint(std::move(diag), Relation::kEqual, 1.0, "diag_" + std::to_string(n));
  }

  // e^H Phi_c e >= eps tr(Phi_c), dropped at eps = 0.
  for (int c = 0; c < 2; ++c) {
    if (!sdp.has_block[c] || epsilon[c] <= 0.0) continue;
    const auto& idx = layout.elements[c];
    CVector e = SubVector(anchors[c], idx);
    const double norm = e.norm();
    if (!(norm > 0.0)) continue;
    e /= norm;
    const CMatrix S = e * e.adjoint() - epsilon[c] * CMatrix::Identity(idx.size(), idx.size());
    LinearExpr sur;
    sur.AddHermitian(sdp.block[c], S);
    prob.AddConstraint(std::move(sur), Relation::kGreaterEqual, 0.0, c == 0 ? "eig_t" : "eig_r");
  }

  LinearExpr obj;
  obj.AddScalar(sdp.mu, 1.0);
  prob.SetObjective(std::move(obj), Sense::kMaximize);
  return sdp;
}

LiftedPhases ReadPhaseSolution(const PhaseSdp& sdp, const ConicSolution& solution, int num_elements) {
  LiftedPhases out;
  out.Phi_t = CMatrix::Zero(num_elements, num_elements);
  out.Phi_r = CMatrix::Zero(num_elements, num_elements);
  for (int c = 0; c < 2; ++c) {
    if (!sdp.has_block[c]) continue;
    const CMatrix S = solution.Hermitian(sdp.block[c]);
    const auto& idx = sdp.layout.elements[c];
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b) out.Side(c)(idx[a], idx[b]) = S(a, b);
  }
  return out;
}

StarCoefficients ExtractStarCoefficientsUnchecked(const LiftedPhases& Phi, const ElementLayout& layout) {
  const int N = static_cast<int>(Phi.Phi_t.rows());
  StarCoefficients out;
  out.beta_t = RVector::Zero(N);
  out.beta_r = RVector::Zero(N);
  out.theta_t = RVector::Zero(N);
  out.theta_r = RVector::Zero(N);
  for (int c = 0; c < 2; ++c) {
    const auto& idx = layout.elements[c];
    if (idx.empty()) continue;
    const CMatrix S = SubMatrix(Phi.Side(c), idx);
    RVector& beta = c == 0 ? out.beta_t : out.beta_r;
    RVector& theta = c == 0 ? out.theta_t : out.theta_r;
    for (std::size_t a = 0; a < idx.size(); ++a) beta[idx[a]] = std::max(0.0, S(a, a).real());
    if (S.trace().real() > 0.0) {
      const CVector e = PrincipalEigenvector(S);
      const double ref = std::arg(e[0]);
      for (std::size_t a = 0; a < idx.size(); ++a) theta[idx[a]] = WrapPhase(std::arg(e[a]) - ref);
    }
  }
  for (int n = 0; n < N; ++n) {
    if (layout.coupled()) {
      const double sum = out.beta_t[n] + out.beta_r[n];
      if (sum > 0.0) {
        out.beta_t[n] /= sum;
        out.beta_r[n] = 1.0 - out.beta_t[n];
      } else {
        out.beta_t[n] = out.beta_r[n] = 0.5;
      }
    } else {
      // Each element serves exactly one side at full amplitude.
      const bool transmits = std::find(layout.elements[0].begin(), layout.elements[0].end(), n) !=
                             layout.elements[0].end();
      out.beta_t[n] = transmits ? 1.0 : 0.0;
      out.beta_r[n] = transmits ? 0.0 : 1.0;
    }
  }
  return out;
}

StarCoefficients ExtractStarCoefficients(const LiftedPhases& Phi, const ElementLayout& layout) {
  for (int c = 0; c < 2; ++c) {
    if (layout.elements[c].empty()) continue;
    const double r = PrincipalRatio(SubMatrix(Phi.Side(c), layout.elements[c]));
    if (r < 1.0 - 2e-2) {
      throw ContractError("ExtractStarCoefficients: side " + std::to_string(c) +
                          " is not close to rank one (ratio " + std::to_string(r) + ")");
    }
  }
  return ExtractStarCoefficientsUnchecked(Phi, layout);
}

namespace {

struct PhaseOutcome {
  SolveStatus status = SolveStatus::kFailed;
  LiftedPhases Phi;
  double mu = 0.0;
  double residual = 0.0;
};

PhaseOutcome SolvePhaseWithCuts(const SystemInstance& instance, const BeamformerSet& beamformers,
                                const PassiveData& passive, double lambda,
                                const std::array<double, 2>& epsilon,
                                const std::array<CVector, 2>& anchors, const LiftedPhases& Phi_prev,
                                const ElementLayout& layout, std::vector<LogCuts>& cuts,
                                const RelaxationOptions& options, int& solves) {
  const int K = instance.dims.num_users;
  const int N = instance.dims.num_ris_elements;
  const double noise = instance.power.noise_power_watts;
  for (int k = 0; k < K; ++k) {
    const int c = SideIndex(instance.channels.sides[k]);
    double total = 1.0;
    for (int j = 0; j < K; ++j) total += std::max(0.0, ReTrace(Phi_prev.Side(c), passive.B[k][j])) / noise;
    cuts[k].AddCluster(total);
  }
  PhaseOutcome out;
  for (int round = 0; round < options.max_cut_rounds; ++round) {
    const PhaseSdp sdp =
        BuildPhaseSdp(instance, beamformers, passive, lambda, epsilon, anchors, Phi_prev, layout, cuts);
    const ConicSolution sol = SolveConic(sdp.problem, options.solver);
    ++solves;
    out.status = sol.status;
    if (sol.status == SolveStatus::kInfeasible || sol.status == SolveStatus::kFailed) return out;
    if (sol.status == SolveStatus::kInaccurate &&
        sol.max_constraint_residual > options.solver.contract_residual_tol) {
      out.status = SolveStatus::kFailed;
      return out;
    }
    out.Phi = ReadPhaseSolution(sdp, sol, N);
    out.mu = sol.Scalar(sdp.mu);
    out.residual = sol.max_constraint_residual;
    double worst = 0.0;
    std::vector<double> s(K);
    for (int k = 0; k < K; ++k) {
      s[k] = sol.Scalar(sdp.rate[k].s);
      worst = std::max(worst, sol.Scalar(sdp.rate[k].t) - std::log2(std::max(s[k], 1e-300)));
    }
    if (worst <= options.cut_gap_tol) break;
    for (int k = 0; k < K; ++k) cuts[k].AddCluster(s[k]);
  }
  return out;
}

bool Better(bool qos_a, double ee_a, bool qos_b, double ee_b) {
  if (qos_a != qos_b) return qos_a;
  return ee_a > ee_b;
}

}  // namespace

RelaxationResult SequentialRelaxation(const SystemInstance& instance,
                                      const BeamformerSet& beamformers, double lambda,
                                      const StarCoefficients& phi_init, const ElementLayout& layout,
                                      const RelaxationOptions& options) {
  const int K = instance.dims.num_users;
  const int N = instance.dims.num_ris_elements;
  phi_init.Validate();
  if (phi_init.size() != N) throw ContractError("SequentialRelaxation: phi_init has the wrong size");
  const PassiveData passive = ComputePassiveData(instance, beamformers);
  std::vector<LogCuts> cuts;
  for (int k = 0; k < K; ++k) cuts.push_back(DefaultPhaseCuts(instance, passive, k, options.base_tangents));

  RelaxationResult res;
  res.Phi = LiftedPhases::FromCoefficients(phi_init);
  res.coefficients = phi_init;
  {
    const UserMetrics m = EvaluateUsers(instance, phi_init, beamformers);
    res.min_ee = m.min_ee.value;
    res.qos_ok = m.qos_ok;
  }

  auto side_ratio = [&](const LiftedPhases& P, int c) {
    if (layout.elements[c].empty()) return 1.0;
    return PrincipalRatio(SubMatrix(P.Side(c), layout.elements[c]));
  };
  auto anchors_of = [&](const LiftedPhases& P) {
    std::array<CVector, 2> a;
    for (int c = 0; c < 2; ++c) {
      a[c] = CVector::Zero(N);
      const auto& idx = layout.elements[c];
      if (idx.empty()) continue;
      const CVector e = PrincipalEigenvector(SubMatrix(P.Side(c), idx));
      for (std::size_t i = 0; i < idx.size(); ++i) a[c][idx[i]] = e[i];
    }
    return a;
  };

  std::array<double, 2> eps{0.0, 0.0};
  std::array<CVector, 2> anchors = anchors_of(res.Phi);
  double delta = options.delta0;
  double prev_obj = std::numeric_limits<double>::quiet_NaN();

  for (int tau = 0; tau < options.max_iterations; ++tau) {
    res.iterations = tau + 1;
    // At eps = 1 the surrogate pins Phi_c to the anchor direction and leaves
    // no interior, so the SDP sees a slightly looser value.
    std::array<double, 2> eps_sdp;
    for (int c = 0; c < 2; ++c) eps_sdp[c] = std::min(eps[c], 1.0 - 0.5 * options.delta_tol);
    const PhaseOutcome o = SolvePhaseWithCuts(instance, beamformers, passive, lambda, eps_sdp, anchors,
                                              res.Phi, layout, cuts, options, res.solves);
    const bool accepted = o.status == SolveStatus::kOptimal || o.status == SolveStatus::kInaccurate;
    const std::array<double, 2> eps_used = eps;
    double change = std::numeric_limits<double>::infinity();

    TraceRow row;
    row.level = TraceLevel::kRelaxation;
    row.iteration = tau;
    row.lambda = lambda;
    row.epsilon_t = eps_used[0];
    row.epsilon_r = eps_used[1];
    if (accepted) {
      res.Phi = o.Phi;
      delta = options.delta0;
      if (std::isfinite(prev_obj)) change = std::abs(o.mu - prev_obj);
      prev_obj = o.mu;
      const StarCoefficients cand = ExtractStarCoefficientsUnchecked(res.Phi, layout);
      const UserMetrics m = EvaluateUsers(instance, cand, beamformers);
      if (Better(m.qos_ok, m.min_ee.value, res.qos_ok, res.min_ee)) {
        res.coefficients = cand;
        res.min_ee = m.min_ee.value;
        res.qos_ok = m.qos_ok;
      }
      row.mu = o.mu;
      row.objective = o.mu;
      row.min_ee = m.min_ee.value;
      row.residual = o.residual;
      row.status = "accepted";
    } else {
      delta *= 0.5;
      row.status = std::string("rejected_") + ToString(o.status);
    }

    for (int c = 0; c < 2; ++c) {
      res.ratio[c] = side_ratio(res.Phi, c);
      eps[c] = layout.elements[c].empty() ? 1.0 : std::min(1.0, res.ratio[c] + delta);
    }
    anchors = anchors_of(res.Phi);
    res.epsilon = eps_used;
    row.step = delta;
    res.trace.rows.push_back(row);

    bool tight = true;
    for (int c = 0; c < 2; ++c) {
      if (layout.elements[c].empty()) continue;
      tight = tight && std::abs(1.0 - eps_used[c]) <= options.delta_tol &&
              res.ratio[c] >= 1.0 - options.delta_tol;
    }
    if (accepted && tight && change < options.objective_tol) {
      res.converged = true;
      break;
    }
    // Infeasible without any surrogate: tightening cannot help.
    if (o.status == SolveStatus::kInfeasible && eps_used[0] == 0.0 && eps_used[1] == 0.0) {
      break;
    }
  }
  res.rank_one_failure = !res.converged;
  return res;
}

}  // namespace starris
