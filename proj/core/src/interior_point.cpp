// Primal-dual path-following SDP/LP solver.
//
// Standard form after conversion:
//   min  sum_j <C_j, X_j> + cl' x + cf' w
//   s.t. sum_j <A_ij, X_j> + (Al x)_i + (Af w)_i = b_i,  X_j PSD, x >= 0, w free.
// Bounded scalars become shifted LP variables, inequalities get LP slacks and
// free scalars enter through a bordered Schur-complement system.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Sparse>

#include "starris/conic.hpp"

namespace starris {
namespace {

struct Coeff {
  bool dense = false;
  RMatrix M;                  // when dense
  std::vector<int> row, col;  // when sparse: all stored entries (both triangles)
  std::vector<double> val;
  double norm = 0.0;

  double Dot(const RMatrix& W) const {
    if (dense) return M.cwiseProduct(W).sum();
    double s = 0.0;
    for (std::size_t e = 0; e < val.size(); ++e) s += val[e] * W(row[e], col[e]);
    return s;
  }
  void AddTo(RMatrix& target, double scale) const {
    if (dense) {
      target.noalias() += scale * M;
    } else {
      for (std::size_t e = 0; e < val.size(); ++e) target(row[e], col[e]) += scale * val[e];
    }
  }
  void Scale(double s) {
    if (dense) M *= s;
    for (double& v : val) v *= s;
    norm *= s;
  }
};

Coeff MakeCoeff(const RMatrix& A) {
  Coeff c;
  const Eigen::Index n = A.rows();
  c.norm = A.norm();
  Eigen::Index nnz = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (A(i, j) != 0.0) ++nnz;
  if (nnz > 2 * n) {
    c.dense = true;
    c.M = A;
    return c;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (A(i, j) != 0.0) {
        c.row.push_back(static_cast<int>(i));
        c.col.push_back(static_cast<int>(j));
        c.val.push_back(A(i, j));
      }
    }
  }
  return c;
}

enum class ScalarKind { kShifted, kFree };

struct ScalarMap {
  ScalarKind kind;
  int index;     // LP column or free column
  double shift;  // lower bound for shifted scalars
};

struct BlockRows {
  std::vector<int> rows;
  std::vector<Coeff> coeffs;
};

RMatrix Sym(const RMatrix& A) { return 0.5 * (A + A.transpose()); }

// Largest alpha with X + alpha dX PSD, given the Cholesky factor of X.
double MaxStepPsd(const Eigen::LLT<RMatrix>& chol, const RMatrix& dX) {
  const auto& L = chol.matrixL();
  RMatrix T = L.solve(dX);
  T = L.solve(T.transpose()).eval();
  T = Sym(T);
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(T, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double MaxStepLp(const RVector& x, const RVector& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
  }
  return alpha;
}

class InteriorPointSolver {
 public:
  InteriorPointSolver(const ConicProblem& problem, const SolverOptions& options)
      : problem_(problem), opt_(options) {
    BuildStandardForm();
  }

  ConicSolution Solve();

 private:
  void BuildStandardForm();
  void Initialize();
  void ComputeResiduals();
  bool FactorSchur();
  void PartitionRows();
  RVector ApplyM(const RVector& v) const;
  void SolveDirection(const std::vector<RMatrix>& RcZinv, const RVector& rc_over_z,
                      std::vector<RMatrix>& dX, std::vector<RMatrix>& dZ, RVector& dx,
                      RVector& dz, RVector& dw, RVector& dy);
  ConicSolution Extract(SolveStatus status, int iterations) const;

  const ConicProblem& problem_;
  SolverOptions opt_;

  int m_ = 0;
  int nl_ = 0;
  int nf_ = 0;
  std::vector<int> dims_;
  std::vector<BlockRows> block_rows_;
  std::vector<RMatrix> C_;
  Eigen::SparseMatrix<double> Al_;
  RMatrix Af_;
  std::vector<double> al_row_norm_;
  RVector b_, cl_, cf_;
  std::vector<ScalarMap> scalar_map_;
  std::vector<double> row_scale_;
  double obj_scale_ = 1.0;
  double obj_sign_ = 1.0;
  double obj_const_ = 0.0;
  double norm_b_ = 0.0, norm_c_ = 0.0;

  // Iterate.
  std::vector<RMatrix> X_, Z_;
  RVector x_, z_, w_, y_;
  // Residuals.
  RVector rp_, rdl_, rdf_;
  std::vector<RMatrix> Rd_;
  // Cached factorizations.
  std::vector<Eigen::LLT<RMatrix>> cholX_, cholZ_;
  std::vector<RMatrix> Zinv_;
  // Rows whose Schur row is structurally diagonal (no PSD terms, LP columns
  // used by no other row) are kept out of the dense factorization.
  std::vector<int> dense_rows_, iso_rows_, dense_pos_;
  Eigen::SparseMatrix<double> Al_dense_;
  std::vector<std::vector<std::pair<int, double>>> iso_terms_;
  RVector iso_diag_;
  RMatrix schur_;
  Eigen::LDLT<RMatrix> schur_ldlt_;
  Eigen::FullPivLU<RMatrix> kkt_lu_;
};

void InteriorPointSolver::BuildStandardForm() {
  problem_.Validate();
  const auto& blocks = problem_.blocks();
  const auto& scalars = problem_.scalars();
  const auto& cons = problem_.constraints();
  m_ = static_cast<int>(cons.size());

  dims_.clear();
  for (const auto& b : blocks) dims_.push_back(b.dim);
  block_rows_.assign(blocks.size(), BlockRows{});

  for (const auto& s : scalars) {
    if (std::isinf(s.lower_bound)) {
      scalar_map_.push_back({ScalarKind::kFree, nf_++, 0.0});
    } else {
      scalar_map_.push_back({ScalarKind::kShifted, nl_++, s.lower_bound});
    }
  }
  std::vector<int> slack_col(m_, -1);
  for (int i = 0; i < m_; ++i) {
    if (cons[i].relation != Relation::kEqual) slack_col[i] = nl_++;
  }

  std::vector<Eigen::Triplet<double>> al_triplets;
  Af_ = RMatrix::Zero(m_, nf_);
  al_row_norm_.assign(m_, 0.0);
  b_ = RVector::Zero(m_);
  row_scale_.assign(m_, 1.0);

  for (int i = 0; i < m_; ++i) {
    const auto& con = cons[i];
    double rhs = con.rhs;
    double norm2 = 0.0;
    std::vector<std::pair<int, Coeff>> terms;
    std::vector<std::pair<int, double>> lp_terms;
    for (const auto& term : con.expr.block_terms()) {
      Coeff c = MakeCoeff(term.coeff);
      norm2 += c.norm * c.norm;
      terms.emplace_back(term.block, std::move(c));
    }
    for (const auto& [index, value] : con.expr.scalar_terms()) {
      const ScalarMap& sm = scalar_map_[index];
      if (sm.kind == ScalarKind::kFree) {
        Af_(i, sm.index) += value;
      } else {
        lp_terms.emplace_back(sm.index, value);
        rhs -= value * sm.shift;
      }
      norm2 += value * value;
    }
    const double scale = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 1.0;
    row_scale_[i] = scale;
    for (auto& [block, c] : terms) {
      c.Scale(scale);
      block_rows_[block].rows.push_back(i);
      block_rows_[block].coeffs.push_back(std::move(c));
    }
    double lp_norm2 = 0.0;
    for (const auto& [col, value] : lp_terms) {
      al_triplets.emplace_back(i, col, value * scale);
      lp_norm2 += value * value * scale * scale;
    }
    Af_.row(i) *= scale;
    if (slack_col[i] >= 0) {
      al_triplets.emplace_back(i, slack_col[i], con.relation == Relation::kLessEqual ? 1.0 : -1.0);
      lp_norm2 += 1.0;
    }
    al_row_norm_[i] = std::sqrt(lp_norm2);
    b_[i] = rhs * scale;
  }
  Al_.resize(m_, nl_);
  Al_.setFromTriplets(al_triplets.begin(), al_triplets.end());
  PartitionRows();

  // Objective in minimization form.
  obj_sign_ = problem_.sense() == Sense::kMinimize ? 1.0 : -1.0;
  C_.clear();
  for (int d : dims_) C_.push_back(RMatrix::Zero(d, d));
  cl_ = RVector::Zero(nl_);
  cf_ = RVector::Zero(nf_);
  obj_const_ = 0.0;
  for (const auto& term : problem_.objective().block_terms()) C_[term.block] += term.coeff;
  for (const auto& [index, value] : problem_.objective().scalar_terms()) {
    const ScalarMap& sm = scalar_map_[index];
    if (sm.kind == ScalarKind::kFree) {
      cf_[sm.index] += value;
    } else {
      cl_[sm.index] += value;
      obj_const_ += value * sm.shift;
    }
  }
  double cnorm2 = cl_.squaredNorm() + cf_.squaredNorm();
  for (const auto& C : C_) cnorm2 += C.squaredNorm();
  obj_scale_ = cnorm2 > 0.0 ? 1.0 / std::sqrt(cnorm2) : 1.0;
  for (auto& C : C_) C *= obj_sign_ * obj_scale_;
  cl_ *= obj_sign_ * obj_scale_;
  cf_ *= obj_sign_ * obj_scale_;

  norm_b_ = b_.norm();
  norm_c_ = std::sqrt(cl_.squaredNorm() + cf_.squaredNorm() +
                      [&] {
                        double s = 0.0;
                        for (const auto& C : C_) s += C.squaredNorm();
                        return s;
                      }());
}

void InteriorPointSolver::Initialize() {
  const std::size_t nb = dims_.size();
  X_.resize(nb);
  Z_.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    const double n = dims_[j];
    double xi = std::max(10.0, std::sqrt(n));
    double eta = std::max({10.0, std::sqrt(n), C_[j].norm()});
    const auto& br = block_rows_[j];
    for (std::size_t t = 0; t < br.rows.size(); ++t) {
      xi = std::max(xi, n * (1.0 + std::abs(b_[br.rows[t]])) / (1.0 + br.coeffs[t].norm));
      eta = std::max(eta, br.coeffs[t].norm);
    }
    X_[j] = xi * RMatrix::Identity(dims_[j], dims_[j]);
    Z_[j] = eta * RMatrix::Identity(dims_[j], dims_[j]);
  }
  double xi = std::max(10.0, std::sqrt(static_cast<double>(std::max(nl_, 1))));
  double eta = std::max(10.0, cl_.size() > 0 ? cl_.cwiseAbs().maxCoeff() : 0.0);
  for (int i = 0; i < m_; ++i) {
    const double rn = al_row_norm_[i];
    xi = std::max(xi, (1.0 + std::abs(b_[i])) / (1.0 + rn));
    eta = std::max(eta, rn);
  }
  x_ = RVector::Constant(nl_, xi);
  z_ = RVector::Constant(nl_, eta);
  w_ = RVector::Zero(nf_);
  y_ = RVector::Zero(m_);
}

void InteriorPointSolver::ComputeResiduals() {
  rp_ = b_ - Al_ * x_ - Af_ * w_;
  Rd_.resize(dims_.size());
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    RMatrix Aty = RMatrix::Zero(dims_[j], dims_[j]);
    const auto& br = block_rows_[j];
    for (std::size_t t = 0; t < br.rows.size(); ++t) {
      rp_[br.rows[t]] -= br.coeffs[t].Dot(X_[j]);
      br.coeffs[t].AddTo(Aty, y_[br.rows[t]]);
    }
    Rd_[j] = C_[j] - Aty - Z_[j];
  }
  rdl_ = cl_ - Al_.transpose() * y_ - z_;
  rdf_ = cf_ - Af_.transpose() * y_;
}

void InteriorPointSolver::PartitionRows() {
  std::vector<int> col_count(nl_, 0);
  std::vector<bool> has_block(m_, false);
  for (const auto& br : block_rows_)
    for (int r : br.rows) has_block[r] = true;
  std::vector<std::vector<std::pair<int, double>>> row_terms(m_);
  for (int c = 0; c < Al_.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(Al_, c); it; ++it) {
      ++col_count[c];
      row_terms[it.row()].emplace_back(c, it.value());
    }
  }
  dense_pos_.assign(m_, -1);
  dense_rows_.clear();
  iso_rows_.clear();
  iso_terms_.clear();
  for (int i = 0; i < m_; ++i) {
    bool iso = !has_block[i] && !row_terms[i].empty();
    for (const auto& [c, v] : row_terms[i]) iso = iso && col_count[c] == 1;
    if (iso) {
      iso_rows_.push_back(i);
      iso_terms_.push_back(row_terms[i]);
    } else {
      dense_pos_[i] = static_cast<int>(dense_rows_.size());
      dense_rows_.push_back(i);
    }
  }
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t q = 0; q < dense_rows_.size(); ++q)
    for (const auto& [c, v] : row_terms[dense_rows_[q]]) t.emplace_back(static_cast<int>(q), c, v);
  Al_dense_.resize(static_cast<int>(dense_rows_.size()), nl_);
  Al_dense_.setFromTriplets(t.begin(), t.end());
}

RVector InteriorPointSolver::ApplyM(const RVector& v) const {
  RVector out(m_);
  if (!dense_rows_.empty()) {
    RVector vd(dense_rows_.size());
    for (std::size_t q = 0; q < dense_rows_.size(); ++q) vd[q] = v[dense_rows_[q]];
    const RVector sd = schur_ * vd;
    for (std::size_t q = 0; q < dense_rows_.size(); ++q) out[dense_rows_[q]] = sd[q];
  }
  for (std::size_t q = 0; q < iso_rows_.size(); ++q) out[iso_rows_[q]] = v[iso_rows_[q]] * iso_diag_[q];
  return out;
}

bool InteriorPointSolver::FactorSchur() {
  const RVector d = x_.array() / z_.array();
  {
    const Eigen::SparseMatrix<double> lp = Al_dense_ * d.asDiagonal() * Al_dense_.transpose();
    schur_ = RMatrix(lp);
  }
  iso_diag_.resize(iso_rows_.size());
  for (std::size_t q = 0; q < iso_rows_.size(); ++q) {
    double v = 0.0;
    for (const auto& [c, a] : iso_terms_[q]) v += a * a * d[c];
    iso_diag_[q] = v;
  }
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    const auto& br = block_rows_[j];
    const std::size_t nr = br.rows.size();
    if (nr == 0) continue;
    const RMatrix& X = X_[j];
    const RMatrix& Zi = Zinv_[j];
    std::vector<RMatrix> G(nr);
    for (std::size_t t = 0; t < nr; ++t) {
      const Coeff& c = br.coeffs[t];
      if (!c.dense) continue;
      G[t].noalias() = X * c.M * Zi;
    }
    for (std::size_t a = 0; a < nr; ++a) {
      const Coeff& ca = br.coeffs[a];
      const int ra = dense_pos_[br.rows[a]];
      for (std::size_t bb = a; bb < nr; ++bb) {
        const Coeff& cb = br.coeffs[bb];
        const int rb = dense_pos_[br.rows[bb]];
        double v = 0.0;
        if (ca.dense) {
          // tr(G_a A_b) with A_b symmetric.
          if (cb.dense) {
            v = G[a].cwiseProduct(cb.M).sum();
          } else {
            for (std::size_t e = 0; e < cb.val.size(); ++e) v += cb.val[e] * G[a](cb.col[e], cb.row[e]);
          }
        } else if (cb.dense) {
          for (std::size_t e = 0; e < ca.val.size(); ++e) v += ca.val[e] * G[bb](ca.col[e], ca.row[e]);
        } else {
          for (std::size_t e = 0; e < ca.val.size(); ++e) {
            for (std::size_t f = 0; f < cb.val.size(); ++f) {
              v += ca.val[e] * cb.val[f] * X(ca.col[e], cb.row[f]) * Zi(cb.col[f], ca.row[e]);
            }
          }
        }
        schur_(ra, rb) += v;
        if (rb != ra) schur_(rb, ra) += v;
      }
    }
  }
  // Guard against loss of definiteness from round-off.
  const double diag_max = schur_.size() > 0 ? schur_.diagonal().cwiseAbs().maxCoeff()
                                            : (iso_diag_.size() > 0 ? iso_diag_.maxCoeff() : 1.0);
  for (auto& v : iso_diag_.array()) v = std::max(v, std::max(diag_max, 1e-300) * 1e-16);
  if (!dense_rows_.empty()) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      schur_ldlt_.compute(schur_);
      if (schur_ldlt_.info() == Eigen::Success && schur_ldlt_.isPositive()) break;
      schur_.diagonal().array() += std::max(diag_max, 1e-300) * std::pow(10.0, -14 + 2 * attempt);
    }
    if (schur_ldlt_.info() != Eigen::Success) return false;
  }
  // Saddle-point system in (y_dense, w) with the diagonal rows eliminated.
  // Factoring it directly is much better conditioned than forming
  // Af' M^-1 Af when M is nearly singular.
  const int md = static_cast<int>(dense_rows_.size());
  RMatrix kkt = RMatrix::Zero(md + nf_, md + nf_);
  kkt.topLeftCorner(md, md) = schur_;
  for (int q = 0; q < md; ++q) kkt.block(q, md, 1, nf_) = Af_.row(dense_rows_[q]);
  kkt.bottomLeftCorner(nf_, md) = kkt.topRightCorner(md, nf_).transpose();
  for (std::size_t q = 0; q < iso_rows_.size() && nf_ > 0; ++q) {
    const RVector a = Af_.row(iso_rows_[q]).transpose();
    if (a.cwiseAbs().maxCoeff() == 0.0) continue;
    kkt.bottomRightCorner(nf_, nf_) -= (a * a.transpose()) / iso_diag_[q];
  }
  if (md + nf_ > 0) kkt_lu_.compute(kkt);
  return true;
}

void InteriorPointSolver::SolveDirection(const std::vector<RMatrix>& RcZinv,
                                         const RVector& rc_l, std::vector<RMatrix>& dX,
                                         std::vector<RMatrix>& dZ, RVector& dx, RVector& dz,
                                         RVector& dw, RVector& dy) {
  const std::size_t nb = dims_.size();
  // h = rp - A(RcZinv - X Rd Zinv) - Al ((rc_l - x o rdl) / z)
  RVector h = rp_;
  const RVector lp_part = (rc_l.array() - x_.array() * rdl_.array()) / z_.array();
  h -= Al_ * lp_part;
  for (std::size_t j = 0; j < nb; ++j) {
    const RMatrix W = RcZinv[j] - X_[j] * Rd_[j] * Zinv_[j];
    const auto& br = block_rows_[j];
    for (std::size_t t = 0; t < br.rows.size(); ++t) h[br.rows[t]] -= br.coeffs[t].Dot(W);
  }
  // Bordered system [M Af; Af' 0] [dy; dw] = [h; rdf], one refinement step.
  auto bordered = [&](const RVector& r1, const RVector& r2, RVector& y, RVector& w) {
    const int md = static_cast<int>(dense_rows_.size());
    RVector rhs(md + nf_);
    for (int q = 0; q < md; ++q) rhs[q] = r1[dense_rows_[q]];
    if (nf_ > 0) rhs.tail(nf_) = r2;
    for (std::size_t q = 0; q < iso_rows_.size(); ++q) {
      if (nf_ > 0) rhs.tail(nf_) -= Af_.row(iso_rows_[q]).transpose() * (r1[iso_rows_[q]] / iso_diag_[q]);
    }
    const RVector sol = md + nf_ > 0 ? RVector(kkt_lu_.solve(rhs)) : RVector(0);
    y.resize(m_);
    for (int q = 0; q < md; ++q) y[dense_rows_[q]] = sol[q];
    w = sol.tail(nf_);
    for (std::size_t q = 0; q < iso_rows_.size(); ++q) {
      const int i = iso_rows_[q];
      double v = r1[i];
      if (nf_ > 0) v -= Af_.row(i).dot(w);
      y[i] = v / iso_diag_[q];
    }
  };
  bordered(h, rdf_, dy, dw);
  {
    RVector r1 = h - ApplyM(dy);
    if (nf_ > 0) r1 -= Af_ * dw;
    const RVector r2 = nf_ > 0 ? RVector(rdf_ - Af_.transpose() * dy) : RVector::Zero(0);
    RVector cy, cw;
    bordered(r1, r2, cy, cw);
    dy += cy;
    if (nf_ > 0) dw += cw;
  }
  dX.resize(nb);
  dZ.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    RMatrix Aty = RMatrix::Zero(dims_[j], dims_[j]);
    const auto& br = block_rows_[j];
    for (std::size_t t = 0; t < br.rows.size(); ++t) br.coeffs[t].AddTo(Aty, dy[br.rows[t]]);
    dZ[j] = Rd_[j] - Aty;
    dX[j] = Sym(RcZinv[j] - X_[j] * dZ[j] * Zinv_[j]);
  }
  dz = rdl_ - Al_.transpose() * dy;
  dx = (rc_l.array() - x_.array() * dz.array()) / z_.array();
}

ConicSolution InteriorPointSolver::Solve() {
  Initialize();
  const std::size_t nb = dims_.size();
  double nu = nl_;
  for (int d : dims_) nu += d;
  nu = std::max(nu, 1.0);

  SolveStatus status = SolveStatus::kFailed;
  int iter = 0;
  int stalls = 0;
  double best_merit = std::numeric_limits<double>::infinity();
  int last_gain = 0;
  struct Snapshot {
    std::vector<RMatrix> X, Z;
    RVector x, z, w, y;
  } best;
  for (; iter <= opt_.max_iterations; ++iter) {
    ComputeResiduals();
    double xz = x_.dot(z_);
    for (std::size_t j = 0; j < nb; ++j) xz += X_[j].cwiseProduct(Z_[j]).sum();
    const double mu = xz / nu;

    double pobj = cl_.dot(x_) + cf_.dot(w_);
    for (std::size_t j = 0; j < nb; ++j) pobj += C_[j].cwiseProduct(X_[j]).sum();
    const double dobj = b_.dot(y_);
    double rd2 = rdl_.squaredNorm() + rdf_.squaredNorm();
    for (const auto& R : Rd_) rd2 += R.squaredNorm();
    const double relp = rp_.norm() / (1.0 + norm_b_);
    const double reld = std::sqrt(rd2) / (1.0 + norm_c_);
    const double relgap =
        std::max(std::abs(xz), std::abs(pobj - dobj)) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (opt_.verbose) {
      std::fprintf(stderr, "ipm %3d pobj %+.6e dobj %+.6e relp %.2e reld %.2e gap %.2e mu %.2e [rdl %.1e rdf %.1e]\n",
                   iter, pobj, dobj, relp, reld, relgap, mu, rdl_.norm(), rdf_.norm());
    }
    if (relp <= opt_.feasibility_tol && reld <= opt_.feasibility_tol && relgap <= opt_.gap_tol) {
      status = SolveStatus::kOptimal;
      break;
    }
    // Farkas-type certificates from the scaled iterate.
    if (dobj > 0.0) {
      double ray2 = 0.0;
      for (std::size_t j = 0; j < nb; ++j) ray2 += (C_[j] - Rd_[j]).squaredNorm();
      ray2 += (cl_ - rdl_).squaredNorm() + (cf_ - rdf_).squaredNorm();
      if (std::sqrt(ray2) / dobj < opt_.infeasibility_tol) {
        status = SolveStatus::kInfeasible;
        break;
      }
    }
    if (pobj < 0.0) {
      if ((b_ - rp_).norm() / (-pobj) < opt_.infeasibility_tol) {
        status = SolveStatus::kFailed;  // dual infeasible: primal unbounded
        break;
      }
    }
    if (iter == opt_.max_iterations) break;

    const double merit = std::max({relp, reld, relgap});
    if (merit < best_merit) {
      if (merit < 0.5 * best_merit) last_gain = iter;
      best_merit = merit;
      best = {X_, Z_, x_, z_, w_, y_};
    }
    // Round-off floor: no real progress for a while near the tolerance.
    if (best_merit < 1e-6 && iter - last_gain >= 6) break;

    bool ok = true;
    cholX_.resize(nb);
    cholZ_.resize(nb);
    Zinv_.resize(nb);
    for (std::size_t j = 0; j < nb && ok; ++j) {
      cholX_[j].compute(X_[j]);
      cholZ_[j].compute(Z_[j]);
      if (cholX_[j].info() != Eigen::Success || cholZ_[j].info() != Eigen::Success) {
        ok = false;
        break;
      }
      Zinv_[j] = cholZ_[j].solve(RMatrix::Identity(dims_[j], dims_[j]));
      Zinv_[j] = Sym(Zinv_[j]);
    }
    if (!ok || !FactorSchur()) break;

    // Predictor.
    std::vector<RMatrix> RcZinv(nb);
    for (std::size_t j = 0; j < nb; ++j) RcZinv[j] = -X_[j];
    RVector rc_l = -(x_.array() * z_.array()).matrix();
    std::vector<RMatrix> dXa, dZa;
    RVector dxa, dza, dwa, dya;
    SolveDirection(RcZinv, rc_l, dXa, dZa, dxa, dza, dwa, dya);

    auto step_lengths = [&](const std::vector<RMatrix>& dX, const std::vector<RMatrix>& dZ,
                            const RVector& dx, const RVector& dz) {
      double ap = MaxStepLp(x_, dx);
      double ad = MaxStepLp(z_, dz);
      for (std::size_t j = 0; j < nb; ++j) {
        ap = std::min(ap, MaxStepPsd(cholX_[j], dX[j]));
        ad = std::min(ad, MaxStepPsd(cholZ_[j], dZ[j]));
      }
      return std::pair<double, double>{ap, ad};
    };

    auto [apa, ada] = step_lengths(dXa, dZa, dxa, dza);
    apa = std::min(1.0, apa);
    ada = std::min(1.0, ada);
    double xz_aff = (x_ + apa * dxa).dot(z_ + ada * dza);
    for (std::size_t j = 0; j < nb; ++j) {
      xz_aff += (X_[j] + apa * dXa[j]).cwiseProduct(Z_[j] + ada * dZa[j]).sum();
    }
    const double mu_aff = std::max(xz_aff, 0.0) / nu;
    double sigma = std::pow(std::min(1.0, mu_aff / mu), 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    for (std::size_t j = 0; j < nb; ++j) {
      RcZinv[j] = sigma * mu * Zinv_[j] - X_[j] - dXa[j] * dZa[j] * Zinv_[j];
    }
    rc_l = (sigma * mu - x_.array() * z_.array() - dxa.array() * dza.array()).matrix();
    std::vector<RMatrix> dX, dZ;
    RVector dx, dz, dw, dy;
    SolveDirection(RcZinv, rc_l, dX, dZ, dx, dz, dw, dy);

    auto [ap, ad] = step_lengths(dX, dZ, dx, dz);
    const double gamma = std::min(0.995, 0.9 + 0.09 * std::min({ap, ad, 1.0}));
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (!std::isfinite(ap) || !std::isfinite(ad)) break;

    for (std::size_t j = 0; j < nb; ++j) {
      X_[j] += ap * dX[j];
      Z_[j] += ad * dZ[j];
    }
    x_ += ap * dx;
    w_ += ap * dw;
    z_ += ad * dz;
    y_ += ad * dy;

    stalls = (ap < 1e-8 && ad < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 3) break;
  }

  if (status == SolveStatus::kFailed) {
    // Not converged to full accuracy; classify by how close the best iterate is.
    if (std::isfinite(best_merit)) {
      X_ = best.X;
      Z_ = best.Z;
      x_ = best.x;
      z_ = best.z;
      w_ = best.w;
      y_ = best.y;
    }
    ComputeResiduals();
    double xz = x_.dot(z_);
    double pobj = cl_.dot(x_) + cf_.dot(w_);
    for (std::size_t j = 0; j < nb; ++j) {
      xz += X_[j].cwiseProduct(Z_[j]).sum();
      pobj += C_[j].cwiseProduct(X_[j]).sum();
    }
    const double dobj = b_.dot(y_);
    double rd2 = rdl_.squaredNorm() + rdf_.squaredNorm();
    for (const auto& R : Rd_) rd2 += R.squaredNorm();
    const double relp = rp_.norm() / (1.0 + norm_b_);
    const double reld = std::sqrt(rd2) / (1.0 + norm_c_);
    const double relgap =
        std::max(std::abs(xz), std::abs(pobj - dobj)) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (relp <= 1e-6 && reld <= 1e-6 && relgap <= 1e-6) status = SolveStatus::kInaccurate;
  }
  return Extract(status, iter);
}

ConicSolution InteriorPointSolver::Extract(SolveStatus status, int iterations) const {
  ConicSolution sol;
  sol.status = status;
  sol.iterations = iterations;
  sol.blocks = X_;
  sol.scalars.resize(static_cast<Eigen::Index>(scalar_map_.size()));
  for (std::size_t s = 0; s < scalar_map_.size(); ++s) {
    const ScalarMap& sm = scalar_map_[s];
    sol.scalars[s] = sm.kind == ScalarKind::kFree ? w_[sm.index] : x_[sm.index] + sm.shift;
  }
  sol.objective = Evaluate(problem_.objective(), sol);

  sol.min_block_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& X : sol.blocks) {
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(X, Eigen::EigenvaluesOnly);
    sol.min_block_eigenvalue = std::min(sol.min_block_eigenvalue, eig.eigenvalues()(0));
  }
  if (sol.blocks.empty()) sol.min_block_eigenvalue = 0.0;

  double worst = 0.0;
  for (std::size_t i = 0; i < problem_.constraints().size(); ++i) {
    const auto& con = problem_.constraints()[i];
    const double lhs = Evaluate(con.expr, sol);
    double violation = 0.0;
    switch (con.relation) {
      case Relation::kLessEqual: violation = std::max(0.0, lhs - con.rhs); break;
      case Relation::kEqual: violation = std::abs(lhs - con.rhs); break;
      case Relation::kGreaterEqual: violation = std::max(0.0, con.rhs - lhs); break;
    }
    worst = std::max(worst, violation * std::min(1.0, row_scale_[i]));
  }
  sol.max_constraint_residual = worst;

  double xz = x_.dot(z_);
  double pobj = cl_.dot(x_) + cf_.dot(w_);
  for (std::size_t j = 0; j < X_.size(); ++j) {
    xz += X_[j].cwiseProduct(Z_[j]).sum();
    pobj += C_[j].cwiseProduct(X_[j]).sum();
  }
  const double dobj = b_.dot(y_);
  sol.relative_gap =
      std::max(std::abs(xz), std::abs(pobj - dobj)) / (1.0 + std::abs(pobj) + std::abs(dobj));

  if (sol.status == SolveStatus::kOptimal &&
      (sol.max_constraint_residual > opt_.contract_residual_tol ||
       sol.min_block_eigenvalue < -opt_.contract_psd_tol)) {
    sol.status = SolveStatus::kInaccurate;
  }
  return sol;
}

}  // namespace

ConicSolution SolveConic(const ConicProblem& problem, const SolverOptions& options) {
  InteriorPointSolver solver(problem, options);
  return solver.Solve();
}

}  // namespace starris
