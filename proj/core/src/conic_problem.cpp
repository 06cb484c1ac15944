#include <cmath>
#include <cstdio>
#include <ostream>

#include "starris/conic.hpp"

namespace starris {

RMatrix EmbedHermitian(const CMatrix& A, double hermitian_tol) {
  if (A.rows() != A.cols()) throw ContractError("EmbedHermitian: matrix must be square");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.adjoint()).cwiseAbs().maxCoeff() > hermitian_tol * scale) {
    throw ContractError("EmbedHermitian: matrix is not Hermitian");
  }
  const Eigen::Index n = A.rows();
  RMatrix Y(2 * n, 2 * n);
  Y.topLeftCorner(n, n) = A.real();
  Y.topRightCorner(n, n) = -A.imag();
  Y.bottomLeftCorner(n, n) = A.imag();
  Y.bottomRightCorner(n, n) = A.real();
  return 0.5 * (Y + Y.transpose());
}

CMatrix ExtractHermitian(const RMatrix& Y) {
  if (Y.rows() != Y.cols() || Y.rows() % 2 != 0) {
    throw ContractError("ExtractHermitian: need an even-sized square matrix");
  }
  const Eigen::Index n = Y.rows() / 2;
  const RMatrix re = 0.5 * (Y.topLeftCorner(n, n) + Y.bottomRightCorner(n, n));
  const RMatrix im = 0.5 * (Y.bottomLeftCorner(n, n) - Y.topRightCorner(n, n));
  CMatrix X(n, n);
  X.real() = 0.5 * (re + re.transpose());
  X.imag() = 0.5 * (im - im.transpose());
  return X;
}

LinearExpr& LinearExpr::AddBlock(BlockId block, const RMatrix& coeff) {
  for (auto& term : blocks_) {
    if (term.block == block.index && term.coeff.rows() == coeff.rows()) {
      term.coeff += coeff;
      return *this;
    }
  }
  blocks_.push_back({block.index, coeff});
  return *this;
}

LinearExpr& LinearExpr::AddHermitian(BlockId block, const CMatrix& A) {
  return AddBlock(block, 0.5 * EmbedHermitian(A, 1e-9));
}

LinearExpr& LinearExpr::AddScalar(ScalarId scalar, double coeff) {
  for (auto& [index, value] : scalars_) {
    if (index == scalar.index) {
      value += coeff;
      return *this;
    }
  }
  scalars_.emplace_back(scalar.index, coeff);
  return *this;
}

BlockId ConicProblem::AddPsdBlock(std::string name, int dim) {
  if (dim < 1) throw ContractError("AddPsdBlock: dimension must be >= 1");
  blocks_.push_back({std::move(name), dim, false});
  return BlockId{static_cast<int>(blocks_.size()) - 1};
}

BlockId ConicProblem::AddHermitianBlock(std::string name, int n) {
  if (n < 1) throw ContractError("AddHermitianBlock: dimension must be >= 1");
  blocks_.push_back({std::move(name), 2 * n, true});
  return BlockId{static_cast<int>(blocks_.size()) - 1};
}

ScalarId ConicProblem::AddScalar(std::string name, double lower_bound) {
  if (std::isnan(lower_bound) || lower_bound == std::numeric_limits<double>::infinity()) {
    throw ContractError("AddScalar: lower bound must be finite or -inf");
  }
  scalars_.push_back({std::move(name), lower_bound});
  return ScalarId{static_cast<int>(scalars_.size()) - 1};
}

int ConicProblem::AddConstraint(LinearExpr expr, Relation relation, double rhs, std::string label) {
  constraints_.push_back({std::move(expr), relation, rhs, std::move(label)});
  return static_cast<int>(constraints_.size()) - 1;
}

void ConicProblem::SetObjective(LinearExpr expr, Sense sense) {
  objective_ = std::move(expr);
  sense_ = sense;
}

namespace {

void ValidateExpr(const ConicProblem& p, const LinearExpr& e, const std::string& where) {
  for (const auto& term : e.block_terms()) {
    if (term.block < 0 || term.block >= static_cast<int>(p.blocks().size())) {
      throw ContractError(where + ": undeclared block");
    }
    const int dim = p.blocks()[term.block].dim;
    if (term.coeff.rows() != dim || term.coeff.cols() != dim) {
      throw ContractError(where + ": coefficient size does not match block '" +
                          p.blocks()[term.block].name + "'");
    }
    const double scale = std::max(1.0, term.coeff.cwiseAbs().maxCoeff());
    if ((term.coeff - term.coeff.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw ContractError(where + ": block coefficient is not symmetric");
    }
    if (!term.coeff.allFinite()) throw ContractError(where + ": non-finite coefficient");
  }
  for (const auto& [index, value] : e.scalar_terms()) {
    if (index < 0 || index >= static_cast<int>(p.scalars().size())) {
      throw ContractError(where + ": undeclared scalar");
    }
    if (!std::isfinite(value)) throw ContractError(where + ": non-finite coefficient");
  }
}

}  // namespace

void ConicProblem::Validate() const {
  ValidateExpr(*this, objective_, "objective");
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    const std::string where = "constraint " + std::to_string(i) +
                              (c.label.empty() ? std::string() : " (" + c.label + ")");
    ValidateExpr(*this, c.expr, where);
    if (!std::isfinite(c.rhs)) throw ContractError(where + ": non-finite rhs");
  }
}

const char* ToString(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kInaccurate: return "inaccurate";
    case SolveStatus::kFailed: return "failed";
  }
  return "unknown";
}

double Evaluate(const LinearExpr& expr, const ConicSolution& solution) {
  double value = 0.0;
  for (const auto& term : expr.block_terms()) {
    value += term.coeff.cwiseProduct(solution.blocks[term.block]).sum();
  }
  for (const auto& [index, coeff] : expr.scalar_terms()) value += coeff * solution.scalars[index];
  return value;
}

void WriteProblemDump(std::ostream& out, const ConicProblem& problem) {
  auto write_terms = [&out](const std::string& prefix, const LinearExpr& e) {
    char buf[160];
    for (const auto& term : e.block_terms()) {
      for (Eigen::Index i = 0; i < term.coeff.rows(); ++i) {
        for (Eigen::Index j = i; j < term.coeff.cols(); ++j) {
          if (term.coeff(i, j) == 0.0) continue;
          std::snprintf(buf, sizeof(buf), "%s block %d %ld %ld %.17g\n", prefix.c_str(),
                        term.block, static_cast<long>(i), static_cast<long>(j), term.coeff(i, j));
          out << buf;
        }
      }
    }
    for (const auto& [index, value] : e.scalar_terms()) {
      std::snprintf(buf, sizeof(buf), "%s scalar %d %.17g\n", prefix.c_str(), index, value);
      out << buf;
    }
  };
  for (std::size_t b = 0; b < problem.blocks().size(); ++b) {
    out << "block " << b << ' ' << problem.blocks()[b].name << ' ' << problem.blocks()[b].dim
        << '\n';
  }
  for (std::size_t s = 0; s < problem.scalars().size(); ++s) {
    out << "scalar " << s << ' ' << problem.scalars()[s].name << ' '
        << problem.scalars()[s].lower_bound << '\n';
  }
  out << "sense " << (problem.sense() == Sense::kMinimize ? "min" : "max") << '\n';
  write_terms("obj", problem.objective());
  for (std::size_t c = 0; c < problem.constraints().size(); ++c) {
    const auto& con = problem.constraints()[c];
    const char* rel = con.relation == Relation::kLessEqual   ? "<="
                      : con.relation == Relation::kEqual     ? "="
                                                             : ">=";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "con %zu %s %.17g\n", c, rel, con.rhs);
    out << buf;
    write_terms("a " + std::to_string(c), con.expr);
  }
}

}  // namespace starris
