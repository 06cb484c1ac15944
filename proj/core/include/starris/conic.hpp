#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "starris/types.hpp"

namespace starris {

// Complex Hermitian A (n x n) -> real symmetric [[Re A, -Im A], [Im A, Re A]].
// trace(Embed(A) Embed(B)) = 2 Re trace(A B), and Embed(A) is PSD iff A is.
RMatrix EmbedHermitian(const CMatrix& A, double hermitian_tol = 1e-12);

// Inverse of EmbedHermitian that first projects a general symmetric 2n x 2n
// matrix onto the embedded structure (the projection preserves PSD-ness).
CMatrix ExtractHermitian(const RMatrix& Y);

enum class Relation { kLessEqual, kEqual, kGreaterEqual };
enum class Sense { kMinimize, kMaximize };

struct BlockId {
  int index = -1;
};
struct ScalarId {
  int index = -1;
};

// Linear functional over PSD blocks and scalars: sum <C_b, X_b> + sum a_s x_s.
class LinearExpr {
 public:
  struct BlockTerm {
    int block;
    RMatrix coeff;  // symmetric
  };

  LinearExpr& AddBlock(BlockId block, const RMatrix& coeff);
  // Adds the functional X -> Re trace(A X) for a Hermitian block declared with
  // AddHermitianBlock. The embedding's factor of 2 is absorbed here.
  LinearExpr& AddHermitian(BlockId block, const CMatrix& A);
  LinearExpr& AddScalar(ScalarId scalar, double coeff);

  const std::vector<BlockTerm>& block_terms() const { return blocks_; }
  const std::vector<std::pair<int, double>>& scalar_terms() const { return scalars_; }

 private:
  std::vector<BlockTerm> blocks_;
  std::vector<std::pair<int, double>> scalars_;
};

struct LinearConstraint {
  LinearExpr expr;
  Relation relation = Relation::kEqual;
  double rhs = 0.0;
  std::string label;
};

class ConicProblem {
 public:
  struct Block {
    std::string name;
    int dim;           // real dimension
    bool hermitian;    // dim = 2 * complex dimension
  };
  struct Scalar {
    std::string name;
    double lower_bound;  // -inf for free scalars
  };

  BlockId AddPsdBlock(std::string name, int dim);
  // Complex Hermitian PSD variable of size n, stored as a 2n real block.
  BlockId AddHermitianBlock(std::string name, int n);
  ScalarId AddScalar(std::string name,
                     double lower_bound = -std::numeric_limits<double>::infinity());
  int AddConstraint(LinearExpr expr, Relation relation, double rhs, std::string label = {});
  void SetObjective(LinearExpr expr, Sense sense);

  // Throws ContractError on undeclared references or malformed coefficients.
  void Validate() const;

  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Scalar>& scalars() const { return scalars_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  const LinearExpr& objective() const { return objective_; }
  Sense sense() const { return sense_; }

 private:
  std::vector<Block> blocks_;
  std::vector<Scalar> scalars_;
  std::vector<LinearConstraint> constraints_;
  LinearExpr objective_;
  Sense sense_ = Sense::kMinimize;
};

enum class SolveStatus { kOptimal, kInfeasible, kInaccurate, kFailed };

const char* ToString(SolveStatus status);

struct ConicSolution {
  SolveStatus status = SolveStatus::kFailed;
  std::vector<RMatrix> blocks;
  RVector scalars;
  double objective = 0.0;
  int iterations = 0;
  // Largest violation over all constraints, each row scaled by
  // max(1, ||row coefficients||).
  double max_constraint_residual = 0.0;
  double min_block_eigenvalue = 0.0;
  double relative_gap = 0.0;

  double Scalar(ScalarId id) const { return scalars[id.index]; }
  const RMatrix& Block(BlockId id) const { return blocks[id.index]; }
  CMatrix Hermitian(BlockId id) const { return ExtractHermitian(blocks[id.index]); }
};

struct SolverOptions {
  int max_iterations = 200;
  double feasibility_tol = 1e-8;   // internal relative primal/dual residual
  double gap_tol = 1e-8;           // internal relative duality gap
  double contract_residual_tol = 1e-6;
  double contract_psd_tol = 1e-7;
  double infeasibility_tol = 1e-8;
  bool verbose = false;
};

double Evaluate(const LinearExpr& expr, const ConicSolution& solution);

// Primal-dual interior-point method (HKM direction, Mehrotra
// predictor-corrector) on the standard form built from the problem.
ConicSolution SolveConic(const ConicProblem& problem, const SolverOptions& options = {});

// Debug dump, one nonzero per line:
//   block <index> <name> <dim> | scalar <index> <name> <lower>
//   obj block <b> <i> <j> <v> | obj scalar <s> <v>
//   con <c> <rel> <rhs> | a <c> block <b> <i> <j> <v> | a <c> scalar <s> <v>
// Only the upper triangle (i <= j) of symmetric coefficients is listed.
void WriteProblemDump(std::ostream& out, const ConicProblem& problem);

}  // namespace starris
