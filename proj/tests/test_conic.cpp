#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "starris/conic.hpp"
#include "test_helpers.hpp"

using namespace starris;
using starris::testing::RandomHermitian;
using starris::testing::RandomSymmetric;

namespace {

void CheckContract(const ConicSolution& sol) {
  CHECK(sol.max_constraint_residual <= 1e-6);
  CHECK(sol.min_block_eigenvalue >= -1e-7);
}

}  // namespace

TEST_CASE("embedding of the identity is the identity") {
  const RMatrix Y = EmbedHermitian(CMatrix::Identity(2, 2));
  CHECK((Y - RMatrix::Identity(4, 4)).norm() == doctest::Approx(0.0));
}

TEST_CASE("embedding doubles the spectrum of a Pauli-like matrix") {
  CMatrix A(2, 2);
  A << 0.0, Complex(0, -1), Complex(0, 1), 0.0;
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(EmbedHermitian(A));
  const RVector ev = eig.eigenvalues();
  CHECK(ev[0] == doctest::Approx(-1.0));
  CHECK(ev[1] == doctest::Approx(-1.0));
  CHECK(ev[2] == doctest::Approx(1.0));
  CHECK(ev[3] == doctest::Approx(1.0));
}

TEST_CASE("embedding eigenvalues repeat the Hermitian spectrum twice") {
  GaussianStream rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix A = RandomHermitian(rng, 3);
    Eigen::SelfAdjointEigenSolver<CMatrix> ceig(A);
    Eigen::SelfAdjointEigenSolver<RMatrix> reig(EmbedHermitian(A));
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(reig.eigenvalues()[2 * i] - ceig.eigenvalues()[i]) < 1e-10);
      CHECK(std::abs(reig.eigenvalues()[2 * i + 1] - ceig.eigenvalues()[i]) < 1e-10);
    }
  }
}

TEST_CASE("embedding preserves the trace inner product up to a factor of two") {
  GaussianStream rng(12);
  const CMatrix A = RandomHermitian(rng, 4);
  const CMatrix B = RandomHermitian(rng, 4);
  const double lhs = (EmbedHermitian(A) * EmbedHermitian(B)).trace();
  CHECK(lhs == doctest::Approx(2.0 * (A * B).trace().real()).epsilon(1e-12));
  CHECK((ExtractHermitian(EmbedHermitian(A)) - A).norm() < 1e-14);
}

TEST_CASE("embedding rejects non-Hermitian input") {
  CMatrix A = CMatrix::Zero(2, 2);
  A(0, 1) = 1.0;
  CHECK_THROWS_AS(EmbedHermitian(A), ContractError);
}

TEST_CASE("scalar LP: min t s.t. t >= 3") {
  ConicProblem p;
  const ScalarId t = p.AddScalar("t");
  p.AddConstraint(LinearExpr().AddScalar(t, 1.0), Relation::kGreaterEqual, 3.0);
  p.SetObjective(LinearExpr().AddScalar(t, 1.0), Sense::kMinimize);
  const ConicSolution sol = SolveConic(p);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.Scalar(t) == doctest::Approx(3.0).epsilon(1e-7));
  CheckContract(sol);
}

TEST_CASE("budget-saturating PSD: max trace X s.t. trace X <= 5") {
  ConicProblem p;
  const BlockId X = p.AddPsdBlock("X", 2);
  p.AddConstraint(LinearExpr().AddBlock(X, RMatrix::Identity(2, 2)), Relation::kLessEqual, 5.0);
  p.SetObjective(LinearExpr().AddBlock(X, RMatrix::Identity(2, 2)), Sense::kMaximize);
  const ConicSolution sol = SolveConic(p);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-6));
  CheckContract(sol);
}

TEST_CASE("max <C, X> over the spectraplex equals the top eigenvalue") {
  GaussianStream rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const RMatrix C = RandomSymmetric(rng, 3);
    ConicProblem p;
    const BlockId X = p.AddPsdBlock("X", 3);
    p.AddConstraint(LinearExpr().AddBlock(X, RMatrix::Identity(3, 3)), Relation::kEqual, 1.0);
    p.SetObjective(LinearExpr().AddBlock(X, C), Sense::kMaximize);
    const ConicSolution sol = SolveConic(p);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(C);
    const double top = eig.eigenvalues()(2);
    CHECK(std::abs(sol.objective - top) <= 1e-6 * std::max(1.0, std::abs(top)));
    CheckContract(sol);
  }
}

TEST_CASE("Hermitian block: max Re tr(A X), tr X = 1 gives the complex top eigenvalue") {
  GaussianStream rng(22);
  const CMatrix A = RandomHermitian(rng, 3);
  ConicProblem p;
  const BlockId X = p.AddHermitianBlock("X", 3);
  p.AddConstraint(LinearExpr().AddHermitian(X, CMatrix::Identity(3, 3)), Relation::kEqual, 1.0);
  p.SetObjective(LinearExpr().AddHermitian(X, A), Sense::kMaximize);
  const ConicSolution sol = SolveConic(p);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(A);
  CHECK(sol.objective == doctest::Approx(eig.eigenvalues()(2)).epsilon(1e-6));
  const CMatrix Xh = sol.Hermitian(X);
  CHECK(Xh.trace().real() == doctest::Approx(1.0).epsilon(1e-7));
  CHECK((A * Xh).trace().real() == doctest::Approx(sol.objective).epsilon(1e-7));
}

TEST_CASE("free scalars and mixed cones") {
  // max mu s.t. mu <= x11 - 1, mu <= 2 - x22, tr X <= 4, X PSD (2x2).
  ConicProblem p;
  const BlockId X = p.AddPsdBlock("X", 2);
  const ScalarId mu = p.AddScalar("mu");
  RMatrix e11 = RMatrix::Zero(2, 2), e22 = RMatrix::Zero(2, 2);
  e11(0, 0) = 1.0;
  e22(1, 1) = 1.0;
  p.AddConstraint(LinearExpr().AddScalar(mu, 1.0).AddBlock(X, -e11), Relation::kLessEqual, -1.0);
  p.AddConstraint(LinearExpr().AddScalar(mu, 1.0).AddBlock(X, e22), Relation::kLessEqual, 2.0);
  p.AddConstraint(LinearExpr().AddBlock(X, RMatrix::Identity(2, 2)), Relation::kLessEqual, 4.0);
  p.SetObjective(LinearExpr().AddScalar(mu, 1.0), Sense::kMaximize);
  const ConicSolution sol = SolveConic(p);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  // Put everything on x11: mu = min(x11 - 1, 2) with x11 <= 4 -> 2.
  CHECK(sol.Scalar(mu) == doctest::Approx(2.0).epsilon(1e-6));
  CheckContract(sol);
}

TEST_CASE("bounded scalars are shifted correctly") {
  ConicProblem p;
  const ScalarId s = p.AddScalar("s", -2.5);
  p.SetObjective(LinearExpr().AddScalar(s, 1.0), Sense::kMinimize);
  p.AddConstraint(LinearExpr().AddScalar(s, 1.0), Relation::kLessEqual, 10.0);
  const ConicSolution sol = SolveConic(p);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.Scalar(s) == doctest::Approx(-2.5).epsilon(1e-6));
}

TEST_CASE("infeasible problems are reported as infeasible") {
  SUBCASE("negative trace of a PSD block") {
    ConicProblem p;
    const BlockId X = p.AddPsdBlock("X", 2);
    p.AddConstraint(LinearExpr().AddBlock(X, RMatrix::Identity(2, 2)), Relation::kEqual, -1.0);
    p.SetObjective(LinearExpr().AddBlock(X, RMatrix::Identity(2, 2)), Sense::kMinimize);
    CHECK(SolveConic(p).status == SolveStatus::kInfeasible);
  }
  SUBCASE("contradictory scalar bounds") {
    ConicProblem p;
    const ScalarId t = p.AddScalar("t");
    p.AddConstraint(LinearExpr().AddScalar(t, 1.0), Relation::kGreaterEqual, 1.0);
    p.AddConstraint(LinearExpr().AddScalar(t, 1.0), Relation::kLessEqual, 0.0);
    p.SetObjective(LinearExpr().AddScalar(t, 1.0), Sense::kMaximize);
    CHECK(SolveConic(p).status == SolveStatus::kInfeasible);
  }
}

TEST_CASE("solves are deterministic") {
  GaussianStream rng(33);
  const RMatrix C = RandomSymmetric(rng, 4);
  ConicProblem p;
  const BlockId X = p.AddPsdBlock("X", 4);
  p.AddConstraint(LinearExpr().AddBlock(X, RMatrix::Identity(4, 4)), Relation::kEqual, 1.0);
  p.SetObjective(LinearExpr().AddBlock(X, C), Sense::kMinimize);
  const ConicSolution a = SolveConic(p);
  const ConicSolution b = SolveConic(p);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
  CHECK((a.blocks[0] - b.blocks[0]).norm() == 0.0);
}

TEST_CASE("validation catches malformed problems") {
  ConicProblem p;
  const BlockId X = p.AddPsdBlock("X", 2);
  RMatrix bad = RMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  p.AddConstraint(LinearExpr().AddBlock(X, bad), Relation::kEqual, 1.0);
  CHECK_THROWS_AS(p.Validate(), ContractError);

  ConicProblem q;
  q.AddConstraint(LinearExpr().AddScalar(ScalarId{3}, 1.0), Relation::kEqual, 1.0);
  CHECK_THROWS_AS(q.Validate(), ContractError);
}

TEST_CASE("problem dump lists every nonzero once") {
  ConicProblem p;
  const BlockId X = p.AddPsdBlock("X", 2);
  const ScalarId t = p.AddScalar("t", 0.0);
  p.AddConstraint(LinearExpr().AddBlock(X, RMatrix::Identity(2, 2)).AddScalar(t, 2.0),
                  Relation::kLessEqual, 1.0, "budget");
  p.SetObjective(LinearExpr().AddScalar(t, 1.0), Sense::kMaximize);
  std::ostringstream out;
  WriteProblemDump(out, p);
  const std::string dump = out.str();
  CHECK(dump.find("a 0 block 0 0 0 1\n") != std::string::npos);
  CHECK(dump.find("a 0 block 0 1 1 1\n") != std::string::npos);
  CHECK(dump.find("a 0 scalar 0 2\n") != std::string::npos);
  CHECK(dump.find("con 0 <= 1\n") != std::string::npos);
  CHECK(std::count(dump.begin(), dump.end(), '\n') == 8);
}
