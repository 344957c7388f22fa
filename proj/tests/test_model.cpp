#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hsco/model.hpp"
#include "support/oracles.hpp"

using namespace hsco;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ConstraintMatrix dense(std::initializer_list<std::initializer_list<double>> rows) {
  DenseMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return ConstraintMatrix(m);
}

}  // namespace

TEST(SvmObjective, ValueGradientHessian) {
  const SvmObjective f(2, 1.0);
  const Evaluation e = evaluate(f, vec({1, 2}));
  EXPECT_EQ(e.value, 5.0);
  EXPECT_EQ(e.gradient, vec({2, 4}));
  ASSERT_TRUE(e.diagonal);
  EXPECT_EQ(e.hessian_diagonal, vec({2, 2}));
  EXPECT_EQ(f.hessian(vec({1, 2})), 2.0 * DenseMatrix::Identity(2, 2));
}

TEST(SvmObjective, SmallestEigenvalue) {
  for (double d : {1e-4, 0.5, 1.0, 3.0}) {
    const SvmObjective f(4, d);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(f.hessian(Vector::Zero(4)));
    EXPECT_DOUBLE_EQ(es.eigenvalues().minCoeff(), 2.0 * std::min(1.0, d * d));
  }
  EXPECT_THROW(SvmObjective(3, 0.0), Error);
}

TEST(SmoothedLq, AtOrigin) {
  const Index n = 4;
  const double q = 0.9, eps = 0.25, eta = 0.07;
  const SmoothedLqObjective f(n, q, eps, eta);
  const Vector x = Vector::Zero(n);
  EXPECT_NEAR(f.value(x), n * std::pow(eps, q / 2), 1e-15);
  EXPECT_EQ(f.gradient(x), Vector::Zero(n));
  const Vector h = f.hessian_diagonal(x);
  for (Index i = 0; i < n; ++i) EXPECT_NEAR(h(i), q * std::pow(eps, q / 2 - 1) + 2 * eta, 1e-13);
}

TEST(SmoothedLq, ScalarCaseAgainstFiniteDifferences) {
  const SmoothedLqObjective f(1, 0.9, 1.0, 0.0);
  const Vector x = vec({1.0});
  EXPECT_NEAR(f.value(x), std::pow(2.0, 0.45), 1e-15);
  EXPECT_NEAR(f.gradient(x)(0), 0.9 * std::pow(2.0, -0.55), 1e-15);
  const Vector fd = oracle::fd_gradient([&](const Vector& v) { return f.value(v); }, x, 1e-7);
  EXPECT_NEAR(fd(0), f.gradient(x)(0), 1e-7);
}

TEST(SmoothedLq, Rejects) {
  EXPECT_THROW(SmoothedLqObjective(3, 1.0, 0.1, 0.0), Error);
  EXPECT_THROW(SmoothedLqObjective(3, 0.5, 0.0, 0.0), Error);
  EXPECT_THROW(SmoothedLqObjective(3, 0.5, 0.1, -1.0), Error);
}

TEST(Objectives, GradientAndHessianConsistency) {
  std::mt19937_64 rng(13);
  const Index n = 6;
  const SmoothedLqObjective lq(n, 0.9, 1.0 / n, 0.07);
  const SvmObjective svm(n, 1e-2);
  DenseMatrix q = oracle::random_spd(rng, n);
  const QuadraticObjective quad(q, oracle::random_vector(rng, n));
  const Objective* fs[] = {&lq, &svm, &quad};
  for (const Objective* f : fs) {
    for (int t = 0; t < 100; ++t) {
      const Vector x = oracle::random_vector(rng, n);
      const double h = 1e-6 * (1 + x.norm());
      const Vector g = f->gradient(x);
      const Vector fd = oracle::fd_gradient([&](const Vector& v) { return f->value(v); }, x, h);
      EXPECT_LE((fd - g).norm(), 1e-5 * std::max(1.0, g.norm()));
      const DenseMatrix hfd = oracle::fd_jacobian([&](const Vector& v) { return f->gradient(v); }, x, h);
      const DenseMatrix hess = f->hessian(x);
      EXPECT_LE((hfd - hess).norm(), 1e-4 * std::max(1.0, hess.norm()));
      if (f->hessian_is_diagonal()) {
        EXPECT_LE((hfd.diagonal() - f->hessian_diagonal(x)).norm(), 1e-4 * std::max(1.0, hess.norm()));
      }
      EXPECT_TRUE(linalg::is_symmetric(hess));
    }
  }
}

TEST(SmoothedLq, EvenInEachCoordinate) {
  std::mt19937_64 rng(19);
  const SmoothedLqObjective f(5, 0.9, 0.2, 0.07);
  for (int t = 0; t < 50; ++t) {
    const Vector x = oracle::random_vector(rng, 5);
    Vector flipped = x;
    for (Index i = 0; i < 5; ++i)
      if (rng() % 2) flipped(i) = -flipped(i);
    EXPECT_EQ(f.value(x), f.value(flipped));
  }
}

TEST(SmoothedLq, MajorantBoundsTheObjective) {
  std::mt19937_64 rng(21);
  const SmoothedLqObjective f(5, 0.9, 0.2, 0.07);
  for (int t = 0; t < 200; ++t) {
    const Vector x = oracle::random_vector(rng, 5);
    const Vector y = oracle::random_vector(rng, 5);
    const Vector d = f.curvature_majorant(x);
    const Vector dx = y - x;
    const double bound = f.value(x) + f.gradient(x).dot(dx) + 0.5 * dx.dot(d.cwiseProduct(dx));
    EXPECT_LE(f.value(y), bound + 1e-12);
  }
}

TEST(Objectives, DimensionMismatch) {
  const SvmObjective f(3, 1.0);
  try {
    f.value(vec({1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(BuildSvm, SignFlip) {
  const Problem p = build_svm_problem(dense({{2, 1}}), vec({1}), 1);
  EXPECT_EQ(p.A.to_dense(), (DenseMatrix(1, 2) << -2, -1).finished());
  EXPECT_EQ(p.b, vec({-1}));
  EXPECT_EQ(p.s(), 1);
}

TEST(BuildSvm, BadLabel) {
  try {
    build_svm_problem(dense({{2, 1}, {1, 1}}), vec({1, 0}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadLabel);
  }
}

TEST(BuildSvm, MissingBiasColumn) {
  try {
    build_svm_problem(dense({{2, 3}}), vec({1}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingBiasColumn);
  }
  DenseMatrix a(2, 2);
  a << 0.5, 1, -0.5, 0;
  EXPECT_THROW(build_svm_problem(ConstraintMatrix(SparseMatrix(a.sparseView())), vec({1, -1}), 1), Error);
}

TEST(BuildSvm, SeparablePairHasNoViolations) {
  const Problem p = build_svm_problem(dense({{1, 1}, {-1, 1}}), vec({1, -1}), 1);
  const Vector y = p.A.times(vec({1, 0})) - p.b;
  // c_i <a_i, x> = 1 for both samples, so Ax - b = 0 exactly
  EXPECT_EQ((y.array() > 0).count(), 0);
}

TEST(BuildCs, DefaultsAndSignFlip) {
  const Problem p = build_cs_problem(dense({{1}}), vec({1}), 1);
  EXPECT_EQ(p.A.to_dense()(0, 0), -1.0);
  EXPECT_EQ(p.b, vec({-0.001}));
  const auto* f = dynamic_cast<const SmoothedLqObjective*>(p.objective.get());
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->q(), 0.9);
  EXPECT_EQ(f->eta(), 0.07);
  EXPECT_EQ(f->eps_smooth(), 1.0);

  const Problem p4 = build_cs_problem(dense({{1, 0, 0, 0}, {0, 1, 0, 0}}), vec({1, -1}), 1);
  EXPECT_EQ(dynamic_cast<const SmoothedLqObjective&>(*p4.objective).eps_smooth(), 0.25);
}

TEST(BuildCs, NoiselessSignsSatisfyConstraint) {
  std::mt19937_64 rng(4);
  const DenseMatrix a0 = oracle::random_matrix(rng, 30, 10);
  Vector x = oracle::random_vector(rng, 10);
  x /= x.norm();
  Vector c(30);
  const Vector ax = a0 * x;
  for (Index i = 0; i < 30; ++i) c(i) = ax(i) > 0 ? 1.0 : -1.0;
  CsConstants k;
  k.epsilon = 1e-12;
  const Problem p = build_cs_problem(ConstraintMatrix(a0), c, 1, k);
  const Vector y = p.A.times(x) - p.b;  // = -|a_i x| + eps
  Index positives = 0;
  for (Index i = 0; i < 30; ++i) positives += (-std::abs(ax(i)) + 1e-12) > 0;
  EXPECT_EQ((y.array() > 0).count(), positives);
  EXPECT_EQ(positives, 0);
}

TEST(BuildCs, BadLabel) {
  try {
    build_cs_problem(dense({{1, 2}}), vec({2}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadLabel);
  }
}

TEST(ProblemContainer, ValidatesShapes) {
  auto f = std::make_shared<SvmObjective>(2, 1.0);
  EXPECT_THROW(Problem(f, dense({{1, 2, 3}}), vec({1}), HeavisideBudget(1, 1)), Error);
  EXPECT_THROW(Problem(f, dense({{1, 2}}), vec({1, 2}), HeavisideBudget(1, 1)), Error);
  const Problem p(f, dense({{1, 2}, {3, 4}}), vec({1, 2}), HeavisideBudget(2, 1));
  EXPECT_EQ(p.with_budget(2).s(), 2);
}
