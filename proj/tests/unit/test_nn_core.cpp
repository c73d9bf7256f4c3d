#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "docnade/nn_core.hpp"
#include "oracles.hpp"

using namespace docnade;

TEST(Activation, FixedPointsAndSymmetry) {
  Vector x(3);
  x << 0.0, 1.3, -2.7;
  Vector s = activation(Activation::sigmoid, x);
  Vector t = activation(Activation::tanh, x);
  EXPECT_EQ(s[0], 0.5);
  EXPECT_EQ(t[0], 0.0);
  for (double v : {0.1, 1.0, 5.0, 30.0, 300.0}) EXPECT_NEAR(sigmoid(-v), 1.0 - sigmoid(v), 1e-12);
  EXPECT_NEAR(t[2], std::tanh(-2.7), 1e-15);
}

TEST(Activation, StableInTheTails) {
  EXPECT_EQ(sigmoid(500.0), 1.0);
  EXPECT_GT(sigmoid(-700.0), 0.0);
  EXPECT_TRUE(std::isfinite(log_sigmoid(-700.0)));
  EXPECT_NEAR(log_sigmoid(-700.0), -700.0, 1e-9);
  EXPECT_NEAR(log_sigmoid(2.0), std::log(sigmoid(2.0)), 1e-15);
  Vector x(2);
  x << 700.0, -700.0;
  Vector s = activation(Activation::sigmoid, x);
  EXPECT_TRUE(s.allFinite());
}

TEST(Activation, RejectsNonFiniteInput) {
  Vector x(2);
  x << 1.0, std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(activation(Activation::sigmoid, x), std::invalid_argument);
  x[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(activation(Activation::tanh, x), std::invalid_argument);
}

TEST(Activation, DerivativeFromOutput) {
  for (auto kind : {Activation::sigmoid, Activation::tanh}) {
    Vector a(3);
    a << -0.4, 0.2, 1.1;
    Vector y = activation(kind, a);
    Vector d = Vector::Ones(3);
    scale_by_derivative(kind, y, d);
    for (int i = 0; i < 3; ++i) {
      double h = 1e-6;
      double num = (oracle::act(kind, a[i] + h) - oracle::act(kind, a[i] - h)) / (2 * h);
      EXPECT_NEAR(d[i], num, 1e-8);
    }
  }
}

TEST(Activation, NamesRoundTrip) {
  EXPECT_EQ(parse_activation(to_string(Activation::tanh)), Activation::tanh);
  EXPECT_EQ(parse_activation("sigmoid"), Activation::sigmoid);
  EXPECT_THROW(parse_activation("relu"), std::invalid_argument);
}

TEST(LogSumExp, MatchesDirectSumAndAvoidsOverflow) {
  std::vector<double> x{0.1, -1.0, 2.0};
  EXPECT_NEAR(log_sum_exp(x), std::log(std::exp(0.1) + std::exp(-1.0) + std::exp(2.0)), 1e-14);
  std::vector<double> big{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
}

TEST(ParamTensor, ShapesAndFiniteness) {
  ParamTensor m("W", 2, 3);
  ParamTensor v("b", 4);
  EXPECT_EQ(m.shape, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(v.shape, (std::vector<std::size_t>{4}));
  EXPECT_TRUE(v.is_vector());
  EXPECT_EQ(v.value.cols(), 1);
  EXPECT_EQ(m.grad.rows(), 2);
  m.value(1, 2) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(m.check_finite(), std::runtime_error);
}

TEST(InitParams, ZerosAndFanBound) {
  Rng rng(1);
  auto z = init_params("z", {3, 3}, InitScheme::zeros, rng);
  EXPECT_EQ(z.value.squaredNorm(), 0.0);
  auto u = init_params("u", {2, 8}, InitScheme::uniform_fan, rng);
  const double a = std::sqrt(6.0 / 10.0);
  EXPECT_LE(u.value.cwiseAbs().maxCoeff(), a);
  EXPECT_GT(u.value.cwiseAbs().maxCoeff(), 0.0);
  auto b = init_params("b", {5}, InitScheme::uniform_fan, rng);
  EXPECT_EQ(b.value.squaredNorm(), 0.0) << "vectors are biases and start at zero";
}

TEST(InitParams, SameSeedSameTensor) {
  Rng r1(77), r2(77);
  auto a = init_params("a", {4, 6}, InitScheme::uniform_fan, r1);
  auto b = init_params("a", {4, 6}, InitScheme::uniform_fan, r2);
  EXPECT_EQ(a.value, b.value);
}

TEST(DeriveSeed, DependsOnKeyAndSeed) {
  EXPECT_EQ(derive_seed("doc7", 3), derive_seed("doc7", 3));
  EXPECT_NE(derive_seed("doc7", 3), derive_seed("doc8", 3));
  EXPECT_NE(derive_seed("doc7", 3), derive_seed("doc7", 4));
}

TEST(Sgd, StepArithmetic) {
  ParamTensor p("t", 1);
  p.value(0, 0) = 1.0;
  p.grad(0, 0) = 2.0;
  ParamTensor* ps[] = {&p};
  sgd_step(ps, 0.1);
  EXPECT_DOUBLE_EQ(p.value(0, 0), 0.8);
  p.grad.setZero();
  sgd_step(ps, 0.1);
  EXPECT_DOUBLE_EQ(p.value(0, 0), 0.8);
}

TEST(Sgd, StepsComposeLinearly) {
  ParamTensor a("a", 1), b("b", 1);
  a.value(0, 0) = b.value(0, 0) = 2.0;
  ParamTensor* pa[] = {&a};
  ParamTensor* pb[] = {&b};
  a.grad(0, 0) = 0.3;
  sgd_step(pa, 0.5);
  a.grad(0, 0) = -0.7;
  sgd_step(pa, 0.5);
  b.grad(0, 0) = 0.3 - 0.7;
  sgd_step(pb, 0.5);
  EXPECT_NEAR(a.value(0, 0), b.value(0, 0), 1e-15);
}

TEST(Sgd, ThroughOptimizer) {
  ParamTensor p("t", 2, 2);
  p.value.setConstant(1.0);
  p.grad.setConstant(2.0);
  Optimizer opt({OptimizerKind::sgd, 0.25});
  ParamTensor* ps[] = {&p};
  opt.step(ps);
  EXPECT_EQ(p.value(1, 1), 0.5);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, FirstStepClosedForm) {
  ParamTensor p("t", 1);
  p.value(0, 0) = 0.0;
  p.grad(0, 0) = 0.5;
  Optimizer opt({OptimizerKind::adam, 1e-3});
  ParamTensor* ps[] = {&p};
  opt.step(ps);
  // m_hat = g, v_hat = g^2, so the step is -lr * g / (|g| + eps).
  EXPECT_NEAR(p.value(0, 0), -1e-3 * 0.5 / (0.5 + 1e-8), 1e-18);
  EXPECT_NEAR(p.value(0, 0), -1e-3, 1e-10);
}

TEST(Adam, FirstStepOpposesGradientSign) {
  Rng rng(8);
  std::normal_distribution<double> n(0.0, 3.0);
  ParamTensor p("t", 3, 4);
  for (Eigen::Index i = 0; i < p.grad.size(); ++i) p.grad.data()[i] = n(rng);
  Optimizer opt({});
  ParamTensor* ps[] = {&p};
  opt.step(ps);
  for (Eigen::Index i = 0; i < p.grad.size(); ++i)
    EXPECT_EQ(std::signbit(p.value.data()[i]), !std::signbit(p.grad.data()[i]));
}

TEST(Adam, ZeroGradientLeavesParametersAlone) {
  ParamTensor p("t", 2, 3);
  p.value.setConstant(0.7);
  Optimizer opt({});
  ParamTensor* ps[] = {&p};
  for (int t = 0; t < 5; ++t) opt.step(ps);
  EXPECT_EQ(p.value, Matrix::Constant(2, 3, 0.7));
  EXPECT_EQ(opt.steps(), 5u);
}

TEST(Adam, MatchesReferenceOverSeveralSteps) {
  ParamTensor p("t", 1);
  p.value(0, 0) = 1.0;
  OptimizerConfig cfg;
  cfg.lr = 0.01;
  Optimizer opt(cfg);
  ParamTensor* ps[] = {&p};
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 10; ++t) {
    double g = 2.0 * theta - 0.3;
    p.grad(0, 0) = g;
    opt.step(ps);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mh = m / (1.0 - std::pow(0.9, t));
    double vh = v / (1.0 - std::pow(0.999, t));
    theta -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p.value(0, 0), theta, 1e-14);
  }
}

TEST(Adam, ShapeChangeIsAnError) {
  ParamTensor a("a", 2, 2);
  ParamTensor b("b", 3, 2);
  Optimizer opt({});
  ParamTensor* pa[] = {&a};
  ParamTensor* pb[] = {&b};
  opt.step(pa);
  EXPECT_THROW(opt.step(pb), std::invalid_argument);
}

TEST(Optimizer, NamesRoundTrip) {
  EXPECT_EQ(parse_optimizer("sgd"), OptimizerKind::sgd);
  EXPECT_EQ(parse_optimizer(to_string(OptimizerKind::adam)), OptimizerKind::adam);
  EXPECT_THROW(parse_optimizer("rmsprop"), std::invalid_argument);
}

TEST(GradCheck, Quadratic) {
  ParamTensor p("theta", 1);
  p.value(0, 0) = 3.0;
  p.grad(0, 0) = 3.0;
  ParamTensor* ps[] = {&p};
  auto r = gradcheck([&] { return 0.5 * p.value(0, 0) * p.value(0, 0); }, ps);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.worst_numeric, 3.0, 1e-6);
  EXPECT_EQ(r.checked, 1u);
}

TEST(GradCheck, FlagsAWrongGradient) {
  ParamTensor p("theta", 2, 1);
  p.value << 1.0, 2.0;
  p.grad << 2.0, 4.4;  // second entry should be 4.0
  ParamTensor* ps[] = {&p};
  auto r = gradcheck([&] { return p.value.squaredNorm(); }, ps);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_tensor, "theta");
  EXPECT_EQ(r.worst_index, 1u);
  EXPECT_EQ(p.value(1, 0), 2.0) << "values restored after perturbation";
}

TEST(GradCheck, SubsamplesLargeTensors) {
  ParamTensor p("big", 50, 20);
  Rng rng(2);
  oracle::randomize({&p}, rng);
  p.grad = 2.0 * p.value;
  ParamTensor* ps[] = {&p};
  GradCheckOptions o;
  o.max_per_tensor = 25;
  auto r = gradcheck([&] { return p.value.squaredNorm(); }, ps, o);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.checked, 25u);
}

TEST(GradCheck, RejectsNonDeterministicLoss) {
  ParamTensor p("theta", 1);
  p.grad(0, 0) = 0.0;
  ParamTensor* ps[] = {&p};
  int calls = 0;
  EXPECT_THROW(gradcheck([&] { return static_cast<double>(++calls); }, ps), std::runtime_error);
}

TEST(GradCheck, EpsilonOutsideRangeIsRejected) {
  ParamTensor p("theta", 1);
  ParamTensor* ps[] = {&p};
  GradCheckOptions o;
  o.epsilon = 1e-2;
  EXPECT_THROW(gradcheck([&] { return 0.0; }, ps, o), std::invalid_argument);
}
