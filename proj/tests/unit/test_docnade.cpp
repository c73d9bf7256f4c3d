#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "docnade/docnade.hpp"
#include "docnade/training.hpp"
#include "oracles.hpp"

using namespace docnade;

namespace {

DocNadeModel random_model(std::size_t V, std::size_t H, std::uint64_t seed, Activation a = Activation::sigmoid) {
  Rng rng(seed);
  DocNadeModel m(build_random_tree(V, seed), H, a);
  oracle::randomize(m.params(), rng);
  return m;
}

double prob_sum(const DocNadeModel& m, const Vector& h) {
  double s = 0.0;
  for (WordId w = 0; w < m.vocab_size(); ++w) s += std::exp(m.word_logprob(h, w));
  return s;
}

}  // namespace

TEST(DocNade, ShapesAndCreate) {
  Rng rng(1);
  auto m = DocNadeModel::create(build_random_tree(10, 1), 4, Activation::sigmoid, rng);
  EXPECT_EQ(m.embeddings.value.rows(), 4);
  EXPECT_EQ(m.embeddings.value.cols(), 10);
  EXPECT_EQ(m.node_weights.value.rows(), 9);
  EXPECT_EQ(m.node_weights.value.cols(), 4);
  EXPECT_EQ(m.node_bias.value.rows(), 9);
  EXPECT_EQ(m.params().size(), 4u);
  EXPECT_EQ(m.hidden_bias.value.squaredNorm(), 0.0);
  EXPECT_GT(m.embeddings.value.squaredNorm(), 0.0);
}

TEST(DocNade, EmptyContextHiddenState) {
  DocNadeModel m(build_random_tree(6, 2), 3);
  Matrix hs = m.hidden_states({});
  ASSERT_EQ(hs.cols(), 1);
  EXPECT_EQ(hs.col(0), Vector::Constant(3, 0.5));
}

TEST(DocNade, RecursionMatchesDirectEvaluation) {
  auto m = random_model(30, 7, 3);
  Rng rng(4);
  for (std::size_t D : {1u, 5u, 40u}) {
    Sequence s = oracle::random_sequence(30, D, rng);
    Matrix hs = m.hidden_states(s);
    ASSERT_EQ(hs.cols(), static_cast<Eigen::Index>(D + 1));
    for (std::size_t i = 0; i <= D; ++i)
      EXPECT_LE((hs.col(i) - oracle::docnade_hidden_direct(m, s, i)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(DocNade, HiddenStateIgnoresContextOrder) {
  auto m = random_model(12, 5, 5);
  Rng rng(6);
  Sequence s = oracle::random_sequence(12, 9, rng);
  Sequence p = s;
  std::shuffle(p.begin(), p.begin() + 6, rng);
  EXPECT_LE((m.hidden_states(s).col(6) - m.hidden_states(p).col(6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DocNade, ZeroTreeParamsGiveUniformOverFourWords) {
  DocNadeModel m(build_random_tree(4, 1), 3);
  Vector h = Vector::Constant(3, 0.5);
  for (WordId w = 0; w < 4; ++w) EXPECT_NEAR(m.word_logprob(h, w), std::log(0.25), 1e-15);
}

TEST(DocNade, TwoWordTreeIsOneBernoulli) {
  auto m = random_model(2, 3, 8);
  Vector h = Vector::Random(3);
  EXPECT_NEAR(std::exp(m.word_logprob(h, 0)) + std::exp(m.word_logprob(h, 1)), 1.0, 1e-15);
}

TEST(DocNade, TreeOutputNormalizes) {
  for (std::size_t V : {2u, 4u, 8u, 64u}) {
    auto m = random_model(V, 5, V);
    Rng rng(V);
    for (int t = 0; t < 5; ++t) {
      Vector h = m.hidden_states(oracle::random_sequence(V, 3, rng)).col(2);
      EXPECT_NEAR(prob_sum(m, h), 1.0, 1e-10);
    }
  }
}

TEST(DocNade, WordLogprobMatchesRecursiveTreeOracle) {
  auto m = random_model(17, 4, 10);
  Vector h = Vector::Random(4);
  auto p = oracle::tree_distribution(m.tree(), m.node_weights.value, m.node_bias.value, h);
  for (WordId w = 0; w < 17; ++w) EXPECT_NEAR(m.word_logprob(h, w), std::log(p[w]), 1e-12);
  EXPECT_THROW(m.word_logprob(h, 17), std::out_of_range);
}

TEST(DocNade, DocLogprobMatchesFactorByFactorOracle) {
  auto m = random_model(20, 6, 11);
  Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    Sequence s = oracle::random_sequence(20, 1 + t * 3, rng);
    double lp = m.doc_logprob(s);
    EXPECT_NEAR(lp, oracle::docnade_logprob_direct(m, s), 1e-10);
    EXPECT_LE(lp, 0.0);
  }
  Sequence one{7};
  EXPECT_DOUBLE_EQ(m.doc_logprob(one), m.word_logprob(m.hidden_states({}).col(0), 7));
  EXPECT_THROW(m.doc_logprob({}), std::invalid_argument);
  EXPECT_THROW(m.doc_logprob({20}), std::out_of_range);
}

TEST(DocNade, BagLogprobExactSmallCases) {
  auto m = random_model(6, 3, 13);
  EXPECT_DOUBLE_EQ(m.bag_logprob_exact({{2, 1}}), m.doc_logprob({2}));
  EXPECT_NEAR(m.bag_logprob_exact({{4, 2}}), m.doc_logprob({4, 4}), 1e-14);
  double mean = 0.0;
  Sequence s{0, 1, 5};
  int n = 0;
  do {
    mean += std::exp(oracle::docnade_logprob_direct(m, s));
    ++n;
  } while (std::next_permutation(s.begin(), s.end()));
  EXPECT_EQ(n, 6);
  EXPECT_NEAR(m.bag_logprob_exact({{0, 1}, {1, 1}, {5, 1}}), std::log(mean / n), 1e-12);
  EXPECT_THROW(m.bag_logprob_exact({{0, 5}, {1, 4}}), std::invalid_argument);
}

TEST(DocNade, DocRepresentationIsOrderFree) {
  auto m = random_model(9, 4, 14);
  Vector empty = oracle::act(Activation::sigmoid, Vector(m.hidden_bias.value.col(0)));
  EXPECT_LE((m.doc_representation(Histogram{}) - empty).cwiseAbs().maxCoeff(), 1e-15);
  Rng rng(15);
  Sequence s = oracle::random_sequence(9, 12, rng);
  Vector bag = m.doc_representation(histogram_of(s));
  EXPECT_LE((bag - m.doc_representation(s)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((bag - m.hidden_states(s).col(12)).cwiseAbs().maxCoeff(), 1e-12);
  std::shuffle(s.begin(), s.end(), rng);
  EXPECT_LE((bag - m.doc_representation(s)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DocNade, GradientsMatchFiniteDifferences) {
  for (auto act : {Activation::sigmoid, Activation::tanh}) {
    auto m = random_model(6, 4, 16, act);
    Sequence s{3, 1, 3, 5};
    for (auto* p : m.params()) p->zero_grad();
    double nll = m.accumulate_gradients(s);
    EXPECT_NEAR(nll, -m.doc_logprob(s), 1e-12);
    auto ps = m.params();
    auto r = gradcheck([&] { return -m.doc_logprob(s); }, ps);
    EXPECT_TRUE(r.passed) << r.worst_tensor << "[" << r.worst_index << "] " << r.worst_analytic << " vs "
                          << r.worst_numeric;
  }
}

TEST(DocNade, ZeroLearningRateLeavesParameters) {
  auto m = random_model(8, 3, 17);
  auto before = m.embeddings.value;
  Optimizer opt({OptimizerKind::sgd, 0.0});
  double nll = m.train_step({1, 2, 3}, opt);
  EXPECT_NEAR(nll, -m.doc_logprob({1, 2, 3}), 1e-12);
  EXPECT_EQ(m.embeddings.value, before);
}

TEST(DocNade, TrainingLowersTheLoss) {
  // 20 documents from two disjoint word groups.
  Rng rng(18);
  std::vector<Histogram> docs;
  for (int d = 0; d < 20; ++d) {
    Histogram h;
    for (int k = 0; k < 8; ++k) ++h[static_cast<WordId>((d % 2) * 6 + rng() % 6)];
    docs.push_back(h);
  }
  Rng init(19);
  auto m = DocNadeModel::create(build_random_tree(12, 3), 6, Activation::sigmoid, init);
  Optimizer opt({OptimizerKind::adam, 0.01});
  BatchOptions b;
  b.batch_size = 4;
  double first = train_epoch(m, docs, opt, b, rng);
  double last = first;
  for (int e = 1; e < 200; ++e) last = train_epoch(m, docs, opt, b, rng);
  EXPECT_LT(last, first);
}
