#include <gtest/gtest.h>

#include <cmath>

#include "docnade/docnade_lm.hpp"
#include "docnade/training.hpp"
#include "oracles.hpp"

using namespace docnade;

namespace {

DocNadeLmModel random_model(std::size_t V, std::size_t H, std::size_t n, std::uint64_t seed, bool doc = true) {
  Rng rng(seed);
  DocNadeLmModel m(build_class_partition(V), H, n, Activation::sigmoid, doc);
  oracle::randomize(m.params(), rng);
  if (!doc) m.doc_embeddings.value.setZero();
  return m;
}

}  // namespace

TEST(DocNadeLm, ShapesAndOrder) {
  DocNadeLmModel m(build_class_partition(10), 5, 3);
  EXPECT_EQ(m.order(), 3u);
  EXPECT_EQ(m.positions.size(), 2u);
  EXPECT_EQ(m.lm_embeddings.value.cols(), 11);
  EXPECT_EQ(m.doc_embeddings.value.cols(), 10);
  EXPECT_EQ(m.class_weights.value.rows(), 4);
  EXPECT_EQ(m.word_weights.value.rows(), 10);
  EXPECT_EQ(m.padding_id(), 10u);
  EXPECT_THROW(DocNadeLmModel(build_class_partition(10), 5, 1), std::invalid_argument);
}

TEST(DocNadeLm, ZeroParametersGiveUniformTwoLevelSoftmax) {
  DocNadeLmModel m(build_class_partition(4), 3, 3);
  Vector h = m.hidden({2, 1});
  EXPECT_EQ(h, Vector::Constant(3, 0.5));
  for (WordId w = 0; w < 4; ++w) EXPECT_NEAR(m.word_logprob(h, w), std::log(0.25), 1e-15);
}

TEST(DocNadeLm, TwoLevelSoftmaxNormalizes) {
  for (std::size_t V : {4u, 10u, 64u}) {
    auto m = random_model(V, 5, 3, V);
    Rng rng(V);
    for (int t = 0; t < 5; ++t) {
      Vector h = m.hidden(oracle::random_sequence(V, t, rng));
      double s = 0.0;
      for (WordId w = 0; w < V; ++w) s += std::exp(m.word_logprob(h, w));
      EXPECT_NEAR(s, 1.0, 1e-10);
      auto p = oracle::lm_distribution(m, h);
      for (WordId w = 0; w < V; ++w) EXPECT_NEAR(m.word_logprob(h, w), std::log(p[w]), 1e-12);
    }
  }
}

TEST(DocNadeLm, ClassMarginalIdentity) {
  auto m = random_model(10, 4, 3, 1);
  Vector h = Vector::Random(4).cwiseAbs();
  const auto& part = m.partition();
  double total = 0.0;
  for (std::size_t c = 0; c < part.class_count(); ++c) {
    double s = 0.0;
    for (WordId w : part.members(c)) s += std::exp(m.word_logprob(h, w));
    EXPECT_NEAR(s, std::exp(m.class_logprob(h, c)), 1e-12);
    total += std::exp(m.class_logprob(h, c));
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(DocNadeLm, HiddenMatchesFormula) {
  auto m = random_model(12, 5, 4, 2);
  Rng rng(3);
  Sequence s = oracle::random_sequence(12, 10, rng);
  for (std::size_t i = 0; i <= s.size(); ++i) {
    Sequence hist(s.begin(), s.begin() + static_cast<long>(i));
    EXPECT_LE((m.hidden(hist, i + 1) - oracle::lm_hidden_direct(m, s, i)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(m.hidden({1, 2}, 2), std::invalid_argument);
}

TEST(DocNadeLm, FirstPositionUsesOnlyPadding) {
  auto m = random_model(8, 4, 3, 4);
  auto terms = m.hidden_terms({});
  EXPECT_EQ(terms.doc, Vector::Zero(4));
  Vector lm = m.positions[0].value * m.lm_embeddings.value.col(8) + m.positions[1].value * m.lm_embeddings.value.col(8);
  EXPECT_LE((terms.lm - lm).cwiseAbs().maxCoeff(), 1e-14);
  // The FFN ablation agrees at i = 1 because the document sum is empty.
  auto ffn = random_model(8, 4, 3, 4, false);
  EXPECT_LE((m.hidden({}) - ffn.hidden({})).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DocNadeLm, ContextLocality) {
  auto m = random_model(9, 4, 3, 5);
  Sequence a{1, 2, 3, 4, 5, 6};
  Sequence b{7, 2, 3, 4, 5, 6};  // differs at distance 6 >= n
  auto ta = m.hidden_terms(a);
  auto tb = m.hidden_terms(b);
  EXPECT_EQ(ta.lm, tb.lm) << "n-gram term is bitwise unaffected";
  EXPECT_LE((tb.doc - ta.doc - (m.doc_embeddings.value.col(7) - m.doc_embeddings.value.col(1))).cwiseAbs().maxCoeff(),
            1e-14);
  Sequence c{4, 3, 2, 1, 5, 6};  // permutes everything before the last n-1 words
  EXPECT_LE((m.hidden(a) - m.hidden(c)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DocNadeLm, DocLogprobMatchesOracle) {
  auto m = random_model(10, 5, 3, 6);
  Rng rng(7);
  for (int t = 0; t < 5; ++t) {
    Sequence s = oracle::random_sequence(10, 1 + 3 * t, rng);
    double lp = m.doc_logprob(s);
    EXPECT_NEAR(lp, oracle::lm_logprob_direct(m, s), 1e-10);
    EXPECT_LE(lp, 0.0);
  }
  EXPECT_NEAR(m.doc_logprob({4}), m.word_logprob(m.hidden({}), 4), 1e-14);
  EXPECT_THROW(m.doc_logprob({}), std::invalid_argument);
  EXPECT_THROW(m.doc_logprob({10}), std::out_of_range);
}

TEST(DocNadeLm, FfnReductionIsBitwise) {
  // Doc context on but W_dn zero versus the ablation flag: identical values.
  auto with = random_model(10, 4, 3, 8);
  with.doc_embeddings.value.setZero();
  DocNadeLmModel ffn(with.partition(), 4, 3, Activation::sigmoid, false);
  auto src = with.params();
  auto dst = ffn.params();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k]->value = src[k]->value;
  Sequence s{1, 5, 5, 9, 0, 3, 2};
  EXPECT_EQ(with.doc_logprob(s), ffn.doc_logprob(s));
}

TEST(DocNadeLm, CreateGivesFfnTheSameInitialization) {
  Rng a(9), b(9);
  auto full = DocNadeLmModel::create(build_class_partition(10), 4, 3, Activation::sigmoid, true, a);
  auto ffn = DocNadeLmModel::create(build_class_partition(10), 4, 3, Activation::sigmoid, false, b);
  EXPECT_EQ(ffn.doc_embeddings.value, Matrix::Zero(4, 10));
  EXPECT_EQ(full.lm_embeddings.value, ffn.lm_embeddings.value);
  EXPECT_EQ(full.word_weights.value, ffn.word_weights.value);
}

TEST(DocNadeLm, GradientsMatchFiniteDifferences) {
  for (bool doc : {true, false}) {
    auto m = random_model(8, 5, 3, 10, doc);
    Sequence s{3, 7, 3, 0};
    for (auto* p : m.params()) p->zero_grad();
    double nll = m.accumulate_gradients(s);
    EXPECT_NEAR(nll, -m.doc_logprob(s), 1e-12);
    auto ps = m.params();
    auto r = gradcheck([&] { return -m.doc_logprob(s); }, ps);
    EXPECT_TRUE(r.passed) << r.worst_tensor << "[" << r.worst_index << "] " << r.worst_analytic << " vs "
                          << r.worst_numeric;
    // The padding column and the second position matrix both receive gradient.
    EXPECT_GT(m.lm_embeddings.grad.col(8).norm(), 0.0);
    EXPECT_GT(m.positions[1].grad.norm(), 0.0);
    if (!doc) EXPECT_EQ(m.doc_embeddings.grad.norm(), 0.0);
  }
}

TEST(DocNadeLm, ZeroLearningRateAndTrainingCurve) {
  Rng rng(11);
  auto m = DocNadeLmModel::create(build_class_partition(12), 6, 3, Activation::sigmoid, true, rng);
  auto before = m.lm_embeddings.value;
  Optimizer zero({OptimizerKind::sgd, 0.0});
  m.train_step({1, 2, 3}, zero);
  EXPECT_EQ(m.lm_embeddings.value, before);

  std::vector<Sequence> docs;
  for (int d = 0; d < 20; ++d) {
    docs.push_back(oracle::random_sequence(6, 12, rng));
    for (auto& w : docs.back()) w += static_cast<WordId>((d % 2) * 6);
  }
  Optimizer opt({OptimizerKind::adam, 0.01});
  BatchOptions b;
  b.batch_size = 4;
  double first = train_epoch(m, docs, opt, b, rng);
  double last = first;
  for (int e = 1; e < 100; ++e) last = train_epoch(m, docs, opt, b, rng);
  EXPECT_LT(last, first);
}
