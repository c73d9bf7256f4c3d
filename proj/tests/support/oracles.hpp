#pragma once

// Straightforward reference implementations used to check the optimized
// library code. They favour obviousness over speed and share no code paths
// with the library beyond parameter storage.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "docnade/corpus.hpp"
#include "docnade/deep_docnade.hpp"
#include "docnade/docnade.hpp"
#include "docnade/docnade_lm.hpp"
#include "docnade/evalkit.hpp"
#include "docnade/nn_core.hpp"
#include "docnade/vocab_tree.hpp"

namespace oracle {

using namespace docnade;

inline double act(Activation a, double x) { return a == Activation::sigmoid ? 1.0 / (1.0 + std::exp(-x)) : std::tanh(x); }

inline Vector act(Activation a, const Vector& x) {
  Vector y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = act(a, x[i]);
  return y;
}

/// Every leaf probability by recursive descent from the root.
inline std::vector<double> tree_distribution(const BinaryWordTree& tree, const Matrix& node_w, const Matrix& node_b,
                                             const Vector& h) {
  std::vector<double> p(tree.vocab_size(), 0.0);
  std::function<void(std::uint32_t, double)> walk = [&](std::uint32_t node, double mass) {
    double z = node_b(node, 0) + node_w.row(node).dot(h);
    double right = 1.0 / (1.0 + std::exp(-z));
    const auto& n = tree.nodes()[node];
    auto visit = [&](const BinaryWordTree::Child& c, double m) {
      if (c.is_leaf)
        p[c.index] += m;
      else
        walk(c.index, m);
    };
    visit(n.left, mass * (1.0 - right));
    visit(n.right, mass * right);
  };
  walk(0, 1.0);
  return p;
}

/// Hidden state before 0-based position i, summed from scratch.
inline Vector docnade_hidden_direct(const DocNadeModel& m, const Sequence& seq, std::size_t i) {
  Vector a = m.hidden_bias.value.col(0);
  for (std::size_t k = 0; k < i; ++k) a += m.embeddings.value.col(seq[k]);
  return act(m.activation(), a);
}

inline double docnade_logprob_direct(const DocNadeModel& m, const Sequence& seq) {
  double lp = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    auto p = tree_distribution(m.tree(), m.node_weights.value, m.node_bias.value, docnade_hidden_direct(m, seq, i));
    lp += std::log(p[seq[i]]);
  }
  return lp;
}

/// All distinct orderings of a bag, lexicographic.
inline std::vector<Sequence> all_orderings(const Histogram& counts) {
  Sequence s;
  for (auto [w, n] : counts) s.insert(s.end(), n, w);
  std::vector<Sequence> out;
  do out.push_back(s);
  while (std::next_permutation(s.begin(), s.end()));
  return out;
}

/// Plain softmax over a flat output layer, recomputing every hidden layer.
inline std::vector<double> deep_distribution(const DeepDocNadeModel& m, const Histogram& context) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(m.vocab_size()));
  for (auto [w, n] : context) x[w] += n;
  Vector h = act(m.activation(), Vector(m.biases[0].value.col(0) + m.weights[0].value * x));
  for (std::size_t l = 1; l < m.depth(); ++l)
    h = act(m.activation(), Vector(m.biases[l].value.col(0) + m.weights[l].value * h));
  Vector z = m.output_bias.value.col(0) + m.output_weights.value * h;
  double mx = z.maxCoeff();
  double total = 0.0;
  std::vector<double> p(m.vocab_size());
  for (std::size_t w = 0; w < p.size(); ++w) total += (p[w] = std::exp(z[w] - mx));
  for (auto& v : p) v /= total;
  return p;
}

inline double deep_ordered_logprob_direct(const DeepDocNadeModel& m, const Sequence& seq) {
  double lp = 0.0;
  Histogram ctx;
  for (WordId w : seq) {
    lp += std::log(deep_distribution(m, ctx)[w]);
    ++ctx[w];
  }
  return lp;
}

/// Two-level softmax read straight off the parameters.
inline std::vector<double> lm_distribution(const DocNadeLmModel& m, const Vector& h) {
  const auto& part = m.partition();
  Vector zc = m.class_bias.value.col(0) + m.class_weights.value * h;
  std::vector<double> pc(part.class_count());
  double zsum = 0.0;
  for (std::size_t c = 0; c < pc.size(); ++c) zsum += (pc[c] = std::exp(zc[c]));
  std::vector<double> p(m.vocab_size());
  for (std::size_t c = 0; c < pc.size(); ++c) {
    const auto& mem = part.members(c);
    double s = 0.0;
    std::vector<double> e;
    for (WordId w : mem) {
      e.push_back(std::exp(m.word_bias.value(w, 0) + m.word_weights.value.row(w).dot(h)));
      s += e.back();
    }
    for (std::size_t j = 0; j < mem.size(); ++j) p[mem[j]] = pc[c] / zsum * e[j] / s;
  }
  return p;
}

/// LM hidden state before 0-based position i, from the formula.
inline Vector lm_hidden_direct(const DocNadeLmModel& m, const Sequence& seq, std::size_t i) {
  Vector a = m.hidden_bias.value.col(0);
  if (m.use_doc_context())
    for (std::size_t k = 0; k < i; ++k) a += m.doc_embeddings.value.col(seq[k]);
  for (std::size_t k = 1; k < m.order(); ++k) {
    WordId ctx = i >= k ? seq[i - k] : m.padding_id();
    a += m.positions[k - 1].value * m.lm_embeddings.value.col(ctx);
  }
  return act(m.activation(), a);
}

inline double lm_logprob_direct(const DocNadeLmModel& m, const Sequence& seq) {
  double lp = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) lp += std::log(lm_distribution(m, lm_hidden_direct(m, seq, i))[seq[i]]);
  return lp;
}

/// Retrieval by counting, for every database doc, how many docs outrank it.
/// Accumulation order mirrors the definition: labels within a query, then
/// queries, so results compare bit for bit.
inline std::vector<PRPoint> retrieval_bruteforce(const std::vector<Vector>& queries, const std::vector<Vector>& db,
                                                 const std::vector<LabelSet>& qlabels,
                                                 const std::vector<LabelSet>& dblabels,
                                                 const std::vector<std::size_t>& cutoffs) {
  const std::size_t N = db.size();
  auto cosine = [](const Vector& a, const Vector& b) {
    double na = std::sqrt(a.dot(a)), nb = std::sqrt(b.dot(b));
    if (na == 0.0 || nb == 0.0) return -std::numeric_limits<double>::infinity();
    return a.dot(b) / (na * nb);
  };
  auto has = [](const LabelSet& s, std::uint32_t l) { return std::find(s.begin(), s.end(), l) != s.end(); };
  std::vector<PRPoint> pts(cutoffs.size());
  std::size_t used = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (qlabels[q].empty()) continue;
    ++used;
    std::vector<double> sim(N);
    for (std::size_t d = 0; d < N; ++d) sim[d] = cosine(queries[q], db[d]);
    std::vector<std::size_t> rank(N, 0);
    for (std::size_t d = 0; d < N; ++d)
      for (std::size_t e = 0; e < N; ++e)
        if (sim[e] > sim[d] || (sim[e] == sim[d] && e < d)) ++rank[d];
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
      double prec = 0.0, rec = 0.0;
      for (auto l : qlabels[q]) {
        std::size_t total = 0, hits = 0;
        for (std::size_t d = 0; d < N; ++d) {
          if (!has(dblabels[d], l)) continue;
          ++total;
          if (rank[d] < cutoffs[k]) ++hits;
        }
        if (total == 0) continue;
        prec += static_cast<double>(hits) / static_cast<double>(cutoffs[k]);
        rec += static_cast<double>(hits) / static_cast<double>(total);
      }
      pts[k].cutoff = cutoffs[k];
      pts[k].precision += prec / static_cast<double>(qlabels[q].size());
      pts[k].recall += rec / static_cast<double>(qlabels[q].size());
    }
  }
  for (auto& p : pts) {
    p.precision /= static_cast<double>(used);
    p.recall /= static_cast<double>(used);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Small fixtures

inline Sequence random_sequence(std::size_t V, std::size_t D, Rng& rng) {
  std::uniform_int_distribution<WordId> pick(0, static_cast<WordId>(V - 1));
  Sequence s(D);
  for (auto& w : s) w = pick(rng);
  return s;
}

/// Fills every parameter with U(-scale, scale), biases included.
inline void randomize(ParamList params, Rng& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto* p : params)
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = u(rng);
}

/// Upper-tail chi-square test at the 0.001 level with the Wilson-Hilferty
/// approximation; good enough for >= 3 degrees of freedom.
inline bool chi_square_ok(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  double k = static_cast<double>(observed.size() - 1);
  double z = (std::cbrt(stat / k) - (1.0 - 2.0 / (9.0 * k))) / std::sqrt(2.0 / (9.0 * k));
  return z < 3.09;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* base = std::getenv("DOCNADE_TEST_TMP");
  std::filesystem::path dir = base ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "docnade_tests";
  dir /= name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
