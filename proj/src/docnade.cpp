#include "docnade/docnade.hpp"

#include <algorithm>
#include <stdexcept>

namespace docnade {

DocNadeModel::DocNadeModel(BinaryWordTree tree, std::size_t hidden_size, Activation activation)
    : embeddings("W", hidden_size, tree.vocab_size()),
      hidden_bias("c", hidden_size),
      node_weights("V", tree.internal_count(), hidden_size),
      node_bias("b", tree.internal_count()),
      tree_(std::move(tree)),
      activation_(activation) {
  if (hidden_size == 0) throw std::invalid_argument("hidden size must be >= 1");
  if (tree_.vocab_size() < 2) throw std::invalid_argument("degenerate vocabulary");
}

DocNadeModel DocNadeModel::create(BinaryWordTree tree, std::size_t hidden_size, Activation activation,
                                  Rng& rng) {
  DocNadeModel m(std::move(tree), hidden_size, activation);
  init_params(m.embeddings, InitScheme::uniform_fan, rng);
  init_params(m.node_weights, InitScheme::uniform_fan, rng);
  return m;
}

ParamList DocNadeModel::params() { return {&embeddings, &hidden_bias, &node_weights, &node_bias}; }

void DocNadeModel::check_sequence(const Sequence& seq) const {
  for (WordId w : seq)
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
}

Matrix DocNadeModel::hidden_states(const Sequence& seq) const {
  check_sequence(seq);
  const auto H = static_cast<Eigen::Index>(hidden_size());
  Matrix out(H, static_cast<Eigen::Index>(seq.size() + 1));
  Vector pre = hidden_bias.value.col(0);
  for (std::size_t i = 0; i <= seq.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = pre;
    apply_activation(activation_, out.col(static_cast<Eigen::Index>(i)));
    if (i < seq.size()) pre += embeddings.value.col(seq[i]);
  }
  return out;
}

double DocNadeModel::word_logprob(const Vector& h, WordId w) const {
  if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
  auto nodes = tree_.path_nodes(w);
  auto bits = tree_.path_bits(w);
  double logp = 0.0;
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    double z = node_bias.value(nodes[m], 0) + node_weights.value.row(nodes[m]).dot(h);
    logp += bits[m] ? log_sigmoid(z) : log_sigmoid(-z);
  }
  return logp;
}

double DocNadeModel::doc_logprob(const Sequence& seq) const {
  if (seq.empty()) throw std::invalid_argument("empty document");
  check_sequence(seq);
  Vector pre = hidden_bias.value.col(0);
  Vector h(pre.size());
  double logp = 0.0;
  for (WordId w : seq) {
    h = pre;
    apply_activation(activation_, h);
    logp += word_logprob(h, w);
    pre += embeddings.value.col(w);
  }
  return logp;
}

double DocNadeModel::bag_logprob_exact(const Histogram& counts) const {
  Sequence seq;
  for (const auto& [w, n] : counts) seq.insert(seq.end(), n, w);
  if (seq.empty()) throw std::invalid_argument("empty document");
  if (seq.size() > 8) throw std::invalid_argument("enumeration bound exceeded");
  // `seq` is sorted, so next_permutation walks each distinct ordering once.
  std::vector<double> logps;
  do {
    logps.push_back(doc_logprob(seq));
  } while (std::next_permutation(seq.begin(), seq.end()));
  return log_sum_exp(logps) - std::log(static_cast<double>(logps.size()));
}

Vector DocNadeModel::doc_representation(const Histogram& counts) const {
  Vector pre = hidden_bias.value.col(0);
  for (const auto& [w, n] : counts) {
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
    pre += static_cast<double>(n) * embeddings.value.col(w);
  }
  apply_activation(activation_, pre);
  return pre;
}

Vector DocNadeModel::doc_representation(const Sequence& seq) const {
  check_sequence(seq);
  Vector pre = hidden_bias.value.col(0);
  for (WordId w : seq) pre += embeddings.value.col(w);
  apply_activation(activation_, pre);
  return pre;
}

double DocNadeModel::accumulate_gradients(const Sequence& seq) {
  if (seq.empty()) throw std::invalid_argument("empty document");
  check_sequence(seq);
  const auto H = static_cast<Eigen::Index>(hidden_size());
  const auto D = static_cast<Eigen::Index>(seq.size());

  // Pre-activation deltas, one column per position.
  Matrix delta(H, D);
  Vector pre = hidden_bias.value.col(0);
  Vector h(H);
  Vector dh(H);
  double nll = 0.0;
  for (Eigen::Index i = 0; i < D; ++i) {
    const WordId w = seq[static_cast<std::size_t>(i)];
    h = pre;
    apply_activation(activation_, h);
    dh.setZero();
    auto nodes = tree_.path_nodes(w);
    auto bits = tree_.path_bits(w);
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      const auto node = static_cast<Eigen::Index>(nodes[m]);
      double z = node_bias.value(node, 0) + node_weights.value.row(node).dot(h);
      nll -= bits[m] ? log_sigmoid(z) : log_sigmoid(-z);
      double dz = sigmoid(z) - static_cast<double>(bits[m]);
      node_bias.grad(node, 0) += dz;
      node_weights.grad.row(node) += dz * h.transpose();
      dh += dz * node_weights.value.row(node).transpose();
    }
    scale_by_derivative(activation_, h, dh);
    delta.col(i) = dh;
    pre += embeddings.value.col(w);
  }

  // W[:, v_k] feeds every later position, so its gradient is the suffix sum
  // of the deltas after k.
  Vector suffix = Vector::Zero(H);
  for (Eigen::Index k = D - 1; k >= 0; --k) {
    embeddings.grad.col(seq[static_cast<std::size_t>(k)]) += suffix;
    suffix += delta.col(k);
  }
  hidden_bias.grad.col(0) += suffix;
  return nll;
}

double DocNadeModel::train_step(const Sequence& seq, Optimizer& optimizer) {
  auto ps = params();
  for (ParamTensor* p : ps) p->zero_grad();
  double nll = accumulate_gradients(seq);
  optimizer.step(ps);
  return nll;
}

}  // namespace docnade
