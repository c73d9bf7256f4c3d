#pragma once

#include "docnade/corpus.hpp"
#include "docnade/nn_core.hpp"
#include "docnade/vocab_tree.hpp"

namespace docnade {

/// Single-hidden-layer DocNADE with a binary-tree output layer.
///
/// The hidden state before position i sums the embeddings of every preceding
/// word, h_i = g(c + sum_{k<i} W[:, v_k]), so it depends only on the
/// histogram of the context. Each word probability is the product of the
/// logistic decisions along its root-to-leaf path in `tree()`.
class DocNadeModel {
 public:
  DocNadeModel() = default;
  /// Zero-initialized parameters.
  DocNadeModel(BinaryWordTree tree, std::size_t hidden_size, Activation activation = Activation::sigmoid);
  /// Random embeddings and node weights (uniform fan init), zero biases.
  static DocNadeModel create(BinaryWordTree tree, std::size_t hidden_size, Activation activation, Rng& rng);

  std::size_t vocab_size() const { return tree_.vocab_size(); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(hidden_bias.value.rows()); }
  Activation activation() const { return activation_; }
  const BinaryWordTree& tree() const { return tree_; }

  ParamTensor embeddings;    // W, H x V
  ParamTensor hidden_bias;   // c, H
  ParamTensor node_weights;  // one logistic unit per internal node, (V-1) x H
  ParamTensor node_bias;     // V-1

  ParamList params();

  /// H x (D+1); column i is the hidden state used to predict word i (0-based),
  /// the last column is the full-document representation.
  Matrix hidden_states(const Sequence& seq) const;
  double word_logprob(const Vector& h, WordId w) const;
  double doc_logprob(const Sequence& seq) const;
  /// Log of the uniform average of p(ordering) over every distinct ordering
  /// of the bag. Factorial cost: D <= 8 only.
  double bag_logprob_exact(const Histogram& counts) const;
  Vector doc_representation(const Histogram& counts) const;
  Vector doc_representation(const Sequence& seq) const;

  /// Adds d(-log p(seq))/d(theta) into the gradient buffers; returns the NLL.
  double accumulate_gradients(const Sequence& seq);
  /// Zeroes the gradients, backpropagates one document and steps the
  /// optimizer. Returns the NLL before the update.
  double train_step(const Sequence& seq, Optimizer& optimizer);

 private:
  void check_sequence(const Sequence& seq) const;

  BinaryWordTree tree_;
  Activation activation_ = Activation::sigmoid;
};

}  // namespace docnade
