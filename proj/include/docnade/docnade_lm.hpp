#pragma once

#include "docnade/corpus.hpp"
#include "docnade/nn_core.hpp"
#include "docnade/vocab_tree.hpp"

namespace docnade {

/// DocNADE language model. The hidden state before position i is
///
///   h_i = g(b + sum_{k<i} W_dn[:, v_k] + sum_{k=1}^{n-1} U_k W_lm[:, v_{i-k}])
///
/// where context slots before the start of the document read the reserved
/// padding column V of W_lm. The output is a two-level softmax: a class
/// softmax over ceil(sqrt(V)) classes times a word softmax inside the class.
///
/// With `use_doc_context` off the document term is dropped entirely, which
/// gives the plain feed-forward n-gram model.
class DocNadeLmModel {
 public:
  DocNadeLmModel() = default;
  DocNadeLmModel(ClassPartition partition, std::size_t hidden_size, std::size_t order,
                 Activation activation = Activation::sigmoid, bool use_doc_context = true);
  static DocNadeLmModel create(ClassPartition partition, std::size_t hidden_size, std::size_t order,
                               Activation activation, bool use_doc_context, Rng& rng);

  std::size_t vocab_size() const { return partition_.vocab_size(); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(hidden_bias.value.rows()); }
  /// n of the n-gram context.
  std::size_t order() const { return positions.size() + 1; }
  Activation activation() const { return activation_; }
  bool use_doc_context() const { return use_doc_context_; }
  const ClassPartition& partition() const { return partition_; }
  WordId padding_id() const { return static_cast<WordId>(vocab_size()); }

  ParamTensor doc_embeddings;          // W_dn, H x V
  ParamTensor lm_embeddings;           // W_lm, H x (V+1); column V is the pad
  std::vector<ParamTensor> positions;  // U_1..U_{n-1}, each H x H
  ParamTensor hidden_bias;             // b, H
  ParamTensor class_weights;           // C x H
  ParamTensor class_bias;              // C
  ParamTensor word_weights;            // V x H, row w belongs to class_of(w)
  ParamTensor word_bias;               // V

  ParamList params();

  struct HiddenTerms {
    Vector doc;  // sum of W_dn over the whole history
    Vector lm;   // n-gram term
  };
  /// The two pre-activation terms for predicting the word after `history`.
  HiddenTerms hidden_terms(const Sequence& history) const;
  /// Hidden state at 1-based `position`; `history` must hold position-1 words.
  Vector hidden(const Sequence& history, std::size_t position) const;
  Vector hidden(const Sequence& history) const { return hidden(history, history.size() + 1); }

  double class_logprob(const Vector& h, std::size_t cls) const;
  double word_logprob(const Vector& h, WordId w) const;
  double doc_logprob(const Sequence& seq) const;

  double accumulate_gradients(const Sequence& seq);
  double train_step(const Sequence& seq, Optimizer& optimizer);

 private:
  WordId context_word(const Sequence& seq, std::size_t position, std::size_t k) const;
  Vector lm_term(const Sequence& seq, std::size_t position) const;

  ClassPartition partition_;
  Activation activation_ = Activation::sigmoid;
  bool use_doc_context_ = true;
};

}  // namespace docnade
