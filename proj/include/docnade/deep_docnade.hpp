#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "docnade/corpus.hpp"
#include "docnade/nn_core.hpp"

namespace docnade {

/// Number of word orderings averaged when scoring a bag of words.
struct EnsembleSpec {
  std::size_t orderings = 1;  // M
  std::uint64_t seed = 0;
};

struct EnsembleResult {
  double logprob = 0.0;
  std::vector<double> members;  // log p of each sampled ordering
};

/// log((1/M) sum_m p(ordering_m)) for M orderings drawn from `rng`.
EnsembleResult ensemble_logprob(const std::function<double(const Sequence&)>& ordered_logprob,
                                const Histogram& counts, std::size_t orderings, Rng& rng);

enum class SplitMode {
  histogram,  // per-word uniform split of the counts (fast approximation)
  ordering,   // shuffle, then split the sequence at i ~ U{1..D}
};

std::string to_string(SplitMode m);
SplitMode parse_split_mode(std::string_view name);

/// Multi-layer DocNADE with a flat softmax output, trained on random
/// context/target splits of each document.
class DeepDocNadeModel {
 public:
  static constexpr std::size_t kMaxDepth = 3;

  DeepDocNadeModel() = default;
  /// Zero-initialized. `hidden_sizes` lists H_1..H_N, 1 <= N <= 3.
  DeepDocNadeModel(std::size_t vocab_size, std::vector<std::size_t> hidden_sizes,
                   Activation activation = Activation::tanh);
  static DeepDocNadeModel create(std::size_t vocab_size, std::vector<std::size_t> hidden_sizes,
                                 Activation activation, Rng& rng);

  std::size_t vocab_size() const { return static_cast<std::size_t>(output_bias.value.rows()); }
  std::size_t depth() const { return weights.size(); }
  std::vector<std::size_t> hidden_sizes() const;
  Activation activation() const { return activation_; }

  std::vector<ParamTensor> weights;  // W1: H1 x V, then Wn: Hn x H(n-1)
  std::vector<ParamTensor> biases;   // c1..cN
  ParamTensor output_weights;        // V x H_N
  ParamTensor output_bias;           // V

  ParamList params();

  struct Activations {
    std::vector<Vector> hidden;  // h1..hN
    Vector log_probs;            // log p(w | context) for every w
  };
  Activations forward(const Histogram& context) const;
  /// log softmax entry for w given the top hidden layer. O(V H).
  double word_logprob(const Vector& top, WordId w) const;

  /// D / (D - i + 1).
  static double split_weight(std::size_t length, std::size_t position);
  /// Rescaled NLL of the right-side words given the left-side histogram.
  double split_loss(const SplitContext& split) const;
  double accumulate_split_gradients(const SplitContext& split);

  /// Draws a split of `counts` (resampling empty right sides in histogram
  /// mode), backpropagates the split loss and steps the optimizer.
  double train_step(const Histogram& counts, Rng& rng, Optimizer& optimizer,
                    SplitMode mode = SplitMode::histogram);

  /// Chain-rule log-likelihood of one ordering.
  double ordered_doc_logprob(const Sequence& seq) const;
  /// Ensemble over M orderings seeded from (source_id, spec.seed).
  EnsembleResult ensemble_logprob(const Histogram& counts, const EnsembleSpec& spec,
                                  std::string_view source_id) const;

  /// Top hidden layer for the full histogram (retrieval features).
  Vector doc_representation(const Histogram& counts) const;

 private:
  void top_from_first(Vector first, std::vector<Vector>& hidden) const;

  Activation activation_ = Activation::tanh;
};

/// Draws a split with a non-empty right side.
SplitContext draw_split(const Histogram& counts, Rng& rng, SplitMode mode);

}  // namespace docnade
