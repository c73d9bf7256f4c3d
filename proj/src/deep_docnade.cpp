#include "docnade/deep_docnade.hpp"

#include <cmath>
#include <stdexcept>

namespace docnade {

EnsembleResult ensemble_logprob(const std::function<double(const Sequence&)>& ordered_logprob,
                                const Histogram& counts, std::size_t orderings, Rng& rng) {
  if (orderings == 0) throw std::invalid_argument("ensemble size must be >= 1");
  EnsembleResult r;
  r.members.reserve(orderings);
  for (std::size_t m = 0; m < orderings; ++m) r.members.push_back(ordered_logprob(sample_ordering(counts, rng)));
  r.logprob = log_sum_exp(r.members) - std::log(static_cast<double>(orderings));
  return r;
}

std::string to_string(SplitMode m) { return m == SplitMode::histogram ? "histogram" : "ordering"; }

SplitMode parse_split_mode(std::string_view name) {
  if (name == "histogram") return SplitMode::histogram;
  if (name == "ordering") return SplitMode::ordering;
  throw std::invalid_argument("unknown split mode '" + std::string(name) + "'");
}

SplitContext draw_split(const Histogram& counts, Rng& rng, SplitMode mode) {
  if (mode == SplitMode::ordering) return split_ordering(counts, rng);
  for (;;) {
    SplitContext s = split_histogram(counts, rng);
    if (!s.right.empty()) return s;
  }
}

DeepDocNadeModel::DeepDocNadeModel(std::size_t vocab_size, std::vector<std::size_t> hidden_sizes,
                                   Activation activation)
    : activation_(activation) {
  if (vocab_size < 2) throw std::invalid_argument("degenerate vocabulary");
  if (hidden_sizes.empty() || hidden_sizes.size() > kMaxDepth)
    throw std::invalid_argument("unsupported depth " + std::to_string(hidden_sizes.size()));
  std::size_t fan_in = vocab_size;
  for (std::size_t n = 0; n < hidden_sizes.size(); ++n) {
    if (hidden_sizes[n] == 0) throw std::invalid_argument("hidden size must be >= 1");
    weights.emplace_back("W" + std::to_string(n + 1), hidden_sizes[n], fan_in);
    biases.emplace_back("c" + std::to_string(n + 1), hidden_sizes[n]);
    fan_in = hidden_sizes[n];
  }
  output_weights = ParamTensor("out_W", vocab_size, fan_in);
  output_bias = ParamTensor("out_b", vocab_size);
}

DeepDocNadeModel DeepDocNadeModel::create(std::size_t vocab_size, std::vector<std::size_t> hidden_sizes,
                                          Activation activation, Rng& rng) {
  DeepDocNadeModel m(vocab_size, std::move(hidden_sizes), activation);
  for (auto& w : m.weights) init_params(w, InitScheme::uniform_fan, rng);
  init_params(m.output_weights, InitScheme::uniform_fan, rng);
  return m;
}

std::vector<std::size_t> DeepDocNadeModel::hidden_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& b : biases) out.push_back(static_cast<std::size_t>(b.value.rows()));
  return out;
}

ParamList DeepDocNadeModel::params() {
  ParamList out;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    out.push_back(&weights[n]);
    out.push_back(&biases[n]);
  }
  out.push_back(&output_weights);
  out.push_back(&output_bias);
  return out;
}

void DeepDocNadeModel::top_from_first(Vector first, std::vector<Vector>& hidden) const {
  hidden.clear();
  apply_activation(activation_, first);
  hidden.push_back(std::move(first));
  for (std::size_t n = 1; n < weights.size(); ++n) {
    Vector a = biases[n].value.col(0) + weights[n].value * hidden.back();
    apply_activation(activation_, a);
    hidden.push_back(std::move(a));
  }
}

DeepDocNadeModel::Activations DeepDocNadeModel::forward(const Histogram& context) const {
  Vector pre = biases[0].value.col(0);
  for (const auto& [w, n] : context) {
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
    pre += static_cast<double>(n) * weights[0].value.col(w);
  }
  Activations out;
  top_from_first(std::move(pre), out.hidden);
  Vector logits = output_bias.value.col(0) + output_weights.value * out.hidden.back();
  double lse = log_sum_exp({logits.data(), static_cast<std::size_t>(logits.size())});
  out.log_probs = logits.array() - lse;
  return out;
}

double DeepDocNadeModel::word_logprob(const Vector& top, WordId w) const {
  if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
  Vector logits = output_bias.value.col(0) + output_weights.value * top;
  return logits[w] - log_sum_exp({logits.data(), static_cast<std::size_t>(logits.size())});
}

double DeepDocNadeModel::split_weight(std::size_t length, std::size_t position) {
  if (position < 1 || position > length) throw std::invalid_argument("split position out of range");
  return static_cast<double>(length) / static_cast<double>(length - position + 1);
}

double DeepDocNadeModel::split_loss(const SplitContext& split) const {
  std::size_t targets = histogram_total(split.right);
  if (targets == 0) throw std::invalid_argument("empty target side");
  auto act = forward(split.left);
  double sum = 0.0;
  for (const auto& [w, n] : split.right) {
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
    sum -= static_cast<double>(n) * act.log_probs[w];
  }
  return split_weight(split.length, split.position) * sum;
}

double DeepDocNadeModel::accumulate_split_gradients(const SplitContext& split) {
  const std::size_t targets = histogram_total(split.right);
  if (targets == 0) throw std::invalid_argument("empty target side");
  auto act = forward(split.left);
  const double scale = split_weight(split.length, split.position);

  // d/dlogits of scale * sum_w r_w (-log p_w) = scale * (R p - r).
  Vector dlogits = act.log_probs.array().exp() * static_cast<double>(targets);
  double loss = 0.0;
  for (const auto& [w, n] : split.right) {
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
    loss -= static_cast<double>(n) * act.log_probs[w];
    dlogits[w] -= static_cast<double>(n);
  }
  dlogits *= scale;

  const Vector& top = act.hidden.back();
  output_bias.grad.col(0) += dlogits;
  output_weights.grad.noalias() += dlogits * top.transpose();
  Vector dh = output_weights.value.transpose() * dlogits;

  for (std::size_t n = weights.size(); n-- > 0;) {
    scale_by_derivative(activation_, act.hidden[n], dh);
    biases[n].grad.col(0) += dh;
    if (n > 0) {
      weights[n].grad.noalias() += dh * act.hidden[n - 1].transpose();
      dh = weights[n].value.transpose() * dh;
    } else {
      for (const auto& [w, c] : split.left) weights[0].grad.col(w) += static_cast<double>(c) * dh;
    }
  }
  return scale * loss;
}

double DeepDocNadeModel::train_step(const Histogram& counts, Rng& rng, Optimizer& optimizer, SplitMode mode) {
  if (histogram_total(counts) == 0) throw std::invalid_argument("empty document");
  SplitContext split = draw_split(counts, rng, mode);
  auto ps = params();
  for (ParamTensor* p : ps) p->zero_grad();
  double loss = accumulate_split_gradients(split);
  optimizer.step(ps);
  return loss;
}

double DeepDocNadeModel::ordered_doc_logprob(const Sequence& seq) const {
  if (seq.empty()) throw std::invalid_argument("empty document");
  Vector pre = biases[0].value.col(0);
  std::vector<Vector> hidden;
  double logp = 0.0;
  for (WordId w : seq) {
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
    top_from_first(pre, hidden);
    logp += word_logprob(hidden.back(), w);
    pre += weights[0].value.col(w);
  }
  return logp;
}

EnsembleResult DeepDocNadeModel::ensemble_logprob(const Histogram& counts, const EnsembleSpec& spec,
                                                  std::string_view source_id) const {
  Rng rng(derive_seed(source_id, spec.seed));
  return docnade::ensemble_logprob([this](const Sequence& s) { return ordered_doc_logprob(s); }, counts,
                                   spec.orderings, rng);
}

Vector DeepDocNadeModel::doc_representation(const Histogram& counts) const {
  return forward(counts).hidden.back();
}

}  // namespace docnade
