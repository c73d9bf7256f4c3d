#include "docnade/docnade_lm.hpp"

#include <stdexcept>

namespace docnade {

namespace {

// In-place log-softmax.
void log_softmax(Eigen::Ref<Vector> logits) {
  double lse = log_sum_exp({logits.data(), static_cast<std::size_t>(logits.size())});
  logits.array() -= lse;
}

}  // namespace

DocNadeLmModel::DocNadeLmModel(ClassPartition partition, std::size_t hidden_size, std::size_t order,
                               Activation activation, bool use_doc_context)
    : partition_(std::move(partition)), activation_(activation), use_doc_context_(use_doc_context) {
  const std::size_t V = partition_.vocab_size();
  const std::size_t C = partition_.class_count();
  if (V < 2) throw std::invalid_argument("degenerate vocabulary");
  if (hidden_size == 0) throw std::invalid_argument("hidden size must be >= 1");
  if (order < 2) throw std::invalid_argument("n-gram order must be >= 2");
  doc_embeddings = ParamTensor("W_dn", hidden_size, V);
  lm_embeddings = ParamTensor("W_lm", hidden_size, V + 1);
  for (std::size_t k = 1; k < order; ++k) positions.emplace_back("U" + std::to_string(k), hidden_size, hidden_size);
  hidden_bias = ParamTensor("b", hidden_size);
  class_weights = ParamTensor("class_W", C, hidden_size);
  class_bias = ParamTensor("class_b", C);
  word_weights = ParamTensor("word_W", V, hidden_size);
  word_bias = ParamTensor("word_b", V);
}

DocNadeLmModel DocNadeLmModel::create(ClassPartition partition, std::size_t hidden_size, std::size_t order,
                                      Activation activation, bool use_doc_context, Rng& rng) {
  DocNadeLmModel m(std::move(partition), hidden_size, order, activation, use_doc_context);
  // The document embeddings are drawn even when unused so that the paired
  // FFN ablation shares every other initial parameter with the full model.
  init_params(m.doc_embeddings, InitScheme::uniform_fan, rng);
  if (!use_doc_context) m.doc_embeddings.value.setZero();
  init_params(m.lm_embeddings, InitScheme::uniform_fan, rng);
  for (auto& u : m.positions) init_params(u, InitScheme::uniform_fan, rng);
  init_params(m.class_weights, InitScheme::uniform_fan, rng);
  init_params(m.word_weights, InitScheme::uniform_fan, rng);
  return m;
}

ParamList DocNadeLmModel::params() {
  ParamList out{&doc_embeddings, &lm_embeddings};
  for (auto& u : positions) out.push_back(&u);
  out.insert(out.end(), {&hidden_bias, &class_weights, &class_bias, &word_weights, &word_bias});
  return out;
}

WordId DocNadeLmModel::context_word(const Sequence& seq, std::size_t position, std::size_t k) const {
  return position < k ? padding_id() : seq[position - k];
}

Vector DocNadeLmModel::lm_term(const Sequence& seq, std::size_t position) const {
  Vector lm = Vector::Zero(static_cast<Eigen::Index>(hidden_size()));
  for (std::size_t k = 1; k <= positions.size(); ++k)
    lm.noalias() += positions[k - 1].value * lm_embeddings.value.col(context_word(seq, position, k));
  return lm;
}

DocNadeLmModel::HiddenTerms DocNadeLmModel::hidden_terms(const Sequence& history) const {
  for (WordId w : history)
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
  HiddenTerms t;
  t.doc = Vector::Zero(static_cast<Eigen::Index>(hidden_size()));
  if (use_doc_context_)
    for (WordId w : history) t.doc += doc_embeddings.value.col(w);
  t.lm = lm_term(history, history.size());
  return t;
}

Vector DocNadeLmModel::hidden(const Sequence& history, std::size_t position) const {
  if (position != history.size() + 1)
    throw std::invalid_argument("history length " + std::to_string(history.size()) +
                                " does not match position " + std::to_string(position));
  auto t = hidden_terms(history);
  Vector h = hidden_bias.value.col(0);
  if (use_doc_context_) h += t.doc;
  h += t.lm;
  apply_activation(activation_, h);
  return h;
}

double DocNadeLmModel::class_logprob(const Vector& h, std::size_t cls) const {
  if (cls >= partition_.class_count()) throw std::out_of_range("unknown class");
  Vector logits = class_bias.value.col(0) + class_weights.value * h;
  log_softmax(logits);
  return logits[static_cast<Eigen::Index>(cls)];
}

double DocNadeLmModel::word_logprob(const Vector& h, WordId w) const {
  if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
  const auto cls = partition_.class_of(w);
  const auto& members = partition_.members(cls);
  Vector logits(static_cast<Eigen::Index>(members.size()));
  for (std::size_t s = 0; s < members.size(); ++s)
    logits[static_cast<Eigen::Index>(s)] = word_bias.value(members[s], 0) + word_weights.value.row(members[s]).dot(h);
  log_softmax(logits);
  return class_logprob(h, cls) + logits[partition_.slot_of(w)];
}

double DocNadeLmModel::doc_logprob(const Sequence& seq) const {
  if (seq.empty()) throw std::invalid_argument("empty document");
  for (WordId w : seq)
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
  Vector doc = Vector::Zero(static_cast<Eigen::Index>(hidden_size()));
  double logp = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    Vector h = hidden_bias.value.col(0);
    if (use_doc_context_) h += doc;
    h += lm_term(seq, i);
    apply_activation(activation_, h);
    logp += word_logprob(h, seq[i]);
    if (use_doc_context_) doc += doc_embeddings.value.col(seq[i]);
  }
  return logp;
}

double DocNadeLmModel::accumulate_gradients(const Sequence& seq) {
  if (seq.empty()) throw std::invalid_argument("empty document");
  for (WordId w : seq)
    if (w >= vocab_size()) throw std::out_of_range("unknown word " + std::to_string(w));
  const auto H = static_cast<Eigen::Index>(hidden_size());
  const auto D = static_cast<Eigen::Index>(seq.size());

  Matrix delta(H, D);
  Vector doc = Vector::Zero(H);
  Vector dh(H);
  double nll = 0.0;
  for (Eigen::Index i = 0; i < D; ++i) {
    const auto pos = static_cast<std::size_t>(i);
    const WordId w = seq[pos];
    Vector h = hidden_bias.value.col(0);
    if (use_doc_context_) h += doc;
    h += lm_term(seq, pos);
    apply_activation(activation_, h);

    // Class level.
    const auto cls = partition_.class_of(w);
    Vector class_logits = class_bias.value.col(0) + class_weights.value * h;
    log_softmax(class_logits);
    nll -= class_logits[cls];
    Vector dclass = class_logits.array().exp();
    dclass[cls] -= 1.0;
    class_bias.grad.col(0) += dclass;
    class_weights.grad.noalias() += dclass * h.transpose();
    dh.noalias() = class_weights.value.transpose() * dclass;

    // Word level, only inside the target's class.
    const auto& members = partition_.members(cls);
    Vector word_logits(static_cast<Eigen::Index>(members.size()));
    for (std::size_t s = 0; s < members.size(); ++s)
      word_logits[static_cast<Eigen::Index>(s)] =
          word_bias.value(members[s], 0) + word_weights.value.row(members[s]).dot(h);
    log_softmax(word_logits);
    const auto slot = partition_.slot_of(w);
    nll -= word_logits[slot];
    for (std::size_t s = 0; s < members.size(); ++s) {
      double d = std::exp(word_logits[static_cast<Eigen::Index>(s)]) - (s == slot ? 1.0 : 0.0);
      word_bias.grad(members[s], 0) += d;
      word_weights.grad.row(members[s]) += d * h.transpose();
      dh += d * word_weights.value.row(members[s]).transpose();
    }

    scale_by_derivative(activation_, h, dh);
    delta.col(i) = dh;
    hidden_bias.grad.col(0) += dh;
    for (std::size_t k = 1; k <= positions.size(); ++k) {
      const WordId ctx = context_word(seq, pos, k);
      positions[k - 1].grad.noalias() += dh * lm_embeddings.value.col(ctx).transpose();
      lm_embeddings.grad.col(ctx).noalias() += positions[k - 1].value.transpose() * dh;
    }
    if (use_doc_context_) doc += doc_embeddings.value.col(w);
  }

  if (use_doc_context_) {
    Vector suffix = Vector::Zero(H);
    for (Eigen::Index k = D - 1; k >= 0; --k) {
      doc_embeddings.grad.col(seq[static_cast<std::size_t>(k)]) += suffix;
      suffix += delta.col(k);
    }
  }
  return nll;
}

double DocNadeLmModel::train_step(const Sequence& seq, Optimizer& optimizer) {
  auto ps = params();
  for (ParamTensor* p : ps) p->zero_grad();
  double nll = accumulate_gradients(seq);
  optimizer.step(ps);
  return nll;
}

}  // namespace docnade
