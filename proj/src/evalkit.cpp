#include "docnade/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace docnade {

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// written by exactly one worker, so results do not depend on the split.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

PerplexityReport perplexity(std::vector<double> logprobs, std::vector<std::size_t> lengths) {
  if (logprobs.empty()) throw std::invalid_argument("perplexity: empty document set");
  if (logprobs.size() != lengths.size()) throw std::invalid_argument("perplexity: size mismatch");
  PerplexityReport r;
  double sum = 0.0;
  for (std::size_t t = 0; t < logprobs.size(); ++t) {
    if (lengths[t] == 0) throw std::invalid_argument("perplexity: empty document");
    sum += logprobs[t] / static_cast<double>(lengths[t]);
    r.n_words += lengths[t];
  }
  r.n_docs = logprobs.size();
  r.perplexity = std::exp(-sum / static_cast<double>(logprobs.size()));
  r.logprobs = std::move(logprobs);
  r.lengths = std::move(lengths);
  return r;
}

PerplexityReport perplexity(const std::function<double(const Document&)>& logprob,
                            const std::vector<Document>& docs, std::size_t threads) {
  std::vector<double> lps(docs.size());
  std::vector<std::size_t> lengths(docs.size());
  parallel_for(docs.size(), threads, [&](std::size_t i) {
    lengths[i] = docs[i].length();
    if (lengths[i] == 0) throw std::invalid_argument("perplexity: empty document " + docs[i].source_id);
    lps[i] = logprob(docs[i]);
  });
  return perplexity(std::move(lps), std::move(lengths));
}

namespace {

template <typename Model>
PerplexityReport ensemble_perplexity_impl(const Model& model, const std::vector<Document>& docs,
                                          const EnsembleEvalOptions& options,
                                          double (Model::*ordered)(const Sequence&) const) {
  if (options.spec.orderings == 0) throw std::invalid_argument("ensemble size must be >= 1");
  std::size_t n = docs.size();
  if (options.max_docs > 0) n = std::min(n, options.max_docs);
  std::vector<Document> subset(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n));
  auto report = perplexity(
      [&](const Document& d) {
        Rng rng(derive_seed(d.source_id, options.spec.seed));
        return ensemble_logprob([&](const Sequence& s) { return (model.*ordered)(s); }, d.histogram(),
                                options.spec.orderings, rng)
            .logprob;
      },
      subset, options.threads);
  report.ensemble_size = options.spec.orderings;
  return report;
}

}  // namespace

PerplexityReport ensemble_perplexity(const DeepDocNadeModel& model, const std::vector<Document>& docs,
                                     const EnsembleEvalOptions& options) {
  return ensemble_perplexity_impl(model, docs, options, &DeepDocNadeModel::ordered_doc_logprob);
}

PerplexityReport ensemble_perplexity(const DocNadeModel& model, const std::vector<Document>& docs,
                                     const EnsembleEvalOptions& options) {
  return ensemble_perplexity_impl(model, docs, options, &DocNadeModel::doc_logprob);
}

std::vector<std::size_t> default_cutoffs(std::size_t db_size, std::span<const std::size_t> relevant) {
  std::vector<std::size_t> cuts;
  if (db_size == 0) return cuts;
  for (std::size_t scale = 1; scale < db_size; scale *= 10) {
    for (std::size_t m : {1, 2, 5}) {
      std::size_t c = m * scale;
      if (c < db_size) cuts.push_back(c);
    }
  }
  cuts.push_back(db_size);
  for (std::size_t r : relevant)
    if (r >= 1 && r <= db_size) cuts.push_back(r);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

std::vector<std::size_t> relevant_counts(const std::vector<LabelSet>& query_labels,
                                         const std::vector<LabelSet>& db_labels) {
  std::vector<std::size_t> out;
  for (const auto& labels : query_labels) {
    for (auto label : labels) {
      std::size_t n = 0;
      for (const auto& d : db_labels)
        if (std::find(d.begin(), d.end(), label) != d.end()) ++n;
      out.push_back(n);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return -std::numeric_limits<double>::infinity();
  return a.dot(b) / (na * nb);
}

PRCurve retrieval_pr(const std::vector<Vector>& queries, const std::vector<Vector>& database,
                     const std::vector<LabelSet>& query_labels, const std::vector<LabelSet>& db_labels,
                     std::span<const std::size_t> cutoffs, std::size_t threads) {
  if (queries.size() != query_labels.size() || database.size() != db_labels.size())
    throw std::invalid_argument("retrieval: label/representation count mismatch");
  const std::size_t N = database.size();
  for (std::size_t c : cutoffs)
    if (c == 0 || c > N) throw std::invalid_argument("retrieval: cutoff out of range");
  if (!std::is_sorted(cutoffs.begin(), cutoffs.end()))
    throw std::invalid_argument("retrieval: cutoffs must be sorted");
  for (const auto& v : queries)
    if (!database.empty() && v.size() != database.front().size())
      throw std::invalid_argument("retrieval: representation width mismatch");
  for (const auto& v : database)
    if (v.size() != database.front().size()) throw std::invalid_argument("retrieval: representation width mismatch");

  PRCurve curve;
  for (const auto& v : database)
    if (v.norm() == 0.0) ++curve.zero_norm_vectors;
  for (const auto& v : queries)
    if (v.norm() == 0.0) ++curve.zero_norm_vectors;

  const std::size_t Q = queries.size();
  const std::size_t K = cutoffs.size();
  std::vector<std::vector<double>> q_prec(Q, std::vector<double>(K, 0.0));
  std::vector<std::vector<double>> q_rec(Q, std::vector<double>(K, 0.0));
  std::vector<std::size_t> q_absent(Q, 0);

  parallel_for(Q, threads, [&](std::size_t q) {
    const auto& labels = query_labels[q];
    if (labels.empty()) return;
    std::vector<double> sim(N);
    for (std::size_t d = 0; d < N; ++d) sim[d] = cosine_similarity(queries[q], database[d]);
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });

    for (auto label : labels) {
      std::vector<char> relevant(N, 0);
      std::size_t total = 0;
      for (std::size_t d = 0; d < N; ++d) {
        const auto& dl = db_labels[d];
        if (std::find(dl.begin(), dl.end(), label) != dl.end()) {
          relevant[d] = 1;
          ++total;
        }
      }
      if (total == 0) {
        ++q_absent[q];
        continue;  // contributes zero precision and recall
      }
      std::size_t hits = 0;
      std::size_t rank = 0;
      for (std::size_t k = 0; k < K; ++k) {
        for (; rank < cutoffs[k]; ++rank) hits += relevant[order[rank]];
        q_prec[q][k] += static_cast<double>(hits) / static_cast<double>(cutoffs[k]);
        q_rec[q][k] += static_cast<double>(hits) / static_cast<double>(total);
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      q_prec[q][k] /= static_cast<double>(labels.size());
      q_rec[q][k] /= static_cast<double>(labels.size());
    }
  });

  curve.points.resize(K);
  for (std::size_t k = 0; k < K; ++k) curve.points[k].cutoff = cutoffs[k];
  for (std::size_t q = 0; q < Q; ++q) {
    if (query_labels[q].empty()) {
      ++curve.skipped_queries;
      continue;
    }
    ++curve.n_queries;
    curve.absent_labels += q_absent[q];
    for (std::size_t k = 0; k < K; ++k) {
      curve.points[k].precision += q_prec[q][k];
      curve.points[k].recall += q_rec[q][k];
    }
  }
  if (curve.n_queries > 0) {
    for (auto& p : curve.points) {
      p.precision /= static_cast<double>(curve.n_queries);
      p.recall /= static_cast<double>(curve.n_queries);
    }
  }
  return curve;
}

NeighborResult nearest_words(const Matrix& embeddings, WordId w, std::size_t k) {
  const auto V = static_cast<std::size_t>(embeddings.cols());
  if (w >= V) throw std::out_of_range("unknown word " + std::to_string(w));
  if (k >= V) throw std::invalid_argument("k must be smaller than the vocabulary size");
  NeighborResult result;
  Vector query = embeddings.col(w);
  if (query.norm() == 0.0) throw std::invalid_argument("word " + std::to_string(w) + " has a zero embedding");
  std::vector<Neighbor> all;
  for (WordId v = 0; v < V; ++v) {
    if (v == w) continue;
    Vector col = embeddings.col(v);
    if (col.norm() == 0.0) {
      ++result.zero_norm_excluded;
      continue;
    }
    all.push_back({v, cosine_similarity(query, col)});
  }
  std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      if (a.similarity != b.similarity) return a.similarity > b.similarity;
                      return a.word < b.word;
                    });
  all.resize(take);
  result.neighbors = std::move(all);
  return result;
}

std::vector<WordId> hidden_unit_topics(const Matrix& embeddings, std::size_t unit, std::size_t top_k) {
  if (unit >= static_cast<std::size_t>(embeddings.rows())) throw std::out_of_range("unknown hidden unit");
  std::vector<WordId> words(static_cast<std::size_t>(embeddings.cols()));
  std::iota(words.begin(), words.end(), 0);
  const auto row = static_cast<Eigen::Index>(unit);
  std::size_t take = std::min(top_k, words.size());
  std::partial_sort(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(take), words.end(),
                    [&](WordId a, WordId b) {
                      double wa = embeddings(row, a), wb = embeddings(row, b);
                      if (wa != wb) return wa > wb;
                      return a < b;
                    });
  words.resize(take);
  return words;
}

}  // namespace docnade
