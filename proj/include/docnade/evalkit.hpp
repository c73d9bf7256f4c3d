#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "docnade/corpus.hpp"
#include "docnade/deep_docnade.hpp"
#include "docnade/docnade.hpp"
#include "docnade/nn_core.hpp"

namespace docnade {

struct PerplexityReport {
  double perplexity = 0.0;
  std::size_t n_docs = 0;
  std::size_t n_words = 0;
  std::size_t ensemble_size = 1;
  std::vector<double> logprobs;  // per document, same order as the input
  std::vector<std::size_t> lengths;
};

/// exp(-(1/T) sum_t log p(v_t) / |v_t|): the mean over documents of the
/// per-word log-likelihood, not the pooled per-word average.
PerplexityReport perplexity(std::vector<double> logprobs, std::vector<std::size_t> lengths);
PerplexityReport perplexity(const std::function<double(const Document&)>& logprob,
                            const std::vector<Document>& docs, std::size_t threads = 1);

struct EnsembleEvalOptions {
  EnsembleSpec spec;
  /// Evaluate only the first `max_docs` documents; 0 evaluates all of them.
  std::size_t max_docs = 0;
  std::size_t threads = 1;
};

/// Each document scored by log-mean-exp over M orderings seeded from
/// (source_id, spec.seed).
PerplexityReport ensemble_perplexity(const DeepDocNadeModel& model, const std::vector<Document>& docs,
                                     const EnsembleEvalOptions& options);
PerplexityReport ensemble_perplexity(const DocNadeModel& model, const std::vector<Document>& docs,
                                     const EnsembleEvalOptions& options);

// ---------------------------------------------------------------------------
// Retrieval

using LabelSet = std::vector<std::uint32_t>;

struct PRPoint {
  std::size_t cutoff = 0;
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;
  std::size_t n_queries = 0;
  std::size_t skipped_queries = 0;  // queries without labels
  std::size_t zero_norm_vectors = 0;
  std::size_t absent_labels = 0;    // query labels no database doc carries
};

/// Cutoffs {1, 2, 5, 10, 20, 50, ...} below `db_size`, plus `db_size` and the
/// given relevant-set sizes, sorted and de-duplicated.
std::vector<std::size_t> default_cutoffs(std::size_t db_size, std::span<const std::size_t> relevant_counts = {});

/// Relevant-set sizes of every (query, label) pair; feeds default_cutoffs.
std::vector<std::size_t> relevant_counts(const std::vector<LabelSet>& query_labels,
                                         const std::vector<LabelSet>& db_labels);

/// Cosine similarity in [-1, 1]; -inf when either vector has zero norm.
double cosine_similarity(const Vector& a, const Vector& b);

/// Ranks the database by cosine similarity to each query (ties by database
/// index) and averages precision/recall at each cutoff, first over the
/// query's labels and then over queries.
PRCurve retrieval_pr(const std::vector<Vector>& queries, const std::vector<Vector>& database,
                     const std::vector<LabelSet>& query_labels, const std::vector<LabelSet>& db_labels,
                     std::span<const std::size_t> cutoffs, std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Embedding inspection

struct Neighbor {
  WordId word = 0;
  double similarity = 0.0;
};

struct NeighborResult {
  std::vector<Neighbor> neighbors;
  std::size_t zero_norm_excluded = 0;
};

/// The k columns of `embeddings` closest to column w by cosine similarity,
/// excluding w; ties by id.
NeighborResult nearest_words(const Matrix& embeddings, WordId w, std::size_t k);

/// The top_k words by descending signed weight in row `unit`; ties by id.
std::vector<WordId> hidden_unit_topics(const Matrix& embeddings, std::size_t unit, std::size_t top_k = 10);

}  // namespace docnade
