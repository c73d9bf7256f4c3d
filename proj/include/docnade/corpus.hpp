#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace docnade {

using WordId = std::uint32_t;
using Rng = std::mt19937_64;

/// Sparse word-count histogram, ordered by word id.
using Histogram = std::map<WordId, std::uint32_t>;

/// Word-id sequence (one ordering of a document).
using Sequence = std::vector<WordId>;

/// Bidirectional token <-> id map. Ids are dense in [0, size()); the id
/// size() is reserved as the LM context padding id and is never a token.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> frequencies);

  std::size_t size() const { return tokens_.size(); }
  WordId padding_id() const { return static_cast<WordId>(tokens_.size()); }

  const std::string& token(WordId id) const;
  std::optional<WordId> lookup(const std::string& token) const;
  std::uint64_t frequency(WordId id) const { return frequencies_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint64_t>& frequencies() const { return frequencies_; }

  /// FNV-1a over the newline-joined token list. Pins models to a vocabulary.
  std::uint64_t hash() const;

  /// One token per line, optional tab-separated frequency column.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequencies_;
  std::unordered_map<std::string, WordId> index_;
};

struct Document {
  std::string source_id;
  std::vector<std::string> labels;
  // Exactly one of the two forms is meaningful; `ids` wins when non-empty.
  Sequence ids;
  Histogram counts;

  bool is_sequence() const { return !ids.empty(); }
  /// Total word count D.
  std::size_t length() const;
  /// Bag form, derived from `ids` when the document is a sequence.
  Histogram histogram() const;
};

/// Count histograms for a random context/target split of a document.
struct SplitContext {
  Histogram left;
  Histogram right;
  std::size_t position = 1;  // i, 1-based: the left side holds i - 1 words
  std::size_t length = 0;    // D
};

std::size_t histogram_total(const Histogram& h);
Histogram histogram_of(const Sequence& seq);

/// Keeps the `max_size` most frequent tokens; ties go to the
/// lexicographically smaller token.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& tokenized_docs,
                       std::size_t max_size);

enum class LogBase { natural, ten };

/// n -> round(log(1 + n)); entries that become 0 are removed.
Histogram log_count_transform(const Histogram& counts, LogBase base = LogBase::natural);

/// Uniformly random ordering of the multiset of words in `counts`.
Sequence sample_ordering(const Histogram& counts, Rng& rng);

/// Per-word split: for a word with count n, k ~ U{0..n} go to the left side.
SplitContext split_histogram(const Histogram& counts, Rng& rng);

/// Exact procedure: shuffle the words, draw i ~ U{1..D}, split the sequence.
SplitContext split_ordering(const Histogram& counts, Rng& rng);

/// Concatenates consecutive non-overlapping blocks of k sentences; a final
/// partial block is kept.
std::vector<Document> group_sentences(const std::vector<Document>& sentences, std::size_t k);

/// Whitespace tokenizer; lower-cases ASCII.
std::vector<std::string> tokenize(const std::string& text);

/// Small built-in English stop-word list.
const std::set<std::string>& default_stop_words();

// Corpus files. See README for the line formats.
std::vector<Document> load_bow(const std::filesystem::path& path);
std::vector<Document> load_seq(const std::filesystem::path& path);
/// Dispatches on the extension (.bow or .seq).
std::vector<Document> load_corpus(const std::filesystem::path& path);
void save_bow(const std::filesystem::path& path, const std::vector<Document>& docs);
void save_seq(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Throws if any word id is >= vocab_size.
void check_ids(const std::vector<Document>& docs, std::size_t vocab_size);

}  // namespace docnade
