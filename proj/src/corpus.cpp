#include "docnade/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace docnade {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::uint64_t parse_uint(const std::string& s, const std::string& what) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw std::runtime_error("bad " + what + " '" + s + "'");
  return std::stoull(s);
}

std::vector<std::string> parse_labels(const std::string& field) {
  std::vector<std::string> labels;
  if (field.empty()) return labels;
  for (auto& l : split(field, ',')) {
    if (!l.empty()) labels.push_back(std::move(l));
  }
  return labels;
}

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ',';
    out += labels[i];
  }
  return out;
}

template <typename LineFn>
void for_each_line(const std::filesystem::path& path, LineFn fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      fn(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> frequencies)
    : tokens_(std::move(tokens)), frequencies_(std::move(frequencies)) {
  if (frequencies_.empty()) frequencies_.assign(tokens_.size(), 0);
  if (frequencies_.size() != tokens_.size())
    throw std::invalid_argument("vocabulary: token/frequency count mismatch");
  index_.reserve(tokens_.size());
  for (WordId i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw std::invalid_argument("vocabulary: empty token at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], i).second)
      throw std::invalid_argument("vocabulary: duplicate token '" + tokens_[i] + "'");
  }
}

const std::string& Vocabulary::token(WordId id) const {
  if (id >= tokens_.size()) throw std::out_of_range("unknown word id " + std::to_string(id));
  return tokens_[id];
}

std::optional<WordId> Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a("");
  for (const auto& t : tokens_) {
    h = fnv1a(t, h);
    h = fnv1a("\n", h);
  }
  return h;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> freqs;
  for_each_line(path, [&](const std::string& line) {
    auto fields = split(line, '\t');
    tokens.push_back(fields[0]);
    freqs.push_back(fields.size() > 1 ? parse_uint(fields[1], "frequency") : 0);
  });
  return Vocabulary(std::move(tokens), std::move(freqs));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(frequencies_[i]);
    out += '\n';
  }
  write_file(path, out);
}

std::size_t Document::length() const {
  return is_sequence() ? ids.size() : histogram_total(counts);
}

Histogram Document::histogram() const {
  return is_sequence() ? histogram_of(ids) : counts;
}

std::size_t histogram_total(const Histogram& h) {
  std::size_t total = 0;
  for (const auto& [w, n] : h) total += n;
  return total;
}

Histogram histogram_of(const Sequence& seq) {
  Histogram h;
  for (WordId w : seq) ++h[w];
  return h;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& tokenized_docs,
                       std::size_t max_size) {
  if (max_size == 0) throw std::invalid_argument("max_size must be >= 1");
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& doc : tokenized_docs)
    for (const auto& tok : doc) ++freq[tok];
  if (freq.empty()) throw std::invalid_argument("empty corpus");

  std::vector<std::pair<std::string, std::uint64_t>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (entries.size() > max_size) entries.resize(max_size);

  std::vector<std::string> tokens;
  std::vector<std::uint64_t> freqs;
  for (auto& [t, f] : entries) {
    tokens.push_back(t);
    freqs.push_back(f);
  }
  return Vocabulary(std::move(tokens), std::move(freqs));
}

Histogram log_count_transform(const Histogram& counts, LogBase base) {
  Histogram out;
  for (const auto& [w, n] : counts) {
    double x = base == LogBase::natural ? std::log1p(static_cast<double>(n))
                                        : std::log10(1.0 + static_cast<double>(n));
    auto m = static_cast<std::uint32_t>(std::lround(x));
    if (m > 0) out.emplace(w, m);
  }
  return out;
}

Sequence sample_ordering(const Histogram& counts, Rng& rng) {
  Sequence seq;
  seq.reserve(histogram_total(counts));
  for (const auto& [w, n] : counts) seq.insert(seq.end(), n, w);
  if (seq.empty()) throw std::invalid_argument("empty document");
  std::shuffle(seq.begin(), seq.end(), rng);
  return seq;
}

SplitContext split_histogram(const Histogram& counts, Rng& rng) {
  SplitContext split;
  split.length = histogram_total(counts);
  if (split.length == 0) throw std::invalid_argument("empty document");
  std::size_t left_total = 0;
  for (const auto& [w, n] : counts) {
    if (n == 0) continue;
    std::uniform_int_distribution<std::uint32_t> pick(0, n);
    std::uint32_t k = pick(rng);
    if (k > 0) split.left.emplace(w, k);
    if (k < n) split.right.emplace(w, n - k);
    left_total += k;
  }
  split.position = left_total + 1;
  return split;
}

SplitContext split_ordering(const Histogram& counts, Rng& rng) {
  Sequence seq = sample_ordering(counts, rng);
  std::uniform_int_distribution<std::size_t> pick(1, seq.size());
  SplitContext split;
  split.length = seq.size();
  split.position = pick(rng);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (k + 1 < split.position)
      ++split.left[seq[k]];
    else
      ++split.right[seq[k]];
  }
  return split;
}

std::vector<Document> group_sentences(const std::vector<Document>& sentences, std::size_t k) {
  if (k == 0) throw std::invalid_argument("group size must be >= 1");
  std::vector<Document> out;
  for (std::size_t start = 0; start < sentences.size(); start += k) {
    Document doc;
    doc.source_id = sentences[start].source_id;
    std::size_t end = std::min(start + k, sentences.size());
    for (std::size_t s = start; s < end; ++s) {
      const auto& sent = sentences[s];
      if (sent.is_sequence()) {
        doc.ids.insert(doc.ids.end(), sent.ids.begin(), sent.ids.end());
      } else if (!sent.counts.empty()) {
        throw std::invalid_argument("group_sentences needs sequence documents");
      }
      for (const auto& l : sent.labels)
        if (std::find(doc.labels.begin(), doc.labels.end(), l) == doc.labels.end()) doc.labels.push_back(l);
    }
    out.push_back(std::move(doc));
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    for (auto& ch : tok) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

const std::set<std::string>& default_stop_words() {
  static const std::set<std::string> words = {
      "a",     "about", "above", "after", "again", "against", "all",   "am",    "an",    "and",
      "any",   "are",   "as",    "at",    "be",    "because", "been",  "before", "being", "below",
      "between", "both", "but",  "by",    "can",   "could",   "did",   "do",    "does",  "doing",
      "down",  "during", "each", "few",   "for",   "from",    "further", "had", "has",   "have",
      "having", "he",   "her",   "here",  "hers",  "herself", "him",   "himself", "his", "how",
      "i",     "if",    "in",    "into",  "is",    "it",      "its",   "itself", "just", "me",
      "more",  "most",  "my",    "myself", "no",   "nor",     "not",   "now",   "of",    "off",
      "on",    "once",  "only",  "or",    "other", "our",     "ours",  "ourselves", "out", "over",
      "own",   "same",  "she",   "should", "so",   "some",    "such",  "than",  "that",  "the",
      "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
      "through", "to",  "too",   "under", "until", "up",      "very",  "was",   "we",    "were",
      "what",  "when",  "where", "which", "while", "who",     "whom",  "why",   "will",  "with",
      "would", "you",   "your",  "yours", "yourself", "yourselves"};
  return words;
}

std::vector<Document> load_bow(const std::filesystem::path& path) {
  std::vector<Document> docs;
  for_each_line(path, [&](const std::string& line) {
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw std::runtime_error("expected 3 tab-separated fields");
    Document doc;
    doc.source_id = fields[0];
    doc.labels = parse_labels(fields[1]);
    std::istringstream in(fields[2]);
    std::string pair;
    while (in >> pair) {
      auto colon = pair.find(':');
      if (colon == std::string::npos) throw std::runtime_error("bad id:count pair '" + pair + "'");
      auto id = parse_uint(pair.substr(0, colon), "word id");
      auto n = parse_uint(pair.substr(colon + 1), "count");
      if (n == 0) throw std::runtime_error("zero count for word " + std::to_string(id));
      if (!doc.counts.emplace(static_cast<WordId>(id), static_cast<std::uint32_t>(n)).second)
        throw std::runtime_error("duplicate word id " + std::to_string(id));
    }
    docs.push_back(std::move(doc));
  });
  return docs;
}

std::vector<Document> load_seq(const std::filesystem::path& path) {
  std::vector<Document> docs;
  for_each_line(path, [&](const std::string& line) {
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw std::runtime_error("expected 3 tab-separated fields");
    Document doc;
    doc.source_id = fields[0];
    doc.labels = parse_labels(fields[1]);
    std::istringstream in(fields[2]);
    std::string id;
    while (in >> id) doc.ids.push_back(static_cast<WordId>(parse_uint(id, "word id")));
    docs.push_back(std::move(doc));
  });
  return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".bow") return load_bow(path);
  if (ext == ".seq") return load_seq(path);
  throw std::invalid_argument("unknown corpus extension '" + ext + "' (expected .bow or .seq)");
}

void save_bow(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::string out;
  for (const auto& doc : docs) {
    out += doc.source_id;
    out += '\t';
    out += join_labels(doc.labels);
    out += '\t';
    bool first = true;
    for (const auto& [w, n] : doc.histogram()) {
      if (!first) out += ' ';
      first = false;
      out += std::to_string(w) + ':' + std::to_string(n);
    }
    out += '\n';
  }
  write_file(path, out);
}

void save_seq(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::string out;
  for (const auto& doc : docs) {
    if (!doc.is_sequence() && !doc.counts.empty())
      throw std::invalid_argument("save_seq: document " + doc.source_id + " has no word order");
    out += doc.source_id;
    out += '\t';
    out += join_labels(doc.labels);
    out += '\t';
    for (std::size_t i = 0; i < doc.ids.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(doc.ids[i]);
    }
    out += '\n';
  }
  write_file(path, out);
}

void check_ids(const std::vector<Document>& docs, std::size_t vocab_size) {
  for (const auto& doc : docs) {
    for (WordId w : doc.ids)
      if (w >= vocab_size)
        throw std::invalid_argument("document " + doc.source_id + ": word id " + std::to_string(w) +
                                    " outside vocabulary of size " + std::to_string(vocab_size));
    if (!doc.counts.empty() && doc.counts.rbegin()->first >= vocab_size)
      throw std::invalid_argument("document " + doc.source_id + ": word id " +
                                  std::to_string(doc.counts.rbegin()->first) +
                                  " outside vocabulary of size " + std::to_string(vocab_size));
  }
}

}  // namespace docnade
