#include "docnade/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "docnade/corpus.hpp"
#include "docnade/evalkit.hpp"
#include "docnade/model_io.hpp"
#include "docnade/training.hpp"
#include "docnade/vocab_tree.hpp"

namespace docnade::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return hex64(h);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::size_t> parse_sizes(const std::string& s, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      throw CLI::ValidationError(what, "expected a comma-separated list of positive integers, got '" + s + "'");
    out.push_back(std::stoull(item));
    if (out.back() == 0) throw CLI::ValidationError(what, "values must be positive");
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

// ---------------------------------------------------------------------------
// Corpus preparation

struct Prepared {
  std::vector<Document> docs;
  std::size_t skipped_empty = 0;
};

/// Bag-of-words view, optionally log-transformed; empty documents dropped.
Prepared prepare_bags(const std::vector<Document>& raw, bool log_transform, LogBase base) {
  Prepared p;
  for (const auto& d : raw) {
    Document doc;
    doc.source_id = d.source_id;
    doc.labels = d.labels;
    doc.counts = d.histogram();
    if (log_transform) doc.counts = log_count_transform(doc.counts, base);
    if (doc.counts.empty()) {
      ++p.skipped_empty;
      continue;
    }
    p.docs.push_back(std::move(doc));
  }
  return p;
}

Prepared prepare_sequences(const std::vector<Document>& raw, std::size_t group) {
  for (const auto& d : raw)
    if (!d.is_sequence() && !d.counts.empty())
      throw std::invalid_argument("the language model needs a .seq corpus (document " + d.source_id + ")");
  Prepared p;
  for (auto& d : group_sentences(raw, group)) {
    if (d.ids.empty()) {
      ++p.skipped_empty;
      continue;
    }
    p.docs.push_back(std::move(d));
  }
  return p;
}

std::vector<Document> load_checked(const fs::path& path, std::size_t vocab_size) {
  auto docs = load_corpus(path);
  try {
    check_ids(docs, vocab_size);
  } catch (const std::exception& e) {
    throw std::runtime_error("config/corpus mismatch in " + path.string() + ": " + e.what());
  }
  return docs;
}

const Matrix& word_embeddings(const AnyModel& model) {
  switch (model.index()) {
    case 0:
      return std::get<DocNadeModel>(model).embeddings.value;
    case 1:
      return std::get<DeepDocNadeModel>(model).weights[0].value;
    default: {
      const auto& lm = std::get<DocNadeLmModel>(model);
      return lm.use_doc_context() ? lm.doc_embeddings.value : lm.lm_embeddings.value;
    }
  }
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
  std::string input;
  std::string out_prefix;
  std::string vocab;
  std::string vocab_out;
  std::size_t max_vocab = 2000;
  bool stopwords = false;
};

int cmd_ingest(const IngestOptions& o, std::ostream& out) {
  struct RawDoc {
    std::string id;
    std::vector<std::string> labels;
    std::vector<std::string> tokens;
  };
  std::vector<RawDoc> raw;
  std::size_t stop_removed = 0;
  {
    std::ifstream in(o.input);
    if (!in) throw std::runtime_error("cannot open " + o.input);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      RawDoc d;
      auto t1 = line.find('\t');
      auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
      std::string text;
      if (t2 != std::string::npos) {
        d.id = line.substr(0, t1);
        std::stringstream labels(line.substr(t1 + 1, t2 - t1 - 1));
        std::string l;
        while (std::getline(labels, l, ','))
          if (!l.empty()) d.labels.push_back(l);
        text = line.substr(t2 + 1);
      } else {
        d.id = std::to_string(lineno);
        text = line;
      }
      if (d.id.empty()) d.id = std::to_string(lineno);
      for (auto& tok : tokenize(text)) {
        if (o.stopwords && default_stop_words().count(tok)) {
          ++stop_removed;
          continue;
        }
        d.tokens.push_back(std::move(tok));
      }
      raw.push_back(std::move(d));
    }
  }

  Vocabulary vocab;
  if (!o.vocab.empty()) {
    vocab = Vocabulary::load(o.vocab);
  } else {
    std::vector<std::vector<std::string>> token_lists;
    for (const auto& d : raw) token_lists.push_back(d.tokens);
    vocab = build_vocab(token_lists, o.max_vocab);
    vocab.save(o.vocab_out.empty() ? o.out_prefix + ".vocab" : o.vocab_out);
  }

  std::vector<Document> docs;
  std::size_t oov = 0;
  std::size_t kept_tokens = 0;
  std::size_t empty = 0;
  for (const auto& r : raw) {
    Document d;
    d.source_id = r.id;
    d.labels = r.labels;
    for (const auto& tok : r.tokens) {
      if (auto id = vocab.lookup(tok)) {
        d.ids.push_back(*id);
        ++kept_tokens;
      } else {
        ++oov;
      }
    }
    if (d.ids.empty()) {
      ++empty;
      continue;
    }
    docs.push_back(std::move(d));
  }
  if (docs.empty()) throw std::runtime_error("empty corpus");
  save_bow(o.out_prefix + ".bow", docs);
  save_seq(o.out_prefix + ".seq", docs);

  std::ostringstream report;
  report << "input=" << o.input << "\n"
         << "vocab_size=" << vocab.size() << "\n"
         << "vocab_hash=" << hex64(vocab.hash()) << "\n"
         << "docs_read=" << raw.size() << "\n"
         << "docs_kept=" << docs.size() << "\n"
         << "docs_empty_skipped=" << empty << "\n"
         << "tokens_kept=" << kept_tokens << "\n"
         << "oov_tokens_dropped=" << oov << "\n"
         << "stopwords_removed=" << stop_removed << "\n";
  write_text(o.out_prefix + ".ingest_report.txt", report.str());
  out << report.str();
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string config;
  std::string kind;
  std::string train;
  std::string valid;
  std::string vocab;
  std::string out;
  std::size_t hidden = 50;
  std::string hidden_sizes;
  std::size_t ngram = 6;
  std::size_t group = 1;
  std::string activation;
  std::string optimizer = "adam";
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t epochs = 10;
  std::size_t batch = 64;
  std::uint64_t seed = 1234;
  std::size_t patience = 0;
  std::string tree = "random";
  bool no_log_transform = false;
  std::string log_base = "e";
  std::string split_mode = "histogram";
  bool no_doc_context = false;
};

double validation_perplexity(const AnyModel& model, const std::vector<Document>& docs, std::uint64_t seed) {
  EnsembleEvalOptions opts;
  opts.spec = {1, seed};
  switch (model.index()) {
    case 0:
      return ensemble_perplexity(std::get<DocNadeModel>(model), docs, opts).perplexity;
    case 1:
      return ensemble_perplexity(std::get<DeepDocNadeModel>(model), docs, opts).perplexity;
    default: {
      const auto& lm = std::get<DocNadeLmModel>(model);
      return perplexity([&](const Document& d) { return lm.doc_logprob(d.ids); }, docs).perplexity;
    }
  }
}

int cmd_train(const TrainOptions& o, const std::string& resolved_config, std::ostream& out) {
  Vocabulary vocab = Vocabulary::load(o.vocab);
  const std::size_t V = vocab.size();
  const bool lm = o.kind == "docnade_lm";
  const bool log_transform = !lm && !o.no_log_transform;
  const LogBase base = o.log_base == "10" ? LogBase::ten : LogBase::natural;

  auto prepare = [&](const std::string& path) {
    auto raw = load_checked(path, V);
    return lm ? prepare_sequences(raw, o.group) : prepare_bags(raw, log_transform, base);
  };
  Prepared train = prepare(o.train);
  if (train.docs.empty()) throw std::runtime_error("training corpus has no non-empty documents");
  Prepared valid;
  if (!o.valid.empty()) valid = prepare(o.valid);

  Rng rng(o.seed);
  AnyModel model;
  const std::string act_name =
      !o.activation.empty() ? o.activation : (o.kind == "deep_docnade" ? "tanh" : "sigmoid");
  const Activation act = parse_activation(act_name);
  if (o.kind == "docnade") {
    BinaryWordTree tree;
    if (o.tree == "huffman") {
      std::vector<std::uint64_t> freqs = vocab.frequencies();
      for (auto& f : freqs) f = std::max<std::uint64_t>(f, 1);
      tree = build_huffman_tree(freqs);
    } else {
      tree = build_random_tree(V, o.seed);
    }
    model = DocNadeModel::create(std::move(tree), o.hidden, act, rng);
  } else if (o.kind == "deep_docnade") {
    auto sizes = o.hidden_sizes.empty() ? std::vector<std::size_t>{o.hidden}
                                        : parse_sizes(o.hidden_sizes, "--hidden-sizes");
    if (sizes.size() > DeepDocNadeModel::kMaxDepth)
      throw CLI::ValidationError("--hidden-sizes", "unsupported depth " + std::to_string(sizes.size()));
    model = DeepDocNadeModel::create(V, sizes, act, rng);
  } else {
    model = DocNadeLmModel::create(build_class_partition(V), o.hidden, o.ngram, act, !o.no_doc_context, rng);
  }

  OptimizerConfig oc;
  oc.kind = parse_optimizer(o.optimizer);
  oc.lr = o.lr;
  oc.beta1 = o.beta1;
  oc.beta2 = o.beta2;
  oc.epsilon = o.adam_eps;
  Optimizer optimizer(oc);
  BatchOptions batch;
  batch.batch_size = o.batch;
  batch.split_mode = parse_split_mode(o.split_mode);

  std::vector<Histogram> bags;
  std::vector<Sequence> seqs;
  for (const auto& d : train.docs) {
    if (lm)
      seqs.push_back(d.ids);
    else
      bags.push_back(d.counts);
  }

  fs::create_directories(o.out);
  std::ostringstream config;
  config << "# resolved configuration\n" << resolved_config;
  config << "# seed " << o.seed << "\n";
  config << "# input train " << o.train << " " << file_hash(o.train) << "\n";
  if (!o.valid.empty()) config << "# input valid " << o.valid << " " << file_hash(o.valid) << "\n";
  config << "# input vocab " << o.vocab << " " << file_hash(o.vocab) << "\n";
  write_text(fs::path(o.out) / "config.txt", config.str());

  ModelMeta meta;
  meta.vocab_hash = vocab.hash();
  meta.seed = o.seed;
  meta.config = {{"kind", o.kind},       {"optimizer", o.optimizer},       {"lr", fmt(o.lr, 17)},
                 {"epochs", std::to_string(o.epochs)}, {"batch", std::to_string(o.batch)},
                 {"log_transform", log_transform ? (o.log_base == "10" ? "log10" : "ln") : "off"},
                 {"group", std::to_string(o.group)},   {"split_mode", o.split_mode}};

  std::ostringstream log;
  log << "epoch,train_loss,valid_perplexity\n";
  const fs::path model_path = fs::path(o.out) / "model.bin";
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  bool saved = false;
  for (std::size_t epoch = 1; epoch <= o.epochs; ++epoch) {
    double loss = std::visit(
        [&](auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, DocNadeLmModel>)
            return train_epoch(m, seqs, optimizer, batch, rng);
          else
            return train_epoch(m, bags, optimizer, batch, rng);
        },
        model);
    log << epoch << "," << fmt(loss);
    if (!valid.docs.empty()) {
      double ppl = validation_perplexity(model, valid.docs, o.seed);
      log << "," << fmt(ppl);
      if (ppl < best) {
        best = ppl;
        since_best = 0;
        save_model(model, meta, model_path);
        saved = true;
      } else if (o.patience > 0 && ++since_best >= o.patience) {
        log << "\n";
        out << "early stop at epoch " << epoch << "\n";
        break;
      }
    } else {
      log << ",";
    }
    log << "\n";
    out << "epoch " << epoch << " loss " << fmt(loss) << "\n";
  }
  if (!saved) save_model(model, meta, model_path);
  write_text(fs::path(o.out) / "train_log.csv", log.str());
  out << "train docs " << train.docs.size() << " (skipped empty " << train.skipped_empty << ")\n";
  out << "model written to " << model_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string config;
  std::string model;
  std::string vocab;
  std::string task;
  std::string test;
  std::vector<std::string> database;
  std::string queries;
  std::string out;
  std::string ensemble = "1";
  std::size_t max_docs = 0;
  std::uint64_t seed = 1234;
  std::size_t group = 1;
  bool no_log_transform = false;
  std::string log_base = "e";
  std::size_t threads = 1;
  std::string cutoffs;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  Vocabulary vocab = Vocabulary::load(o.vocab);
  LoadedModel loaded = load_model(o.model, vocab.hash());
  const AnyModel& model = loaded.model;
  const bool lm = model.index() == 2;
  const bool log_transform = !lm && !o.no_log_transform;
  const LogBase base = o.log_base == "10" ? LogBase::ten : LogBase::natural;
  fs::create_directories(o.out);

  auto prepare = [&](const std::string& path) {
    auto raw = load_checked(path, vocab.size());
    return lm ? prepare_sequences(raw, o.group) : prepare_bags(raw, log_transform, base);
  };

  if (o.task == "perplexity") {
    if (o.test.empty()) throw CLI::ValidationError("--test", "required for the perplexity task");
    Prepared test = prepare(o.test);
    if (test.docs.empty()) throw std::runtime_error("test corpus has no non-empty documents");
    auto sweep = parse_sizes(o.ensemble, "--ensemble");
    std::ostringstream sweep_csv;
    sweep_csv << "M,perplexity,n_docs,n_words\n";
    PerplexityReport last;
    for (std::size_t M : sweep) {
      if (lm) {
        if (M != 1) throw CLI::ValidationError("--ensemble", "the language model is scored on its own word order");
        const auto& m = std::get<DocNadeLmModel>(model);
        last = perplexity([&](const Document& d) { return m.doc_logprob(d.ids); }, test.docs, o.threads);
      } else {
        EnsembleEvalOptions eo;
        eo.spec = {M, o.seed};
        eo.max_docs = o.max_docs;
        eo.threads = o.threads;
        last = model.index() == 0 ? ensemble_perplexity(std::get<DocNadeModel>(model), test.docs, eo)
                                  : ensemble_perplexity(std::get<DeepDocNadeModel>(model), test.docs, eo);
      }
      sweep_csv << M << "," << fmt(last.perplexity, 12) << "," << last.n_docs << "," << last.n_words << "\n";
      out << "M=" << M << " perplexity " << fmt(last.perplexity, 12) << " over " << last.n_docs << " docs\n";
    }
    std::ostringstream csv;
    csv << "doc_id,n_words,logprob\n";
    for (std::size_t t = 0; t < last.n_docs; ++t)
      csv << test.docs[t].source_id << "," << last.lengths[t] << "," << fmt(last.logprobs[t], 17) << "\n";
    write_text(fs::path(o.out) / "perplexity.csv", csv.str());
    if (sweep.size() > 1) write_text(fs::path(o.out) / "ensemble_sweep.csv", sweep_csv.str());
    out << "skipped empty docs " << test.skipped_empty << "\n";
    return 0;
  }

  if (o.task == "retrieval") {
    if (lm) throw std::runtime_error("retrieval needs a docnade or deep_docnade model");
    if (o.database.empty() || o.queries.empty())
      throw CLI::ValidationError("--database/--queries", "both are required for the retrieval task");
    std::map<std::string, std::uint32_t> label_ids;
    auto represent = [&](const std::vector<Document>& docs, std::vector<Vector>& reps, std::vector<LabelSet>& labels) {
      for (const auto& d : docs) {
        reps.push_back(model.index() == 0 ? std::get<DocNadeModel>(model).doc_representation(d.counts)
                                          : std::get<DeepDocNadeModel>(model).doc_representation(d.counts));
        LabelSet ls;
        for (const auto& l : d.labels) {
          auto [it, _] = label_ids.emplace(l, static_cast<std::uint32_t>(label_ids.size()));
          ls.push_back(it->second);
        }
        labels.push_back(std::move(ls));
      }
    };
    std::vector<Vector> db_reps, q_reps;
    std::vector<LabelSet> db_labels, q_labels;
    std::size_t skipped = 0;
    std::vector<Document> db_docs;
    for (const auto& path : o.database) {
      auto p = prepare(path);
      skipped += p.skipped_empty;
      db_docs.insert(db_docs.end(), p.docs.begin(), p.docs.end());
    }
    // Ranking ties go to the earlier entry, so order the database by id.
    std::stable_sort(db_docs.begin(), db_docs.end(),
                     [](const Document& a, const Document& b) { return a.source_id < b.source_id; });
    represent(db_docs, db_reps, db_labels);
    auto q = prepare(o.queries);
    skipped += q.skipped_empty;
    represent(q.docs, q_reps, q_labels);
    if (db_reps.empty() || q_reps.empty()) throw std::runtime_error("retrieval: empty database or query set");

    auto cuts = o.cutoffs.empty() ? default_cutoffs(db_reps.size(), relevant_counts(q_labels, db_labels))
                                  : parse_sizes(o.cutoffs, "--cutoffs");
    auto curve = retrieval_pr(q_reps, db_reps, q_labels, db_labels, cuts, o.threads);
    std::ostringstream csv;
    csv << "cutoff,recall,precision\n";
    for (const auto& p : curve.points) csv << p.cutoff << "," << fmt(p.recall, 12) << "," << fmt(p.precision, 12) << "\n";
    write_text(fs::path(o.out) / "pr_curve.csv", csv.str());
    out << "queries " << curve.n_queries << " (unlabeled skipped " << curve.skipped_queries << "), database "
        << db_reps.size() << ", empty docs skipped " << skipped << "\n";
    if (curve.zero_norm_vectors)
      out << "warning: " << curve.zero_norm_vectors << " zero-norm representations ranked last\n";
    if (curve.absent_labels)
      out << "warning: " << curve.absent_labels << " query labels absent from the database (zero precision)\n";
    return 0;
  }
  throw CLI::ValidationError("--task", "unknown task '" + o.task + "'");
}

// ---------------------------------------------------------------------------
// inspect

struct InspectOptions {
  std::string model;
  std::string vocab;
  std::string task;
  std::vector<std::string> words;
  std::size_t k = 5;
  std::vector<std::size_t> units;
  std::size_t top = 10;
  std::string out;
};

int cmd_inspect(const InspectOptions& o, std::ostream& out) {
  Vocabulary vocab = Vocabulary::load(o.vocab);
  LoadedModel loaded = load_model(o.model, vocab.hash());
  const Matrix& W = word_embeddings(loaded.model);
  const Matrix emb = W.leftCols(static_cast<Eigen::Index>(vocab.size()));
  fs::create_directories(o.out);

  if (o.task == "neighbors") {
    if (o.words.empty()) throw CLI::ValidationError("--word", "at least one word is required");
    std::ostringstream tsv;
    tsv << "word\trank\tneighbor\tsimilarity\n";
    for (const auto& word : o.words) {
      auto id = vocab.lookup(word);
      if (!id) throw std::runtime_error("unknown word '" + word + "'");
      auto res = nearest_words(emb, *id, o.k);
      if (res.zero_norm_excluded)
        out << "warning: " << res.zero_norm_excluded << " zero-norm embeddings excluded\n";
      out << word << ":";
      for (std::size_t r = 0; r < res.neighbors.size(); ++r) {
        const auto& n = res.neighbors[r];
        tsv << word << "\t" << r + 1 << "\t" << vocab.token(n.word) << "\t" << fmt(n.similarity, 12) << "\n";
        out << " " << vocab.token(n.word);
      }
      out << "\n";
    }
    write_text(fs::path(o.out) / "neighbors.tsv", tsv.str());
    return 0;
  }
  if (o.task == "topics") {
    std::vector<std::size_t> units = o.units;
    if (units.empty())
      for (std::size_t i = 0; i < static_cast<std::size_t>(emb.rows()); ++i) units.push_back(i);
    std::ostringstream tsv;
    tsv << "unit\twords\n";
    for (auto unit : units) {
      auto words = hidden_unit_topics(emb, unit, o.top);
      tsv << unit << "\t";
      out << unit << ":";
      for (std::size_t r = 0; r < words.size(); ++r) {
        tsv << (r ? "," : "") << vocab.token(words[r]);
        out << " " << vocab.token(words[r]);
      }
      tsv << "\n";
      out << "\n";
    }
    write_text(fs::path(o.out) / "topics.tsv", tsv.str());
    return 0;
  }
  throw CLI::ValidationError("--task", "unknown task '" + o.task + "'");
}

/// Appends options read from `--config FILE` (key=value lines) that are not
/// already given on the command line.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  CLI::App* sub = nullptr;
  for (auto* s : app.get_subcommands({}))
    if (s->get_name() == args[1]) sub = s;
  if (sub == nullptr || sub->get_option_no_throw("--config") == nullptr) return args;

  std::string path;
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);

  auto trim = [](std::string s) {
    const char* ws = " \t\r\"'";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
  };
  std::vector<std::string> out = args;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ConversionError("config line '" + line + "' is not key=value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    auto* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr || key == "config") throw CLI::ConversionError("unknown config key '" + key + "'");
    if (given(flag)) continue;
    if (opt->get_expected_max() == 0) {
      if (value == "true" || value == "1" || value == "yes" || value == "on") out.push_back(flag);
    } else {
      out.push_back(flag);
      out.push_back(value);
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural autoregressive document models: ingest, train, eval, inspect"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  IngestOptions io;
  auto* ingest = app.add_subcommand("ingest", "Tokenize text, build or apply a vocabulary, write .bow/.seq");
  ingest->add_option("--input", io.input, "Text file: one document per line, doc_id<TAB>labels<TAB>text or bare text")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--out-prefix", io.out_prefix, "Output prefix for .bow, .seq and the ingest report")->required();
  ingest->add_option("--vocab", io.vocab, "Existing vocabulary to apply (out-of-vocabulary tokens are dropped)")
      ->check(CLI::ExistingFile);
  ingest->add_option("--vocab-out", io.vocab_out, "Where to write a newly built vocabulary (default PREFIX.vocab)");
  ingest->add_option("--max-vocab", io.max_vocab, "Keep the N most frequent tokens")->check(CLI::PositiveNumber)
      ->capture_default_str();
  ingest->add_flag("--stopwords", io.stopwords, "Remove tokens on the built-in English stop-word list");

  TrainOptions to;
  auto* train = app.add_subcommand("train", "Train a model and write model.bin, train_log.csv, config.txt");
  train->add_option("--config", to.config, "Read options from a key=value file; command-line values win")
      ->check(CLI::ExistingFile);
  train->add_option("--kind", to.kind, "Model family")
      ->required()
      ->check(CLI::IsMember({"docnade", "deep_docnade", "docnade_lm"}));
  train->add_option("--train", to.train, "Training corpus (.bow or .seq)")->required()->check(CLI::ExistingFile);
  train->add_option("--valid", to.valid, "Validation corpus; enables validation perplexity and early stopping")
      ->check(CLI::ExistingFile);
  train->add_option("--vocab", to.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", to.out, "Run directory")->required();
  train->add_option("--hidden", to.hidden, "Hidden size (docnade, docnade_lm, single-layer deep_docnade)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--hidden-sizes", to.hidden_sizes, "deep_docnade layer widths, e.g. 50,50 (1 to 3 layers)");
  train->add_option("--ngram", to.ngram, "docnade_lm n-gram order n")->check(CLI::Range(2, 64))->capture_default_str();
  train->add_option("--group", to.group, "docnade_lm: sentences per pseudo-document")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--activation", to.activation, "sigmoid or tanh (default: tanh for deep_docnade, else sigmoid)")
      ->check(CLI::IsMember({"sigmoid", "tanh"}));
  train->add_option("--optimizer", to.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  train->add_option("--lr", to.lr, "Learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--beta1", to.beta1, "Adam beta1")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  train->add_option("--beta2", to.beta2, "Adam beta2")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  train->add_option("--adam-eps", to.adam_eps, "Adam epsilon")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--epochs", to.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch", to.batch, "Documents per optimizer step")->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--seed", to.seed, "Random seed")->capture_default_str();
  train->add_option("--patience", to.patience, "Stop after N epochs without validation improvement (0 = off)")
      ->capture_default_str();
  train->add_option("--tree", to.tree, "docnade output tree: random (balanced) or huffman")
      ->check(CLI::IsMember({"random", "huffman"}))
      ->capture_default_str();
  train->add_flag("--no-log-transform", to.no_log_transform, "Use raw counts instead of round(log(1+n))");
  train->add_option("--log-base", to.log_base, "Base of the count transform: e or 10")
      ->check(CLI::IsMember({"e", "10"}))
      ->capture_default_str();
  train->add_option("--split-mode", to.split_mode, "deep_docnade split: histogram or ordering")
      ->check(CLI::IsMember({"histogram", "ordering"}))
      ->capture_default_str();
  train->add_flag("--no-doc-context", to.no_doc_context, "docnade_lm: drop the document term (plain n-gram model)");

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Perplexity or retrieval evaluation");
  eval->add_option("--config", eo.config, "Read options from a key=value file; command-line values win")
      ->check(CLI::ExistingFile);
  eval->add_option("--model", eo.model, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--vocab", eo.vocab, "Vocabulary the model was trained with")->required()->check(CLI::ExistingFile);
  eval->add_option("--task", eo.task, "perplexity or retrieval")
      ->required()
      ->check(CLI::IsMember({"perplexity", "retrieval"}));
  eval->add_option("--test", eo.test, "Test corpus (perplexity)")->check(CLI::ExistingFile);
  eval->add_option("--database", eo.database, "Database corpus, repeatable (retrieval; train + valid)")
      ->check(CLI::ExistingFile);
  eval->add_option("--queries", eo.queries, "Query corpus (retrieval; test)")->check(CLI::ExistingFile);
  eval->add_option("--out", eo.out, "Output directory")->required();
  eval->add_option("--ensemble", eo.ensemble, "Orderings per document, or a list such as 1,2,4,16,32,64,128,256")
      ->capture_default_str();
  eval->add_option("--max-docs", eo.max_docs, "Evaluate only the first N test documents (0 = all)")
      ->capture_default_str();
  eval->add_option("--seed", eo.seed, "Seed for evaluation orderings")->capture_default_str();
  eval->add_option("--group", eo.group, "docnade_lm: sentences per pseudo-document")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_flag("--no-log-transform", eo.no_log_transform, "Use raw counts instead of round(log(1+n))");
  eval->add_option("--log-base", eo.log_base, "Base of the count transform: e or 10")
      ->check(CLI::IsMember({"e", "10"}))
      ->capture_default_str();
  eval->add_option("--threads", eo.threads, "Evaluation threads (outputs do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_option("--cutoffs", eo.cutoffs, "Retrieval rank cutoffs, comma-separated (default: 1,2,5,10,... grid)");

  InspectOptions ino;
  auto* inspect = app.add_subcommand("inspect", "Word neighbors or hidden-unit topics from the embeddings");
  inspect->add_option("--model", ino.model, "Model file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--vocab", ino.vocab, "Vocabulary the model was trained with")->required()->check(CLI::ExistingFile);
  inspect->add_option("--task", ino.task, "neighbors or topics")->required()->check(CLI::IsMember({"neighbors", "topics"}));
  inspect->add_option("--word", ino.words, "Query word (neighbors), repeatable");
  inspect->add_option("--k", ino.k, "Neighbors per word")->check(CLI::PositiveNumber)->capture_default_str();
  inspect->add_option("--unit", ino.units, "Hidden unit (topics), repeatable; default all");
  inspect->add_option("--top", ino.top, "Words per topic")->check(CLI::PositiveNumber)->capture_default_str();
  inspect->add_option("--out", ino.out, "Output directory")->required();

  try {
    auto expanded = expand_config(app, args);
    std::vector<std::string> argv_rev(expanded.rbegin(), expanded.rend() - (expanded.empty() ? 0 : 1));
    app.parse(std::move(argv_rev));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(io, out);
    if (*train) return cmd_train(to, train->config_to_str(true, false), out);
    if (*eval) return cmd_eval(eo, out);
    if (*inspect) return cmd_inspect(ino, out);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace docnade::cli
