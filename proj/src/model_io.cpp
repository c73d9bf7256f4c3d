#include "docnade/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace docnade {

namespace {

using Kind = ModelIoError::Kind;

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s.data(), s.size()); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  std::string& str() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}
  std::size_t offset() const { return pos_; }
  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view v(data_.data() + pos_, n);
    pos_ += n;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }

 private:
  void need(std::size_t n) {
    if (n > end_ - pos_)
      throw ModelIoError(Kind::corrupt, "corrupt model file: truncated at byte offset " + std::to_string(end_) +
                                            " (needed " + std::to_string(n) + " bytes at offset " +
                                            std::to_string(pos_) + ")");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(xs[i]);
  }
  return out;
}

std::vector<std::uint64_t> parse_list(const std::string& s, char sep) {
  std::vector<std::uint64_t> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw ModelIoError(Kind::structure, "model header: empty list element");
    for (char ch : cur)
      if (ch < '0' || ch > '9') throw ModelIoError(Kind::structure, "model header: bad number '" + cur + "'");
    out.push_back(std::stoull(cur));
    cur.clear();
  };
  for (char ch : s) {
    if (ch == sep)
      flush();
    else
      cur.push_back(ch);
  }
  if (!s.empty()) flush();
  return out;
}

std::string partition_text(const ClassPartition& p) {
  std::string out;
  for (std::size_t c = 0; c < p.class_count(); ++c) {
    if (c) out += ';';
    out += join(p.members(c), ' ');
  }
  return out;
}

ClassPartition parse_partition(const std::string& s) {
  std::vector<std::vector<WordId>> members;
  std::string cur;
  auto flush = [&] {
    std::vector<WordId> m;
    for (auto v : parse_list(cur, ' ')) m.push_back(static_cast<WordId>(v));
    members.push_back(std::move(m));
    cur.clear();
  };
  for (char ch : s) {
    if (ch == ';')
      flush();
    else
      cur.push_back(ch);
  }
  flush();
  return ClassPartition(std::move(members));
}

struct Header {
  std::map<std::string, std::string> fields;

  const std::string& get(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) throw ModelIoError(Kind::structure, "model header: missing key '" + key + "'");
    return it->second;
  }
  std::uint64_t number(const std::string& key) const {
    auto v = parse_list(get(key), ',');
    if (v.size() != 1) throw ModelIoError(Kind::structure, "model header: bad value for '" + key + "'");
    return v[0];
  }
};

std::string header_text(const AnyModel& model, const ModelMeta& meta) {
  std::map<std::string, std::string> f;
  f["kind"] = model_kind(model);
  f["vocab_hash"] = hex64(meta.vocab_hash);
  f["seed"] = std::to_string(meta.seed);
  for (const auto& [k, v] : meta.config) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("model config entries may not contain '=' or newlines: " + k);
    f["config." + k] = v;
  }
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        f["vocab_size"] = std::to_string(m.vocab_size());
        f["activation"] = to_string(m.activation());
        if constexpr (std::is_same_v<M, DocNadeModel>) {
          f["hidden"] = std::to_string(m.hidden_size());
          f["tree.flags"] = m.tree().preorder_flags();
          f["tree.leaves"] = join(m.tree().preorder_leaves(), ' ');
        } else if constexpr (std::is_same_v<M, DeepDocNadeModel>) {
          f["hidden_sizes"] = join(m.hidden_sizes(), ',');
        } else {
          f["hidden"] = std::to_string(m.hidden_size());
          f["order"] = std::to_string(m.order());
          f["doc_context"] = m.use_doc_context() ? "1" : "0";
          f["partition"] = partition_text(m.partition());
        }
      },
      model);
  std::string out;
  for (const auto& [k, v] : f) out += k + "=" + v + "\n";
  return out;
}

Header parse_header(std::string_view text) {
  Header h;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) throw ModelIoError(Kind::structure, "model header: unterminated line");
    std::string_view line = text.substr(start, end - start);
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ModelIoError(Kind::structure, "model header: malformed line");
    if (!h.fields.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1))).second)
      throw ModelIoError(Kind::structure, "model header: duplicate key");
    start = end + 1;
  }
  return h;
}

AnyModel model_from_header(const Header& h) {
  const std::string& kind = h.get("kind");
  const std::size_t V = h.number("vocab_size");
  Activation act;
  try {
    act = parse_activation(h.get("activation"));
  } catch (const std::invalid_argument& e) {
    throw ModelIoError(Kind::structure, std::string("model header: ") + e.what());
  }
  try {
    if (kind == "docnade") {
      std::vector<WordId> leaves;
      for (auto v : parse_list(h.get("tree.leaves"), ' ')) leaves.push_back(static_cast<WordId>(v));
      auto tree = BinaryWordTree::from_preorder(h.get("tree.flags"), leaves);
      if (tree.vocab_size() != V) throw ModelIoError(Kind::structure, "tree size does not match vocab_size");
      return DocNadeModel(std::move(tree), h.number("hidden"), act);
    }
    if (kind == "deep_docnade") {
      std::vector<std::size_t> sizes;
      for (auto v : parse_list(h.get("hidden_sizes"), ',')) sizes.push_back(v);
      return DeepDocNadeModel(V, std::move(sizes), act);
    }
    if (kind == "docnade_lm") {
      auto partition = parse_partition(h.get("partition"));
      if (partition.vocab_size() != V) throw ModelIoError(Kind::structure, "partition does not cover vocab_size");
      const std::string& dc = h.get("doc_context");
      if (dc != "0" && dc != "1") throw ModelIoError(Kind::structure, "model header: bad doc_context");
      return DocNadeLmModel(std::move(partition), h.number("hidden"), h.number("order"), act, dc == "1");
    }
  } catch (const ModelIoError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelIoError(Kind::structure, std::string("invalid model structure: ") + e.what());
  }
  throw ModelIoError(Kind::structure, "unknown model kind '" + kind + "'");
}

ParamList params_of(AnyModel& model) {
  return std::visit([](auto& m) { return m.params(); }, model);
}

}  // namespace

std::string model_kind(const AnyModel& model) {
  switch (model.index()) {
    case 0:
      return "docnade";
    case 1:
      return "deep_docnade";
    default:
      return "docnade_lm";
  }
}

std::string serialize_model(const AnyModel& model, const ModelMeta& meta) {
  AnyModel copy = model;
  ParamList tensors = params_of(copy);

  Writer w;
  w.bytes(std::string_view(kModelMagic, 7));
  w.u32(kModelFormatVersion);
  std::string header = header_text(model, meta);
  w.u64(header.size());
  w.bytes(header);

  w.u32(static_cast<std::uint32_t>(tensors.size()));
  std::uint64_t offset = 0;
  for (const ParamTensor* t : tensors) {
    w.u32(static_cast<std::uint32_t>(t->name.size()));
    w.bytes(t->name);
    w.u32(static_cast<std::uint32_t>(t->shape.size()));
    for (auto d : t->shape) w.u64(d);
    w.u64(offset);
    offset += 8 * t->size();
  }
  for (const ParamTensor* t : tensors)
    for (Eigen::Index r = 0; r < t->value.rows(); ++r)
      for (Eigen::Index c = 0; c < t->value.cols(); ++c) w.f64(t->value(r, c));

  w.u64(fnv1a(w.str().data(), w.str().size()));
  return std::move(w.str());
}

LoadedModel deserialize_model(const std::string& bytes, std::optional<std::uint64_t> expected_vocab_hash) {
  if (bytes.size() < 7 || std::memcmp(bytes.data(), kModelMagic, 7) != 0)
    throw ModelIoError(Kind::bad_magic, "not a model file (bad magic)");
  if (bytes.size() < 7 + 4 + 8)
    throw ModelIoError(Kind::corrupt, "corrupt model file: truncated at byte offset " + std::to_string(bytes.size()));
  const std::size_t body_end = bytes.size() - 8;
  Reader r(bytes, body_end);
  r.bytes(7);
  std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw ModelIoError(Kind::bad_version, "unsupported model format version " + std::to_string(version) +
                                              " (expected " + std::to_string(kModelFormatVersion) + ")");

  // Raw sections first; nothing is interpreted until the checksum passes.
  std::uint64_t header_len = r.u64();
  std::string_view header_bytes = r.bytes(header_len);
  std::uint32_t count = r.u32();
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::uint64_t offset;
  };
  std::vector<Entry> dir;
  std::uint64_t data_bytes = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = std::string(r.bytes(r.u32()));
    std::uint32_t ndim = r.u32();
    if (ndim < 1 || ndim > 2) throw ModelIoError(Kind::shape, "tensor " + e.name + ": bad rank");
    std::uint64_t elems = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      std::uint64_t dim = r.u64();
      if (dim == 0 || dim > (1ULL << 32)) throw ModelIoError(Kind::shape, "tensor " + e.name + ": bad dimension");
      e.shape.push_back(dim);
      elems *= dim;
    }
    e.offset = r.u64();
    if (e.offset != data_bytes) throw ModelIoError(Kind::corrupt, "corrupt model file: bad tensor offset for " + e.name);
    if (elems > (body_end / 8)) throw ModelIoError(Kind::corrupt, "corrupt model file: tensor " + e.name + " too large");
    data_bytes += 8 * elems;
    dir.push_back(std::move(e));
  }
  const std::size_t data_start = r.offset();
  r.bytes(data_bytes);
  if (r.offset() != body_end)
    throw ModelIoError(Kind::corrupt, "corrupt model file: " + std::to_string(body_end - r.offset()) +
                                          " unexpected bytes at offset " + std::to_string(r.offset()));
  Reader tail(bytes, bytes.size());
  tail.bytes(body_end);
  if (tail.u64() != fnv1a(bytes.data(), body_end))
    throw ModelIoError(Kind::corrupt, "corrupt model file: checksum mismatch");

  Header header = parse_header(header_bytes);
  LoadedModel loaded{model_from_header(header), {}};
  loaded.meta.seed = header.number("seed");
  const std::string& hash_hex = header.get("vocab_hash");
  try {
    std::size_t used = 0;
    loaded.meta.vocab_hash = std::stoull(hash_hex, &used, 16);
    if (used != hash_hex.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw ModelIoError(Kind::structure, "model header: bad vocab_hash");
  }
  for (const auto& [k, v] : header.fields)
    if (k.rfind("config.", 0) == 0) loaded.meta.config.emplace(k.substr(7), v);

  if (expected_vocab_hash && *expected_vocab_hash != loaded.meta.vocab_hash)
    throw ModelIoError(Kind::vocab_mismatch, "model was trained with a different vocabulary (hash " + hash_hex +
                                                 ", expected " + hex64(*expected_vocab_hash) + ")");

  ParamList tensors = params_of(loaded.model);
  if (tensors.size() != dir.size())
    throw ModelIoError(Kind::shape, "model file holds " + std::to_string(dir.size()) + " tensors, expected " +
                                        std::to_string(tensors.size()));
  Reader data(bytes, body_end);
  data.bytes(data_start);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    ParamTensor& t = *tensors[i];
    if (dir[i].name != t.name || dir[i].shape != t.shape)
      throw ModelIoError(Kind::shape, "tensor " + dir[i].name + " does not match the expected " + t.name);
    for (Eigen::Index row = 0; row < t.value.rows(); ++row)
      for (Eigen::Index col = 0; col < t.value.cols(); ++col) t.value(row, col) = data.f64();
    if (!t.value.allFinite()) throw ModelIoError(Kind::corrupt, "corrupt model file: non-finite values in " + t.name);
  }
  return loaded;
}

void save_model(const AnyModel& model, const ModelMeta& meta, const std::filesystem::path& path) {
  std::string bytes = serialize_model(model, meta);
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelIoError(Kind::io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw ModelIoError(Kind::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ModelIoError(Kind::io, "cannot move model into place at " + path.string() + ": " + ec.message());
  }
}

LoadedModel load_model(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError(Kind::io, "cannot open model file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_model(bytes, expected_vocab_hash);
  } catch (const ModelIoError& e) {
    throw ModelIoError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace docnade
