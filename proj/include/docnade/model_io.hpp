#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "docnade/deep_docnade.hpp"
#include "docnade/docnade.hpp"
#include "docnade/docnade_lm.hpp"

namespace docnade {

using AnyModel = std::variant<DocNadeModel, DeepDocNadeModel, DocNadeLmModel>;

std::string model_kind(const AnyModel& model);

struct ModelMeta {
  std::uint64_t vocab_hash = 0;
  std::uint64_t seed = 0;
  /// Free-form training settings echoed into the file (no '\n' or '=' in keys).
  std::map<std::string, std::string> config;
};

struct LoadedModel {
  AnyModel model;
  ModelMeta meta;
};

class ModelIoError : public std::runtime_error {
 public:
  enum class Kind { io, corrupt, bad_magic, bad_version, shape, structure, vocab_mismatch };
  ModelIoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr char kModelMagic[] = "DNADEK1";
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Byte image of a model; identical models give identical bytes.
std::string serialize_model(const AnyModel& model, const ModelMeta& meta);
LoadedModel deserialize_model(const std::string& bytes, std::optional<std::uint64_t> expected_vocab_hash = {});

/// Writes through a temporary file and renames it into place.
void save_model(const AnyModel& model, const ModelMeta& meta, const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash = {});

}  // namespace docnade
