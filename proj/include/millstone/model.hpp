#pragma once

// Corpus-independent document schema shared by every module.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "millstone/error.hpp"

namespace millstone {

inline constexpr std::size_t kDefaultDim = 768;

// Short lowercase corpus name ("epo", "semanticscholar", ...). Index names
// exposed over the API are "<corpus>_cos".
class CorpusId {
 public:
  CorpusId() = default;
  // Throws Error(InvalidArgument) unless name is non-empty [a-z0-9_]+.
  explicit CorpusId(std::string name);

  static bool is_valid(std::string_view name) noexcept;
  // "epo_cos" -> "epo". Throws Error(UnknownIndex) for names without the suffix.
  static CorpusId from_index_name(std::string_view index);

  const std::string& name() const noexcept { return name_; }
  std::string index_name() const { return name_ + "_cos"; }
  bool is_patent_office() const noexcept;

  auto operator<=>(const CorpusId&) const = default;

 private:
  std::string name_;
};

enum class PartKey { Title, Abstract, Claims, Description };

std::string_view to_string(PartKey key) noexcept;
std::optional<PartKey> parse_part_key(std::string_view text) noexcept;

struct DocumentPart {
  PartKey key;
  std::string value;

  bool operator==(const DocumentPart&) const = default;
};

// Dense vector of finite doubles.
class Embedding {
 public:
  Embedding() = default;
  // Throws Error(InvalidArgument) on empty input or non-finite components.
  explicit Embedding(std::vector<double> components);

  std::size_t dim() const noexcept { return components_.size(); }
  std::span<const double> values() const noexcept { return components_; }
  const std::vector<double>& components() const noexcept { return components_; }
  double operator[](std::size_t i) const noexcept { return components_[i]; }

  double norm() const noexcept;
  // Throws Error(ZeroVector) when the norm is zero.
  Embedding normalized() const;

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> components_;
};

using Metadata = std::map<std::string, std::string>;

struct Document {
  std::string id;
  CorpusId corpus;
  std::vector<DocumentPart> parts;
  Metadata metadata;
  std::optional<Embedding> embedding;

  const std::string* part(PartKey key) const noexcept;

  bool operator==(const Document&) const = default;
};

struct DocumentKey {
  CorpusId corpus;
  std::string id;

  auto operator<=>(const DocumentKey&) const = default;
};

enum class SimilarityMetric { Cosine, L1, L2 };

std::string_view to_string(SimilarityMetric metric) noexcept;
// Throws Error(UnknownMetric) for anything but "cosine", "l1", "l2".
SimilarityMetric parse_metric(std::string_view tag);

// Similarity metrics report "higher = closer"; distances "lower = closer".
constexpr bool higher_is_closer(SimilarityMetric metric) noexcept {
  return metric == SimilarityMetric::Cosine;
}

// Empty result means the document is valid.
std::vector<std::string> validate_document(const Document& doc, std::size_t dim);

}  // namespace millstone
