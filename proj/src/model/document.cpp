#include <algorithm>
#include <cctype>
#include <cmath>

#include "millstone/model.hpp"

namespace millstone {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::ZeroVector: return "ZERO_VECTOR";
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::UnknownMetric: return "UNKNOWN_METRIC";
    case ErrorCode::EmptyDocument: return "EMPTY_DOCUMENT";
    case ErrorCode::AllWordsFiltered: return "ALL_WORDS_FILTERED";
    case ErrorCode::DuplicateId: return "DUPLICATE_ID";
    case ErrorCode::RemoteUnavailable: return "REMOTE_UNAVAILABLE";
    case ErrorCode::RemoteBadResponse: return "REMOTE_BAD_RESPONSE";
    case ErrorCode::NotNormalized: return "NOT_NORMALIZED";
    case ErrorCode::EmptyIndex: return "EMPTY_INDEX";
    case ErrorCode::UnknownId: return "UNKNOWN_ID";
    case ErrorCode::CorruptSnapshot: return "CORRUPT_SNAPSHOT";
    case ErrorCode::VersionMismatch: return "VERSION_MISMATCH";
    case ErrorCode::EmptyQuery: return "EMPTY_QUERY";
    case ErrorCode::StorageFull: return "STORAGE_FULL";
    case ErrorCode::LockHeld: return "LOCK_HELD";
    case ErrorCode::CorruptRecord: return "CORRUPT_RECORD";
    case ErrorCode::UnknownCorpus: return "UNKNOWN_CORPUS";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::SourceUnreadable: return "SOURCE_UNREADABLE";
    case ErrorCode::InvalidSource: return "INVALID_SOURCE";
    case ErrorCode::SyntaxError: return "SYNTAX_ERROR";
    case ErrorCode::UnknownOperation: return "UNKNOWN_OPERATION";
    case ErrorCode::UnknownField: return "UNKNOWN_FIELD";
    case ErrorCode::UnknownArgument: return "UNKNOWN_ARGUMENT";
    case ErrorCode::MissingArgument: return "MISSING_ARGUMENT";
    case ErrorCode::MissingVariable: return "MISSING_VARIABLE";
    case ErrorCode::TypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::MissingToken: return "MISSING_TOKEN";
    case ErrorCode::BadSignature: return "BAD_SIGNATURE";
    case ErrorCode::Expired: return "TOKEN_EXPIRED";
    case ErrorCode::UnknownIndex: return "UNKNOWN_INDEX";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::MissingEmbedding: return "MISSING_EMBEDDING";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "INTERNAL";
}

CorpusId::CorpusId(std::string name) : name_(std::move(name)) {
  if (!is_valid(name_)) {
    throw Error(ErrorCode::InvalidArgument, "invalid corpus id '" + name_ + "'");
  }
}

bool CorpusId::is_valid(std::string_view name) noexcept {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

CorpusId CorpusId::from_index_name(std::string_view index) {
  constexpr std::string_view suffix = "_cos";
  if (index.size() <= suffix.size() || !index.ends_with(suffix) ||
      !is_valid(index.substr(0, index.size() - suffix.size()))) {
    throw Error(ErrorCode::UnknownIndex, "unknown index '" + std::string(index) + "'");
  }
  return CorpusId(std::string(index.substr(0, index.size() - suffix.size())));
}

bool CorpusId::is_patent_office() const noexcept {
  return name_ == "epo" || name_ == "uspto" || name_ == "wipo";
}

std::string_view to_string(PartKey key) noexcept {
  switch (key) {
    case PartKey::Title: return "title";
    case PartKey::Abstract: return "abstract";
    case PartKey::Claims: return "claims";
    case PartKey::Description: return "description";
  }
  return "title";
}

std::optional<PartKey> parse_part_key(std::string_view text) noexcept {
  if (text == "title") return PartKey::Title;
  if (text == "abstract") return PartKey::Abstract;
  if (text == "claims") return PartKey::Claims;
  if (text == "description") return PartKey::Description;
  return std::nullopt;
}

Embedding::Embedding(std::vector<double> components) : components_(std::move(components)) {
  if (components_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "embedding must have at least one component");
  }
  for (double v : components_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "embedding component is not finite");
    }
  }
}

double Embedding::norm() const noexcept {
  double sum = 0.0;
  for (double v : components_) sum += v * v;
  return std::sqrt(sum);
}

Embedding Embedding::normalized() const {
  const double n = norm();
  if (n == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  std::vector<double> out(components_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = components_[i] / n;
  return Embedding(std::move(out));
}

const std::string* Document::part(PartKey key) const noexcept {
  for (const auto& p : parts) {
    if (p.key == key) return &p.value;
  }
  return nullptr;
}

std::string_view to_string(SimilarityMetric metric) noexcept {
  switch (metric) {
    case SimilarityMetric::Cosine: return "cosine";
    case SimilarityMetric::L1: return "l1";
    case SimilarityMetric::L2: return "l2";
  }
  return "cosine";
}

SimilarityMetric parse_metric(std::string_view tag) {
  if (tag == "cosine") return SimilarityMetric::Cosine;
  if (tag == "l1") return SimilarityMetric::L1;
  if (tag == "l2") return SimilarityMetric::L2;
  throw Error(ErrorCode::UnknownMetric, "unknown metric '" + std::string(tag) + "'");
}

std::vector<std::string> validate_document(const Document& doc, std::size_t dim) {
  std::vector<std::string> violations;
  if (doc.id.empty()) violations.emplace_back("empty id");
  if (!CorpusId::is_valid(doc.corpus.name())) violations.emplace_back("invalid corpus");
  if (doc.parts.empty()) {
    violations.emplace_back("no parts");
  } else {
    const bool any_text = std::any_of(doc.parts.begin(), doc.parts.end(),
                                      [](const DocumentPart& p) {
                                        return std::any_of(p.value.begin(), p.value.end(),
                                                           [](unsigned char c) { return !std::isspace(c); });
                                      });
    if (!any_text) violations.emplace_back("all parts empty");
    for (std::size_t i = 0; i < doc.parts.size(); ++i) {
      for (std::size_t j = i + 1; j < doc.parts.size(); ++j) {
        if (doc.parts[i].key == doc.parts[j].key) {
          violations.emplace_back("duplicate part '" + std::string(to_string(doc.parts[i].key)) + "'");
        }
      }
    }
  }
  if (doc.embedding) {
    if (doc.embedding->dim() != dim) violations.emplace_back("dimension mismatch");
    for (double v : doc.embedding->values()) {
      if (!std::isfinite(v)) {
        violations.emplace_back("non-finite embedding component");
        break;
      }
    }
  }
  return violations;
}

}  // namespace millstone
