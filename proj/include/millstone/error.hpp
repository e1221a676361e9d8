#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace millstone {

// Every failure surfaced by the library carries one of these codes. The
// query API reports them verbatim (as SCREAMING_SNAKE strings) in its error
// envelope, so the names are part of the wire contract.
enum class ErrorCode {
  // metrics
  DimensionMismatch,
  ZeroVector,
  EmptyInput,
  UnknownMetric,
  // encoder
  EmptyDocument,
  AllWordsFiltered,
  DuplicateId,
  RemoteUnavailable,
  RemoteBadResponse,
  // ann
  NotNormalized,
  EmptyIndex,
  UnknownId,
  CorruptSnapshot,
  VersionMismatch,
  // fulltext
  EmptyQuery,
  // store
  StorageFull,
  LockHeld,
  CorruptRecord,
  UnknownCorpus,
  Io,
  // etl
  SourceUnreadable,
  InvalidSource,
  // queryapi
  SyntaxError,
  UnknownOperation,
  UnknownField,
  UnknownArgument,
  MissingArgument,
  MissingVariable,
  TypeMismatch,
  MissingToken,
  BadSignature,
  Expired,
  UnknownIndex,
  NotFound,
  MissingEmbedding,
  // generic
  InvalidArgument,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace millstone
