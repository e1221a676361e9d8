#pragma once

// Extract-transform-load: source feeds -> Documents -> encoder -> store and
// indexes.
//
// Publication feed: one JSON object per line (*.jsonl), fields
//   id, title, abstract, year, journal, doi, authors (+ anything else -> metadata).
// Patent feed: one XML file per document (*.xml):
//   <patent-document [type="docdb"]>
//     <publication-number>EP19164094B1</publication-number>
//     <title>..</title> <abstract>..</abstract> <claims>..</claims> <description>..</description>
//     <classifications><classification>B60R21/16</classification>..</classifications>
//     <country>EP</country> <publication-date>..</publication-date> <filing-date>..</filing-date>
//     <applicants><applicant>..</applicant></applicants> <inventors><inventor>..</inventor></inventors>
//   </patent-document>
// type="docdb" marks a bibliographic-only record: stored, never encoded or indexed.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <json.hpp>

#include "millstone/engine.hpp"

namespace millstone::etl {

enum class SourceFormat { PublicationJsonl, PatentXml };

std::string_view to_string(SourceFormat f) noexcept;
// Throws InvalidSource.
SourceFormat parse_format(std::string_view text);

struct SourceSpec {
  CorpusId corpus;
  SourceFormat format = SourceFormat::PublicationJsonl;
  std::filesystem::path location;  // directory or single file
  std::optional<std::chrono::seconds> schedule = std::nullopt;

  // Throws InvalidSource (format/corpus family mismatch) or SourceUnreadable.
  void validate() const;
};

struct Rejection {
  std::string reason;  // malformed_json, malformed_xml, no_id, no_text, invalid_document
  std::string detail;
};

using ParseResult = std::variant<Document, Rejection>;

ParseResult parse_publication_record(std::string_view line, const CorpusId& corpus = CorpusId("semanticscholar"));
ParseResult parse_patent_document(std::string_view xml, const CorpusId& corpus);

struct PipelineReport {
  std::size_t seen = 0;
  std::size_t parsed = 0;
  std::size_t rejected = 0;
  std::size_t encoded = 0;
  std::size_t loaded = 0;       // stored and indexed
  std::size_t stored_only = 0;  // bibliographic-only or unencodable
  std::size_t unchanged = 0;    // loaded documents identical to the stored version
  std::map<std::string, std::size_t> rejection_reasons;
  std::vector<std::string> files;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

struct PipelineOptions {
  int workers = 0;  // 0 = one per CPU
};

// Throws SourceUnreadable / InvalidSource; per-record failures land in the report.
PipelineReport run_pipeline(const SourceSpec& spec, Engine& engine, const PipelineOptions& options = {});

// Last ingested input file: modification time (ns since epoch) and file name.
struct Watermark {
  std::int64_t mtime_ns = 0;
  std::string name;

  bool empty() const noexcept { return mtime_ns == 0 && name.empty(); }
  std::string to_text() const;
  static Watermark from_text(std::string_view text);

  auto operator<=>(const Watermark&) const = default;
};

// Processes only inputs newer than the watermark, ordered by (mtime, name).
std::pair<PipelineReport, Watermark> incremental_update(const SourceSpec& spec, Engine& engine,
                                                        const Watermark& watermark,
                                                        const PipelineOptions& options = {});

// Mark of the newest input of the source; empty when there are none.
Watermark latest_watermark(const SourceSpec& spec);

// <root>/etl/<corpus>.watermark
std::filesystem::path watermark_path(const std::filesystem::path& root, const CorpusId& corpus);
Watermark read_watermark(const std::filesystem::path& root, const CorpusId& corpus);
void write_watermark(const std::filesystem::path& root, const CorpusId& corpus, const Watermark& w);

}  // namespace millstone::etl
