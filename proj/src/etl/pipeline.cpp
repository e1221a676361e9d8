#include <omp.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "millstone/etl.hpp"

namespace millstone::etl {

namespace fs = std::filesystem;

std::string_view to_string(SourceFormat f) noexcept {
  return f == SourceFormat::PublicationJsonl ? "publication_jsonl" : "patent_xml";
}

SourceFormat parse_format(std::string_view text) {
  if (text == "publication_jsonl") return SourceFormat::PublicationJsonl;
  if (text == "patent_xml") return SourceFormat::PatentXml;
  throw Error(ErrorCode::InvalidSource, "unknown source format '" + std::string(text) + "'");
}

void SourceSpec::validate() const {
  const bool patent = format == SourceFormat::PatentXml;
  if (patent != corpus.is_patent_office()) {
    throw Error(ErrorCode::InvalidSource, "format " + std::string(to_string(format)) +
                                              " does not match corpus '" + corpus.name() + "'");
  }
  std::error_code ec;
  if (!fs::exists(location, ec)) {
    throw Error(ErrorCode::SourceUnreadable, "source " + location.string() + " does not exist");
  }
}

nlohmann::json PipelineReport::to_json() const {
  return {
      {"seen", seen},       {"parsed", parsed},           {"rejected", rejected},
      {"encoded", encoded}, {"loaded", loaded},           {"stored_only", stored_only},
      {"unchanged", unchanged}, {"rejection_reasons", rejection_reasons},
      {"files", files},     {"wall_seconds", wall_seconds},
  };
}

namespace {

struct InputFile {
  fs::path path;
  Watermark mark;
};

std::int64_t mtime_ns(const fs::path& p) {
  const auto t = fs::last_write_time(p).time_since_epoch();
  return std::chrono::duration_cast<std::chrono::nanoseconds>(t).count();
}

std::vector<InputFile> list_inputs(const SourceSpec& spec) {
  spec.validate();
  const std::string ext = spec.format == SourceFormat::PatentXml ? ".xml" : ".jsonl";
  std::vector<InputFile> files;
  std::error_code ec;
  if (fs::is_directory(spec.location, ec)) {
    fs::directory_iterator it(spec.location, ec);
    if (ec) throw Error(ErrorCode::SourceUnreadable, "cannot list " + spec.location.string() + ": " + ec.message());
    for (const auto& e : it) {
      if (e.is_regular_file() && e.path().extension() == ext) {
        files.push_back({e.path(), {mtime_ns(e.path()), e.path().filename().string()}});
      }
    }
  } else {
    files.push_back({spec.location, {mtime_ns(spec.location), spec.location.filename().string()}});
  }
  std::sort(files.begin(), files.end(), [](const InputFile& a, const InputFile& b) { return a.mark < b.mark; });
  return files;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::SourceUnreadable, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Prepared {
  ParseResult parsed;
  bool encoded = false;
};

PipelineReport process(const SourceSpec& spec, Engine& engine, const std::vector<InputFile>& inputs,
                       const PipelineOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  PipelineReport report;

  std::vector<std::string> records;
  for (const auto& f : inputs) {
    report.files.push_back(f.path.filename().string());
    auto content = read_file(f.path);
    if (spec.format == SourceFormat::PatentXml) {
      records.push_back(std::move(content));
      continue;
    }
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      records.push_back(std::move(line));
    }
  }

  // Parse and encode on the worker pool; loading below is serialized.
  std::vector<Prepared> prepared(records.size());
  const auto& encoder = engine.encoder();
  const auto n = static_cast<std::ptrdiff_t>(records.size());
  const int workers = options.workers > 0 ? options.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto result = spec.format == SourceFormat::PatentXml ? parse_patent_document(records[i], spec.corpus)
                                                         : parse_publication_record(records[i], spec.corpus);
    if (auto* doc = std::get_if<Document>(&result); doc && !doc->metadata.contains("record_type")) {
      try {
        doc->embedding = encoder.encode({doc->id, doc->parts});
        prepared[i].encoded = true;
      } catch (const Error&) {
        // Unencodable text: stored without an embedding.
      }
    }
    prepared[i].parsed = std::move(result);
  }

  const std::size_t dim = engine.config().encoder.dim;
  for (auto& p : prepared) {
    ++report.seen;
    if (auto* rej = std::get_if<Rejection>(&p.parsed)) {
      ++report.rejected;
      ++report.rejection_reasons[rej->reason];
      continue;
    }
    auto& doc = std::get<Document>(p.parsed);
    if (auto violations = validate_document(doc, dim); !violations.empty()) {
      ++report.rejected;
      ++report.rejection_reasons["invalid_document"];
      continue;
    }
    ++report.parsed;
    if (p.encoded) ++report.encoded;
    const auto outcome = engine.load(doc);
    if (p.encoded) {
      ++report.loaded;
    } else {
      ++report.stored_only;
    }
    if (outcome == LoadOutcome::Unchanged) ++report.unchanged;
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace

PipelineReport run_pipeline(const SourceSpec& spec, Engine& engine, const PipelineOptions& options) {
  return process(spec, engine, list_inputs(spec), options);
}

std::string Watermark::to_text() const { return std::to_string(mtime_ns) + " " + name; }

Watermark Watermark::from_text(std::string_view text) {
  Watermark w;
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return w;
  const auto space = text.find(' ');
  try {
    w.mtime_ns = std::stoll(std::string(text.substr(0, space)));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidSource, "malformed watermark '" + std::string(text) + "'");
  }
  if (space != std::string_view::npos) w.name = std::string(text.substr(space + 1));
  return w;
}

std::pair<PipelineReport, Watermark> incremental_update(const SourceSpec& spec, Engine& engine,
                                                        const Watermark& watermark,
                                                        const PipelineOptions& options) {
  auto inputs = list_inputs(spec);
  std::erase_if(inputs, [&](const InputFile& f) { return !watermark.empty() && !(watermark < f.mark); });
  Watermark next = inputs.empty() ? watermark : inputs.back().mark;
  return {process(spec, engine, inputs, options), std::move(next)};
}

Watermark latest_watermark(const SourceSpec& spec) {
  const auto inputs = list_inputs(spec);
  return inputs.empty() ? Watermark{} : inputs.back().mark;
}

fs::path watermark_path(const fs::path& root, const CorpusId& corpus) {
  return root / "etl" / (corpus.name() + ".watermark");
}

Watermark read_watermark(const fs::path& root, const CorpusId& corpus) {
  std::ifstream in(watermark_path(root, corpus));
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return Watermark::from_text(ss.str());
}

void write_watermark(const fs::path& root, const CorpusId& corpus, const Watermark& w) {
  const auto path = watermark_path(root, corpus);
  fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << w.to_text() << '\n';
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace millstone::etl
