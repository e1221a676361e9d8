#include "millstone/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>

namespace millstone::store {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ENOSPC || errno == EDQUOT) throw Error(ErrorCode::StorageFull, "device is full");
      io_error("write failed");
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

void sync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

std::string segment_name(std::uint32_t n) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << n << ".seg";
  return os.str();
}

}  // namespace

Store::Store(fs::path root, StoreOptions options) : root_(std::move(root)), options_(options) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create store root " + root_.string() + ": " + ec.message());

  lock_fd_ = ::open((root_ / "LOCK").c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) io_error("cannot open lock file");
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw Error(ErrorCode::LockHeld, "store " + root_.string() + " is locked by another writer");
  }

  try {
    for (const auto& entry : fs::directory_iterator(root_)) {
      if (!entry.is_directory()) continue;
      const auto name = entry.path().filename().string();
      if (!CorpusId::is_valid(name)) continue;
      if (!fs::exists(entry.path() / "journal.log") && !fs::exists(entry.path() / "segments")) continue;
      load_corpus(CorpusId(name));
    }
  } catch (...) {
    for (auto& [c, corpus] : corpora_) {
      if (corpus.journal_fd >= 0) ::close(corpus.journal_fd);
    }
    ::close(lock_fd_);
    throw;
  }
}

Store::~Store() {
  for (auto& [c, corpus] : corpora_) {
    if (corpus.journal_fd >= 0) ::close(corpus.journal_fd);
  }
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

void Store::load_corpus(const CorpusId& c) {
  Corpus corpus;
  const auto dir = corpus_dir(c);
  const auto seg_dir = dir / "segments";
  if (fs::exists(seg_dir)) {
    std::vector<fs::path> segments;
    for (const auto& e : fs::directory_iterator(seg_dir)) {
      if (e.path().extension() == ".seg") segments.push_back(e.path());
    }
    std::sort(segments.begin(), segments.end());
    for (const auto& seg : segments) {
      const auto bytes = read_file(seg);
      auto decoded = decode_records(bytes);
      if (decoded.torn_tail) throw Error(ErrorCode::CorruptRecord, "segment " + seg.string() + " is truncated");
      for (auto& d : decoded.documents) {
        auto id = d.id;
        corpus.docs.insert_or_assign(std::move(id), std::move(d));
      }
      corpus.segment_bytes += bytes.size();
      corpus.next_segment = std::max<std::uint32_t>(
          corpus.next_segment, static_cast<std::uint32_t>(std::stoul(seg.stem().string())) + 1);
    }
  }

  const auto journal = dir / "journal.log";
  if (fs::exists(journal)) {
    const auto bytes = read_file(journal);
    auto decoded = decode_records(bytes);
    for (auto& d : decoded.documents) {
      auto id = d.id;
      corpus.docs.insert_or_assign(std::move(id), std::move(d));
    }
    corpus.journal_records = decoded.documents.size();
    corpus.journal_bytes = decoded.valid_bytes;
    if (decoded.valid_bytes != bytes.size()) {
      // Drop the torn tail left by a crash mid-append.
      fs::resize_file(journal, decoded.valid_bytes);
    }
  }
  for (const auto& [id, doc] : corpus.docs) {
    if (doc.corpus != c) {
      throw Error(ErrorCode::CorruptRecord, "document '" + id + "' filed under the wrong corpus");
    }
  }
  corpora_.insert_or_assign(c, std::move(corpus));
}

Store::Corpus& Store::open_corpus(const CorpusId& c) {
  auto it = corpora_.find(c);
  if (it == corpora_.end()) it = corpora_.emplace(c, Corpus{}).first;
  Corpus& corpus = it->second;
  if (corpus.journal_fd < 0) {
    const auto dir = corpus_dir(c);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    corpus.journal_fd = ::open((dir / "journal.log").c_str(), O_CREAT | O_WRONLY | O_APPEND | O_CLOEXEC, 0644);
    if (corpus.journal_fd < 0) io_error("cannot open journal");
    sync_dir(dir);
  }
  return corpus;
}

std::uint64_t Store::total_bytes_locked() const {
  std::uint64_t total = 0;
  for (const auto& [c, corpus] : corpora_) total += corpus.journal_bytes + corpus.segment_bytes;
  return total;
}

void Store::put(const Document& doc) {
  if (auto violations = validate_document(doc, options_.dim); !violations.empty()) {
    throw Error(ErrorCode::InvalidArgument, "invalid document '" + doc.id + "': " + violations.front());
  }
  const std::string record = encode_record(doc);

  std::unique_lock lock(mutex_);
  if (options_.max_bytes > 0 && total_bytes_locked() + record.size() > options_.max_bytes) {
    throw Error(ErrorCode::StorageFull, "store size limit of " + std::to_string(options_.max_bytes) + " bytes reached");
  }
  Corpus& corpus = open_corpus(doc.corpus);
  try {
    write_all(corpus.journal_fd, record);
    if (options_.sync && ::fdatasync(corpus.journal_fd) != 0) io_error("fdatasync failed");
  } catch (...) {
    // Cut back any partial append so the journal stays a clean record sequence.
    if (::ftruncate(corpus.journal_fd, static_cast<off_t>(corpus.journal_bytes)) != 0) {
      // The torn tail is dropped on the next open instead.
    }
    throw;
  }
  corpus.journal_bytes += record.size();
  ++corpus.journal_records;
  corpus.docs.insert_or_assign(doc.id, doc);

  if (options_.compact_threshold > 0 && corpus.journal_records >= options_.compact_threshold) {
    compact_locked(doc.corpus, corpus);
  }
}

std::optional<Document> Store::get(const CorpusId& corpus, const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto c = corpora_.find(corpus);
  if (c == corpora_.end()) return std::nullopt;
  auto d = c->second.docs.find(id);
  if (d == c->second.docs.end()) return std::nullopt;
  return d->second;
}

std::vector<std::pair<DocumentKey, std::optional<Document>>> Store::get_many(
    std::span<const DocumentKey> keys) const {
  std::vector<std::pair<DocumentKey, std::optional<Document>>> out;
  out.reserve(keys.size());
  std::shared_lock lock(mutex_);
  for (const auto& key : keys) {
    std::optional<Document> doc;
    if (auto c = corpora_.find(key.corpus); c != corpora_.end()) {
      if (auto d = c->second.docs.find(key.id); d != c->second.docs.end()) doc = d->second;
    }
    out.emplace_back(key, std::move(doc));
  }
  return out;
}

std::vector<Document> Store::scan(const CorpusId& corpus) const {
  std::shared_lock lock(mutex_);
  auto c = corpora_.find(corpus);
  if (c == corpora_.end()) throw Error(ErrorCode::UnknownCorpus, "unknown corpus '" + corpus.name() + "'");
  std::vector<Document> out;
  out.reserve(c->second.docs.size());
  for (const auto& [id, doc] : c->second.docs) out.push_back(doc);
  return out;
}

std::vector<CorpusId> Store::corpora() const {
  std::shared_lock lock(mutex_);
  std::vector<CorpusId> out;
  for (const auto& [c, corpus] : corpora_) out.push_back(c);
  return out;
}

bool Store::has_corpus(const CorpusId& corpus) const {
  std::shared_lock lock(mutex_);
  return corpora_.contains(corpus);
}

std::size_t Store::size(const CorpusId& corpus) const {
  std::shared_lock lock(mutex_);
  auto c = corpora_.find(corpus);
  return c == corpora_.end() ? 0 : c->second.docs.size();
}

std::size_t Store::size() const {
  std::shared_lock lock(mutex_);
  std::size_t total = 0;
  for (const auto& [c, corpus] : corpora_) total += corpus.docs.size();
  return total;
}

std::uint64_t Store::journal_position(const CorpusId& corpus) const {
  std::shared_lock lock(mutex_);
  auto c = corpora_.find(corpus);
  return c == corpora_.end() ? 0 : c->second.journal_bytes;
}

void Store::compact(const CorpusId& corpus) {
  std::unique_lock lock(mutex_);
  auto c = corpora_.find(corpus);
  if (c == corpora_.end()) throw Error(ErrorCode::UnknownCorpus, "unknown corpus '" + corpus.name() + "'");
  compact_locked(corpus, c->second);
}

void Store::compact_all() {
  std::unique_lock lock(mutex_);
  for (auto& [c, corpus] : corpora_) compact_locked(c, corpus);
}

void Store::compact_locked(const CorpusId& c, Corpus& corpus) {
  const auto dir = corpus_dir(c);
  const auto seg_dir = dir / "segments";
  fs::create_directories(seg_dir);

  std::string bytes;
  for (const auto& [id, doc] : corpus.docs) bytes += encode_record(doc);

  // Write the new segment under a temporary name, publish it with a rename,
  // and only then drop the older segments and the journal.
  const auto final_path = seg_dir / segment_name(corpus.next_segment);
  const auto tmp_path = seg_dir / (segment_name(corpus.next_segment) + ".tmp");
  {
    const int fd = ::open(tmp_path.c_str(), O_CREAT | O_WRONLY | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_error("cannot create segment");
    try {
      write_all(fd, bytes);
      if (::fsync(fd) != 0) io_error("fsync failed");
    } catch (...) {
      ::close(fd);
      throw;
    }
    ::close(fd);
  }
  fs::rename(tmp_path, final_path);
  sync_dir(seg_dir);

  for (const auto& e : fs::directory_iterator(seg_dir)) {
    if (e.path() != final_path) fs::remove(e.path());
  }
  sync_dir(seg_dir);

  if (corpus.journal_fd >= 0) {
    if (::ftruncate(corpus.journal_fd, 0) != 0) io_error("cannot truncate journal");
    ::fsync(corpus.journal_fd);
  } else if (fs::exists(dir / "journal.log")) {
    fs::resize_file(dir / "journal.log", 0);
  }
  corpus.journal_bytes = 0;
  corpus.journal_records = 0;
  corpus.segment_bytes = bytes.size();
  ++corpus.next_segment;
}

}  // namespace millstone::store
