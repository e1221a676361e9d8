// Snapshot layout (all integers little-endian):
//   magic    "MLHNSW01"
//   section  params     u64 length, then dim, m, m0, ef_construction, ef_search (u64),
//                       ml (f64 bits), rng_seed (u64), corpus (str), generator state (str),
//                       entry (i64), max_layer (i64), free slots (u64 count + u32 each)
//   section  nodes      u64 length, then slot count (u64); per slot: alive (u8) and,
//                       when alive, id (str), level (u32), dim f64 components
//   section  adjacency  u64 length; per alive slot and layer 0..level: u32 count + u32 slots
//   trailer  u32 crc32 of everything after the magic
// str = u64 byte length + bytes.

#include <bit>
#include <cstring>

#include <zlib.h>

#include "millstone/ann.hpp"

namespace millstone::ann {

namespace {

constexpr std::string_view kMagicPrefix = "MLHNSW";
constexpr std::string_view kVersion = "01";

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void section(const Writer& body) {
    u64(body.buf_.size());
    buf_.append(body.buf_);
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    return std::string(take(n));
  }
  Reader section() {
    const auto n = u64();
    return Reader(take(n));
  }
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  std::string_view take(std::uint64_t n) {
    if (n > data_.size() - pos_) throw Error(ErrorCode::CorruptSnapshot, "snapshot is truncated");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

std::string HnswIndex::snapshot() const {
  Writer params;
  params.u64(dim_);
  params.u64(params_.m);
  params.u64(params_.m0);
  params.u64(params_.ef_construction);
  params.u64(params_.ef_search);
  params.f64(params_.ml);
  params.u64(params_.rng_seed);
  params.str(corpus_.name());
  params.str(levels_.state());
  params.u64(static_cast<std::uint64_t>(entry_));
  params.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(max_layer_)));
  params.u64(free_slots_.size());
  for (Slot s : free_slots_) params.u32(s);

  Writer table;
  table.u64(nodes_.size());
  for (std::size_t s = 0; s < nodes_.size(); ++s) {
    const Node& n = nodes_[s];
    table.u8(n.alive ? 1 : 0);
    if (!n.alive) continue;
    table.str(n.id);
    table.u32(static_cast<std::uint32_t>(n.level));
    const double* v = vec(static_cast<Slot>(s));
    for (std::size_t i = 0; i < dim_; ++i) table.f64(v[i]);
  }

  Writer adjacency;
  for (const Node& n : nodes_) {
    if (!n.alive) continue;
    for (const auto& links : n.links) {
      adjacency.u32(static_cast<std::uint32_t>(links.size()));
      for (Slot l : links) adjacency.u32(l);
    }
  }

  Writer body;
  body.section(params);
  body.section(table);
  body.section(adjacency);

  std::string out;
  out.append(kMagicPrefix);
  out.append(kVersion);
  out.append(body.bytes());
  Writer trailer;
  trailer.u32(checksum(body.bytes()));
  out.append(trailer.bytes());
  return out;
}

HnswIndex HnswIndex::restore(std::string_view bytes) {
  auto corrupt = [](const std::string& why) { return Error(ErrorCode::CorruptSnapshot, "snapshot: " + why); };
  const std::size_t header = kMagicPrefix.size() + kVersion.size();
  if (bytes.size() < header || bytes.substr(0, kMagicPrefix.size()) != kMagicPrefix) {
    throw corrupt("bad magic");
  }
  if (bytes.substr(kMagicPrefix.size(), kVersion.size()) != kVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "snapshot version " + std::string(bytes.substr(kMagicPrefix.size(), kVersion.size())) +
                    " is not supported (expected " + std::string(kVersion) + ")");
  }
  if (bytes.size() < header + 4) throw corrupt("snapshot is truncated");
  const auto body = bytes.substr(header, bytes.size() - header - 4);
  if (Reader(bytes.substr(bytes.size() - 4)).u32() != checksum(body)) throw corrupt("checksum mismatch");

  Reader all(body);
  Reader params = all.section();
  Reader table = all.section();
  Reader adjacency = all.section();
  if (!all.done()) throw corrupt("trailing bytes");

  const auto dim = params.u64();
  HnswParams p;
  p.m = params.u64();
  p.m0 = params.u64();
  p.ef_construction = params.u64();
  p.ef_search = params.u64();
  p.ml = params.f64();
  p.rng_seed = params.u64();
  const auto corpus_name = params.str();
  if (dim == 0) throw corrupt("zero dimension");
  try {
    p.validate();
  } catch (const Error& e) {
    throw corrupt(e.what());
  }
  if (!corpus_name.empty() && !CorpusId::is_valid(corpus_name)) throw corrupt("bad corpus name");
  HnswIndex index(dim, p, corpus_name.empty() ? CorpusId() : CorpusId(corpus_name));
  index.levels_.set_state(params.str());
  index.entry_ = static_cast<std::int64_t>(params.u64());
  index.max_layer_ = static_cast<int>(static_cast<std::int64_t>(params.u64()));
  const auto free_count = params.u64();
  for (std::uint64_t i = 0; i < free_count; ++i) index.free_slots_.push_back(params.u32());
  if (!params.done()) throw corrupt("params section has trailing bytes");

  const auto slots = table.u64();
  if (slots > body.size()) throw corrupt("implausible slot count");
  index.nodes_.resize(slots);
  index.vectors_.assign(slots * dim, 0.0);
  for (std::uint64_t s = 0; s < slots; ++s) {
    Node& n = index.nodes_[s];
    n.alive = table.u8() != 0;
    if (!n.alive) continue;
    n.id = table.str();
    n.level = table.u32();
    if (n.level > 64) throw corrupt("implausible node level");
    for (std::size_t i = 0; i < dim; ++i) index.vectors_[s * dim + i] = table.f64();
    if (!index.slot_of_.emplace(n.id, static_cast<Slot>(s)).second) throw corrupt("duplicate node id");
  }
  if (!table.done()) throw corrupt("node table has trailing bytes");

  for (auto& n : index.nodes_) {
    if (!n.alive) continue;
    n.links.resize(n.level + 1);
    for (auto& links : n.links) {
      const auto count = adjacency.u32();
      for (std::uint32_t i = 0; i < count; ++i) {
        const auto target = adjacency.u32();
        if (target >= slots || !index.nodes_[target].alive) throw corrupt("edge to a missing node");
        links.push_back(target);
      }
    }
  }
  if (!adjacency.done()) throw corrupt("adjacency section has trailing bytes");

  const bool empty = index.slot_of_.empty();
  if (empty != (index.entry_ < 0)) throw corrupt("entry point inconsistent with node table");
  if (!empty && (static_cast<std::uint64_t>(index.entry_) >= slots ||
                 !index.nodes_[static_cast<std::size_t>(index.entry_)].alive ||
                 static_cast<int>(index.nodes_[static_cast<std::size_t>(index.entry_)].level) != index.max_layer_)) {
    throw corrupt("entry point is not on the top layer");
  }
  for (Slot s : index.free_slots_) {
    if (s >= slots || index.nodes_[s].alive) throw corrupt("bad free slot");
  }
  return index;
}

}  // namespace millstone::ann
