#include <bit>

#include <zlib.h>

#include "millstone/json_codec.hpp"
#include "millstone/store.hpp"

namespace millstone::store {

namespace {

constexpr std::uint32_t kRecordMagic = 0x3152534d;  // "MSR1" little-endian
constexpr std::size_t kHeaderSize = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::uint32_t crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

std::string encode_record(const Document& doc) {
  const std::string json = to_json(doc, /*include_vector=*/false).dump();
  std::string payload = json;
  const std::uint32_t dim = doc.embedding ? static_cast<std::uint32_t>(doc.embedding->dim()) : 0;
  if (doc.embedding) {
    for (double v : doc.embedding->values()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) payload.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  std::string out;
  out.reserve(kHeaderSize + payload.size());
  put_u32(out, kRecordMagic);
  put_u32(out, static_cast<std::uint32_t>(json.size()));
  put_u32(out, dim);
  put_u32(out, crc(payload));
  out += payload;
  return out;
}

DecodedRecords decode_records(std::string_view bytes) {
  DecodedRecords result;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t remaining = bytes.size() - pos;
    if (remaining < kHeaderSize) {
      result.torn_tail = true;
      break;
    }
    const auto magic = get_u32(bytes, pos);
    const auto json_len = get_u32(bytes, pos + 4);
    const auto dim = get_u32(bytes, pos + 8);
    const auto expected_crc = get_u32(bytes, pos + 12);
    const std::uint64_t payload_len = static_cast<std::uint64_t>(json_len) + 8ull * dim;
    if (magic != kRecordMagic) {
      throw Error(ErrorCode::CorruptRecord, "bad record magic at offset " + std::to_string(pos));
    }
    if (payload_len > remaining - kHeaderSize) {
      result.torn_tail = true;
      break;
    }
    const auto payload = bytes.substr(pos + kHeaderSize, payload_len);
    const bool last = pos + kHeaderSize + payload_len == bytes.size();
    if (crc(payload) != expected_crc) {
      if (last) {
        result.torn_tail = true;
        break;
      }
      throw Error(ErrorCode::CorruptRecord, "checksum mismatch at offset " + std::to_string(pos));
    }
    Document doc;
    try {
      doc = deserialize_document(payload.substr(0, json_len));
      if (dim > 0) {
        std::vector<double> values(dim);
        for (std::uint32_t i = 0; i < dim; ++i) {
          std::uint64_t bits = 0;
          for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(payload[json_len + 8 * i + b])) << (8 * b);
          }
          values[i] = std::bit_cast<double>(bits);
        }
        doc.embedding = Embedding(std::move(values));
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptRecord,
                  "undecodable record at offset " + std::to_string(pos) + ": " + e.what());
    }
    result.documents.push_back(std::move(doc));
    pos += kHeaderSize + payload_len;
    result.valid_bytes = pos;
  }
  return result;
}

}  // namespace millstone::store
