#pragma once

// Minimal ZIP container reader for .osz archives: central directory walk,
// stored and deflate members, CRC verification. No ZIP64, no encryption.

#include <zlib.h>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "osubeats/error.hpp"

namespace osubeats {

struct ZipMember {
  std::string name;
  std::uint16_t flags = 0;
  std::uint16_t method = 0;
  std::uint32_t crc32 = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t uncompressed_size = 0;
  std::uint32_t local_header_offset = 0;

  bool is_directory() const { return !name.empty() && (name.back() == '/' || name.back() == '\\'); }
};

class ZipReader {
 public:
  static constexpr std::uint32_t kMaxMemberSize = 1u << 30;

  explicit ZipReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) { read_central_directory(); }

  const std::vector<ZipMember>& members() const { return members_; }

  std::vector<std::uint8_t> extract(const ZipMember& m) const {
    if (m.flags & 0x1) fail("encrypted member " + m.name);
    const std::size_t lh = m.local_header_offset;
    if (u32(lh) != 0x04034b50) fail("bad local header for " + m.name);
    const std::size_t data_start = lh + 30 + u16(lh + 26) + u16(lh + 28);
    need(data_start, m.compressed_size);
    std::span<const std::uint8_t> data(bytes_.data() + data_start, m.compressed_size);

    if (m.uncompressed_size > kMaxMemberSize) fail("member too large: " + m.name);
    std::vector<std::uint8_t> out;
    if (m.method == 0) {
      if (m.compressed_size != m.uncompressed_size) fail("stored size mismatch for " + m.name);
      out.assign(data.begin(), data.end());
    } else if (m.method == 8) {
      out = inflate_raw(data, m.uncompressed_size, m.name);
    } else {
      fail("unsupported compression method " + std::to_string(m.method) + " for " + m.name);
    }

    uLong crc = ::crc32(0L, Z_NULL, 0);
    if (!out.empty()) crc = ::crc32(crc, out.data(), static_cast<uInt>(out.size()));
    if (static_cast<std::uint32_t>(crc) != m.crc32) fail("CRC mismatch for " + m.name);
    return out;
  }

 private:
  [[noreturn]] static void fail(const std::string& why) { throw Error(Errc::CorruptArchive, why); }

  void need(std::size_t offset, std::size_t len) const {
    if (offset > bytes_.size() || len > bytes_.size() - offset) fail("truncated archive");
  }
  std::uint16_t u16(std::size_t off) const {
    need(off, 2);
    return static_cast<std::uint16_t>(bytes_[off] | (bytes_[off + 1] << 8));
  }
  std::uint32_t u32(std::size_t off) const {
    need(off, 4);
    return static_cast<std::uint32_t>(bytes_[off]) | (static_cast<std::uint32_t>(bytes_[off + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes_[off + 2]) << 16) | (static_cast<std::uint32_t>(bytes_[off + 3]) << 24);
  }

  void read_central_directory() {
    if (bytes_.size() < 22) fail("too small for a ZIP archive");
    std::size_t eocd = std::string::npos;
    const std::size_t lowest = bytes_.size() >= 22 + 0xFFFF ? bytes_.size() - 22 - 0xFFFF : 0;
    for (std::size_t pos = bytes_.size() - 22 + 1; pos-- > lowest;) {
      if (u32(pos) == 0x06054b50) {
        eocd = pos;
        break;
      }
    }
    if (eocd == std::string::npos) fail("end of central directory not found");

    const std::uint16_t count = u16(eocd + 10);
    const std::uint32_t cd_size = u32(eocd + 12);
    const std::uint32_t cd_offset = u32(eocd + 16);
    if (count == 0xFFFF || cd_offset == 0xFFFFFFFFu) fail("ZIP64 archives are not supported");
    need(cd_offset, cd_size);

    std::size_t pos = cd_offset;
    members_.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
      if (u32(pos) != 0x02014b50) fail("bad central directory entry");
      ZipMember m;
      m.flags = u16(pos + 8);
      m.method = u16(pos + 10);
      m.crc32 = u32(pos + 16);
      m.compressed_size = u32(pos + 20);
      m.uncompressed_size = u32(pos + 24);
      const std::uint16_t name_len = u16(pos + 28);
      const std::uint16_t extra_len = u16(pos + 30);
      const std::uint16_t comment_len = u16(pos + 32);
      m.local_header_offset = u32(pos + 42);
      need(pos + 46, name_len);
      m.name.assign(reinterpret_cast<const char*>(bytes_.data() + pos + 46), name_len);
      if (m.compressed_size == 0xFFFFFFFFu || m.uncompressed_size == 0xFFFFFFFFu ||
          m.local_header_offset == 0xFFFFFFFFu) {
        fail("ZIP64 member " + m.name + " is not supported");
      }
      members_.push_back(std::move(m));
      pos += 46 + name_len + extra_len + comment_len;
    }
  }

  static std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in, std::uint32_t expected,
                                               const std::string& name) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) fail("inflate init failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    // With an exact-size output buffer zlib may report Z_BUF_ERROR instead
    // of Z_STREAM_END for an empty member.
    int rc = inflate(&zs, Z_FINISH);
    const uLong produced = zs.total_out;
    inflateEnd(&zs);
    if (!(rc == Z_STREAM_END || (rc == Z_BUF_ERROR && expected == 0)) || produced != expected) {
      fail("deflate stream error in " + name);
    }
    return out;
  }

  std::vector<std::uint8_t> bytes_;
  std::vector<ZipMember> members_;
};

}  // namespace osubeats
