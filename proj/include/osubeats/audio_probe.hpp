#pragma once

// Duration of an MP3 stream from frame headers alone. Handles an optional
// leading ID3v2 tag, MPEG-1/2/2.5 Layer III frames and the Xing/Info header
// that encoders place in the first frame.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osubeats/error.hpp"

namespace osubeats {

enum class DurationMethod { FrameWalk, XingHeader, Override };

struct AudioInfo {
  double duration_s = 0.0;
  int sample_rate_hz = 0;
  std::int64_t frame_count = 0;
  DurationMethod method = DurationMethod::FrameWalk;
  std::vector<std::string> warnings;
};

struct ProbeOptions {
  /// When the first frame carries a Xing/Info frame count, report that
  /// count instead of the walked one.
  bool trust_xing_header = true;
};

namespace detail {

struct Mp3FrameHeader {
  int version = 0;  // 1 = MPEG-1, 2 = MPEG-2, 25 = MPEG-2.5
  int sample_rate_hz = 0;
  int bitrate_kbps = 0;
  int samples_per_frame = 0;
  std::size_t frame_bytes = 0;
  bool mono = false;
};

inline std::optional<Mp3FrameHeader> decode_mp3_header(std::span<const std::uint8_t> b, std::size_t pos) {
  if (pos > b.size() || b.size() - pos < 4) return std::nullopt;
  const std::uint8_t h1 = b[pos + 1], h2 = b[pos + 2], h3 = b[pos + 3];
  if (b[pos] != 0xFF || (h1 & 0xE0) != 0xE0) return std::nullopt;
  const int version_bits = (h1 >> 3) & 0x3;
  const int layer_bits = (h1 >> 1) & 0x3;
  const int bitrate_index = (h2 >> 4) & 0xF;
  const int rate_index = (h2 >> 2) & 0x3;
  if (version_bits == 1 || layer_bits != 1) return std::nullopt;  // reserved version, not Layer III
  if (bitrate_index == 0 || bitrate_index == 15 || rate_index == 3) return std::nullopt;  // free/bad bitrate

  static constexpr int kBitrateV1[16] = {0, 32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256, 320, 0};
  static constexpr int kBitrateV2[16] = {0, 8, 16, 24, 32, 40, 48, 56, 64, 80, 96, 112, 128, 144, 160, 0};
  static constexpr int kRates[3][3] = {{44100, 48000, 32000}, {22050, 24000, 16000}, {11025, 12000, 8000}};

  Mp3FrameHeader hdr;
  hdr.version = version_bits == 3 ? 1 : version_bits == 2 ? 2 : 25;
  const int row = hdr.version == 1 ? 0 : hdr.version == 2 ? 1 : 2;
  hdr.sample_rate_hz = kRates[row][rate_index];
  hdr.bitrate_kbps = hdr.version == 1 ? kBitrateV1[bitrate_index] : kBitrateV2[bitrate_index];
  hdr.samples_per_frame = hdr.version == 1 ? 1152 : 576;
  const int padding = (h2 >> 1) & 0x1;
  const int coefficient = hdr.version == 1 ? 144 : 72;
  hdr.frame_bytes = static_cast<std::size_t>(coefficient * hdr.bitrate_kbps * 1000 / hdr.sample_rate_hz + padding);
  hdr.mono = ((h3 >> 6) & 0x3) == 3;
  return hdr;
}

inline bool same_stream(const Mp3FrameHeader& a, const Mp3FrameHeader& b) {
  return a.version == b.version && a.sample_rate_hz == b.sample_rate_hz;
}

/// Bytes to skip for a leading ID3v2 tag (0 when absent).
inline std::size_t id3v2_size(std::span<const std::uint8_t> b) {
  if (b.size() < 10 || b[0] != 'I' || b[1] != 'D' || b[2] != '3') return 0;
  if ((b[6] | b[7] | b[8] | b[9]) & 0x80) return 0;  // not syncsafe; treat as no tag
  const std::size_t size = (std::size_t{b[6]} << 21) | (std::size_t{b[7]} << 14) | (std::size_t{b[8]} << 7) | b[9];
  const bool footer = (b[5] & 0x10) != 0;
  return 10 + size + (footer ? 10 : 0);
}

/// Frame count from a Xing/Info block in the frame at `pos`, if present.
inline std::optional<std::uint32_t> xing_frame_count(std::span<const std::uint8_t> b, std::size_t pos,
                                                     const Mp3FrameHeader& hdr) {
  const std::size_t side_info = hdr.version == 1 ? (hdr.mono ? 17 : 32) : (hdr.mono ? 9 : 17);
  const std::size_t tag = pos + 4 + side_info;
  if (tag + 12 > b.size() || tag + 12 > pos + hdr.frame_bytes) return std::nullopt;
  const bool xing = b[tag] == 'X' && b[tag + 1] == 'i' && b[tag + 2] == 'n' && b[tag + 3] == 'g';
  const bool info = b[tag] == 'I' && b[tag + 1] == 'n' && b[tag + 2] == 'f' && b[tag + 3] == 'o';
  if (!xing && !info) return std::nullopt;
  const std::uint32_t flags = (std::uint32_t{b[tag + 4]} << 24) | (std::uint32_t{b[tag + 5]} << 16) |
                              (std::uint32_t{b[tag + 6]} << 8) | b[tag + 7];
  if (!(flags & 0x1)) return std::nullopt;
  return (std::uint32_t{b[tag + 8]} << 24) | (std::uint32_t{b[tag + 9]} << 16) | (std::uint32_t{b[tag + 10]} << 8) |
         b[tag + 11];
}

}  // namespace detail

inline AudioInfo mp3_duration(std::span<const std::uint8_t> bytes, const ProbeOptions& options = {}) {
  using detail::decode_mp3_header;
  constexpr std::size_t kSyncSearchWindow = 64 * 1024;

  const std::size_t tag = detail::id3v2_size(bytes);
  if (tag >= bytes.size()) throw Error(Errc::NotMp3, "no audio data after ID3v2 tag");

  // First frame: a valid header whose successor (when there is room for one)
  // is also a valid header of the same stream.
  std::optional<detail::Mp3FrameHeader> first;
  std::size_t start = 0;
  const std::size_t search_end = std::min(bytes.size(), tag + kSyncSearchWindow);
  for (std::size_t pos = tag; pos < search_end; ++pos) {
    auto hdr = decode_mp3_header(bytes, pos);
    if (!hdr) continue;
    const std::size_t next = pos + hdr->frame_bytes;
    if (next + 4 <= bytes.size()) {
      auto succ = decode_mp3_header(bytes, next);
      if (!succ || !detail::same_stream(*hdr, *succ)) continue;
    }
    first = hdr;
    start = pos;
    break;
  }
  if (!first) throw Error(Errc::NotMp3, "no MPEG Layer III frame sync found");

  AudioInfo info;
  info.sample_rate_hz = first->sample_rate_hz;
  const auto xing_count = detail::xing_frame_count(bytes, start, *first);

  std::int64_t walked = 0;
  std::size_t pos = start;
  while (pos < bytes.size()) {
    auto hdr = decode_mp3_header(bytes, pos);
    if (!hdr || !detail::same_stream(*first, *hdr)) break;  // trailing tag or garbage ends the stream
    if (hdr->frame_bytes > bytes.size() - pos) {
      info.warnings.push_back("truncated final frame at byte " + std::to_string(pos) + " dropped");
      break;
    }
    ++walked;
    pos += hdr->frame_bytes;
  }
  // The Xing/Info frame is a silent metadata frame, not audio.
  if (xing_count && walked > 0) --walked;

  if (xing_count && *xing_count > 0 && options.trust_xing_header) {
    info.frame_count = *xing_count;
    info.method = DurationMethod::XingHeader;
  } else {
    if (walked == 0) throw Error(Errc::TruncatedStream, "no complete MPEG frame");
    info.frame_count = walked;
    info.method = DurationMethod::FrameWalk;
  }
  info.duration_s = static_cast<double>(info.frame_count) * first->samples_per_frame / info.sample_rate_hz;
  return info;
}

/// Duration to bound a beat grid: an explicit override wins over the probe.
inline double resolve_duration(const std::optional<AudioInfo>& info, std::optional<double> override_s) {
  if (override_s) {
    if (!(*override_s > 0.0)) throw Error(Errc::InvalidArgument, "duration override must be positive");
    return *override_s;
  }
  if (info && info->duration_s > 0.0) return info->duration_s;
  throw Error(Errc::NoDurationAvailable, "no probed duration and no override");
}

}  // namespace osubeats
