#pragma once

// Synthesizes header-valid MPEG Layer III streams with silent payloads.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace osubeats::testing {

struct Mp3Spec {
  int version = 1;  // 1, 2 or 25
  int sample_rate_hz = 44100;
  int bitrate_kbps = 32;
  int frames = 100;
  bool mono = true;
  /// Emit a leading Xing frame announcing `frames` audio frames.
  bool xing = false;
  /// Overrides the frame count written into the Xing block.
  std::optional<std::uint32_t> xing_count;
  /// Size of a leading ID3v2 tag body (0 = no tag).
  std::size_t id3_body = 0;
};

inline std::vector<std::uint8_t> mp3_header(const Mp3Spec& s, bool padding) {
  static constexpr int kBitrateV1[] = {0, 32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256, 320};
  static constexpr int kBitrateV2[] = {0, 8, 16, 24, 32, 40, 48, 56, 64, 80, 96, 112, 128, 144, 160};
  const int* table = s.version == 1 ? kBitrateV1 : kBitrateV2;
  int br = -1;
  for (int i = 1; i < 15; ++i) {
    if (table[i] == s.bitrate_kbps) br = i;
  }
  const int rates[3][3] = {{44100, 48000, 32000}, {22050, 24000, 16000}, {11025, 12000, 8000}};
  const int row = s.version == 1 ? 0 : s.version == 2 ? 1 : 2;
  int sr = -1;
  for (int i = 0; i < 3; ++i) {
    if (rates[row][i] == s.sample_rate_hz) sr = i;
  }
  if (br < 0 || sr < 0) throw std::invalid_argument("unsupported bitrate/sample rate");
  const int version_bits = s.version == 1 ? 3 : s.version == 2 ? 2 : 0;
  return {0xFF, static_cast<std::uint8_t>(0xE0 | (version_bits << 3) | (1 << 1) | 1),
          static_cast<std::uint8_t>((br << 4) | (sr << 2) | (padding ? 2 : 0)),
          static_cast<std::uint8_t>(s.mono ? 0xC0 : 0x00)};
}

inline std::size_t mp3_frame_bytes(const Mp3Spec& s, bool padding) {
  const int coefficient = s.version == 1 ? 144 : 72;
  return static_cast<std::size_t>(coefficient * s.bitrate_kbps * 1000 / s.sample_rate_hz + (padding ? 1 : 0));
}

inline int mp3_samples_per_frame(const Mp3Spec& s) { return s.version == 1 ? 1152 : 576; }

inline double mp3_expected_duration(const Mp3Spec& s) {
  return static_cast<double>(s.frames) * mp3_samples_per_frame(s) / s.sample_rate_hz;
}

inline std::vector<std::uint8_t> synth_mp3(const Mp3Spec& s) {
  std::vector<std::uint8_t> out;
  if (s.id3_body > 0) {
    const std::size_t n = s.id3_body;
    out.insert(out.end(), {'I', 'D', '3', 4, 0, 0, static_cast<std::uint8_t>((n >> 21) & 0x7F),
                           static_cast<std::uint8_t>((n >> 14) & 0x7F), static_cast<std::uint8_t>((n >> 7) & 0x7F),
                           static_cast<std::uint8_t>(n & 0x7F)});
    out.resize(out.size() + n, 0);
  }
  auto frame = [&](bool xing_frame) {
    const auto hdr = mp3_header(s, false);
    const std::size_t start = out.size();
    out.insert(out.end(), hdr.begin(), hdr.end());
    out.resize(start + mp3_frame_bytes(s, false), 0);
    if (xing_frame) {
      const std::size_t side = s.version == 1 ? (s.mono ? 17 : 32) : (s.mono ? 9 : 17);
      const std::size_t tag = start + 4 + side;
      const std::uint32_t count = s.xing_count.value_or(static_cast<std::uint32_t>(s.frames));
      const std::uint8_t block[12] = {'X', 'i', 'n', 'g', 0, 0, 0, 1,
                                      static_cast<std::uint8_t>(count >> 24), static_cast<std::uint8_t>(count >> 16),
                                      static_cast<std::uint8_t>(count >> 8), static_cast<std::uint8_t>(count)};
      for (int i = 0; i < 12; ++i) out[tag + i] = block[i];
    }
  };
  if (s.xing) frame(true);
  for (int i = 0; i < s.frames; ++i) frame(false);
  return out;
}

}  // namespace osubeats::testing
