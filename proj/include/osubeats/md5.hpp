#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>

#include "osubeats/error.hpp"

namespace osubeats {

namespace detail {

class Md5Context {
 public:
  Md5Context() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_md5(), nullptr) != 1) {
      throw Error(Errc::IoFailure, "MD5 initialisation failed");
    }
  }

  void update(const void* data, std::size_t size) {
    if (size > 0 && EVP_DigestUpdate(ctx_.get(), data, size) != 1) throw Error(Errc::IoFailure, "MD5 update failed");
  }

  std::string hex_digest() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error(Errc::IoFailure, "MD5 final failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace detail

/// Lowercase hex MD5 digest.
inline std::string md5_hex(std::span<const std::uint8_t> bytes) {
  detail::Md5Context ctx;
  ctx.update(bytes.data(), bytes.size());
  return ctx.hex_digest();
}

inline std::string md5_hex(std::string_view bytes) {
  detail::Md5Context ctx;
  ctx.update(bytes.data(), bytes.size());
  return ctx.hex_digest();
}

inline std::string md5_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  detail::Md5Context ctx;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    ctx.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw Error(Errc::IoFailure, "read failed for " + path.string());
  return ctx.hex_digest();
}

}  // namespace osubeats
