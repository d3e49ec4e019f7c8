#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <string>

#include "wagerlab/error.hpp"

namespace wagerlab {

inline std::string sha256_hex(const std::string& data) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int out_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, Code::io, "digest context allocation failed");
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
            EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
            EVP_DigestFinal_ex(ctx, out, &out_len) == 1;
  EVP_MD_CTX_free(ctx);
  require(ok, Code::io, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(out_len * 2);
  for (unsigned i = 0; i < out_len; ++i) {
    s.push_back(hex[out[i] >> 4]);
    s.push_back(hex[out[i] & 0xf]);
  }
  return s;
}

}  // namespace wagerlab
