#include "etongue/digest.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <memory>

#include "etongue/error.hpp"

namespace etongue {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string matrix_digest(const Eigen::MatrixXd& X) {
  std::string bytes;
  auto put = [&](std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) bytes += static_cast<char>((v >> shift) & 0xFF);
  };
  put(static_cast<std::uint64_t>(X.rows()));
  put(static_cast<std::uint64_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) put(std::bit_cast<std::uint64_t>(X(i, j)));
  return sha256_hex(bytes);
}

}  // namespace etongue
