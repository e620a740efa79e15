#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <sodium.h>

#include "stylemix/error.hpp"

namespace stylemix::io {

static_assert(std::endian::native == std::endian::little, "f64 payloads are stored little-endian");

inline std::string base64_encode(std::span<const unsigned char> bytes) {
    const std::size_t n = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    std::string out(n, '\0');
    sodium_bin2base64(out.data(), n, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(n - 1); // drop the terminating NUL
    return out;
}

inline std::vector<unsigned char> base64_decode(std::string_view text) {
    std::vector<unsigned char> out(text.size() / 4 * 3 + 3);
    std::size_t len = 0;
    const char* end = nullptr;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end,
                          sodium_base64_VARIANT_ORIGINAL) != 0 ||
        end != text.data() + text.size()) {
        throw FormatError("invalid base64 payload");
    }
    out.resize(len);
    return out;
}

inline std::string encode_f64(std::span<const double> xs) {
    return base64_encode({reinterpret_cast<const unsigned char*>(xs.data()), xs.size() * sizeof(double)});
}

inline std::vector<double> decode_f64(std::string_view text, std::size_t expected) {
    const auto bytes = base64_decode(text);
    if (bytes.size() != expected * sizeof(double)) {
        throw FormatError("f64 payload holds " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected * sizeof(double)));
    }
    std::vector<double> out(expected);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

} // namespace stylemix::io
