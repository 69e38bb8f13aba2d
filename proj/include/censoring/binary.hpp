#pragma once

#include "censoring/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace censoring::binary {

/// Writes an unsigned integer or a float type as little-endian bytes.
template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_arithmetic_v<T>);
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    U bits;
    std::memcpy(&bits, &value, sizeof(T));
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, sizeof(T));
}

/// Little-endian reader that tracks the byte offset for diagnostics.
class Reader {
public:
    Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

    template <typename T>
    T get(const char* field) {
        static_assert(std::is_arithmetic_v<T>);
        unsigned char bytes[sizeof(T)];
        read_raw(reinterpret_cast<char*>(bytes), sizeof(T), field);
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
        T value;
        if constexpr (sizeof(T) == 1) {
            auto b = static_cast<std::uint8_t>(bits);
            std::memcpy(&value, &b, 1);
        } else if constexpr (sizeof(T) == 2) {
            auto b = static_cast<std::uint16_t>(bits);
            std::memcpy(&value, &b, 2);
        } else if constexpr (sizeof(T) == 4) {
            auto b = static_cast<std::uint32_t>(bits);
            std::memcpy(&value, &b, 4);
        } else {
            std::memcpy(&value, &bits, 8);
        }
        return value;
    }

    void read_raw(char* dst, std::size_t count, const char* field) {
        in_.read(dst, static_cast<std::streamsize>(count));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got != count) {
            throw FormatError(what_ + ": truncated at byte " + std::to_string(offset_ + got) + " while reading " + field +
                              " (needed " + std::to_string(count) + " bytes at offset " + std::to_string(offset_) +
                              ")");
        }
        offset_ += count;
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
    std::uint64_t offset() const noexcept { return offset_; }
    const std::string& what() const noexcept { return what_; }

private:
    std::istream& in_;
    std::string what_;
    std::uint64_t offset_ = 0;
};

}  // namespace censoring::binary
