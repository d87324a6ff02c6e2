#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace che {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(const std::string& s);
std::string to_string(const Bytes& b);
std::string hex(const Bytes& b);

void append(Bytes& out, const Bytes& more);
void append_u8(Bytes& out, std::uint8_t v);
void append_u16(Bytes& out, std::uint16_t v);
void append_u32(Bytes& out, std::uint32_t v);
void append_u64(Bytes& out, std::uint64_t v);
void append_i64(Bytes& out, std::int64_t v);

// Length-prefixed strings: u16 length then raw bytes. Throws
// Error(precondition) if the string exceeds 65535 bytes.
void append_str16(Bytes& out, const std::string& s);
// Length-prefixed byte blobs: u32 length then raw bytes.
void append_blob32(Bytes& out, const Bytes& b);

// Sequential big-endian reader. Every read throws Error(decode) on
// truncated input instead of reading past the end.
class ByteReader {
  public:
    explicit ByteReader(const Bytes& data) : data_(data) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64();
    Bytes raw(std::size_t n);
    std::string str16();
    Bytes blob32();

    bool done() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }
    // Throws Error(decode) unless all input was consumed.
    void expect_done() const;

  private:
    void need(std::size_t n) const;

    const Bytes& data_;
    std::size_t pos_ = 0;
};

} // namespace che
