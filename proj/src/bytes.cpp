#include "che/bytes.hpp"

#include "che/errors.hpp"

namespace che {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::decode: return "decode";
    case ErrorCode::params_mismatch: return "params_mismatch";
    case ErrorCode::mac_mismatch: return "mac_mismatch";
    case ErrorCode::bad_signature: return "bad_signature";
    case ErrorCode::replay: return "replay";
    case ErrorCode::blacklisted: return "blacklisted";
    case ErrorCode::unknown_subject: return "unknown_subject";
    case ErrorCode::policy: return "policy";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

Bytes to_bytes(const std::string& s) {
    return Bytes(s.begin(), s.end());
}

std::string to_string(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

std::string hex(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (std::uint8_t byte : b) {
        out.push_back(digits[byte >> 4]);
        out.push_back(digits[byte & 0x0f]);
    }
    return out;
}

void append(Bytes& out, const Bytes& more) {
    out.insert(out.end(), more.begin(), more.end());
}

void append_u8(Bytes& out, std::uint8_t v) {
    out.push_back(v);
}

void append_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_u32(Bytes& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void append_u64(Bytes& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void append_i64(Bytes& out, std::int64_t v) {
    append_u64(out, static_cast<std::uint64_t>(v));
}

void append_str16(Bytes& out, const std::string& s) {
    if (s.size() > 0xffff)
        throw Error(ErrorCode::precondition, "string too long to serialize");
    append_u16(out, static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

void append_blob32(Bytes& out, const Bytes& b) {
    if (b.size() > 0xffffffffu)
        throw Error(ErrorCode::precondition, "blob too long to serialize");
    append_u32(out, static_cast<std::uint32_t>(b.size()));
    append(out, b);
}

void ByteReader::need(std::size_t n) const {
    if (data_.size() - pos_ < n)
        throw Error(ErrorCode::decode, "truncated input");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
    pos_ += 2;
    return v;
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v = v << 8 | data_[pos_ + i];
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = v << 8 | data_[pos_ + i];
    pos_ += 8;
    return v;
}

std::int64_t ByteReader::i64() {
    return static_cast<std::int64_t>(u64());
}

Bytes ByteReader::raw(std::size_t n) {
    need(n);
    Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
              data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
}

std::string ByteReader::str16() {
    std::size_t n = u16();
    need(n);
    std::string out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                    data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
}

Bytes ByteReader::blob32() {
    std::size_t n = u32();
    return raw(n);
}

void ByteReader::expect_done() const {
    if (pos_ != data_.size())
        throw Error(ErrorCode::decode, "trailing bytes after value");
}

} // namespace che
