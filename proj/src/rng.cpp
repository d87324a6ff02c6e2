#include "che/rng.hpp"

#include "che/digest.hpp"
#include "che/errors.hpp"

namespace che {

std::uint64_t DetRng::below(std::uint64_t n) {
    if (n == 0)
        throw Error(ErrorCode::precondition, "below(0) is undefined");
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
        std::uint64_t v = engine_();
        if (v < limit)
            return v % n;
    }
}

double DetRng::unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

Bytes DetRng::bytes(std::size_t n) {
    Bytes out;
    out.reserve(n);
    while (out.size() < n) {
        std::uint64_t v = engine_();
        for (int i = 0; i < 8 && out.size() < n; ++i) {
            out.push_back(static_cast<std::uint8_t>(v >> 56));
            v <<= 8;
        }
    }
    return out;
}

DetRng DetRng::derive(const std::string& label) const {
    Bytes material;
    append_u64(material, seed_);
    append(material, to_bytes(label));
    Digest d = sha256(material);
    std::uint64_t child = 0;
    for (int i = 0; i < 8; ++i)
        child = child << 8 | d[static_cast<std::size_t>(i)];
    return DetRng(child);
}

std::uint64_t os_seed() {
    std::random_device rd;
    return static_cast<std::uint64_t>(rd()) << 32 | rd();
}

} // namespace che
