#include "che/digest.hpp"

#include <openssl/evp.h>

#include "che/errors.hpp"

namespace che {

Digest sha256(const Bytes& data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size())
        throw Error(ErrorCode::io, "digest computation failed");
    return out;
}

Bytes sha256_bytes(const Bytes& data) {
    Digest d = sha256(data);
    return Bytes(d.begin(), d.end());
}

} // namespace che
