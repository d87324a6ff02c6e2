#pragma once

#include <string>
#include <utility>

#include "che/bytes.hpp"
#include "che/pairing.hpp"
#include "che/rng.hpp"

namespace che::ibc {

using pairing::G1;
using pairing::G2;
using pairing::PairingParams;
using pairing::Scalar;

// Interchange form of an imprinted identity: everything a stranger needs
// to encrypt to this node and verify its signatures, bound together by the
// issuing station's certification signature.
struct PeerPublic {
    std::string station_id;
    PairingParams params;
    G1 p_pub;   // station public key s*P
    std::string id;
    G1 q_id;    // encryption public key derived from id
    G1 cert;    // station signature over (station_id, p_pub, id, q_id)

    Bytes to_bytes() const;
    static PeerPublic from_bytes(const Bytes& data);
    static PeerPublic read(ByteReader& r);
    void write(Bytes& out) const;
};

// Checks the carried q_id against the one derived from id and verifies the
// station's binding signature.
bool verify_peer_public(const PeerPublic& pp);

// A node's imprinted credential: the public part plus the two private keys
// extracted by the station (one for decryption, one for signing).
struct TrustGerm {
    PeerPublic pub;
    G1 s_enc;
    G1 s_sig;

    const std::string& id() const { return pub.id; }
    const PairingParams& params() const { return pub.params; }

    Bytes to_bytes() const;
    static TrustGerm from_bytes(const Bytes& data);
};

struct StationPublic {
    std::string station_id;
    PairingParams params;
    G1 p_pub;
};

// Trusted authority holding the master secret s. Imprints node identities
// by extracting their private keys.
struct ImprintingStation {
    std::string station_id;
    PairingParams params;
    Scalar s;
    G1 p_pub;

    static ImprintingStation create(const std::string& station_id,
                                    const PairingParams& params, DetRng& rng);

    StationPublic public_params() const;

    // Identity strings are nonempty and must not contain '|', which
    // delimits fields in canonical messages.
    TrustGerm imprint(const std::string& id) const;

    Bytes to_bytes() const;
    static ImprintingStation from_bytes(const Bytes& data);
};

G1 enc_key_for(const PairingParams& params, const std::string& id);
G1 sig_key_for(const PairingParams& params, const std::string& id);

struct Ciphertext {
    G1 u;
    Bytes v;
    Bytes mac;

    Bytes to_bytes() const;
    static Ciphertext from_bytes(const PairingParams& params, const Bytes& data);
};

inline constexpr std::size_t max_plaintext_bytes = 4096;

Ciphertext ibe_encrypt(const PeerPublic& to, const Bytes& plaintext, DetRng& rng);
// Throws Error(mac_mismatch) if the ciphertext was tampered with or was not
// addressed to this germ's identity.
Bytes ibe_decrypt(const TrustGerm& germ, const Ciphertext& ct);

struct Signature {
    G1 u;
    Scalar h;
    G1 v;

    Bytes to_bytes(const PairingParams& params) const;
    static Signature from_bytes(const PairingParams& params, const Bytes& data);
    static Signature read(const PairingParams& params, ByteReader& r);
    void write(const PairingParams& params, Bytes& out) const;
};

Signature ibs_sign(const TrustGerm& germ, const Bytes& message, DetRng& rng);
// Deterministic: no randomness is drawn during verification.
bool ibs_verify(const PairingParams& params, const G1& p_pub,
                const std::string& signer_id, const Bytes& message,
                const Signature& sig);
bool ibs_verify_from(const PeerPublic& signer, const Bytes& message,
                     const Signature& sig);

// Authenticated byte pipe keyed by a fresh session secret. Frames carry a
// send counter; receiving out of order or twice throws Error(replay).
struct SecureChannel {
    Bytes key;
    std::string local_id;
    std::string remote_id;
    std::uint64_t send_counter = 0;
    std::uint64_t recv_counter = 0;
};

Bytes channel_send(SecureChannel& ch, const Bytes& payload);
Bytes channel_receive(SecureChannel& ch, const Bytes& frame);

// In-process handshake: verifies both public parts, moves a fresh session
// key from a to b under b's IBE identity, and returns both endpoints.
// Throws Error(params_mismatch) if the germs come from different domains
// and Error(bad_signature) if a public part fails certification.
std::pair<SecureChannel, SecureChannel> establish_channel(const TrustGerm& a,
                                                          const TrustGerm& b,
                                                          DetRng& rng);

} // namespace che::ibc
