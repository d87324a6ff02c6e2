#include "che/identity.hpp"

#include "che/digest.hpp"
#include "che/errors.hpp"

namespace che::ibc {

using namespace che::pairing;

namespace {

constexpr std::uint8_t peer_public_version = 1;
constexpr std::uint8_t germ_version = 1;
constexpr std::uint8_t station_version = 1;

Bytes key_material(const char* role, const std::string& id) {
    Bytes out;
    append_u8(out, 0x01);
    append(out, to_bytes(role));
    append(out, to_bytes(id));
    return out;
}

Bytes cert_payload(const std::string& station_id, const G1& p_pub,
                   const std::string& id, const G1& q_id) {
    Bytes out;
    append_u8(out, 0x01);
    append(out, to_bytes("cert"));
    append_str16(out, station_id);
    append(out, g1_to_bytes(p_pub));
    append_str16(out, id);
    append(out, g1_to_bytes(q_id));
    return out;
}

void validate_identity(const std::string& id) {
    if (id.empty())
        throw Error(ErrorCode::precondition, "identity must be nonempty");
    if (id.find('|') != std::string::npos)
        throw Error(ErrorCode::precondition, "identity must not contain '|'");
    if (id.size() > 0xffff)
        throw Error(ErrorCode::precondition, "identity too long");
}

} // namespace

G1 enc_key_for(const PairingParams& params, const std::string& id) {
    return hash_to_g1(params, key_material("enc", id));
}

G1 sig_key_for(const PairingParams& params, const std::string& id) {
    return hash_to_g1(params, key_material("sig", id));
}

void PeerPublic::write(Bytes& out) const {
    append_u8(out, peer_public_version);
    append_params(out, params);
    append_str16(out, station_id);
    append(out, g1_to_bytes(p_pub));
    append_str16(out, id);
    append(out, g1_to_bytes(q_id));
    append(out, g1_to_bytes(cert));
}

Bytes PeerPublic::to_bytes() const {
    Bytes out;
    write(out);
    return out;
}

PeerPublic PeerPublic::read(ByteReader& r) {
    if (r.u8() != peer_public_version)
        throw Error(ErrorCode::decode, "unsupported public part version");
    PeerPublic pp;
    pp.params = read_params(r);
    pp.station_id = r.str16();
    pp.p_pub = g1_from_bytes(pp.params, r.raw(17));
    pp.id = r.str16();
    pp.q_id = g1_from_bytes(pp.params, r.raw(17));
    pp.cert = g1_from_bytes(pp.params, r.raw(17));
    return pp;
}

PeerPublic PeerPublic::from_bytes(const Bytes& data) {
    ByteReader r(data);
    PeerPublic pp = read(r);
    r.expect_done();
    return pp;
}

bool verify_peer_public(const PeerPublic& pp) {
    if (pp.id.empty() || pp.id.find('|') != std::string::npos)
        return false;
    if (!(pp.q_id == enc_key_for(pp.params, pp.id)))
        return false;
    G1 bound = hash_to_g1(pp.params, cert_payload(pp.station_id, pp.p_pub, pp.id, pp.q_id));
    return pair(pp.cert, g1_generator(pp.params)) == pair(bound, pp.p_pub);
}

Bytes TrustGerm::to_bytes() const {
    Bytes out;
    append_u8(out, germ_version);
    pub.write(out);
    append(out, g1_to_bytes(s_enc));
    append(out, g1_to_bytes(s_sig));
    return out;
}

TrustGerm TrustGerm::from_bytes(const Bytes& data) {
    ByteReader r(data);
    if (r.u8() != germ_version)
        throw Error(ErrorCode::decode, "unsupported germ version");
    TrustGerm g;
    g.pub = PeerPublic::read(r);
    g.s_enc = g1_from_bytes(g.pub.params, r.raw(17));
    g.s_sig = g1_from_bytes(g.pub.params, r.raw(17));
    r.expect_done();
    return g;
}

ImprintingStation ImprintingStation::create(const std::string& station_id,
                                            const PairingParams& params, DetRng& rng) {
    if (station_id.empty() || station_id.size() > 0xffff)
        throw Error(ErrorCode::precondition, "station id must be nonempty");
    ImprintingStation st;
    st.station_id = station_id;
    st.params = params;
    st.s = scalar_random(params, rng);
    if (st.s.v == 0)
        st.s.v = 1;
    st.p_pub = g1_mul(st.s, g1_generator(params));
    return st;
}

StationPublic ImprintingStation::public_params() const {
    return StationPublic{station_id, params, p_pub};
}

TrustGerm ImprintingStation::imprint(const std::string& id) const {
    validate_identity(id);
    TrustGerm g;
    g.pub.station_id = station_id;
    g.pub.params = params;
    g.pub.p_pub = p_pub;
    g.pub.id = id;
    g.pub.q_id = enc_key_for(params, id);
    G1 bound = hash_to_g1(params, cert_payload(station_id, p_pub, id, g.pub.q_id));
    g.pub.cert = g1_mul(s, bound);
    g.s_enc = g1_mul(s, g.pub.q_id);
    g.s_sig = g1_mul(s, sig_key_for(params, id));
    return g;
}

Bytes ImprintingStation::to_bytes() const {
    Bytes out;
    append_u8(out, station_version);
    append_params(out, params);
    append_str16(out, station_id);
    append(out, scalar_to_bytes(params, s));
    append(out, g1_to_bytes(p_pub));
    return out;
}

ImprintingStation ImprintingStation::from_bytes(const Bytes& data) {
    ByteReader r(data);
    if (r.u8() != station_version)
        throw Error(ErrorCode::decode, "unsupported station file version");
    ImprintingStation st;
    st.params = read_params(r);
    st.station_id = r.str16();
    st.s = scalar_from_bytes(st.params, r.raw(17));
    st.p_pub = g1_from_bytes(st.params, r.raw(17));
    r.expect_done();
    return st;
}

namespace {

Bytes ibe_mac(const G2& shared, const G1& u, const std::string& recipient,
              const Bytes& v) {
    Bytes material;
    append_u8(material, 0x03);
    append(material, g2_to_bytes(shared));
    append(material, g1_to_bytes(u));
    append_str16(material, recipient);
    append_blob32(material, v);
    return sha256_bytes(material);
}

} // namespace

Ciphertext ibe_encrypt(const PeerPublic& to, const Bytes& plaintext, DetRng& rng) {
    if (plaintext.size() > max_plaintext_bytes)
        throw Error(ErrorCode::precondition, "plaintext exceeds 4 KiB bound");
    Scalar r = scalar_random(to.params, rng);
    if (r.v == 0)
        r.v = 1;
    Ciphertext ct;
    ct.u = g1_mul(r, g1_generator(to.params));
    G2 shared = g2_pow(pair(to.q_id, to.p_pub), r);
    ct.v = plaintext;
    if (!plaintext.empty()) {
        Bytes mask = hash_to_mask(shared, plaintext.size());
        for (std::size_t i = 0; i < plaintext.size(); ++i)
            ct.v[i] ^= mask[i];
    }
    ct.mac = ibe_mac(shared, ct.u, to.id, ct.v);
    return ct;
}

Bytes ibe_decrypt(const TrustGerm& germ, const Ciphertext& ct) {
    G2 shared = pair(germ.s_enc, ct.u);
    Bytes expected = ibe_mac(shared, ct.u, germ.id(), ct.v);
    if (expected != ct.mac)
        throw Error(ErrorCode::mac_mismatch, "ciphertext authentication failed");
    Bytes plaintext = ct.v;
    if (!plaintext.empty()) {
        Bytes mask = hash_to_mask(shared, plaintext.size());
        for (std::size_t i = 0; i < plaintext.size(); ++i)
            plaintext[i] ^= mask[i];
    }
    return plaintext;
}

Bytes Ciphertext::to_bytes() const {
    Bytes out;
    append(out, g1_to_bytes(u));
    append_blob32(out, v);
    append_blob32(out, mac);
    return out;
}

Ciphertext Ciphertext::from_bytes(const PairingParams& params, const Bytes& data) {
    ByteReader r(data);
    Ciphertext ct;
    ct.u = g1_from_bytes(params, r.raw(17));
    ct.v = r.blob32();
    ct.mac = r.blob32();
    r.expect_done();
    if (ct.mac.size() != 32)
        throw Error(ErrorCode::decode, "ciphertext mac must be 32 bytes");
    return ct;
}

namespace {

Scalar challenge(const PairingParams& params, const G1& u, const Bytes& message) {
    Bytes material;
    append_u8(material, 0x04);
    append(material, g1_to_bytes(u));
    append(material, message);
    G1 point = hash_to_g1(params, material);
    return Scalar{point.log};
}

} // namespace

Signature ibs_sign(const TrustGerm& germ, const Bytes& message, DetRng& rng) {
    const PairingParams& params = germ.params();
    Scalar r = scalar_random(params, rng);
    if (r.v == 0)
        r.v = 1;
    Signature sig;
    sig.u = g1_mul(r, sig_key_for(params, germ.id()));
    sig.h = challenge(params, sig.u, message);
    Scalar rh = scalar_add(params, r, sig.h);
    sig.v = g1_mul(rh, germ.s_sig);
    return sig;
}

bool ibs_verify(const PairingParams& params, const G1& p_pub,
                const std::string& signer_id, const Bytes& message,
                const Signature& sig) {
    Scalar h = challenge(params, sig.u, message);
    if (!(h == sig.h))
        return false;
    G1 q_sig = sig_key_for(params, signer_id);
    G2 lhs = pair(sig.v, g1_generator(params));
    G2 rhs = pair(g1_add(sig.u, g1_mul(h, q_sig)), p_pub);
    return lhs == rhs;
}

bool ibs_verify_from(const PeerPublic& signer, const Bytes& message,
                     const Signature& sig) {
    return ibs_verify(signer.params, signer.p_pub, signer.id, message, sig);
}

void Signature::write(const PairingParams& params, Bytes& out) const {
    append(out, g1_to_bytes(u));
    append(out, scalar_to_bytes(params, h));
    append(out, g1_to_bytes(v));
}

Bytes Signature::to_bytes(const PairingParams& params) const {
    Bytes out;
    write(params, out);
    return out;
}

Signature Signature::read(const PairingParams& params, ByteReader& r) {
    Signature sig;
    sig.u = g1_from_bytes(params, r.raw(17));
    sig.h = scalar_from_bytes(params, r.raw(17));
    sig.v = g1_from_bytes(params, r.raw(17));
    return sig;
}

Signature Signature::from_bytes(const PairingParams& params, const Bytes& data) {
    ByteReader r(data);
    Signature sig = read(params, r);
    r.expect_done();
    return sig;
}

namespace {

Bytes keystream(const Bytes& key, const std::string& sender, std::uint64_t counter,
                std::size_t len) {
    Bytes out;
    out.reserve(len);
    for (std::uint32_t block = 0; out.size() < len; ++block) {
        Bytes material;
        append_u8(material, 0x05);
        append(material, key);
        append_str16(material, sender);
        append_u64(material, counter);
        append_u32(material, block);
        Digest d = sha256(material);
        for (std::size_t i = 0; i < d.size() && out.size() < len; ++i)
            out.push_back(d[i]);
    }
    return out;
}

Bytes frame_tag(const Bytes& key, const std::string& sender, std::uint64_t counter,
                const Bytes& ciphertext) {
    Bytes material;
    append_u8(material, 0x06);
    append(material, key);
    append_str16(material, sender);
    append_u64(material, counter);
    append_blob32(material, ciphertext);
    return sha256_bytes(material);
}

} // namespace

Bytes channel_send(SecureChannel& ch, const Bytes& payload) {
    std::uint64_t counter = ch.send_counter++;
    Bytes ct = payload;
    if (!ct.empty()) {
        Bytes ks = keystream(ch.key, ch.local_id, counter, ct.size());
        for (std::size_t i = 0; i < ct.size(); ++i)
            ct[i] ^= ks[i];
    }
    Bytes frame;
    append_u64(frame, counter);
    append_blob32(frame, ct);
    append(frame, frame_tag(ch.key, ch.local_id, counter, ct));
    return frame;
}

Bytes channel_receive(SecureChannel& ch, const Bytes& frame) {
    ByteReader r(frame);
    std::uint64_t counter = r.u64();
    Bytes ct = r.blob32();
    Bytes tag = r.raw(32);
    r.expect_done();
    if (counter != ch.recv_counter)
        throw Error(ErrorCode::replay, "channel frame replayed or reordered");
    if (tag != frame_tag(ch.key, ch.remote_id, counter, ct))
        throw Error(ErrorCode::mac_mismatch, "channel frame authentication failed");
    ch.recv_counter++;
    Bytes payload = ct;
    if (!payload.empty()) {
        Bytes ks = keystream(ch.key, ch.remote_id, counter, payload.size());
        for (std::size_t i = 0; i < payload.size(); ++i)
            payload[i] ^= ks[i];
    }
    return payload;
}

std::pair<SecureChannel, SecureChannel> establish_channel(const TrustGerm& a,
                                                          const TrustGerm& b,
                                                          DetRng& rng) {
    if (!(a.params() == b.params()))
        throw Error(ErrorCode::params_mismatch, "endpoints use different pairing domains");
    if (a.id() == b.id())
        throw Error(ErrorCode::precondition, "a node cannot open a channel to itself");
    if (!verify_peer_public(a.pub) || !verify_peer_public(b.pub))
        throw Error(ErrorCode::bad_signature, "peer public part failed certification");
    Bytes session_key = rng.bytes(32);
    Ciphertext carried = ibe_encrypt(b.pub, session_key, rng);
    Bytes received = ibe_decrypt(b, carried);
    SecureChannel for_a{session_key, a.id(), b.id(), 0, 0};
    SecureChannel for_b{received, b.id(), a.id(), 0, 0};
    return {for_a, for_b};
}

} // namespace che::ibc
