#include "che/reputation.hpp"

#include "che/errors.hpp"

namespace che::rep {

namespace {
constexpr std::uint8_t table_version = 1;
}

InteractionSummary summary_refused(std::uint32_t common_size) {
    return InteractionSummary{true, false, false, common_size};
}

InteractionSummary summary_trust_exchange(std::uint32_t common_size) {
    return InteractionSummary{false, false, false, common_size};
}

InteractionSummary summary_service(bool tp_granted, bool rp_granted,
                                   std::uint32_t common_size) {
    if (rp_granted && !tp_granted)
        throw Error(ErrorCode::precondition, "reciprocal grant implies trustor grant");
    return InteractionSummary{false, tp_granted, rp_granted, common_size};
}

void update_direct(DirectCounters& direct, const InteractionSummary& summary) {
    if (summary.refused && (summary.tp_granted || summary.rp_granted))
        throw Error(ErrorCode::precondition, "a refused service grants no proofs");
    if (summary.refused) {
        direct.services_refused++;
    } else {
        direct.meetings++;
        if (summary.tp_granted)
            direct.trustor_proofs++;
        if (summary.rp_granted)
            direct.reciprocal_proofs++;
    }
    direct.last_common_size = summary.common_size;
}

void update_indirect(ReputationRecord& rec, const std::string& voucher_id,
                     bool tp_kind, bool rp_kind) {
    if (voucher_id == rec.subject_id)
        throw Error(ErrorCode::precondition, "a node cannot vouch for itself");
    if (!tp_kind && !rp_kind)
        return;
    if (rec.seen_vouchers.count(voucher_id))
        return;
    rec.seen_vouchers.insert(voucher_id);
    if (tp_kind && rp_kind)
        rec.indirect.vouchers_both++;
    else if (rp_kind)
        rec.indirect.vouchers_rp++;
    else
        rec.indirect.vouchers_tp++;
}

double score(const ReputationRecord& rec, const Weights& w,
             std::int64_t max_age, std::int64_t now) {
    double s = 0.0;
    s += static_cast<double>(rec.direct.meetings) * w.meetings;
    s += static_cast<double>(rec.direct.trustor_proofs) * w.trustor;
    s += static_cast<double>(rec.direct.reciprocal_proofs) * w.reciprocal;
    s += static_cast<double>(rec.direct.services_refused) * w.refused;
    s += static_cast<double>(rec.indirect.vouchers_tp) * w.voucher_tp;
    s += static_cast<double>(rec.indirect.vouchers_rp) * w.voucher_rp;
    s += static_cast<double>(rec.indirect.vouchers_both) * w.voucher_both;
    if (rec.direct.last_blacklist_ts) {
        std::int64_t age = now - *rec.direct.last_blacklist_ts;
        if (max_age == 0 || age <= max_age)
            s += w.blacklisted;
    }
    return s;
}

bool Table::has(const std::string& subject_id) const {
    return records_.count(subject_id) != 0;
}

const ReputationRecord* Table::find(const std::string& subject_id) const {
    auto it = records_.find(subject_id);
    return it == records_.end() ? nullptr : &it->second;
}

ReputationRecord& Table::ensure(const std::string& subject_id) {
    auto [it, inserted] = records_.try_emplace(subject_id);
    if (inserted)
        it->second.subject_id = subject_id;
    return it->second;
}

void Table::record_interaction(const std::string& subject_id,
                               const InteractionSummary& summary) {
    update_direct(ensure(subject_id).direct, summary);
}

void Table::record_voucher(const std::string& subject_id, const std::string& voucher_id,
                           bool tp_kind, bool rp_kind) {
    auto it = records_.find(subject_id);
    if (it == records_.end())
        throw Error(ErrorCode::unknown_subject,
                    "no direct record of subject: " + subject_id);
    update_indirect(it->second, voucher_id, tp_kind, rp_kind);
}

void Table::note_blacklisted(const std::string& subject_id, std::int64_t now) {
    ensure(subject_id).direct.last_blacklist_ts = now;
}

void Table::write(Bytes& out) const {
    append_u8(out, table_version);
    append_u32(out, static_cast<std::uint32_t>(records_.size()));
    for (const auto& [id, rec] : records_) {
        append_str16(out, id);
        append_u64(out, rec.direct.meetings);
        append_u64(out, rec.direct.trustor_proofs);
        append_u64(out, rec.direct.reciprocal_proofs);
        append_u64(out, rec.direct.services_refused);
        append_u32(out, rec.direct.last_common_size);
        append_u8(out, rec.direct.last_blacklist_ts ? 1 : 0);
        append_i64(out, rec.direct.last_blacklist_ts.value_or(0));
        append_u64(out, rec.indirect.vouchers_tp);
        append_u64(out, rec.indirect.vouchers_rp);
        append_u64(out, rec.indirect.vouchers_both);
        append_u32(out, static_cast<std::uint32_t>(rec.seen_vouchers.size()));
        for (const std::string& v : rec.seen_vouchers)
            append_str16(out, v);
    }
}

Table Table::read(ByteReader& r) {
    if (r.u8() != table_version)
        throw Error(ErrorCode::decode, "unsupported reputation table version");
    Table t;
    std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string id = r.str16();
        ReputationRecord& rec = t.ensure(id);
        rec.direct.meetings = r.u64();
        rec.direct.trustor_proofs = r.u64();
        rec.direct.reciprocal_proofs = r.u64();
        rec.direct.services_refused = r.u64();
        rec.direct.last_common_size = r.u32();
        bool has_ts = r.u8() != 0;
        std::int64_t ts = r.i64();
        if (has_ts)
            rec.direct.last_blacklist_ts = ts;
        rec.indirect.vouchers_tp = r.u64();
        rec.indirect.vouchers_rp = r.u64();
        rec.indirect.vouchers_both = r.u64();
        std::uint32_t seen = r.u32();
        for (std::uint32_t j = 0; j < seen; ++j)
            rec.seen_vouchers.insert(r.str16());
    }
    return t;
}

Bytes Table::to_bytes() const {
    Bytes out;
    write(out);
    return out;
}

Table Table::from_bytes(const Bytes& data) {
    ByteReader r(data);
    Table t = read(r);
    r.expect_done();
    return t;
}

} // namespace che::rep
