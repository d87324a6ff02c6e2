#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "che/bytes.hpp"

namespace che::rep {

// What one finished interaction looked like from a party's point of view.
// refused means the provider declined outright (nothing else can be set);
// tp/rp say which proofs were actually granted during the exchange.
struct InteractionSummary {
    bool refused = false;
    bool tp_granted = false;
    bool rp_granted = false;
    std::uint32_t common_size = 0;
};

InteractionSummary summary_refused(std::uint32_t common_size);
InteractionSummary summary_trust_exchange(std::uint32_t common_size);
InteractionSummary summary_service(bool tp_granted, bool rp_granted,
                                   std::uint32_t common_size);

struct DirectCounters {
    std::uint64_t meetings = 0;
    std::uint64_t trustor_proofs = 0;
    std::uint64_t reciprocal_proofs = 0;
    std::uint64_t services_refused = 0;
    std::uint32_t last_common_size = 0;
    std::optional<std::int64_t> last_blacklist_ts;

    bool operator==(const DirectCounters&) const = default;
};

struct IndirectCounters {
    std::uint64_t vouchers_tp = 0;
    std::uint64_t vouchers_rp = 0;
    std::uint64_t vouchers_both = 0;

    bool operator==(const IndirectCounters&) const = default;
};

struct ReputationRecord {
    std::string subject_id;
    DirectCounters direct;
    IndirectCounters indirect;
    std::set<std::string> seen_vouchers;

    bool operator==(const ReputationRecord&) const = default;
};

struct Weights {
    double meetings = 1.0;
    double trustor = 2.0;
    double reciprocal = 3.0;
    double voucher_tp = 0.5;
    double voucher_rp = 1.0;
    double voucher_both = 1.5;
    double refused = -2.0;
    double blacklisted = -10.0;
};

void update_direct(DirectCounters& direct, const InteractionSummary& summary);

// Applies a third-party voucher's testimony about subject once. A voucher
// id already counted is a no-op, as is testimony proving neither kind.
// Throws Error(precondition) if the voucher vouches for itself.
void update_indirect(ReputationRecord& rec, const std::string& voucher_id,
                     bool tp_kind, bool rp_kind);

// max_age = 0 disables aging; otherwise a blacklist mark older than
// max_age seconds stops contributing.
double score(const ReputationRecord& rec, const Weights& w,
             std::int64_t max_age, std::int64_t now);

class Table {
  public:
    bool has(const std::string& subject_id) const;
    const ReputationRecord* find(const std::string& subject_id) const;
    ReputationRecord& ensure(const std::string& subject_id);
    const std::map<std::string, ReputationRecord>& records() const { return records_; }

    void record_interaction(const std::string& subject_id,
                            const InteractionSummary& summary);
    // Throws Error(unknown_subject) when no direct record of subject exists:
    // hearsay about a never-met node is not stored.
    void record_voucher(const std::string& subject_id, const std::string& voucher_id,
                        bool tp_kind, bool rp_kind);
    void note_blacklisted(const std::string& subject_id, std::int64_t now);

    void write(Bytes& out) const;
    static Table read(ByteReader& r);
    Bytes to_bytes() const;
    static Table from_bytes(const Bytes& data);

    bool operator==(const Table&) const = default;

  private:
    std::map<std::string, ReputationRecord> records_;
};

} // namespace che::rep
