#pragma once

#include <string>

#include "che/history.hpp"
#include "che/identity.hpp"
#include "che/policy.hpp"
#include "che/protocol.hpp"
#include "che/reputation.hpp"

namespace che::io {

// Everything a node persists between invocations. The private random
// stream is reseeded per process, never stored.
struct NodeState {
    ibc::TrustGerm germ;
    hist::History history;
    rep::Table reputation;
    policy::PolicyConfig policy;
    std::uint32_t rank = 0;
};

NodeState state_from_node(const proto::Node& n);
proto::Node node_from_state(const NodeState& state, std::uint64_t seed);

Bytes node_state_to_bytes(const NodeState& state);
NodeState node_state_from_bytes(const Bytes& data);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, const Bytes& data);

// Advisory exclusive lock on path held for the object's lifetime.
// Throws Error(io) if another process holds it.
class FileLock {
  public:
    explicit FileLock(const std::string& path);
    ~FileLock();
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

  private:
    int fd_;
};

// Saves lock the target, write a temp file, and rename it into place.
void save_node(const std::string& path, const NodeState& state);
NodeState load_node(const std::string& path);

void save_station(const std::string& path, const ibc::ImprintingStation& station);
ibc::ImprintingStation load_station(const std::string& path);

} // namespace che::io
