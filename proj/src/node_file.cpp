#include "che/node_file.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "che/errors.hpp"

namespace che::io {

namespace {

constexpr char node_magic[4] = {'C', 'H', 'E', 'N'};
constexpr char station_magic[4] = {'C', 'H', 'E', 'S'};
constexpr std::uint8_t file_version = 1;

void write_magic(Bytes& out, const char (&magic)[4]) {
    for (char c : magic)
        append_u8(out, static_cast<std::uint8_t>(c));
    append_u8(out, file_version);
}

void check_magic(ByteReader& r, const char (&magic)[4], const char* what) {
    for (char c : magic)
        if (r.u8() != static_cast<std::uint8_t>(c))
            throw Error(ErrorCode::decode, std::string("not a ") + what + " file");
    if (r.u8() != file_version)
        throw Error(ErrorCode::decode, std::string("unsupported ") + what + " file version");
}

} // namespace

NodeState state_from_node(const proto::Node& n) {
    return NodeState{n.germ, n.history, n.reputation, n.policy, n.rank};
}

proto::Node node_from_state(const NodeState& state, std::uint64_t seed) {
    proto::Node n;
    n.germ = state.germ;
    n.history = state.history;
    n.reputation = state.reputation;
    n.policy = state.policy;
    n.rank = state.rank;
    n.rng = DetRng(seed);
    return n;
}

Bytes node_state_to_bytes(const NodeState& state) {
    Bytes out;
    write_magic(out, node_magic);
    append_blob32(out, state.germ.to_bytes());
    state.history.write(out);
    state.reputation.write(out);
    append_blob32(out, to_bytes(policy::policy_to_text(state.policy)));
    append_u32(out, state.rank);
    return out;
}

NodeState node_state_from_bytes(const Bytes& data) {
    ByteReader r(data);
    check_magic(r, node_magic, "node state");
    NodeState state;
    state.germ = ibc::TrustGerm::from_bytes(r.blob32());
    state.history = hist::History::read(r);
    state.reputation = rep::Table::read(r);
    state.policy = policy::policy_from_text(to_string(r.blob32()));
    state.rank = r.u32();
    r.expect_done();
    if (state.history.owner() != state.germ.id())
        throw Error(ErrorCode::decode, "history owner does not match the germ identity");
    if (!(state.history.params() == state.germ.params()))
        throw Error(ErrorCode::decode, "history and germ pairing domains differ");
    return state;
}

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io, "cannot open for reading: " + path);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error(ErrorCode::io, "read failed: " + path);
    return data;
}

void write_file(const std::string& path, const Bytes& data) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::io, "cannot open for writing: " + tmp);
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
        if (!out)
            throw Error(ErrorCode::io, "write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error(ErrorCode::io, "rename failed: " + path + " (" + std::strerror(errno) + ")");
}

FileLock::FileLock(const std::string& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0600);
    if (fd_ < 0)
        throw Error(ErrorCode::io, "cannot open lock target: " + path);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        throw Error(ErrorCode::io, "state file is locked by another process: " + path);
    }
}

FileLock::~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
}

void save_node(const std::string& path, const NodeState& state) {
    FileLock lock(path + ".lock");
    write_file(path, node_state_to_bytes(state));
}

NodeState load_node(const std::string& path) {
    FileLock lock(path + ".lock");
    return node_state_from_bytes(read_file(path));
}

void save_station(const std::string& path, const ibc::ImprintingStation& station) {
    FileLock lock(path + ".lock");
    Bytes out;
    write_magic(out, station_magic);
    append_blob32(out, station.to_bytes());
    write_file(path, out);
}

ibc::ImprintingStation load_station(const std::string& path) {
    FileLock lock(path + ".lock");
    Bytes data = read_file(path);
    ByteReader r(data);
    check_magic(r, station_magic, "station");
    ibc::ImprintingStation st = ibc::ImprintingStation::from_bytes(r.blob32());
    r.expect_done();
    return st;
}

} // namespace che::io
