#pragma once

#include <stdexcept>
#include <string>

namespace che {

// Machine-readable failure categories. Library code throws Error; the CLI
// maps categories to exit codes (input/config -> 2, policy denial -> 3,
// crypto verification -> 4).
enum class ErrorCode {
    precondition,      // caller violated an operation's contract
    decode,            // malformed or truncated serialized input
    params_mismatch,   // operands belong to different pairing domains
    mac_mismatch,      // authenticated decryption failed
    bad_signature,     // signature verification failed where success was required
    replay,            // secure-channel counter reuse
    blacklisted,       // peer is locally blacklisted
    unknown_subject,   // reputation update about a never-met node
    policy,            // trust policy denied the action
    io,                // file read/write/lock failure
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what_arg)
        : std::runtime_error(what_arg), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

} // namespace che
