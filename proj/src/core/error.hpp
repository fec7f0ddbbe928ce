#pragma once

#include <stdexcept>
#include <string>

namespace mamsr {

enum class ErrorCode {
    invalid_argument,
    shape_mismatch,
    not_found,
    io,
    malformed,
    unsupported,
    bad_magic,
    bad_version,
    length_mismatch,
    numeric,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void check(bool ok, ErrorCode code, const std::string& msg) {
    if (!ok) fail(code, msg);
}

inline void check_shape(bool ok, const std::string& msg) { check(ok, ErrorCode::shape_mismatch, msg); }
inline void check_arg(bool ok, const std::string& msg) { check(ok, ErrorCode::invalid_argument, msg); }

} // namespace mamsr
