#pragma once

#include <stdexcept>
#include <string>

namespace splat6d {

enum class ErrorCode {
    InvalidParameter,
    DegenerateCovariance,
    DegenerateGeometry,
    DegenerateVolume,
    UnknownLabel,
    ShapeMismatch,
    SizeMismatch,
    MalformedFile,
    Io,
    EmptyScene,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. The code lets callers (the CLI, the HTTP service)
/// map failures to exit statuses and response codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    bool is_io() const noexcept {
        return code_ == ErrorCode::Io || code_ == ErrorCode::MalformedFile ||
               code_ == ErrorCode::SizeMismatch;
    }

private:
    ErrorCode code_;
};

}  // namespace splat6d
