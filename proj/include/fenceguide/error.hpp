#ifndef FENCEGUIDE_ERROR_HPP
#define FENCEGUIDE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fenceguide {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    InvalidShift,
    ImageTooSmall,
    FileMissing,
    FileFormat,     // recognized container but unsupported variant, or unknown format
    FileMalformed,  // recognized format with corrupt contents
    Io,
    EmptyInput,
    CropBounds,
    ChannelMismatch,
    NonFiniteLoss,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace fenceguide

#endif
