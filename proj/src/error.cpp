#include "fenceguide/error.hpp"

namespace fenceguide {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::DimensionMismatch: return "dimension_mismatch";
        case ErrorKind::InvalidShift: return "invalid_shift";
        case ErrorKind::ImageTooSmall: return "image_too_small";
        case ErrorKind::FileMissing: return "file_missing";
        case ErrorKind::FileFormat: return "file_format";
        case ErrorKind::FileMalformed: return "file_malformed";
        case ErrorKind::Io: return "io";
        case ErrorKind::EmptyInput: return "empty_input";
        case ErrorKind::CropBounds: return "crop_bounds";
        case ErrorKind::ChannelMismatch: return "channel_mismatch";
        case ErrorKind::NonFiniteLoss: return "non_finite_loss";
    }
    return "unknown";
}

} // namespace fenceguide
