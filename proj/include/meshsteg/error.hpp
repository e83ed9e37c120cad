#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meshsteg {

enum class ErrorCode {
    ParseError,
    UnsupportedFormat,
    Io,
    DegenerateMesh,
    TopologyMismatch,
    EmptyArray,
    MissingFeature,
    CapacityExceeded,
    DegenerateAxis,
    SingularCovariance,
    DegenerateScatter,
    DimensionMismatch,
    SizeMismatch,
    EmptyTestSet,
    SingleClass,
    EmptyPlan,
    EmptyCorpus,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; the code lets callers
// (notably the CLI) map failures to exit statuses and per-row reports.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace meshsteg
