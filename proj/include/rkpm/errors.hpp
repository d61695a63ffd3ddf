#pragma once

#include <stdexcept>
#include <string>

namespace rkpm {

/// Base class for all toolkit errors. The `code()` string is stable and
/// machine-parsable; the CLI prints `error: <code>: <what>` on failure.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

#define RKPM_DEFINE_ERROR(NAME)                                   \
    class NAME : public Error {                                   \
    public:                                                       \
        explicit NAME(const std::string& msg) : Error(#NAME, msg) {} \
    }

RKPM_DEFINE_ERROR(SingularMoment);
RKPM_DEFINE_ERROR(NotCovered);
RKPM_DEFINE_ERROR(MeshFailure);
RKPM_DEFINE_ERROR(CoverMismatch);
RKPM_DEFINE_ERROR(SingularJacobian);
RKPM_DEFINE_ERROR(Unsupported);
RKPM_DEFINE_ERROR(DimensionMismatch);
RKPM_DEFINE_ERROR(UnknownTag);
RKPM_DEFINE_ERROR(MaterialMissing);
RKPM_DEFINE_ERROR(NotConverged);
RKPM_DEFINE_ERROR(IndefiniteMatrix);
RKPM_DEFINE_ERROR(DegenerateFit);
RKPM_DEFINE_ERROR(InvalidArgument);

#undef RKPM_DEFINE_ERROR

} // namespace rkpm
