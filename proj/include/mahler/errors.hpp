#pragma once

#include <stdexcept>
#include <string>

namespace mahler {

enum class ErrorKind {
    NotSymmetric,
    DegenerateBody,
    OriginNotInterior,
    ZeroVector,
    NotOnBoundary,
    SingularMap,
    BadGridSize,
    ClassificationUnstable,
    NoConvergence,
    NotGeneric,
    NoZeroFound,
    NotNormalized,
    BadParameter,
    CollinearPoints,
    SingularFace,
    MembershipViolated,
    ParseError,
    IoError,
};

inline const char* kind_name(ErrorKind k)
{
    switch (k) {
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::DegenerateBody: return "DegenerateBody";
    case ErrorKind::OriginNotInterior: return "OriginNotInterior";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NotOnBoundary: return "NotOnBoundary";
    case ErrorKind::SingularMap: return "SingularMap";
    case ErrorKind::BadGridSize: return "BadGridSize";
    case ErrorKind::ClassificationUnstable: return "ClassificationUnstable";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotGeneric: return "NotGeneric";
    case ErrorKind::NoZeroFound: return "NoZeroFound";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::BadParameter: return "BadParameter";
    case ErrorKind::CollinearPoints: return "CollinearPoints";
    case ErrorKind::SingularFace: return "SingularFace";
    case ErrorKind::MembershipViolated: return "MembershipViolated";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(std::string(kind_name(kind)) + ": " + msg), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace mahler
