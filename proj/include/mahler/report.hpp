#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include "errors.hpp"

namespace mahler {

// Process exit status for a library error.
inline int exit_code(ErrorKind k)
{
    switch (k) {
    case ErrorKind::ParseError:
    case ErrorKind::BadParameter:
    case ErrorKind::BadGridSize:
        return 2;
    case ErrorKind::NotSymmetric:
    case ErrorKind::DegenerateBody:
    case ErrorKind::OriginNotInterior:
    case ErrorKind::SingularMap:
        return 3;
    case ErrorKind::IoError:
        return 5;
    default:
        return 4;
    }
}

// Shortest decimal that reads back to the same double.
inline std::string fmt(double x)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

// FNV-1a, used as a stable digest of input files.
inline std::string digest(const std::string& bytes)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + path);
    out << text;
    if (!out)
        throw Error(ErrorKind::IoError, "write failed for " + path);
}

} // namespace mahler
