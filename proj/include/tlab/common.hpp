#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tlab {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

enum class ErrorKind { param, domain, numeric, io, config, mismatch };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline double dot(const Vec3& a, const Vec3& b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec3& a, int d) { return dot(a, a, d); }

const char* version_string();

}  // namespace tlab
