#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logiguide {

using Vec = std::vector<double>;

// Library-wide error type; the CLI maps kinds onto single-line diagnostics.
class Error : public std::runtime_error {
public:
    enum class Kind {
        parse,       // malformed query / s-expression / JSON
        lookup,      // unknown atom, group, node
        validation,  // structural precondition violated
        numeric,     // singular or inconsistent numeric inputs
        capacity,    // enumeration / expansion cap exceeded
        io,          // file system
        config,      // bad CLI arguments / config values
    };

    Error(Kind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    Kind kind() const { return kind_; }

    const char* kind_name() const {
        switch (kind_) {
            case Kind::parse: return "parse";
            case Kind::lookup: return "lookup";
            case Kind::validation: return "validation";
            case Kind::numeric: return "numeric";
            case Kind::capacity: return "capacity";
            case Kind::io: return "io";
            case Kind::config: return "config";
        }
        return "unknown";
    }

private:
    Kind kind_;
};

[[noreturn]] inline void fail(Error::Kind kind, std::string message) {
    throw Error(kind, std::move(message));
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow
inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = a > b ? a : b;
    const double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

// log(1 - exp(x)) for x <= 0
inline double log1m_exp(double x) {
    if (x >= 0.0) return kNegInf;
    if (x > -0.6931471805599453)  // -ln 2; switch for accuracy
        return std::log(-std::expm1(x));
    return std::log1p(-std::exp(x));
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(Vec& x, double a) {
    for (double& v : x) v *= a;
}

inline bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// splitmix64; used to derive independent per-sample / per-step RNG streams
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace logiguide
