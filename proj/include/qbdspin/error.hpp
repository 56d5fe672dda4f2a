#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qbdspin {

enum class ErrorKind {
    validation,      // malformed input or configuration
    domain,          // argument outside an operation's domain
    divergent,       // integral does not converge for the requested parameters
    accuracy,        // requested tolerance not reached within budget
    geometry,        // lattice/cutoff combination not supported
    frustration,     // Neel order requested on a non-bipartite lattice
    insufficient,    // too few records for a statistic
    no_crossing,     // Binder curves do not cross inside the temperature grid
    structure,       // coupling table is not translation invariant
    order,           // dispersion branch does not match the table sign
    unsupported,     // AFM spin waves on a non-bipartite displacement set
    instability,     // numerical blow-up (AFM LSWT argument or dynamics)
    fit,             // power-law fit window invalid
};

inline std::string_view to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::divergent: return "divergent_integral";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::frustration: return "frustration";
    case ErrorKind::insufficient: return "insufficient_data";
    case ErrorKind::no_crossing: return "no_crossing";
    case ErrorKind::structure: return "structure";
    case ErrorKind::order: return "order";
    case ErrorKind::unsupported: return "unsupported_order";
    case ErrorKind::instability: return "instability";
    case ErrorKind::fit: return "fit";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {
inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}
} // namespace detail

} // namespace qbdspin
