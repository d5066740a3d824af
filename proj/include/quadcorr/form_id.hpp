#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "quadcorr/error.hpp"

namespace quadcorr {

/// The five class-number-one forms x^2 + d y^2 handled by the library.
enum class form_id : unsigned { d1 = 1, d2 = 2, d3 = 3, d4 = 4, d7 = 7 };

inline constexpr std::array<form_id, 5> all_forms{form_id::d1, form_id::d2, form_id::d3, form_id::d4,
                                                   form_id::d7};

[[nodiscard]] constexpr unsigned value(form_id d) { return static_cast<unsigned>(d); }

inline form_id parse_form(long long d) {
    switch (d) {
    case 1: return form_id::d1;
    case 2: return form_id::d2;
    case 3: return form_id::d3;
    case 4: return form_id::d4;
    case 7: return form_id::d7;
    default: throw unsupported_form(d);
    }
}

inline std::string to_string(form_id d) { return std::to_string(value(d)); }

/// Primes needing their own local table (the set R_d).
inline std::span<const std::uint64_t> special_primes(form_id d) {
    static constexpr std::array<std::uint64_t, 1> two{2};
    static constexpr std::array<std::uint64_t, 1> three{3};
    static constexpr std::array<std::uint64_t, 2> two_seven{2, 7};
    switch (d) {
    case form_id::d3: return three;
    case form_id::d7: return two_seven;
    default: return two;
    }
}

[[nodiscard]] inline bool is_special_prime(form_id d, std::uint64_t p) {
    for (std::uint64_t q : special_primes(d))
        if (q == p) return true;
    return false;
}

/// Congruence test for membership in Q_d, valid for any prime p outside R_d.
[[nodiscard]] constexpr bool in_q_by_congruence(form_id d, std::uint64_t p) {
    switch (d) {
    case form_id::d1:
    case form_id::d4: return p % 4 == 3;
    case form_id::d2: return p % 8 == 5 || p % 8 == 7;
    case form_id::d3: return p % 3 == 2;
    case form_id::d7: return p % 7 == 3 || p % 7 == 5 || p % 7 == 6;
    }
    return false;
}

/// Local multiplicity rule at a special prime: d = 4 and d = 7 forbid m_2(n) = 1.
[[nodiscard]] constexpr bool special_rule_admits(form_id d, std::uint64_t p, unsigned multiplicity) {
    if ((d == form_id::d4 || d == form_id::d7) && p == 2) return multiplicity != 1;
    return true;
}

} // namespace quadcorr
