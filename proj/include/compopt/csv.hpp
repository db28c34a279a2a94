#ifndef COMPOPT_CSV_HPP
#define COMPOPT_CSV_HPP

#include <cstdint>
#include <string>

namespace compopt {

/// Shortest round-trip decimal representation (to_chars); the basis of the
/// byte-stable CSV contract. NaN renders as "nan".
std::string format_double(double value);

std::string format_u64(std::uint64_t value);

}  // namespace compopt

#endif  // COMPOPT_CSV_HPP
