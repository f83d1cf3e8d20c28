#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "crn/errors.hpp"
#include "crn/tensor.hpp"

namespace crn {

// Flat binary tensor framing: rank, then each extent, as unsigned 64-bit
// little-endian, followed by the row-major values as 64-bit floats.
// Values are widened/narrowed through double so the on-disk format does
// not depend on how Real is configured.

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64_le(std::istream& is, const char* what) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw ParseError(std::string("tensor stream truncated reading ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void put_f64_le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64_le(os, bits);
}

inline double get_f64_le(std::istream& is, const char* what) {
    const std::uint64_t bits = get_u64_le(is, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline void dump_tensor(std::ostream& os, const Tensor& t) {
    detail::put_u64_le(os, t.rank());
    for (std::size_t axis = 0; axis < t.rank(); ++axis) detail::put_u64_le(os, t.extent(axis));
    for (Real v : t.values()) detail::put_f64_le(os, static_cast<double>(v));
    if (!os) throw Error("tensor dump: write failed");
}

inline Tensor load_tensor(std::istream& is) {
    const std::uint64_t rank = detail::get_u64_le(is, "rank");
    if (rank > 8) throw ParseError("tensor stream: implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (std::uint64_t i = 0; i < rank; ++i)
        shape[i] = static_cast<std::size_t>(detail::get_u64_le(is, "extent"));
    Tensor t(shape);
    for (Real& v : t.values()) v = static_cast<Real>(detail::get_f64_le(is, "values"));
    return t;
}

}  // namespace crn
