#pragma once

#include <cmath>

#include "crn/rng.hpp"
#include "crn/tensor.hpp"

namespace crn {

inline void fill_uniform(Tensor t, Rng& rng, Real lo, Real hi) {
    for (Real& v : t.values()) v = static_cast<Real>(rng.uniform(lo, hi));
}

// Weight matrices draw from uniform(-1/sqrt(fan_in), +1/sqrt(fan_in));
// biases start at zero.
inline Tensor make_weight(std::size_t out_dim, std::size_t in_dim, Rng& rng) {
    Tensor w(Shape{out_dim, in_dim});
    const Real bound = Real(1) / std::sqrt(static_cast<Real>(in_dim));
    fill_uniform(w, rng, -bound, bound);
    w.set_requires_grad(true);
    return w;
}

inline Tensor make_bias(std::size_t out_dim) {
    Tensor b(Shape{out_dim});
    b.set_requires_grad(true);
    return b;
}

}  // namespace crn
