#pragma once

#include <vector>

#include "crn/rng.hpp"
#include "crn/tensor.hpp"

namespace crn::testing {

#ifdef CRN_REAL_FLOAT
inline constexpr Real kGradEps = Real(1e-2);
inline constexpr Real kGradTol = Real(1e-2);
inline constexpr Real kValueTol = Real(1e-4);
#else
inline constexpr Real kGradEps = Real(1e-5);
inline constexpr Real kGradTol = Real(1e-6);
inline constexpr Real kValueTol = Real(1e-12);
#endif

inline Tensor random_tensor(Shape shape, Rng& rng, Real lo = Real(-1), Real hi = Real(1)) {
    Tensor t(std::move(shape));
    for (Real& v : t.values()) v = static_cast<Real>(rng.uniform(lo, hi));
    return t;
}

inline Tensor random_param(Shape shape, Rng& rng, Real lo = Real(-1), Real hi = Real(1)) {
    Tensor t = random_tensor(std::move(shape), rng, lo, hi);
    t.set_requires_grad(true);
    return t;
}

// Fixed-coefficient contraction to a scalar; distinct weights per entry so
// backward bugs cannot cancel out. Build the coefficients once and reuse
// them across the repeated evaluations a finite-difference check makes.
inline Tensor make_coeff(Shape shape, Rng& rng) {
    return random_tensor(std::move(shape), rng, Real(0.5), Real(1.5));
}

inline Tensor contract(const Tensor& x, const Tensor& coeff) {
    return sum(mul(x, coeff));
}

}  // namespace crn::testing
