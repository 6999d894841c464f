#pragma once

#include <doctest.h>

#include "srd/geom.hpp"
#include "srd/rng.hpp"

namespace srd::test {

inline void check_vec_near(const Vec3& a, const Vec3& b, double tol) {
    INFO("a=" << a << " b=" << b);
    CHECK(distance(a, b) <= tol);
}

inline Vec3 random_vec(Rng& rng, double lo, double hi) {
    auto u = [&] { return lo + (hi - lo) * rng.uniform(); };
    return {u(), u(), u()};
}

inline UnitVec3 random_unit(Rng& rng) {
    for (;;) {
        const Vec3 v = random_vec(rng, -1.0, 1.0);
        const double n = v.norm();
        if (n > 0.1 && n <= 1.0) return UnitVec3(v);
    }
}

}  // namespace srd::test
