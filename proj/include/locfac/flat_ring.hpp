#pragma once

// Finite free commutative rings Z/M [x1,...]/(...) presented by structure
// constants on a fixed monomial basis.  Both the residue fields (M = p) and
// the truncated p-adic rings (M = p^N) of the tower are instances; towers
// grow by adjoining a root of a monic polynomial over the current ring.

#include "locfac/numeric.hpp"

#include <cstdint>
#include <vector>

namespace locfac {

struct FlatRing {
    std::int64_t mod = 0; // coefficient modulus
    long n = 0;           // rank over Z/mod
    // tensor[(i*n + j)*n + k] = k-th coordinate of basis_i * basis_j
    std::vector<std::int64_t> tensor;

    using Vec = std::vector<std::int64_t>;

    Vec zero() const { return Vec(n, 0); }
    Vec one() const {
        Vec v(n, 0);
        v[0] = 1 % mod;
        return v;
    }
    Vec scalar(std::int64_t c) const {
        Vec v(n, 0);
        v[0] = c % mod;
        if (v[0] < 0) v[0] += mod;
        return v;
    }

    Vec add(const Vec& a, const Vec& b) const {
        Vec r(n);
        for (long i = 0; i < n; ++i) {
            r[i] = a[i] + b[i];
            if (r[i] >= mod) r[i] -= mod;
        }
        return r;
    }
    Vec sub(const Vec& a, const Vec& b) const {
        Vec r(n);
        for (long i = 0; i < n; ++i) {
            r[i] = a[i] - b[i];
            if (r[i] < 0) r[i] += mod;
        }
        return r;
    }
    Vec neg(const Vec& a) const {
        Vec r(n);
        for (long i = 0; i < n; ++i) r[i] = a[i] == 0 ? 0 : mod - a[i];
        return r;
    }
    Vec smul(const Vec& a, std::int64_t c) const {
        c %= mod;
        if (c < 0) c += mod;
        Vec r(n);
        for (long i = 0; i < n; ++i) r[i] = mulmod64(a[i], c, mod);
        return r;
    }

    Vec mul(const Vec& a, const Vec& b) const {
        Vec r(n, 0);
        for (long i = 0; i < n; ++i) {
            if (a[i] == 0) continue;
            for (long j = 0; j < n; ++j) {
                if (b[j] == 0) continue;
                std::int64_t c = mulmod64(a[i], b[j], mod);
                const std::int64_t* t = &tensor[(static_cast<std::size_t>(i) * n + j) * n];
                for (long k = 0; k < n; ++k) {
                    r[k] = (r[k] + (__int128)c * t[k]) % mod;
                }
            }
        }
        return r;
    }

    Vec pow(Vec a, std::int64_t e) const {
        Vec r = one();
        while (e > 0) {
            if (e & 1) r = mul(r, a);
            a = mul(a, a);
            e >>= 1;
        }
        return r;
    }

    bool is_zero(const Vec& a) const {
        for (auto c : a)
            if (c != 0) return false;
        return true;
    }
};

inline FlatRing make_prime_ring(std::int64_t mod) {
    FlatRing r;
    r.mod = mod;
    r.n = 1;
    r.tensor = {1 % mod};
    return r;
}

// Adjoin a root of the monic degree-d polynomial x^d + sum poly[i] x^i with
// coefficients given as coordinate vectors over `K`.  New basis ordering:
// index = j*K.n + i  (power j of the new generator, K-basis index i).
inline FlatRing extend_ring(const FlatRing& K, const std::vector<FlatRing::Vec>& poly_low, long d) {
    if (static_cast<long>(poly_low.size()) != d)
        throw spec_error("extend_ring: need exactly d lower coefficients");
    FlatRing R;
    R.mod = K.mod;
    R.n = K.n * d;

    // powers x^d .. x^{2d-2} reduced modulo the polynomial, as arrays of K-coeffs
    std::vector<std::vector<FlatRing::Vec>> pw; // pw[t][j] = K-coeff of x^j in x^{d+t}
    {
        std::vector<FlatRing::Vec> cur(d);
        for (long j = 0; j < d; ++j) cur[j] = K.neg(poly_low[j]); // x^d = -sum poly[j] x^j
        pw.push_back(cur);
        for (long t = 1; t <= d - 2; ++t) {
            std::vector<FlatRing::Vec> nxt(d, K.zero());
            // multiply cur by x, reduce the overflow term via pw[0]
            FlatRing::Vec top = cur[d - 1];
            for (long j = d - 1; j >= 1; --j) nxt[j] = cur[j - 1];
            nxt[0] = K.zero();
            for (long j = 0; j < d; ++j) nxt[j] = K.add(nxt[j], K.mul(top, pw[0][j]));
            pw.push_back(nxt);
            cur = nxt;
        }
    }

    R.tensor.assign(static_cast<std::size_t>(R.n) * R.n * R.n, 0);
    for (long j1 = 0; j1 < d; ++j1)
        for (long i1 = 0; i1 < K.n; ++i1) {
            long bi = j1 * K.n + i1;
            for (long j2 = 0; j2 < d; ++j2)
                for (long i2 = 0; i2 < K.n; ++i2) {
                    long bj = j2 * K.n + i2;
                    // (b_{i1} x^{j1})(b_{i2} x^{j2})
                    FlatRing::Vec prod(K.n, 0);
                    const std::int64_t* t = &K.tensor[(static_cast<std::size_t>(i1) * K.n + i2) * K.n];
                    for (long k = 0; k < K.n; ++k) prod[k] = t[k];
                    std::int64_t* out = &R.tensor[(static_cast<std::size_t>(bi) * R.n + bj) * R.n];
                    long e = j1 + j2;
                    if (e < d) {
                        for (long k = 0; k < K.n; ++k) out[e * K.n + k] = prod[k];
                    } else {
                        const auto& red = pw[e - d];
                        for (long j = 0; j < d; ++j) {
                            FlatRing::Vec c = K.mul(prod, red[j]);
                            for (long k = 0; k < K.n; ++k) out[j * K.n + k] = c[k];
                        }
                    }
                }
        }
    return R;
}

} // namespace locfac
