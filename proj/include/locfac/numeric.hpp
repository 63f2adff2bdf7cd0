#pragma once

// Small numeric layer shared by the whole library: arbitrary-precision
// integers/rationals (GMP), machine-word modular helpers, and the handful
// of elementary number-theory routines everything else leans on.

#include <gmpxx.h>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace locfac {

using Int = mpz_class;
using Rat = mpq_class;

// Library-wide error taxonomy.  The CLI maps these onto exit codes.
struct spec_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct guard_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Rat make_rat(long num, long den = 1) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

inline Rat parse_rat(const std::string& s) {
    Rat r;
    if (r.set_str(s, 10) != 0) throw spec_error("bad rational literal: " + s);
    r.canonicalize();
    return r;
}

inline std::string rat_str(const Rat& r) { return r.get_str(); }

inline double rat_double(const Rat& r) { return r.get_d(); }

inline long gcd_long(long a, long b) { return std::gcd(a, b); }

inline long lcm_long_checked(long a, long b, long cap) {
    long g = std::gcd(a, b);
    long q = a / g;
    if (b != 0 && q > cap / b) throw guard_error("modulus guard exceeded in lcm");
    return q * b;
}

inline long mod_long(long a, long m) {
    long r = a % m;
    return r < 0 ? r + m : r;
}

inline std::int64_t mulmod64(std::int64_t a, std::int64_t b, std::int64_t m) {
    return static_cast<std::int64_t>((__int128)a * b % m);
}

inline std::int64_t powmod64(std::int64_t a, std::int64_t e, std::int64_t m) {
    std::int64_t r = 1 % m;
    a %= m;
    if (a < 0) a += m;
    while (e > 0) {
        if (e & 1) r = mulmod64(r, a, m);
        a = mulmod64(a, a, m);
        e >>= 1;
    }
    return r;
}

inline std::int64_t invmod64(std::int64_t a, std::int64_t m) {
    // extended Euclid; requires gcd(a, m) = 1
    std::int64_t t = 0, nt = 1, r = m, nr = a % m;
    if (nr < 0) nr += m;
    while (nr != 0) {
        std::int64_t q = r / nr;
        std::int64_t tmp = t - q * nt;
        t = nt; nt = tmp;
        tmp = r - q * nr;
        r = nr; nr = tmp;
    }
    if (r != 1) throw spec_error("invmod64: not invertible");
    return t < 0 ? t + m : t;
}

inline bool is_prime_long(long n) {
    if (n < 2) return false;
    for (long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

inline std::vector<long> prime_factors(long n) {
    std::vector<long> ps;
    for (long d = 2; d * d <= n; ++d) {
        if (n % d == 0) {
            ps.push_back(d);
            while (n % d == 0) n /= d;
        }
    }
    if (n > 1) ps.push_back(n);
    return ps;
}

inline long euler_phi(long n) {
    long r = n;
    for (long p : prime_factors(n)) r = r / p * (p - 1);
    return r;
}

// Legendre symbol (a/p) for odd prime p; 0 when p | a.
inline int legendre_long(long a, long p) {
    long r = powmod64(mod_long(a, p), (p - 1) / 2, p);
    if (r == 0) return 0;
    return r == 1 ? 1 : -1;
}

// p-adic valuation of a nonzero machine integer.
inline int val_p64(std::int64_t x, long p) {
    if (x == 0) throw precision_error("valuation of zero");
    int v = 0;
    while (x % p == 0) { x /= p; ++v; }
    return v;
}

inline std::int64_t pow64_checked(long p, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) {
        if (r > (std::int64_t(1) << 62) / p) throw guard_error("p^N overflows the word-size budget");
        r *= p;
    }
    return r;
}

inline Int int_pow(const Int& b, unsigned long e) {
    Int r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

// Deterministic splitmix-style generator for reproducible sampling in tests
// and selfcheck grids.  Not a crypto RNG.
struct DetRng {
    std::uint64_t s;
    explicit DetRng(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    long below(long n) { return static_cast<long>(next() % static_cast<std::uint64_t>(n)); }
};

} // namespace locfac
