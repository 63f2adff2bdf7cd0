#include <doctest.h>

#include "locfac/cyclo.hpp"

#include <cmath>

using namespace locfac;

namespace {

bool close(std::complex<double> a, std::complex<double> b, double tol = 1e-9) {
    return std::abs(a - b) <= tol;
}

CycloNumber rand_cyclo(DetRng& rng, long modulus, int terms) {
    CycloNumber x = CycloNumber::zero(modulus);
    for (int i = 0; i < terms; ++i) {
        long e = rng.below(modulus);
        Rat c = make_rat(rng.below(19) - 9, 1 + rng.below(7));
        x = x + CycloNumber::zeta(modulus, modulus, e).scale(c);
    }
    return x;
}

} // namespace

TEST_CASE("zeta basics") {
    // i * i = -1
    CycloNumber i4 = CycloNumber::zeta(60, 4, 1);
    CHECK(i4 * i4 == CycloNumber::zeta(60, 2, 1));
    CHECK(i4 * i4 == CycloNumber(Rat(-1), 60));
    // zeta(n, 0) = 1
    for (long n : {2L, 3L, 5L, 12L})
        CHECK(CycloNumber::zeta(60, n, 0) == CycloNumber::one(60));
    // exponent arithmetic mod 5
    CHECK(CycloNumber::zeta(60, 5, 2) * CycloNumber::zeta(60, 5, 4) == CycloNumber::zeta(60, 5, 1));
    CHECK_THROWS_AS(CycloNumber::zeta(60, 7, 1), spec_error);
}

TEST_CASE("geometric sums of p-th roots vanish") {
    // oracle: sum over all k of zeta_p^k, computed term by term
    for (long p : {2L, 3L, 5L}) {
        CycloNumber s = CycloNumber::zero(60);
        for (long k = 0; k < p; ++k) s = s + CycloNumber::zeta(60, p, k);
        CHECK(s.is_zero());
    }
    CycloNumber s3 = CycloNumber::one(6) + CycloNumber::zeta(6, 3, 1) + CycloNumber::zeta(6, 3, 2);
    CHECK(s3.is_zero());
}

TEST_CASE("conjugation") {
    CHECK(CycloNumber::zeta(8, 8, 1).conj() == CycloNumber::zeta(8, 8, 7));
    CHECK(CycloNumber::zeta(8, 4, 1).conj() == CycloNumber::zeta(8, 4, 3));
    DetRng rng(7);
    for (int t = 0; t < 20; ++t) {
        CycloNumber x = rand_cyclo(rng, 36, 4);
        CycloNumber n = x * x.conj();
        auto z = n.embed();
        CHECK(std::abs(z.imag()) < 1e-9);
        CHECK(z.real() >= -1e-9);
        CHECK(x.conj().conj() == x);
    }
}

TEST_CASE("ring axioms on random elements") {
    DetRng rng(42);
    for (int t = 0; t < 15; ++t) {
        CycloNumber a = rand_cyclo(rng, 24, 3), b = rand_cyclo(rng, 24, 3), c = rand_cyclo(rng, 24, 3);
        CHECK(a + b == b + a);
        CHECK(a * b == b * a);
        CHECK((a + b) + c == a + (b + c));
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK((a * b).conj() == a.conj() * b.conj());
    }
}

TEST_CASE("sqrt_prime") {
    CycloNumber s5 = CycloNumber::sqrt_prime(20, 5);
    CHECK(close(s5.embed(), {std::sqrt(5.0), 0}));
    CycloNumber s3 = CycloNumber::sqrt_prime(12, 3);
    CHECK(close(s3.embed(), {std::sqrt(3.0), 0}));
    // (-i) * (zeta3 - zeta3^2) is the explicit p = 3 form
    CycloNumber alt = CycloNumber::zeta(12, 4, 3) * (CycloNumber::zeta(12, 3, 1) - CycloNumber::zeta(12, 3, 2));
    CHECK(s3 == alt);
    for (long p : {3L, 5L, 7L, 11L, 13L}) {
        CycloNumber s = CycloNumber::sqrt_prime(4 * p, p);
        CHECK(s * s == CycloNumber(Rat(p), 4 * p));
    }
    CHECK_THROWS(CycloNumber::sqrt_prime(20, 2));
    CHECK_THROWS(CycloNumber::sqrt_prime(10, 5));
}

TEST_CASE("embed") {
    CHECK(close(CycloNumber::zeta(4, 4, 1).embed(), {0, 1}, 1e-12));
    CycloNumber s7 = CycloNumber::sqrt_prime(28, 7);
    CHECK(close((s7 * s7).embed(), {7, 0}));
    CHECK((CycloNumber::one(2) + CycloNumber::zeta(2, 2, 1)).is_zero());
    // embed is a ring homomorphism within float tolerance
    DetRng rng(5);
    for (int t = 0; t < 10; ++t) {
        CycloNumber a = rand_cyclo(rng, 40, 3), b = rand_cyclo(rng, 40, 3);
        CHECK(close((a * b).embed(), a.embed() * b.embed(), 1e-7));
        CHECK(close((a + b).embed(), a.embed() + b.embed(), 1e-9));
    }
}

TEST_CASE("normalization is idempotent and moduli interoperate") {
    // same value in different ambient fields
    CycloNumber a = CycloNumber::zeta(12, 3, 1);
    CycloNumber b = CycloNumber::zeta(9, 3, 1);
    CHECK(a == b);
    CHECK((a + b) == a.scale(Rat(2)));
    // 1 + zeta3 + zeta3^2 = 0 detected across moduli
    CycloNumber s = CycloNumber::one(4) + CycloNumber::zeta(9, 3, 1) + CycloNumber::zeta(12, 3, 2);
    CHECK(s.is_zero());
}

TEST_CASE("inverse") {
    CycloNumber m = CycloNumber::zeta(20, 5, 2).scale(make_rat(3, 7));
    CHECK(m * m.inverse() == CycloNumber::one(20));
    CycloNumber s5 = CycloNumber::sqrt_prime(20, 5);
    CHECK(s5 * s5.inverse() == CycloNumber::one(20));
    // unimodular sums invert through conjugation: (3 + 4i)/5
    CycloNumber g = (CycloNumber(Rat(3), 12) + CycloNumber::zeta(12, 4, 1).scale(Rat(4))).scale(make_rat(1, 5));
    CHECK((g * g.conj()) == CycloNumber::one(12));
    CHECK(g * g.inverse() == CycloNumber::one(12));
    CHECK_THROWS(CycloNumber(Rat(0), 4).inverse());
    // 1 + zeta_5 has irrational norm to R: unsupported
    CHECK_THROWS_AS((CycloNumber::one(5) + CycloNumber::zeta(5, 5, 1)).inverse(), spec_error);
}

TEST_CASE("p-half powers") {
    CycloNumber one = CycloNumber::one(20);
    CHECK(one.mul_p_half(5, 2) == CycloNumber(Rat(5), 20));
    CHECK(one.mul_p_half(5, -2) == CycloNumber(make_rat(1, 5), 20));
    CycloNumber r = one.mul_p_half(5, 1);
    CHECK(r * r == CycloNumber(Rat(5), 20));
    CycloNumber ri = one.mul_p_half(5, -1);
    CHECK(r * ri == CycloNumber::one(20));
    CHECK(one.mul_p_half(5, 3) == CycloNumber(Rat(5), 20).mul_p_half(5, 1));
}

TEST_CASE("builder accumulates like repeated addition") {
    DetRng rng(11);
    CycloBuilder bld(30);
    CycloNumber ref = CycloNumber::zero(30);
    for (int t = 0; t < 50; ++t) {
        long num = rng.below(30), den = 30;
        Rat w = make_rat(rng.below(9) - 4);
        RootOfUnity r(num, den);
        bld.add(r, w);
        ref = ref + CycloNumber::from_root(r, 30).scale(w);
    }
    CHECK(bld.build() == ref);
}

TEST_CASE("root of unity algebra") {
    RootOfUnity a(1, 4), b(1, 6);
    CHECK((a * b) == RootOfUnity(5, 12));
    CHECK(a.pow(2) == RootOfUnity(1, 2));
    CHECK((a * a.inverse()).is_one());
    CHECK(RootOfUnity(7, 3) == RootOfUnity(1, 3));
}
