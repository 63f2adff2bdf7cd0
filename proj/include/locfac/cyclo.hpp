#pragma once

// Exact arithmetic in cyclotomic fields Q(zeta_N).
//
// Elements are sparse rational combinations of powers of a primitive N-th
// root of unity, kept in the canonical polynomial basis of degree < phi(N)
// by reduction modulo the N-th cyclotomic polynomial.  Equality is decided
// exactly on that basis; the complex embedding is for diagnostics only.
//
// Values with different moduli interoperate by lifting to the lcm, so a
// session modulus is a convenience (fixed by the job runner), not a hard
// requirement of the arithmetic.

#include "locfac/numeric.hpp"

#include <complex>
#include <map>
#include <mutex>
#include <utility>

namespace locfac {

// exp(2*pi*i * num/den), stored as a reduced fraction of the turn.
class RootOfUnity {
public:
    RootOfUnity() : num_(0), den_(1) {}
    RootOfUnity(long num, long den) {
        if (den <= 0) throw spec_error("root of unity needs positive order");
        num = mod_long(num, den);
        long g = std::gcd(num, den);
        if (g == 0) g = 1;
        num_ = num / g;
        den_ = den / g;
        if (num_ == 0) den_ = 1;
    }
    long num() const { return num_; }
    long den() const { return den_; }   // = multiplicative order
    bool is_one() const { return num_ == 0; }

    RootOfUnity operator*(const RootOfUnity& o) const {
        long d = lcm_long_checked(den_, o.den_, kOrderCap);
        return RootOfUnity(num_ * (d / den_) + o.num_ * (d / o.den_), d);
    }
    RootOfUnity inverse() const { return RootOfUnity(den_ - num_, den_); }
    RootOfUnity pow(long e) const {
        long r = mod_long(e, den_);
        return RootOfUnity(num_ * r % den_ * 1, den_); // num_*r fits: den_ <= cap
    }
    bool operator==(const RootOfUnity& o) const { return num_ == o.num_ && den_ == o.den_; }

    static constexpr long kOrderCap = 8'000'000;

private:
    long num_, den_;
};

namespace detail {

// Sparse cyclotomic polynomial Phi_N, exploiting Phi_N(x) = Phi_rad(x^{N/rad}).
struct CycloPoly {
    long degree = 0;                     // = phi(N)
    std::vector<std::pair<long, Int>> lower; // coefficients below the leading 1
};

inline std::vector<Int> poly_div_exact(const std::vector<Int>& a, const std::vector<Int>& b) {
    // exact division of integer polynomials, b monic
    std::vector<Int> r = a, q(a.size() - b.size() + 1, Int(0));
    for (long i = static_cast<long>(r.size()) - 1; i >= static_cast<long>(b.size()) - 1; --i) {
        Int c = r[i];
        if (c == 0) continue;
        long shift = i - (static_cast<long>(b.size()) - 1);
        q[shift] = c;
        for (std::size_t j = 0; j < b.size(); ++j) r[shift + j] -= c * b[j];
    }
    for (const Int& c : r)
        if (c != 0) throw spec_error("cyclotomic division not exact");
    return q;
}

inline std::vector<Int> cyclotomic_dense(long n, std::map<long, std::vector<Int>>& memo) {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    std::vector<Int> num(n + 1, Int(0));
    num[0] = -1;
    num[n] = 1;
    std::vector<Int> acc = num;
    for (long d = 1; d < n; ++d) {
        if (n % d == 0) acc = poly_div_exact(acc, cyclotomic_dense(d, memo));
    }
    memo[n] = acc;
    return acc;
}

inline const CycloPoly& cyclo_poly(long N) {
    static std::map<long, CycloPoly> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(N);
    if (it != cache.end()) return it->second;

    long rad = 1;
    for (long p : prime_factors(N)) rad *= p;
    if (rad > 30030) throw guard_error("cyclotomic radical too large");
    static std::map<long, std::vector<Int>> memo;
    std::vector<Int> dense = cyclotomic_dense(rad, memo);
    long stretch = N / rad;
    CycloPoly poly;
    poly.degree = (static_cast<long>(dense.size()) - 1) * stretch;
    for (long d = 0; d + 1 < static_cast<long>(dense.size()); ++d)
        if (dense[d] != 0) poly.lower.emplace_back(d * stretch, dense[d]);
    return cache.emplace(N, std::move(poly)).first->second;
}

} // namespace detail

class CycloNumber {
public:
    static constexpr long kModulusCap = 4'000'000;

    CycloNumber() : modulus_(1) {}
    explicit CycloNumber(const Rat& r, long modulus = 1) : modulus_(modulus) {
        if (r != 0) coeffs_[0] = r;
        normalize();
    }

    static CycloNumber zero(long modulus = 1) { return CycloNumber(Rat(0), modulus); }
    static CycloNumber one(long modulus = 1) { return CycloNumber(Rat(1), modulus); }

    // zeta_order^power inside Q(zeta_modulus); order must divide the modulus.
    static CycloNumber zeta(long modulus, long order, long power) {
        if (order <= 0 || modulus % order != 0)
            throw spec_error("zeta: order does not divide the session modulus");
        CycloNumber z;
        z.modulus_ = modulus;
        z.coeffs_[mod_long(power, order) * (modulus / order)] = Rat(1);
        z.normalize();
        return z;
    }

    static CycloNumber from_root(const RootOfUnity& r, long modulus = 1) {
        long m = lcm_long_checked(modulus, r.den(), kModulusCap);
        return zeta(m, r.den(), r.num());
    }

    // The positive square root of an odd prime p, realized by the quadratic
    // Gauss sum: g = sum_a (a/p) zeta_p^a equals sqrt(p) (p = 1 mod 4) or
    // i*sqrt(p) (p = 3 mod 4); the latter is rotated by -i.
    static CycloNumber sqrt_prime(long modulus, long p) {
        if (p == 2 || !is_prime_long(p)) throw spec_error("sqrt_prime needs an odd prime");
        if (modulus % (4 * p) != 0) throw spec_error("sqrt_prime: 4p must divide the modulus");
        CycloNumber g = zero(modulus);
        for (long a = 1; a < p; ++a) {
            int leg = legendre_long(a, p);
            g.coeffs_[a * (modulus / p)] += Rat(leg);
        }
        if (p % 4 == 3) {
            CycloNumber mi = zeta(modulus, 4, 3); // -i
            g = g.mul_raw(mi);
        }
        g.normalize();
        return g;
    }

    long modulus() const { return modulus_; }
    const std::map<long, Rat>& terms() const { return coeffs_; }

    bool is_zero() const { return coeffs_.empty(); }
    bool is_rational() const {
        return coeffs_.empty() || (coeffs_.size() == 1 && coeffs_.begin()->first == 0);
    }
    Rat rational_value() const {
        if (coeffs_.empty()) return Rat(0);
        if (!is_rational()) throw spec_error("value is not rational");
        return coeffs_.begin()->second;
    }

    CycloNumber lift(long m) const {
        if (m == modulus_) return *this;
        if (m % modulus_ != 0) throw spec_error("lift: modulus mismatch");
        CycloNumber r;
        r.modulus_ = m;
        long k = m / modulus_;
        for (const auto& [e, c] : coeffs_) r.coeffs_[e * k] = c;
        r.normalize();
        return r;
    }

    CycloNumber operator+(const CycloNumber& o) const {
        auto [a, b] = aligned(*this, o);
        for (const auto& [e, c] : b.coeffs_) a.coeffs_[e] += c;
        a.normalize();
        return a;
    }
    CycloNumber operator-(const CycloNumber& o) const {
        auto [a, b] = aligned(*this, o);
        for (const auto& [e, c] : b.coeffs_) a.coeffs_[e] -= c;
        a.normalize();
        return a;
    }
    CycloNumber operator-() const {
        CycloNumber r = *this;
        for (auto& [e, c] : r.coeffs_) c = -c;
        return r;
    }
    CycloNumber operator*(const CycloNumber& o) const {
        auto [a, b] = aligned(*this, o);
        CycloNumber r = a.mul_raw(b);
        r.normalize();
        return r;
    }
    bool operator==(const CycloNumber& o) const {
        auto [a, b] = aligned(*this, o);
        return a.coeffs_ == b.coeffs_;
    }
    bool operator!=(const CycloNumber& o) const { return !(*this == o); }

    CycloNumber scale(const Rat& r) const {
        CycloNumber out = *this;
        if (r == 0) return zero(modulus_);
        for (auto& [e, c] : out.coeffs_) c *= r;
        return out;
    }

    CycloNumber mul_root(const RootOfUnity& r) const {
        if (r.is_one()) return *this;
        long m = lcm_long_checked(modulus_, r.den(), kModulusCap);
        CycloNumber a = lift(m);
        long shift = r.num() * (m / r.den());
        CycloNumber out;
        out.modulus_ = m;
        for (const auto& [e, c] : a.coeffs_) out.coeffs_[(e + shift) % m] = c;
        out.normalize();
        return out;
    }

    CycloNumber conj() const {
        CycloNumber r;
        r.modulus_ = modulus_;
        for (const auto& [e, c] : coeffs_) r.coeffs_[e == 0 ? 0 : modulus_ - e] += c;
        r.normalize();
        return r;
    }

    CycloNumber pow(unsigned long e) const {
        CycloNumber r = one(modulus_), b = *this;
        while (e > 0) {
            if (e & 1) r = r * b;
            b = b * b;
            e >>= 1;
        }
        return r;
    }

    // Inverse of x whenever x*conj(x) is a nonzero rational (covers rational
    // multiples of roots of unity, unimodular constants, and sqrt(p)).
    CycloNumber inverse() const {
        CycloNumber n = *this * conj();
        if (!n.is_rational() || n.is_zero())
            throw spec_error("inverse: unsupported element (norm to R not rational)");
        Rat r = n.rational_value();
        return conj().scale(Rat(1) / r);
    }

    // multiply by p^{k/2}, k any integer (uses sqrt_prime for odd k)
    CycloNumber mul_p_half(long p, long k) const {
        if (k == 0) return *this;
        CycloNumber out = *this;
        long whole = (k >= 0) ? k / 2 : -((-k + 1) / 2);
        // k = 2*whole + r with r in {0,1}
        long r = k - 2 * whole;
        if (whole >= 0)
            out = out.scale(Rat(int_pow(Int(p), whole)));
        else
            out = out.scale(Rat(Int(1), int_pow(Int(p), -whole)));
        if (r == 1) {
            long m = lcm_long_checked(out.modulus_, 4 * p, kModulusCap);
            out = out.lift(m) * sqrt_prime(m, p);
        }
        return out;
    }

    std::complex<double> embed() const {
        std::complex<double> z(0, 0);
        const double tau = 6.283185307179586476925286766559;
        for (const auto& [e, c] : coeffs_) {
            double ang = tau * static_cast<double>(e) / static_cast<double>(modulus_);
            z += rat_double(c) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        return z;
    }

    std::string to_string() const {
        if (coeffs_.empty()) return "0";
        std::string s;
        for (const auto& [e, c] : coeffs_) {
            if (!s.empty()) s += " + ";
            s += rat_str(c);
            if (e != 0) s += "*z" + std::to_string(modulus_) + "^" + std::to_string(e);
        }
        return s;
    }

private:
    long modulus_;
    std::map<long, Rat> coeffs_;

    static std::pair<CycloNumber, CycloNumber> aligned(const CycloNumber& x, const CycloNumber& y) {
        long m = lcm_long_checked(x.modulus_, y.modulus_, kModulusCap);
        return {x.lift(m), y.lift(m)};
    }

    CycloNumber mul_raw(const CycloNumber& o) const {
        CycloNumber r;
        r.modulus_ = modulus_;
        for (const auto& [e1, c1] : coeffs_)
            for (const auto& [e2, c2] : o.coeffs_) {
                Rat prod = c1 * c2;
                Rat& slot = r.coeffs_[(e1 + e2) % modulus_];
                slot += prod;
            }
        return r;
    }

    void normalize() {
        if (modulus_ <= 0) throw spec_error("bad modulus");
        // fold exponents into [0, N)
        {
            std::map<long, Rat> folded;
            for (auto& [e, c] : coeffs_) {
                if (c == 0) continue;
                folded[mod_long(e, modulus_)] += c;
            }
            coeffs_ = std::move(folded);
        }
        if (modulus_ == 1) {
            drop_zeros();
            return;
        }
        const auto& phi = detail::cyclo_poly(modulus_);
        while (!coeffs_.empty()) {
            auto top = std::prev(coeffs_.end());
            long e = top->first;
            if (e < phi.degree) break;
            Rat c = top->second;
            coeffs_.erase(top);
            if (c == 0) continue;
            for (const auto& [d, a] : phi.lower) coeffs_[e - phi.degree + d] -= c * Rat(a);
        }
        drop_zeros();
    }

    void drop_zeros() {
        for (auto it = coeffs_.begin(); it != coeffs_.end();) {
            if (it->second == 0)
                it = coeffs_.erase(it);
            else
                ++it;
        }
    }

    friend class CycloBuilder;
};

// Accumulator for large character sums: terms are (root of unity, rational
// weight); normalization happens once at the end.
class CycloBuilder {
public:
    explicit CycloBuilder(long modulus) : modulus_(modulus) {}

    void add(const RootOfUnity& r, const Rat& w = Rat(1)) {
        if (modulus_ % r.den() != 0)
            modulus_ = lcm_long_checked(modulus_, r.den(), CycloNumber::kModulusCap);
        pending_.emplace_back(r, w);
    }

    CycloNumber build() const {
        CycloNumber out;
        out.modulus_ = modulus_;
        for (const auto& [r, w] : pending_)
            out.coeffs_[r.num() * (modulus_ / r.den())] += w;
        out.normalize();
        return out;
    }

private:
    long modulus_;
    std::vector<std::pair<RootOfUnity, Rat>> pending_;
};

} // namespace locfac
