#pragma once

// Finite fields as towers over F_p, mirroring the residue fields of the
// p-adic towers step by step.  Elements are flat coordinate vectors; the
// basis ordering matches the corresponding local-field node, so residues
// and digit lifts are index-preserving.

#include "locfac/flat_ring.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace locfac {

class FqField;
using FqFieldPtr = std::shared_ptr<const FqField>;
using FqElem = FlatRing::Vec;

class FqField : public std::enable_shared_from_this<FqField> {
public:
    static FqFieldPtr prime_field(long p) {
        auto f = std::shared_ptr<FqField>(new FqField);
        f->p_ = p;
        f->deg_ = 1;
        f->ring_ = make_prime_ring(p);
        return f;
    }

    // Extend by a monic irreducible polynomial given by its lower coefficients.
    static FqFieldPtr extension(const FqFieldPtr& base, const std::vector<FqElem>& poly_low) {
        auto f = std::shared_ptr<FqField>(new FqField);
        f->p_ = base->p_;
        f->sub_ = base;
        f->step_deg_ = static_cast<long>(poly_low.size());
        f->deg_ = base->deg_ * f->step_deg_;
        f->poly_low_ = poly_low;
        f->ring_ = extend_ring(base->ring_, poly_low, f->step_deg_);
        return f;
    }

    // Deterministic tower step: lexicographically smallest monic irreducible
    // of degree d (coefficients enumerated low-to-high digit order).
    static FqFieldPtr extension_auto(const FqFieldPtr& base, long d) {
        std::vector<FqElem> low(d, base->ring_.zero());
        while (true) {
            if (base->poly_irreducible(low, d)) return extension(base, low);
            // odometer over coefficient vectors
            long pos = 0;
            while (pos < d) {
                if (base->elem_increment(low[pos])) break;
                ++pos;
            }
            if (pos == d) throw spec_error("no irreducible polynomial found");
        }
    }

    long p() const { return p_; }
    long degree() const { return deg_; }       // over F_p
    long step_degree() const { return step_deg_; }
    std::int64_t q() const { return pow64_checked(p_, static_cast<int>(deg_)); }
    const FqFieldPtr& subfield() const { return sub_; }
    const FlatRing& ring() const { return ring_; }
    const std::vector<FqElem>& step_poly_low() const { return poly_low_; }

    FqElem zero() const { return ring_.zero(); }
    FqElem one() const { return ring_.one(); }
    FqElem from_int(long c) const { return ring_.scalar(c); }
    FqElem add(const FqElem& a, const FqElem& b) const { return ring_.add(a, b); }
    FqElem sub(const FqElem& a, const FqElem& b) const { return ring_.sub(a, b); }
    FqElem neg(const FqElem& a) const { return ring_.neg(a); }
    FqElem mul(const FqElem& a, const FqElem& b) const { return ring_.mul(a, b); }
    FqElem pow(const FqElem& a, std::int64_t e) const {
        if (e < 0) return pow(inverse(a), -e);
        return ring_.pow(a, e);
    }
    bool is_zero(const FqElem& a) const { return ring_.is_zero(a); }

    FqElem inverse(const FqElem& a) const {
        if (is_zero(a)) throw spec_error("finite field: inverse of zero");
        return ring_.pow(a, q() - 2);
    }

    FqElem embed_sub(const FqElem& a) const {
        // subfield elements sit in the power-0 slice
        FqElem r = zero();
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i];
        return r;
    }

    FqElem frobenius(const FqElem& a) const { return ring_.pow(a, p_); }

    // absolute trace to F_p
    long abs_trace(const FqElem& a) const {
        FqElem s = zero(), x = a;
        for (long i = 0; i < deg_; ++i) {
            s = add(s, x);
            x = frobenius(x);
        }
        for (std::size_t i = 1; i < s.size(); ++i)
            if (s[i] != 0) throw spec_error("trace landed outside the prime field");
        return s[0];
    }

    // order of F_p(a) inside this field
    long degree_over_prime(const FqElem& a) const {
        FqElem x = a;
        for (long k = 1; k <= deg_; ++k) {
            x = frobenius(x);
            if (x == a) return k;
        }
        throw spec_error("frobenius orbit did not close");
    }

    std::int64_t element_order(const FqElem& a) const {
        if (is_zero(a)) throw spec_error("order of zero");
        std::int64_t m = q() - 1;
        for (long f : prime_factors_64(m)) {
            while (m % f == 0 && ring_.pow(a, m / f) == one()) m /= f;
        }
        return m;
    }

    // Fixed generator of the cyclic multiplicative group (first in the
    // deterministic element enumeration having full order).
    const FqElem& generator() const {
        std::lock_guard<std::mutex> lock(cache_mtx_);
        if (!gen_.empty()) return gen_;
        FqElem cand = zero();
        while (elem_increment(cand)) {
            if (is_zero(cand)) continue;
            if (element_order(cand) == q() - 1) {
                gen_ = cand;
                return gen_;
            }
        }
        throw spec_error("no multiplicative generator found");
    }

    // discrete log with respect to generator(); brute force, cached
    long dlog(const FqElem& a) const {
        if (is_zero(a)) throw spec_error("dlog of zero");
        const FqElem& g = generator();
        std::lock_guard<std::mutex> lock(cache_mtx_);
        if (dlog_table_.empty()) {
            std::int64_t qm1 = q() - 1;
            if (qm1 > 4'000'000) throw guard_error("residue field too large for dlog table");
            FqElem x = one();
            for (std::int64_t k = 0; k < qm1; ++k) {
                dlog_table_[x] = static_cast<long>(k);
                x = mul(x, g);
            }
        }
        auto it = dlog_table_.find(a);
        if (it == dlog_table_.end()) throw spec_error("dlog: element not in group");
        return it->second;
    }

    int quadratic_character(const FqElem& a) const {
        if (is_zero(a)) return 0;
        FqElem r = ring_.pow(a, (q() - 1) / 2);
        if (r == one()) return 1;
        if (r == neg(one())) return -1;
        throw spec_error("quadratic character did not evaluate to +-1");
    }

    bool irreducible(const std::vector<FqElem>& low) const {
        return poly_irreducible(low, static_cast<long>(low.size()));
    }

    // odometer over coordinate vectors; returns false after wrapping to zero
    bool elem_increment(FqElem& a) const {
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (++a[i] < p_) return true;
            a[i] = 0;
        }
        return false;
    }

private:
    FqField() = default;

    static std::vector<std::int64_t> prime_factors_64(std::int64_t n) {
        std::vector<std::int64_t> ps;
        for (std::int64_t d = 2; d * d <= n; ++d)
            if (n % d == 0) {
                ps.push_back(d);
                while (n % d == 0) n /= d;
            }
        if (n > 1) ps.push_back(n);
        return ps;
    }

    // irreducibility over this field: x^{q^d} = x and gcd-degree checks via
    // Frobenius in the candidate quotient ring
    bool poly_irreducible(const std::vector<FqElem>& low, long d) const {
        if (d == 1) return true;
        FlatRing cand = extend_ring(ring_, low, d);
        // x as element of the candidate ring
        FlatRing::Vec x(cand.n, 0);
        x[ring_.n] = 1; // power-1 slot, coordinate 0 of the coefficient
        std::int64_t qq = q();
        // x^{q^d} must equal x
        FlatRing::Vec y = x;
        for (long i = 0; i < d; ++i) y = cand.pow(y, qq);
        if (y != x) return false;
        // and x^{q^{d/l}} must differ from x for every prime l | d
        for (long l : prime_factors(d)) {
            FlatRing::Vec z = x;
            for (long i = 0; i < d / l; ++i) z = cand.pow(z, qq);
            if (z == x) return false;
        }
        return true;
    }

    long p_ = 0;
    long deg_ = 1;
    long step_deg_ = 1;
    FqFieldPtr sub_;
    std::vector<FqElem> poly_low_;
    FlatRing ring_;
    mutable FqElem gen_;
    mutable std::map<FqElem, long> dlog_table_;
    mutable std::mutex cache_mtx_;
};

} // namespace locfac
