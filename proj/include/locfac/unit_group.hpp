#pragma once

// The finite unit groups (O/P^n)^x of tower nodes.
//
// Generating set: the Teichmueller lift of a residue generator (order q-1)
// plus the filtration candidates 1 + pi^i t_j over levels 1 <= i < n and an
// F_p-basis t_j of the residue field.  Discrete logs are read level by level
// from the digits of a unit; the candidate relation lattice (p-th powers
// fall into deeper levels) is triangular with p on the diagonal, so its
// Smith normal form turns the candidates into an independent basis with
// exact orders.

#include "locfac/local_field.hpp"

#include <functional>

namespace locfac {

class UnitGroup {
public:
    static constexpr std::int64_t kDefaultGuard = 8'000'000;

    // process-wide enumeration budget, adjustable by the job runner
    static std::int64_t& default_guard() {
        static std::int64_t g = kDefaultGuard;
        return g;
    }

    UnitGroup(NodePtr node, long n, std::int64_t guard = 0)
        : node_(std::move(node)), n_(n), guard_(guard > 0 ? guard : default_guard()) {
        if (n_ < 1) throw spec_error("unit group level must be >= 1");
        if (static_cast<long>(node_->precision()) * node_->e_abs() < n_ + 2 * node_->e_abs())
            throw precision_error("insufficient precision for the requested unit-group level");

        const auto& k = node_->residue_field();
        fdim_ = k->degree();
        tg_ = node_->teichmueller(k->generator());
        tg_inv_ = tg_.inverse();
        tg_order_ = k->q() - 1;

        long m = fdim_ * (n_ - 1);
        cand_.reserve(m);
        cand_inv_.reserve(m);
        for (long i = 1; i < n_; ++i)
            for (long j = 0; j < fdim_; ++j) {
                FqElem t = k->zero();
                t[j] = 1;
                LocalElem c = node_->one() + node_->pi_pow(i) * node_->residue_lift(t);
                cand_.push_back(c);
                cand_inv_.push_back(c.inverse());
            }

        build_snf();
    }

    const NodePtr& node() const { return node_; }
    long level() const { return n_; }

    // independent generators with exact orders; the Teichmueller part first
    const std::vector<std::pair<LocalElem, std::int64_t>>& generators() const { return gens_; }

    std::int64_t group_order() const {
        std::int64_t o = tg_order_;
        for (std::size_t i = 1; i < gens_.size(); ++i) o *= gens_[i].second;
        return o;
    }

    // exponent vector of a unit against generators(); defined modulo orders
    std::vector<std::int64_t> dl(const LocalElem& u) const {
        if (u.node().get() != node_.get()) throw spec_error("dl: element from another node");
        if (u.valuation() != 0) throw spec_error("dl: not a unit");
        LocalElem x = u.normalized();
        FqElem r = node_->residue(x);
        long a0 = node_->residue_field()->dlog(r);
        x = x * tg_inv_.pow(a0);
        std::vector<long> digits = one_unit_digits(x);
        std::vector<std::int64_t> out(gens_.size(), 0);
        out[0] = a0;
        for (std::size_t k = 0; k < kept_.size(); ++k) {
            // y = V^T x: the kept coordinate reads column kept_[k] of V
            Int acc = 0;
            for (std::size_t j = 0; j < vcols_.size(); ++j) acc += vcols_[j][kept_[k]] * digits[j];
            Int d(static_cast<long>(gens_[k + 1].second));
            Int rmod = acc % d;
            if (rmod < 0) rmod += d;
            out[k + 1] = rmod.get_si();
        }
        return out;
    }

    // deterministic enumeration of the whole group: visitor(u, exponents);
    // the guard bounds q^n, the enumeration budget
    void enumerate(const std::function<void(const LocalElem&, const std::vector<std::int64_t>&)>& visit) const {
        __int128 sz = 1;
        for (long i = 0; i < n_; ++i) {
            sz *= node_->q();
            if (sz > guard_) throw guard_error("instance too large: unit group exceeds the guard limit");
        }
        std::vector<std::int64_t> exps(gens_.size(), 0);
        LocalElem cur = node_->one();
        std::int64_t total = group_order();
        for (std::int64_t c = 0;; ++c) {
            visit(cur, exps);
            if (c + 1 == total) break;
            std::size_t i = 0;
            while (true) {
                cur = cur * gens_[i].first;
                if (++exps[i] < gens_[i].second) break;
                exps[i] = 0;
                ++i;
            }
        }
    }

private:
    NodePtr node_;
    long n_;
    std::int64_t guard_ = kDefaultGuard;
    long fdim_ = 1;
    LocalElem tg_, tg_inv_;
    std::int64_t tg_order_ = 1;
    std::vector<LocalElem> cand_, cand_inv_;
    std::vector<std::pair<LocalElem, std::int64_t>> gens_;
    std::vector<std::vector<Int>> vcols_; // SNF column transform V (rows indexed by candidate)
    std::vector<long> kept_;              // indices of nontrivial diagonal entries

    // digits of a one-unit with respect to the filtration candidates
    std::vector<long> one_unit_digits(LocalElem x) const {
        std::vector<long> digits(cand_.size(), 0);
        for (long i = 1; i < n_; ++i) {
            LocalElem d = x - node_->one();
            if (d.valuation_at_least(n_)) break;
            long v = d.valuation();
            if (v < i) throw spec_error("unit digit extraction went out of order");
            if (v >= n_) break;
            if (v > i) continue;
            LocalElem digit_elem = d * node_->pi_pow(-i);
            FqElem digit = node_->residue(digit_elem.normalized());
            for (long j = 0; j < fdim_; ++j) {
                long a = digit[j] % node_->p();
                digits[(i - 1) * fdim_ + j] = a;
                if (a != 0) x = x * cand_inv_[(i - 1) * fdim_ + j].pow(a);
            }
        }
        if (!(x - node_->one()).valuation_at_least(n_))
            throw spec_error("one-unit digits did not terminate");
        return digits;
    }

    void build_snf() {
        long m = static_cast<long>(cand_.size());
        gens_.clear();
        gens_.emplace_back(tg_, tg_order_);
        if (m == 0) return;
        const long p = node_->p();

        // The relation lattice p*e_k - digits(cand_k^p) has determinant p^m,
        // so the reduction lives over Z/p^L: one valuation-pivoted pass with
        // bounded entries (naive integer SNF explodes here).
        int L = static_cast<int>(n_) + 2;
        const std::int64_t PL = pow64_checked(p, L);
        auto norm = [&](std::int64_t x) { x %= PL; return x < 0 ? x + PL : x; };
        auto vp = [&](std::int64_t x) { return x == 0 ? L : std::min<int>(L, val_p64(x, p)); };

        std::vector<std::vector<std::int64_t>> R(m, std::vector<std::int64_t>(m, 0));
        for (long kidx = 0; kidx < m; ++kidx) {
            LocalElem cp = cand_[kidx].pow(p);
            std::vector<long> w = one_unit_digits(cp);
            for (long j = 0; j < m; ++j) R[kidx][j] = norm(-w[j]);
            R[kidx][kidx] = norm(R[kidx][kidx] + p);
        }
        std::vector<std::vector<std::int64_t>> V(m, std::vector<std::int64_t>(m, 0)),
            Vi(m, std::vector<std::int64_t>(m, 0));
        for (long i = 0; i < m; ++i) V[i][i] = Vi[i][i] = 1;

        for (long t = 0; t < m; ++t) {
            // pivot of minimal p-valuation in the remaining block
            long pi = -1, pj = -1;
            int best = L + 1;
            for (long i = t; i < m; ++i)
                for (long j = t; j < m; ++j)
                    if (vp(R[i][j]) < best) { best = vp(R[i][j]); pi = i; pj = j; }
            if (pi < 0 || best >= L) throw spec_error("unit relation lattice is singular");
            std::swap(R[t], R[pi]);
            if (pj != t) {
                for (long i = 0; i < m; ++i) std::swap(R[i][t], R[i][pj]);
                for (long i = 0; i < m; ++i) std::swap(V[i][t], V[i][pj]);
                std::swap(Vi[t], Vi[pj]);
            }
            std::int64_t piv = R[t][t];
            int v = vp(piv);
            std::int64_t unit = piv / pow64_checked(p, v);
            std::int64_t uinv = invmod64(unit % PL, PL);
            // clear the column below, then the row to the right
            for (long i = t + 1; i < m; ++i) {
                if (R[i][t] == 0) continue;
                std::int64_t q = mulmod64((R[i][t] / pow64_checked(p, v)) % PL, uinv, PL);
                for (long j = t; j < m; ++j)
                    R[i][j] = norm(R[i][j] - mulmod64(q, R[t][j], PL));
            }
            for (long j = t + 1; j < m; ++j) {
                if (R[t][j] == 0) continue;
                std::int64_t q = mulmod64((R[t][j] / pow64_checked(p, v)) % PL, uinv, PL);
                // col_j -= q col_t; V follows, Vi gets the inverse row op
                for (long i = 0; i < m; ++i) R[i][j] = norm(R[i][j] - mulmod64(q, R[i][t], PL));
                for (long i = 0; i < m; ++i) V[i][j] = norm(V[i][j] - mulmod64(q, V[i][t], PL));
                for (long jj = 0; jj < m; ++jj) Vi[t][jj] = norm(Vi[t][jj] + mulmod64(q, Vi[j][jj], PL));
            }
            // normalize the pivot to the pure p-power (scale column t by 1/unit)
            for (long i = 0; i < m; ++i) {
                R[i][t] = mulmod64(R[i][t], uinv, PL);
                V[i][t] = mulmod64(V[i][t], uinv, PL);
            }
            for (long jj = 0; jj < m; ++jj) Vi[t][jj] = mulmod64(Vi[t][jj], unit % PL, PL);
        }

        vcols_.assign(m, std::vector<Int>(m, 0));
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < m; ++j) vcols_[i][j] = Int(static_cast<long>(V[i][j]));
        for (long k2 = 0; k2 < m; ++k2) {
            std::int64_t d = R[k2][k2];
            if (d == 1) continue;
            // generator h_k = prod cand_j^{Vi[k][j]} (exponents mod orders)
            LocalElem h = node_->one();
            for (long j = 0; j < m; ++j) {
                long e2 = static_cast<long>(Vi[k2][j] % PL);
                if (e2 != 0) h = h * cand_[j].pow(e2);
            }
            kept_.push_back(k2);
            gens_.emplace_back(h, d);
        }

        // sanity: orders multiply to q^{n-1}
        Int prod = 1;
        for (std::size_t i = 1; i < gens_.size(); ++i) prod *= Int(static_cast<long>(gens_[i].second));
        Int want = 1;
        for (long i = 0; i < n_ - 1; ++i) want *= Int(static_cast<long>(node_->q()));
        if (prod != want) throw spec_error("unit group order mismatch after SNF");
    }
};

} // namespace locfac
