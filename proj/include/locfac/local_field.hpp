#pragma once

// Truncated-precision arithmetic in towers of p-adic fields.
//
// A tower starts with the unramified extension F of Q_p of degree f (the
// base carries the level-one additive character) and grows by prime-degree
// unramified or Eisenstein steps.  Every node is a flat Z/p^N-algebra with
// structure constants; an element is a coordinate vector together with a
// power-of-p denominator and a count of trusted p-digits.  Valuations are
// certified: any computation that would read digits beyond the trusted
// range raises precision_error instead of returning garbage.

#include "locfac/finite_field.hpp"
#include "locfac/flat_ring.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace locfac {

class Node;
using NodePtr = std::shared_ptr<const Node>;

enum class StepKind { Base, Unramified, Eisenstein };

class LocalElem;

class Node : public std::enable_shared_from_this<Node> {
public:
    long p() const { return p_; }
    int precision() const { return prec_; }
    std::int64_t pmod() const { return pmod_; }
    StepKind kind() const { return kind_; }
    const NodePtr& parent() const { return parent_; }
    long step_degree() const { return step_deg_; }
    long deg_qp() const { return ring_.n; }

    long e_abs() const { return e_abs_; }          // ramification over Q_p (= over base F)
    long f_abs() const { return f_abs_; }          // residue degree over Q_p
    long e_over(const NodePtr& anc) const { return e_abs_ / anc->e_abs_; }
    long f_over(const NodePtr& anc) const { return f_abs_ / anc->f_abs_; }
    std::int64_t q() const { return pow64_checked(p_, static_cast<int>(f_abs_)); }

    // different exponent of this step and over an ancestor (valuation in
    // this node's normalization)
    long different_step() const { return d_step_; }
    long different_over(const NodePtr& anc) const {
        long d = 0;
        const Node* cur = this;
        while (cur != anc.get()) {
            if (!cur->parent_) throw spec_error("different_over: not an ancestor");
            d += (e_abs_ / cur->e_abs_) * cur->d_step_; // transitivity d(M/A) = d(M/K) + e(M/K) d(K/A)
            cur = cur->parent_.get();
        }
        return d;
    }

    const FqFieldPtr& residue_field() const { return res_; }
    const std::vector<long>& basis_val() const { return bval_; }
    const FlatRing& ring() const { return ring_; }
    const std::vector<std::int64_t>& trace_tau() const { return tau_; }

    // g'(pi) for an Eisenstein step with defining polynomial g
    LocalElem derivative_at_pi() const;

    bool is_ancestor_or_self(const NodePtr& anc) const {
        const Node* cur = this;
        while (cur) {
            if (cur == anc.get()) return true;
            cur = cur->parent_.get();
        }
        return false;
    }

    std::string name() const { return name_; }

    // ---- construction ----
    static NodePtr make_base(long p, long f, int precision);
    NodePtr extend_unramified(long d) const;
    // unramified step with a caller-chosen residue polynomial (for composita)
    NodePtr extend_unramified_poly(const std::vector<FqElem>& res_poly_low) const;
    // lower coefficients of a monic Eisenstein polynomial, as elements here
    NodePtr extend_eisenstein(const std::vector<LocalElem>& poly_low) const;
    const FlatRing::Vec& eisenstein_coefficient(long i) const { return eis_low_.at(i); }

    // ---- elements ----
    LocalElem zero() const;
    LocalElem one() const;
    LocalElem from_int(const Int& c) const;
    LocalElem uniformizer() const;
    LocalElem pi_pow(long k) const; // uniformizer^k, any sign
    LocalElem embed(const LocalElem& x) const; // from an ancestor node
    LocalElem teichmueller(const FqElem& r) const;
    LocalElem residue_lift(const FqElem& r) const;
    FqElem residue(const LocalElem& x) const; // x integral

    friend class LocalElem;

private:
    Node() = default;

    long p_ = 0;
    int prec_ = 0;
    std::int64_t pmod_ = 0;
    NodePtr parent_;
    StepKind kind_ = StepKind::Base;
    long step_deg_ = 1;
    long e_abs_ = 1, f_abs_ = 1;
    long d_step_ = 0;
    std::vector<FlatRing::Vec> eis_low_; // Eisenstein coefficients (parent coords)
    FlatRing ring_;
    FqFieldPtr res_;
    std::vector<long> bval_;           // valuation of each basis monomial
    std::vector<long> res_slot_;       // residue-basis index -> node coordinate index
    std::vector<FlatRing::Vec> pi_inv_rep_; // uniformizer inverse: rep / p^{pi_inv_shift_}
    int pi_inv_shift_ = 0;
    std::vector<FlatRing::Vec> trace_form_; // Tr_{node/F}(basis_i) as base-F coords
    std::vector<std::int64_t> tau_;         // Tr_{F/Qp}(base basis) mod p^prec
    mutable std::map<FqElem, std::vector<std::int64_t>> teich_cache_;
    mutable std::mutex cache_mtx_;
    std::string name_ = "F";

    void finish_construction();
    FlatRing::Vec raw_mul(const FlatRing::Vec& a, const FlatRing::Vec& b) const { return ring_.mul(a, b); }
};

// An element of a tower node: value = rep / p^shift, rep trusted mod p^valid.
class LocalElem {
public:
    LocalElem() = default;
    LocalElem(NodePtr node, FlatRing::Vec rep, int shift, int valid)
        : node_(std::move(node)), rep_(std::move(rep)), shift_(shift), valid_(valid) {
        reduce_to_valid();
        normalize_shift();
    }

    const NodePtr& node() const { return node_; }
    const FlatRing::Vec& rep() const { return rep_; }
    int shift() const { return shift_; }
    int valid() const { return valid_; }

    bool zero_at_precision() const {
        for (auto c : masked())
            if (c != 0) return false;
        return true;
    }

    LocalElem operator+(const LocalElem& o) const {
        check_same(o);
        auto [a, b] = aligned(*this, o);
        return LocalElem(node_, node_->ring_.add(a.rep_, b.rep_), a.shift_, std::min(a.valid_, b.valid_));
    }
    LocalElem operator-(const LocalElem& o) const {
        check_same(o);
        auto [a, b] = aligned(*this, o);
        return LocalElem(node_, node_->ring_.sub(a.rep_, b.rep_), a.shift_, std::min(a.valid_, b.valid_));
    }
    LocalElem operator-() const { return LocalElem(node_, node_->ring_.neg(rep_), shift_, valid_); }
    LocalElem operator*(const LocalElem& o) const {
        check_same(o);
        // rep1 known mod p^v1, rep2 mod p^v2: the product is determined
        // mod p^{min(v1 + vp(rep2), v2 + vp(rep1))}
        int vp1 = rep_min_vp(), vp2 = o.rep_min_vp();
        int v = std::min(valid_ + vp2, o.valid_ + vp1);
        return LocalElem(node_, node_->ring_.mul(rep_, o.rep_), shift_ + o.shift_, v);
    }
    LocalElem scale_int(std::int64_t c) const { return LocalElem(node_, node_->ring_.smul(rep_, c), shift_, valid_); }

    LocalElem pow(long e) const {
        if (e < 0) return inverse().pow(-e);
        LocalElem r = node_->one(), b = *this;
        while (e > 0) {
            if (e & 1) r = r * b;
            b = b * b;
            e >>= 1;
        }
        return r;
    }

    // equality at the shared certified precision
    bool operator==(const LocalElem& o) const { return (*this - o).zero_at_precision(); }
    bool operator!=(const LocalElem& o) const { return !(*this == o); }

    // exact valuation, or precision_error when indistinguishable from zero
    long valuation() const {
        long best = -1;
        bool found = false;
        const auto m = masked();
        for (long i = 0; i < node_->ring_.n; ++i) {
            if (m[i] == 0) continue;
            long v = node_->e_abs_ * val_p64(m[i], node_->p_) + node_->bval_[i];
            if (!found || v < best) { best = v; found = true; }
        }
        if (!found || best >= node_->e_abs_ * static_cast<long>(valid_))
            throw precision_error("valuation: element indistinguishable from zero at certified precision");
        return best - node_->e_abs_ * static_cast<long>(shift_);
    }

    bool valuation_at_least(long k) const {
        // never throws: true also means "cannot be distinguished from having v >= k"
        const auto m = masked();
        long cert = node_->e_abs_ * static_cast<long>(valid_);
        for (long i = 0; i < node_->ring_.n; ++i) {
            if (m[i] == 0) continue;
            long v = node_->e_abs_ * val_p64(m[i], node_->p_) + node_->bval_[i];
            if (v < std::min(cert, k + node_->e_abs_ * static_cast<long>(shift_))) return false;
        }
        return true;
    }

    // Newton inverse for units; general elements factor through pi powers.
    LocalElem inverse() const {
        long v = valuation();
        if (v != 0) {
            LocalElem u = (*this) * node_->pi_pow(-v);
            return u.inverse() * node_->pi_pow(-v);
        }
        LocalElem nf = normalized();
        FqElem r0 = node_->residue(nf);
        LocalElem y = node_->residue_lift(node_->residue_field()->inverse(r0));
        const LocalElem two = node_->from_int(2);
        for (int it = 0; it < 64; ++it) {
            LocalElem e = two - nf * y;
            y = y * e;
            if ((nf * y - node_->one()).zero_at_precision()) break;
        }
        if (!(nf * y - node_->one()).zero_at_precision())
            throw precision_error("newton inverse failed to converge");
        return y;
    }

    // rep with shift removed when the element is integral (v >= 0)
    LocalElem normalized() const {
        LocalElem r = *this;
        r.normalize_shift();
        return r;
    }

    // trace / norm down to an ancestor node, computed stepwise
    LocalElem trace_to(const NodePtr& anc) const;
    LocalElem norm_to(const NodePtr& anc) const;

    std::string to_string() const;

private:
    NodePtr node_;
    FlatRing::Vec rep_;
    int shift_ = 0;
    int valid_ = 0;

    friend class Node;

    void check_same(const LocalElem& o) const {
        if (node_.get() != o.node_.get()) throw spec_error("elements belong to different nodes");
    }

    // smallest p-valuation among trusted coordinates (= valid_ when all vanish)
    int rep_min_vp() const {
        int best = valid_;
        for (auto c : rep_) {
            if (c == 0) continue;
            int v = val_p64(c, node_->p_);
            if (v < best) best = v;
        }
        return best;
    }

    FlatRing::Vec masked() const {
        std::int64_t m = pow64_checked(node_->p_, valid_);
        FlatRing::Vec out = rep_;
        for (auto& c : out) c %= m;
        return out;
    }

    void reduce_to_valid() {
        if (valid_ > node_->prec_) valid_ = node_->prec_;
        if (valid_ < 0) throw precision_error("element has no certified digits left");
        std::int64_t m = pow64_checked(node_->p_, valid_);
        for (auto& c : rep_) c %= m;
    }

    void normalize_shift() {
        if (node_->ring_.is_zero(rep_)) {
            shift_ = 0;
            return;
        }
        while (shift_ > 0) {
            bool div = true;
            for (auto c : rep_)
                if (c % node_->p_ != 0) { div = false; break; }
            if (!div) break;
            for (auto& c : rep_) c /= node_->p_;
            --shift_;
            --valid_;
            if (valid_ <= 0) throw precision_error("precision exhausted while normalizing");
        }
    }

    static std::pair<LocalElem, LocalElem> aligned(const LocalElem& x, const LocalElem& y) {
        if (x.shift_ == y.shift_) return {x, y};
        if (x.shift_ < y.shift_) {
            auto [b, a] = aligned(y, x);
            return {a, b};
        }
        // x.shift_ > y.shift_: raise y
        int d = x.shift_ - y.shift_;
        std::int64_t f = pow64_checked(y.node_->p_, d);
        LocalElem y2 = y;
        y2.shift_ = x.shift_;
        y2.valid_ = std::min(y.node_->prec_, y.valid_ + d);
        std::int64_t m = pow64_checked(y.node_->p_, y2.valid_);
        for (auto& c : y2.rep_) c = mulmod64(c, f % m, m);
        return {x, y2};
    }
};

// ---------- Node implementation ----------

inline NodePtr Node::make_base(long p, long f, int precision) {
    if (!is_prime_long(p)) throw spec_error("base characteristic must be prime");
    if (precision < 2) throw spec_error("precision must be at least 2");
    pow64_checked(p, precision);
    auto n = std::shared_ptr<Node>(new Node);
    n->p_ = p;
    n->prec_ = precision;
    n->pmod_ = pow64_checked(p, precision);
    n->kind_ = StepKind::Base;
    n->step_deg_ = f;
    n->e_abs_ = 1;
    n->f_abs_ = f;
    n->d_step_ = 0;

    auto fp = FqField::prime_field(p);
    n->res_ = f == 1 ? fp : FqField::extension_auto(fp, f);

    if (f == 1) {
        n->ring_ = make_prime_ring(n->pmod_);
    } else {
        // lift the residue defining polynomial coefficientwise
        std::vector<FlatRing::Vec> low;
        for (const auto& c : n->res_->step_poly_low()) low.push_back({c[0] % n->pmod_});
        n->ring_ = extend_ring(make_prime_ring(n->pmod_), low, f);
    }
    n->bval_.assign(n->ring_.n, 0);
    n->res_slot_.resize(f);
    for (long i = 0; i < f; ++i) n->res_slot_[i] = i;
    n->finish_construction();
    return n;
}

inline NodePtr Node::extend_unramified(long d) const {
    return extend_unramified_poly(FqField::extension_auto(res_, d)->step_poly_low());
}

inline NodePtr Node::extend_unramified_poly(const std::vector<FqElem>& res_poly_low) const {
    long d = static_cast<long>(res_poly_low.size());
    if (!res_->irreducible(res_poly_low))
        throw spec_error("unramified step polynomial is reducible over the residue field");
    auto self = shared_from_this();
    auto n = std::shared_ptr<Node>(new Node);
    n->p_ = p_;
    n->prec_ = prec_;
    n->pmod_ = pmod_;
    n->parent_ = self;
    n->kind_ = StepKind::Unramified;
    n->step_deg_ = d;
    n->e_abs_ = e_abs_;
    n->f_abs_ = f_abs_ * d;
    n->d_step_ = 0;

    n->res_ = FqField::extension(res_, res_poly_low);
    // lift the residue step polynomial into this node
    std::vector<FlatRing::Vec> low;
    for (const auto& c : n->res_->step_poly_low()) {
        FlatRing::Vec lift(ring_.n, 0);
        for (long i = 0; i < res_->ring().n; ++i) lift[res_slot_[i]] = c[i];
        low.push_back(lift);
    }
    n->ring_ = extend_ring(ring_, low, d);
    n->bval_.resize(n->ring_.n);
    for (long j = 0; j < d; ++j)
        for (long i = 0; i < ring_.n; ++i) n->bval_[j * ring_.n + i] = bval_[i];
    n->res_slot_.resize(n->res_->ring().n);
    for (long j = 0; j < d; ++j)
        for (long i = 0; i < res_->ring().n; ++i)
            n->res_slot_[j * res_->ring().n + i] = j * ring_.n + res_slot_[i];
    n->name_ = name_ + ".ur" + std::to_string(d);
    n->finish_construction();
    return n;
}

inline NodePtr Node::extend_eisenstein(const std::vector<LocalElem>& poly_low) const {
    auto self = shared_from_this();
    long d = static_cast<long>(poly_low.size());
    if (d < 1) throw spec_error("eisenstein step needs positive degree");
    for (long i = 0; i < d; ++i) {
        if (poly_low[i].node().get() != this) throw spec_error("eisenstein coefficients must live in the parent");
        if (!poly_low[i].zero_at_precision()) {
            long v = poly_low[i].valuation();
            if (v < 1 || (i == 0 && v != 1))
                throw spec_error("polynomial fails the Eisenstein criterion");
        } else if (i == 0) {
            throw spec_error("polynomial fails the Eisenstein criterion");
        }
    }
    auto n = std::shared_ptr<Node>(new Node);
    n->p_ = p_;
    n->prec_ = prec_;
    n->pmod_ = pmod_;
    n->parent_ = self;
    n->kind_ = StepKind::Eisenstein;
    n->step_deg_ = d;
    n->e_abs_ = e_abs_ * d;
    n->f_abs_ = f_abs_;
    n->res_ = res_;

    std::vector<FlatRing::Vec> low;
    for (const auto& c : poly_low) low.push_back(c.normalized().rep_);
    n->eis_low_ = low;
    n->ring_ = extend_ring(ring_, low, d);
    n->bval_.resize(n->ring_.n);
    for (long j = 0; j < d; ++j)
        for (long i = 0; i < ring_.n; ++i) n->bval_[j * ring_.n + i] = d * bval_[i] + j;
    n->res_slot_ = res_slot_; // power-0 slice
    n->name_ = name_ + ".eis" + std::to_string(d);
    n->finish_construction();

    // different exponent of the step: v(g'(pi))
    n->d_step_ = n->derivative_at_pi().valuation();
    if (d % p_ != 0 && n->d_step_ != d - 1)
        throw spec_error("tame different exponent mismatch");
    return n;
}

inline void Node::finish_construction() {
    // tau: traces of the base-F basis down to Q_p (structure-constant traces)
    const Node* base = this;
    while (base->parent_) base = base->parent_.get();
    if (this == base) {
        tau_.resize(ring_.n);
        for (long i = 0; i < ring_.n; ++i) {
            // trace of multiplication-by-basis_i on the base ring
            __int128 t = 0;
            for (long j = 0; j < ring_.n; ++j)
                t += ring_.tensor[(static_cast<std::size_t>(i) * ring_.n + j) * ring_.n + j];
            tau_[i] = static_cast<std::int64_t>(t % pmod_);
        }
    }

    // uniformizer inverse
    if (kind_ == StepKind::Base) {
        pi_inv_rep_ = {FlatRing::Vec(ring_.n, 0)};
        pi_inv_rep_[0][0] = 1;
        pi_inv_shift_ = 1;
    } else if (kind_ == StepKind::Unramified) {
        // same uniformizer as parent, embedded
        LocalElem par(parent_, parent_->pi_inv_rep_[0], parent_->pi_inv_shift_, prec_);
        LocalElem emb = embed(par);
        pi_inv_rep_ = {emb.rep()};
        pi_inv_shift_ = emb.shift();
    } else {
        // pi^{-1} = pi^{d-1} * B^{-1} * embed(parent pi^{-1}),
        // B = (pi^d) * embed(parent pi^{-1}) a unit
        LocalElem pi = uniformizer();
        LocalElem pid = pi.pow(step_deg_);
        LocalElem par_inv(parent_, parent_->pi_inv_rep_[0], parent_->pi_inv_shift_, prec_);
        LocalElem B = pid * embed(par_inv);
        LocalElem r = pi.pow(step_deg_ - 1) * B.inverse() * embed(par_inv);
        pi_inv_rep_ = {r.rep()};
        pi_inv_shift_ = r.shift();
    }

    // trace forms down to the tower base (for the additive character)
    trace_form_.clear();
    if (!parent_) {
        for (long i = 0; i < ring_.n; ++i) {
            FlatRing::Vec v(ring_.n, 0);
            v[i] = 1;
            trace_form_.push_back(v);
        }
    } else {
        // Tr_{node/F}(b) = Tr_{parent/F}(Tr_{node/parent}(b)); the step trace
        // of b is the sum of the diagonal parent-blocks of mult-by-b.
        for (long i = 0; i < ring_.n; ++i) {
            FlatRing::Vec bi(ring_.n, 0);
            bi[i] = 1;
            // step trace into parent coordinates
            FlatRing::Vec tr_par(parent_->ring_.n, 0);
            for (long j = 0; j < step_deg_; ++j) {
                FlatRing::Vec bj(ring_.n, 0);
                bj[j * parent_->ring_.n] = 1; // pi^j basis element (parent coord 0)
                FlatRing::Vec prod = ring_.mul(bi, bj);
                for (long k = 0; k < parent_->ring_.n; ++k)
                    tr_par[k] = (tr_par[k] + prod[j * parent_->ring_.n + k]) % pmod_;
            }
            // push through the parent's trace form
            const Node* basep = this;
            while (basep->parent_) basep = basep->parent_.get();
            FlatRing::Vec out(basep->ring_.n, 0);
            for (long k = 0; k < parent_->ring_.n; ++k) {
                if (tr_par[k] == 0) continue;
                const FlatRing::Vec& pf = parent_->trace_form_[k];
                for (long t = 0; t < basep->ring_.n; ++t)
                    out[t] = (out[t] + (__int128)tr_par[k] * pf[t]) % pmod_;
            }
            trace_form_.push_back(out);
        }
    }
}

inline LocalElem Node::zero() const {
    return LocalElem(shared_from_this(), ring_.zero(), 0, prec_);
}
inline LocalElem Node::one() const {
    return LocalElem(shared_from_this(), ring_.one(), 0, prec_);
}
inline LocalElem Node::from_int(const Int& c) const {
    FlatRing::Vec v(ring_.n, 0);
    v[0] = static_cast<std::int64_t>(mpz_fdiv_ui(c.get_mpz_t(), static_cast<unsigned long>(pmod_)));
    return LocalElem(shared_from_this(), v, 0, prec_);
}
inline LocalElem Node::uniformizer() const {
    if (kind_ == StepKind::Base) {
        FlatRing::Vec v(ring_.n, 0);
        v[0] = p_ % pmod_;
        return LocalElem(shared_from_this(), v, 0, prec_);
    }
    if (kind_ == StepKind::Unramified) return embed(parent_->uniformizer());
    FlatRing::Vec v(ring_.n, 0);
    v[parent_->ring_.n] = 1;
    return LocalElem(shared_from_this(), v, 0, prec_);
}
inline LocalElem Node::pi_pow(long k) const {
    if (k >= 0) return uniformizer().pow(k);
    LocalElem inv(shared_from_this(), pi_inv_rep_[0], pi_inv_shift_, prec_);
    return inv.pow(-k);
}
inline LocalElem Node::embed(const LocalElem& x) const {
    if (x.node().get() == this) return x;
    if (!is_ancestor_or_self(x.node())) throw spec_error("embed: element is not from an ancestor");
    // walk one step down from our parent
    LocalElem up = parent_ ? parent_->embed(x) : x;
    FlatRing::Vec v(ring_.n, 0);
    for (long i = 0; i < parent_->ring_.n; ++i) v[i] = up.rep()[i];
    return LocalElem(shared_from_this(), v, up.shift(), up.valid());
}
inline FqElem Node::residue(const LocalElem& x) const {
    if (x.node().get() != this) throw spec_error("residue: wrong node");
    LocalElem n = x.normalized();
    if (n.shift() != 0) throw precision_error("residue of a non-integral element");
    FqElem r = res_->zero();
    for (long i = 0; i < res_->ring().n; ++i) r[i] = n.rep()[res_slot_[i]] % p_;
    // sanity: all coordinates off the residue slice must be divisible by p...
    // not true in general (pi-multiples), but their residue is zero anyway.
    return r;
}
inline LocalElem Node::residue_lift(const FqElem& r) const {
    FlatRing::Vec v(ring_.n, 0);
    for (long i = 0; i < res_->ring().n; ++i) v[res_slot_[i]] = r[i];
    return LocalElem(shared_from_this(), v, 0, prec_);
}
inline LocalElem Node::teichmueller(const FqElem& r) const {
    {
        std::lock_guard<std::mutex> lock(cache_mtx_);
        auto it = teich_cache_.find(r);
        if (it != teich_cache_.end()) return LocalElem(shared_from_this(), it->second, 0, prec_);
    }
    if (res_->is_zero(r)) return zero();
    LocalElem x = residue_lift(r);
    std::int64_t qq = q();
    for (int i = 0; i < prec_ * static_cast<int>(e_abs_) + 4; ++i) {
        LocalElem y = x.pow(qq);
        if ((y - x).zero_at_precision()) break;
        x = y;
    }
    if (!((x.pow(qq) - x).zero_at_precision()))
        throw precision_error("teichmueller iteration did not stabilize");
    std::lock_guard<std::mutex> lock(cache_mtx_);
    teich_cache_.emplace(r, x.rep());
    return x;
}

inline LocalElem LocalElem::trace_to(const NodePtr& anc) const {
    if (node_.get() == anc.get()) return *this;
    if (!node_->is_ancestor_or_self(anc)) throw spec_error("trace_to: not an ancestor");
    if (!anc->parent()) {
        // tower base: one dot product against the precomputed trace form
        FlatRing::Vec out(anc->ring().n, 0);
        for (long i = 0; i < node_->ring_.n; ++i) {
            if (rep_[i] == 0) continue;
            const FlatRing::Vec& tf = node_->trace_form_[i];
            for (long t = 0; t < anc->ring().n; ++t)
                out[t] = static_cast<std::int64_t>((out[t] + (__int128)rep_[i] * tf[t]) % node_->pmod_);
        }
        return LocalElem(anc, out, shift_, valid_);
    }
    const NodePtr par = node_->parent_;
    // one step: sum of diagonal parent-blocks of mult-by-x
    LocalElem xn = *this;
    FlatRing::Vec acc(par->ring_.n, 0);
    for (long j = 0; j < node_->step_deg_; ++j) {
        FlatRing::Vec bj(node_->ring_.n, 0);
        bj[j * par->ring_.n] = 1;
        FlatRing::Vec prod = node_->ring_.mul(xn.rep_, bj);
        for (long k = 0; k < par->ring_.n; ++k)
            acc[k] = (acc[k] + prod[j * par->ring_.n + k]) % node_->pmod_;
    }
    LocalElem t(par, acc, xn.shift_, xn.valid_);
    return t.trace_to(anc);
}

inline LocalElem LocalElem::norm_to(const NodePtr& anc) const {
    if (node_.get() == anc.get()) return *this;
    if (!node_->is_ancestor_or_self(anc)) throw spec_error("norm_to: not an ancestor");
    const NodePtr par = node_->parent_;
    long d = node_->step_deg_;
    // matrix of mult-by-x over the parent, entries M[row][col]
    std::vector<std::vector<FlatRing::Vec>> M(d, std::vector<FlatRing::Vec>(d));
    for (long j = 0; j < d; ++j) {
        FlatRing::Vec bj(node_->ring_.n, 0);
        bj[j * par->ring_.n] = 1;
        FlatRing::Vec prod = node_->ring_.mul(rep_, bj);
        for (long r = 0; r < d; ++r) {
            FlatRing::Vec cell(par->ring_.n);
            for (long k = 0; k < par->ring_.n; ++k) cell[k] = prod[r * par->ring_.n + k];
            M[r][j] = cell;
        }
    }
    // Leibniz determinant (step degrees are at most 5)
    std::vector<long> perm(d);
    for (long i = 0; i < d; ++i) perm[i] = i;
    FlatRing::Vec det(par->ring_.n, 0);
    int sign = 1;
    // iterate permutations in lexicographic order, tracking parity
    auto parity = [](const std::vector<long>& pm) {
        int s = 1;
        std::vector<bool> seen(pm.size(), false);
        for (std::size_t i = 0; i < pm.size(); ++i) {
            if (seen[i]) continue;
            long len = 0, j = static_cast<long>(i);
            while (!seen[j]) { seen[j] = true; j = pm[j]; ++len; }
            if (len % 2 == 0) s = -s;
        }
        return s;
    };
    do {
        FlatRing::Vec term = par->ring_.one();
        for (long i = 0; i < d; ++i) term = par->ring_.mul(term, M[i][perm[i]]);
        sign = parity(perm);
        det = sign > 0 ? par->ring_.add(det, term) : par->ring_.sub(det, term);
    } while (std::next_permutation(perm.begin(), perm.end()));

    LocalElem nrm(par, det, shift_ * d, valid_);
    return nrm.norm_to(anc);
}

inline std::string LocalElem::to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < rep_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(rep_[i]);
    }
    s += "]/p^" + std::to_string(shift_);
    return s;
}

inline LocalElem Node::derivative_at_pi() const {
    if (kind_ != StepKind::Eisenstein) throw spec_error("derivative_at_pi: not an Eisenstein step");
    LocalElem pi = uniformizer();
    LocalElem gp = pi.pow(step_deg_ - 1).scale_int(step_deg_);
    for (long i = 1; i < step_deg_; ++i) {
        LocalElem ai(parent_, eis_low_[i], 0, prec_);
        gp = gp + embed(ai).scale_int(i) * pi.pow(i - 1);
    }
    return gp;
}

// different exponent of one extension step (spec operation)
inline long different_exponent(const NodePtr& node) {
    return node->different_step();
}

// valuation of x, normalized to the node (spec operation)
inline long valuation(const LocalElem& x) { return x.valuation(); }

inline LocalElem norm(const LocalElem& x, const NodePtr& down_to) { return x.norm_to(down_to); }
inline LocalElem trace(const LocalElem& x, const NodePtr& down_to) { return x.trace_to(down_to); }

// Tame quadratic Hilbert symbol (odd residue characteristic):
// (a,b) = quadratic character of the residue of (-1)^{v(a)v(b)} a^{v(b)} b^{-v(a)}.
inline int hilbert2(const LocalElem& a, const LocalElem& b) {
    const NodePtr& node = a.node();
    if (node->p() == 2) throw spec_error("hilbert2: p = 2 is out of scope");
    long va = a.valuation(), vb = b.valuation();
    LocalElem u = a.pow(vb) * b.pow(-va);
    if ((va * vb) % 2 != 0) u = -u;
    FqElem r = node->residue(u.normalized());
    int chi = node->residue_field()->quadratic_character(r);
    if (chi == 0) throw spec_error("hilbert2: degenerate residue");
    return chi;
}

} // namespace locfac
