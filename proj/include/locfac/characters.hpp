#pragma once

// Characters of local fields: the level-one additive character psi and its
// lifts psi_E = psi o tr, quasi-characters of E^x given by unit-generator
// images and a uniformizer value, conductor extraction, the beta pairing
// theta(1+x) = psi_E(beta x), minimality, and the auxiliary quadratic
// characters sgn_{E/F}, delta_E, Delta_K.

#include "locfac/cyclo.hpp"
#include "locfac/unit_group.hpp"

#include <cmath>
#include <optional>

namespace locfac {

// shared unit-group registry (groups are immutable once built)
inline std::shared_ptr<const UnitGroup> unit_group(const NodePtr& node, long n,
                                                   std::int64_t guard = 0) {
    static std::map<std::pair<const Node*, long>, std::shared_ptr<const UnitGroup>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(node.get(), n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto ug = std::make_shared<const UnitGroup>(node, n, guard);
    cache.emplace(key, ug);
    return ug;
}

// A character value: root of unity times an integer or half-integer power
// of p.  Quasi-character values stay in this closed family.
struct CharValue {
    RootOfUnity root;
    long p = 0;
    long half = 0; // value = root * p^{half/2}

    static CharValue one(long p_) { return {RootOfUnity(), p_, 0}; }

    CharValue mul(const CharValue& o) const {
        if (p != o.p) throw spec_error("CharValue: mixed primes");
        return {root * o.root, p, half + o.half};
    }
    CharValue inverse() const { return {root.inverse(), p, -half}; }
    CharValue pow(long e) const {
        CharValue r = one(p);
        CharValue b = e < 0 ? inverse() : *this;
        long k = e < 0 ? -e : e;
        for (long i = 0; i < k; ++i) r = r.mul(b);
        return r;
    }
    bool is_one() const { return root.is_one() && half == 0; }
    bool unitary() const { return half == 0; }

    CycloNumber materialize(long modulus = 1) const {
        return CycloNumber::from_root(root, modulus).mul_p_half(p, half);
    }
};

// z as an exact root of unity of order dividing max_order, if it is one
inline std::optional<RootOfUnity> as_root_of_unity(const CycloNumber& z, long max_order) {
    for (long d = 1; d <= max_order; ++d)
        for (long k = 0; k < d; ++k) {
            RootOfUnity r(k, d);
            if (z == CycloNumber::from_root(r, z.modulus())) return r;
        }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// additive characters
// ---------------------------------------------------------------------------

class AdditiveCharacter {
public:
    // The fixed character of the tower base: trivial on P_F, not on O_F,
    // psi(x) = exp(2 pi i {Tr_{F/Qp}(x)/p}).
    static AdditiveCharacter standard(const NodePtr& base) {
        if (base->parent()) throw spec_error("standard psi lives on the tower base");
        return AdditiveCharacter(base, base);
    }

    AdditiveCharacter lift_to(const NodePtr& node) const {
        if (!node->is_ancestor_or_self(base_)) throw spec_error("psi lift: node is not above the base");
        return AdditiveCharacter(node, base_);
    }

    const NodePtr& node() const { return node_; }
    const NodePtr& base() const { return base_; }

    // trivial on P^level, nontrivial on P^{level-1}
    long level() const { return node_->e_abs() - node_->different_over(base_); }

    RootOfUnity eval(const LocalElem& x) const {
        if (x.node().get() != node_.get()) throw spec_error("psi: element from another node");
        LocalElem t = x.trace_to(base_);
        long j = t.shift() + 1;
        if (j <= 0) return RootOfUnity();
        if (j > t.valid()) throw precision_error("psi: trace valuation exceeds certified digits");
        std::int64_t pj = pow64_checked(base_->p(), static_cast<int>(j));
        __int128 acc = 0;
        const auto& tau = base_tau();
        for (long i = 0; i < base_->ring().n; ++i) acc += (__int128)t.rep()[i] * (tau[i] % pj);
        long num = static_cast<long>(acc % pj);
        return RootOfUnity(num, static_cast<long>(pj));
    }

private:
    AdditiveCharacter(NodePtr node, NodePtr base) : node_(std::move(node)), base_(std::move(base)) {}

    const std::vector<std::int64_t>& base_tau() const {
        // structure-constant traces of the base over Q_p, owned by the base node
        return base_->trace_tau();
    }

    NodePtr node_, base_;
};

// ---------------------------------------------------------------------------
// quasi-characters
// ---------------------------------------------------------------------------

class QuasiCharacter {
public:
    QuasiCharacter() = default;

    static QuasiCharacter trivial(const NodePtr& node) {
        QuasiCharacter q;
        q.node_ = node;
        q.cond_ = 0;
        q.ug_ = unit_group(node, 1);
        q.images_.assign(q.ug_->generators().size(), RootOfUnity());
        q.pi_value_ = CharValue::one(node->p());
        return q;
    }

    static QuasiCharacter unramified(const NodePtr& node, const CharValue& at_pi) {
        QuasiCharacter q = trivial(node);
        q.pi_value_ = at_pi;
        return q;
    }

    // declared by generator images at a stated level; the conductor is
    // recomputed exactly
    static QuasiCharacter from_data(const NodePtr& node, long level,
                                    std::vector<RootOfUnity> images, const CharValue& at_pi,
                                    std::int64_t guard = 0) {
        QuasiCharacter q;
        q.node_ = node;
        q.ug_ = unit_group(node, std::max(level, 1L), guard);
        if (images.size() != q.ug_->generators().size())
            throw spec_error("character images do not match the generator list");
        for (std::size_t i = 0; i < images.size(); ++i) {
            std::int64_t ord = q.ug_->generators()[i].second;
            if (ord % images[i].den() != 0)
                throw spec_error("character image order does not divide the generator order");
        }
        q.images_ = std::move(images);
        q.pi_value_ = at_pi;
        q.recompute_conductor();
        q.shrink_to_conductor();
        return q;
    }

    const NodePtr& node() const { return node_; }
    long conductor() const { return cond_; }
    const std::shared_ptr<const UnitGroup>& group() const { return ug_; }
    const std::vector<RootOfUnity>& images() const { return images_; }
    const CharValue& pi_value() const { return pi_value_; }
    bool unitary() const { return pi_value_.unitary(); }

    CharValue eval(const LocalElem& x) const {
        long v = x.valuation();
        LocalElem u = v == 0 ? x : x * node_->pi_pow(-v);
        RootOfUnity r = eval_unit_root(u);
        CharValue out = pi_value_.pow(v);
        out.root = out.root * r;
        return out;
    }

    RootOfUnity eval_unit_root(const LocalElem& u) const {
        auto e = ug_->dl(u);
        RootOfUnity r;
        for (std::size_t i = 0; i < images_.size(); ++i) r = r * images_[i].pow(e[i]);
        return r;
    }

    QuasiCharacter operator*(const QuasiCharacter& o) const {
        if (node_.get() != o.node_.get()) throw spec_error("character product: different nodes");
        long lvl = std::max({cond_, o.cond_, 1L});
        QuasiCharacter a = retarget(lvl), b = o.retarget(lvl);
        for (std::size_t i = 0; i < a.images_.size(); ++i) a.images_[i] = a.images_[i] * b.images_[i];
        a.pi_value_ = a.pi_value_.mul(b.pi_value_);
        a.recompute_conductor();
        a.shrink_to_conductor();
        return a;
    }

    QuasiCharacter inverse() const {
        QuasiCharacter q = *this;
        for (auto& im : q.images_) im = im.inverse();
        q.pi_value_ = q.pi_value_.inverse();
        return q;
    }

    QuasiCharacter pow(long e) const {
        QuasiCharacter q = *this;
        for (auto& im : q.images_) im = im.pow(e);
        q.pi_value_ = q.pi_value_.pow(e);
        q.recompute_conductor();
        q.shrink_to_conductor();
        return q;
    }

    // rebuild the image table against the unit group at `level`
    QuasiCharacter retarget(long level) const {
        long lvl = std::max(level, 1L);
        if (ug_->level() == lvl) return *this;
        if (lvl < std::max(cond_, 1L)) throw spec_error("retarget below the conductor");
        QuasiCharacter q;
        q.node_ = node_;
        q.cond_ = cond_;
        q.ug_ = unit_group(node_, lvl);
        q.pi_value_ = pi_value_;
        q.images_.reserve(q.ug_->generators().size());
        for (const auto& [g, ord] : q.ug_->generators()) q.images_.push_back(eval_unit_root(g));
        return q;
    }

    // theta o N_{M/E}: M must lie above this node's field E in the same tower
    QuasiCharacter compose_norm_from(const NodePtr& M, long level_hint = 0,
                                     std::int64_t guard = 0) const {
        if (!M->is_ancestor_or_self(node_)) throw spec_error("compose_norm: M is not above E");
        long e_rel = M->e_abs() / node_->e_abs();
        long d_rel = M->different_over(node_);
        bool wild_rel = (M->deg_qp() / node_->deg_qp()) % M->p() == 0;
        long lvl = level_hint > 0 ? level_hint
                                  : e_rel * std::max(cond_ - 1, 0L) + (wild_rel ? d_rel : 0) + 1;
        auto mug = unit_group(M, std::max(lvl, 1L), guard);
        std::vector<RootOfUnity> ims;
        for (const auto& [g, ord] : mug->generators()) ims.push_back(eval(g.norm_to(node_)).root);
        CharValue at_pi = eval(M->uniformizer().norm_to(node_));
        QuasiCharacter q;
        q.node_ = M;
        q.ug_ = mug;
        q.images_ = std::move(ims);
        q.pi_value_ = at_pi;
        q.recompute_conductor();
        q.shrink_to_conductor();
        return q;
    }

    // restriction to an ancestor field A^x -> values of theta on A embedded in E
    QuasiCharacter restrict_to(const NodePtr& A) const {
        if (!node_->is_ancestor_or_self(A)) throw spec_error("restrict: not an ancestor");
        long e_rel = node_->e_abs() / A->e_abs();
        long lvl = std::max(1L, (cond_ + e_rel - 1) / e_rel + 1);
        auto aug = unit_group(A, lvl);
        std::vector<RootOfUnity> ims;
        for (const auto& [g, ord] : aug->generators()) ims.push_back(eval(node_->embed(g)).root);
        CharValue at_pi = eval(node_->embed(A->uniformizer()));
        QuasiCharacter q;
        q.node_ = A;
        q.ug_ = aug;
        q.images_ = std::move(ims);
        q.pi_value_ = at_pi;
        q.recompute_conductor();
        q.shrink_to_conductor();
        return q;
    }

    bool operator==(const QuasiCharacter& o) const {
        if (node_.get() != o.node_.get()) return false;
        long lvl = std::max({cond_, o.cond_, 1L});
        QuasiCharacter a = retarget(lvl), b = o.retarget(lvl);
        if (!(a.pi_value_.root == b.pi_value_.root) || a.pi_value_.half != b.pi_value_.half) return false;
        for (std::size_t i = 0; i < a.images_.size(); ++i)
            if (!(a.images_[i] == b.images_[i])) return false;
        return true;
    }

private:
    NodePtr node_;
    long cond_ = 0;
    std::shared_ptr<const UnitGroup> ug_;
    std::vector<RootOfUnity> images_;
    CharValue pi_value_;

    void recompute_conductor() {
        // exact: smallest a with 1 + P^a in the kernel
        long n = ug_->level();
        long fdim = node_->residue_field()->degree();
        long top = 0;
        for (long i = 1; i < n; ++i)
            for (long j = 0; j < fdim; ++j) {
                FqElem t = node_->residue_field()->zero();
                t[j] = 1;
                LocalElem c = node_->one() + node_->pi_pow(i) * node_->residue_lift(t);
                if (!eval_unit_root(c).is_one()) top = std::max(top, i);
            }
        if (top >= 1) {
            cond_ = top + 1;
            return;
        }
        // trivial on all one-units: ramified iff nontrivial on Teichmueller part
        cond_ = eval_unit_root(ug_->generators()[0].first).is_one() ? 0 : 1;
    }

    void shrink_to_conductor() {
        long lvl = std::max(cond_, 1L);
        if (ug_->level() != lvl) *this = retarget(lvl);
    }
};

// ---------------------------------------------------------------------------
// pairing theta(1+x) = psi_E(beta x) and friends
// ---------------------------------------------------------------------------

inline bool is_generic(const QuasiCharacter& theta, long l) {
    return mod_long(theta.conductor(), l) != 1;
}

// beta_theta: canonical Teichmueller-digit solution of the pairing, with
// v(beta) = level(psi_E) - a(theta); requires a >= 2.
inline LocalElem beta_of_theta(const QuasiCharacter& theta, const AdditiveCharacter& psi) {
    const NodePtr& node = theta.node();
    if (psi.node().get() != node.get()) throw spec_error("beta_of_theta: psi on the wrong field");
    long a = theta.conductor();
    if (a < 2) throw spec_error("beta_of_theta needs conductor >= 2");
    long m = psi.level();
    const auto& k = node->residue_field();
    long h = (a + 1) / 2; // floor((a+1)/2)

    LocalElem beta = node->zero();
    for (long j = a - 1; j >= h; --j) {
        // residual character at level j must be psi(d pi^{m-1-j} * x)
        // probe along an F_p-basis of the residue field
        std::vector<RootOfUnity> probe(k->degree());
        for (long r = 0; r < k->degree(); ++r) {
            FqElem t = k->zero();
            t[r] = 1;
            LocalElem x = node->pi_pow(j) * node->teichmueller(t);
            RootOfUnity lhs = theta.eval(node->one() + x).root;
            RootOfUnity cur = beta.zero_at_precision() ? RootOfUnity() : psi.eval(beta * x);
            probe[r] = lhs * cur.inverse();
        }
        // brute-force the digit d over the residue field
        bool found = false;
        FqElem d = k->zero();
        do {
            bool ok = true;
            for (long r = 0; r < k->degree() && ok; ++r) {
                FqElem t = k->zero();
                t[r] = 1;
                LocalElem x = node->pi_pow(j) * node->teichmueller(t);
                LocalElem cand = node->pi_pow(m - 1 - j) * node->teichmueller(d);
                ok = psi.eval(cand * x) == probe[r];
            }
            if (ok) { found = true; break; }
        } while (k->elem_increment(d));
        if (!found) throw precision_error("beta pairing has no digit solution at this precision");
        if (!k->is_zero(d)) beta = beta + node->pi_pow(m - 1 - j) * node->teichmueller(d);
    }

    // exhaustive consistency over the quoted range x in P^h mod P^a
    {
        long levels = a - h;
        std::vector<long> digits(levels * k->degree(), 0);
        auto check_x = [&](const LocalElem& x) {
            RootOfUnity lhs = theta.eval(node->one() + x).root;
            RootOfUnity rhs = beta.zero_at_precision() ? RootOfUnity() : psi.eval(beta * x);
            if (!(lhs == rhs)) throw spec_error("beta pairing failed the exhaustive range check");
        };
        // iterate all digit vectors
        std::function<void(long, LocalElem)> rec = [&](long lev, LocalElem acc) {
            if (lev == levels) {
                check_x(acc);
                return;
            }
            FqElem d = k->zero();
            do {
                LocalElem nxt = acc;
                if (!k->is_zero(d)) nxt = nxt + node->pi_pow(h + lev) * node->teichmueller(d);
                rec(lev + 1, nxt);
            } while (k->elem_increment(d));
        };
        if (static_cast<double>(std::pow(static_cast<double>(k->q()), levels)) <= 70000.0)
            rec(0, node->zero());
    }
    return beta;
}

// c_chi of the twist: zero when a(chi) <= 1
inline LocalElem c_of_chi(const QuasiCharacter& chi, const AdditiveCharacter& psi) {
    if (chi.conductor() <= 1) return chi.node()->zero();
    return beta_of_theta(chi, psi);
}

// minimality of beta for the step E/F (F an ancestor of E)
inline bool is_minimal(const LocalElem& beta, const NodePtr& E, const NodePtr& F) {
    long e = E->e_abs() / F->e_abs();
    long v = beta.valuation();
    if (std::gcd(v < 0 ? -v : v, e) != 1) return false;
    LocalElem x = beta.pow(e) * E->embed(F->uniformizer()).pow(-v);
    FqElem r = E->residue(x.normalized());
    long dr = E->residue_field()->degree_over_prime(r);
    return std::lcm(dr, F->f_abs()) == E->f_abs();
}

// discriminant of the defining polynomial of an Eisenstein step, as an
// element of the parent: disc(g) = (-1)^{d(d-1)/2} N_{E/F}(g'(pi))
inline LocalElem step_discriminant(const NodePtr& E) {
    const NodePtr& F = E->parent();
    if (!F || E->kind() != StepKind::Eisenstein) throw spec_error("discriminant: not an Eisenstein step");
    long d = E->step_degree();
    LocalElem disc = E->derivative_at_pi().norm_to(F);
    if ((d * (d - 1) / 2) % 2 != 0) disc = -disc;
    return disc;
}

// sgn_{E/F} for a ramified quadratic step, on elements of F
inline int sgn_quadratic(const NodePtr& E, const LocalElem& x_in_F) {
    const NodePtr& F = E->parent();
    if (!F || E->step_degree() != 2)
        throw spec_error("sgn_{E/F} needs a quadratic step");
    if (E->kind() == StepKind::Unramified) {
        // kernel = norms: units and even pi-powers
        return mod_long(x_in_F.valuation(), 2) == 0 ? 1 : -1;
    }
    return hilbert2(x_in_F, step_discriminant(E));
}

// ---------------------------------------------------------------------------
// the auxiliary characters delta_E and Delta_K
// ---------------------------------------------------------------------------

// e(E/F) != 2: delta_E(x) = lambda^{v_E(x)}, an unramified character.
inline QuasiCharacter delta_unramified_shape(const NodePtr& E, const RootOfUnity& lambda) {
    return QuasiCharacter::unramified(E, CharValue{lambda, E->p(), 0});
}

// e(E/F) = 2: the character trivial on 1 + P_E, equal to sgn_{E/F} on F^x,
// with a prescribed value at beta_theta.  The forward and inverse directions
// of the correspondence want inverse values there (equal whenever
// lambda^2 = 1), so the orientation is a parameter.
inline QuasiCharacter delta_ramified_quadratic(const NodePtr& E, const RootOfUnity& lambda,
                                               const LocalElem& beta_theta, bool inverse_at_beta) {
    const NodePtr& F = E->parent();
    if (!F || E->step_degree() != 2 || E->kind() != StepKind::Eisenstein)
        throw spec_error("delta_E (e = 2) needs a ramified quadratic step");
    auto ug = unit_group(E, 1);
    // unit part: sgn on the Teichmueller component (k_E = k_F)
    std::vector<RootOfUnity> ims;
    for (const auto& [g, ord] : ug->generators()) {
        int chi = E->residue_field()->quadratic_character(E->residue(g.normalized()));
        ims.push_back(chi == 1 ? RootOfUnity() : RootOfUnity(1, 2));
    }
    // pin delta(pi) from the required value at beta_theta
    RootOfUnity target = inverse_at_beta ? lambda.inverse() : lambda;
    long v = beta_theta.valuation();
    if (mod_long(v, 2) == 0) throw spec_error("beta_theta has even valuation; not a quotient generator");
    LocalElem u = beta_theta * E->pi_pow(-v);
    int chi_u = E->residue_field()->quadratic_character(E->residue(u.normalized()));
    RootOfUnity val_u = chi_u == 1 ? RootOfUnity() : RootOfUnity(1, 2);
    // delta(pi)^v = target / delta(u); v is odd, so exponent-inversion solves it
    RootOfUnity rhs = target * val_u.inverse();
    RootOfUnity at_pi = rhs.den() == 1 ? RootOfUnity() : rhs.pow(invmod64(mod_long(v, rhs.den()), rhs.den()));
    if (!(at_pi.pow(v) == rhs)) throw spec_error("no such character: delta(pi) unsolvable");

    QuasiCharacter delta = QuasiCharacter::from_data(E, 1, ims, CharValue{at_pi, E->p(), 0});
    // consistency: restriction to F^x must be sgn_{E/F}
    LocalElem piF = E->embed(F->uniformizer());
    CharValue got = delta.eval(piF);
    int want = sgn_quadratic(E, F->uniformizer());
    RootOfUnity want_r = want == 1 ? RootOfUnity() : RootOfUnity(1, 2);
    if (!(got.root == want_r) || got.half != 0)
        throw spec_error("no such character: delta does not restrict to sgn on F^x");
    return delta;
}

// Delta_K = det Ind_{W_K}^{W_F} 1 for a tame prime step K/F.
inline QuasiCharacter Delta_K(const NodePtr& K) {
    const NodePtr& F = K->parent();
    if (!F) throw spec_error("Delta_K: K has no base");
    long d = K->step_degree();
    if (d % K->p() == 0) throw spec_error("Delta_K: wild steps are unsupported");
    if (K->kind() == StepKind::Unramified) {
        // determinant of the permutation action of Frobenius: a d-cycle
        RootOfUnity at_pi = (d - 1) % 2 == 0 ? RootOfUnity() : RootOfUnity(1, 2);
        return QuasiCharacter::unramified(F, CharValue{at_pi, F->p(), 0});
    }
    // tame ramified: the quadratic character of the discriminant
    LocalElem disc = step_discriminant(K);
    auto ug = unit_group(F, 1);
    std::vector<RootOfUnity> ims;
    for (const auto& [g, ord] : ug->generators()) {
        int chi = hilbert2(g, disc);
        ims.push_back(chi == 1 ? RootOfUnity() : RootOfUnity(1, 2));
    }
    int chip = hilbert2(F->uniformizer(), disc);
    CharValue at_pi{chip == 1 ? RootOfUnity() : RootOfUnity(1, 2), F->p(), 0};
    return QuasiCharacter::from_data(F, 1, ims, at_pi);
}

} // namespace locfac
