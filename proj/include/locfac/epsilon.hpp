#pragma once

// Local constants: Gauss sums, the wild quadratic sums G(beta) and G_0,
// tame lambda-factors, abelian Tate epsilon factors, conductor exponents,
// and the GL_l epsilon factor by case analysis on the twisted level.
//
// Normalization.  The additive character of the base has level one.  For a
// character of conductor a paired with psi of level m, the epsilon sum runs
// over (O/P^a)^x against psi(u/gamma) with v(gamma) = a - m; the constant is
//
//     q^{-a/2} theta(gamma) sum theta^{-1}(u) psi(u/gamma),
//
// which makes the even-conductor closed form exactly psi(beta) theta(beta)^{-1}
// and keeps constants unimodular for unitary input.  EpsilonValue stores the
// s-rate as an exponent of p (one global sign convention; see sign_convention
// in the serialized form).

#include "locfac/characters.hpp"

#include <optional>

namespace locfac {

struct EpsilonValue {
    CycloNumber constant;
    long s_exp_p = 0; // epsilon(s) = constant * p^{-s * s_exp_p}
    long p = 0;
    long f_display = 1; // preferred base q = p^{f_display} for reporting

    EpsilonValue mul(const EpsilonValue& o) const {
        if (p != o.p) throw spec_error("epsilon values over different primes");
        return {constant * o.constant, s_exp_p + o.s_exp_p, p, f_display};
    }
    EpsilonValue pow(long k) const {
        EpsilonValue r{constant.pow(static_cast<unsigned long>(k)), s_exp_p * k, p, f_display};
        return r;
    }
    EpsilonValue scale(const CycloNumber& c) const { return {constant * c, s_exp_p, p, f_display}; }

    bool operator==(const EpsilonValue& o) const {
        return p == o.p && s_exp_p == o.s_exp_p && constant == o.constant;
    }

    Rat s_exponent_in_base_q() const { return make_rat(s_exp_p, f_display); }
};

inline bool unimodular(const CycloNumber& x) { return x * x.conj() == CycloNumber::one(x.modulus()); }

// ---------------------------------------------------------------------------
// Gauss sums
// ---------------------------------------------------------------------------

// G_0 = (1/sqrt p) sum (a/p) e^{2 pi i a/p}: 1 for p = 1 mod 4, i for p = 3 mod 4.
inline CycloNumber g0(long p) {
    if (p == 2 || !is_prime_long(p)) throw spec_error("g0 needs an odd prime");
    long N = 4 * p;
    CycloNumber s = CycloNumber::zero(N);
    for (long a = 1; a < p; ++a)
        s = s + CycloNumber::zeta(N, p, a).scale(Rat(legendre_long(a, p)));
    return s * CycloNumber::sqrt_prime(N, p).inverse();
}

namespace detail_eps {

// The normalized residual Gauss sum shared by the odd-conductor branches:
//   q^{-1/2} sum_{t in k} chi^{-1}(1 + pi^h t-hat) psi(beta pi^h t-hat),
// h = (a-1)/2, evaluated with Teichmueller representatives.  The two factors
// are jointly independent of the representative choice.
inline CycloNumber gauss_residual(const std::function<RootOfUnity(const LocalElem&)>& chi_inv_on_units,
                                  const LocalElem& beta, long h, const AdditiveCharacter& psi) {
    const NodePtr& node = psi.node();
    const auto& k = node->residue_field();
    CycloBuilder sum(4 * node->p());
    FqElem t = k->zero();
    do {
        RootOfUnity term;
        if (!k->is_zero(t)) {
            LocalElem x = node->pi_pow(h) * node->teichmueller(t);
            term = chi_inv_on_units(node->one() + x) * psi.eval(beta * x);
        }
        sum.add(term);
    } while (k->elem_increment(t));
    CycloNumber g = sum.build();
    long f = node->f_abs();
    return g.mul_p_half(node->p(), -f);
}

} // namespace detail_eps

// The Gauss sum of a character with odd conductor (level-matched psi).
inline CycloNumber gauss_sum(const QuasiCharacter& theta, const AdditiveCharacter& psi) {
    const NodePtr& node = theta.node();
    if (psi.node().get() != node.get()) throw spec_error("gauss_sum: psi on the wrong field");
    long a = theta.conductor();
    if (a % 2 == 0) throw spec_error("no Gauss sum for even conductor");
    long f = node->f_abs();
    if (a == 1) {
        const auto& k = node->residue_field();
        CycloBuilder sum(4 * node->p());
        FqElem t = k->zero();
        while (k->elem_increment(t)) {
            LocalElem u = node->teichmueller(t);
            sum.add(theta.eval(u).root.inverse() * psi.eval(u));
        }
        return sum.build().mul_p_half(node->p(), -f);
    }
    LocalElem beta = beta_of_theta(theta, psi);
    return detail_eps::gauss_residual(
        [&](const LocalElem& u) { return theta.eval(u).root.inverse(); }, beta, (a - 1) / 2, psi);
}

// The wild quadratic Gauss sum G(beta) of a minimal element (l = p odd).
inline CycloNumber g_beta(const LocalElem& beta, const NodePtr& E, const AdditiveCharacter& psi_F) {
    const NodePtr& F = E->parent();
    if (!F || psi_F.node().get() != F.get()) throw spec_error("g_beta: psi must live on the base of the step");
    long p = E->p();
    if (p == 2) throw spec_error("g_beta: p = 2 unsupported");
    if (E->step_degree() != p || E->kind() != StepKind::Eisenstein)
        throw spec_error("g_beta needs a wildly ramified step of degree p");
    long n = 1 - beta.valuation();
    if (n % 2 == 0) throw spec_error("g_beta: even level has no wild Gauss sum");
    long m = (n + 1) / 2;
    // k_E = k_F for a totally ramified step, so tr_{k_E/k_F} is the identity
    const auto& k = E->residue_field();
    // constant (1/2) beta pi^{2(m-1)} (-1)^{(p+1)/2} as a residue
    LocalElem unit = beta * E->pi_pow(2 * (m - 1));
    FqElem c = E->residue(unit.normalized());
    c = k->mul(c, k->inverse(k->from_int(2)));
    if (((p + 1) / 2) % 2 == 1) c = k->neg(c);

    CycloBuilder sum(4 * p);
    FqElem x = k->zero();
    do {
        FqElem arg = k->mul(c, k->mul(x, x));
        sum.add(psi_F.eval(F->residue_lift(arg)));
    } while (k->elem_increment(x));
    return sum.build().mul_p_half(p, -F->f_abs());
}

// Tame lambda factors in closed form (Lemma-style); psi must have level one
// on the base of the step.
inline CycloNumber lambda_tame(const NodePtr& E, const AdditiveCharacter& psi_on_F) {
    const NodePtr& F = E->parent();
    if (!F) throw spec_error("lambda: E has no base");
    if (psi_on_F.node().get() != F.get()) throw spec_error("lambda: psi must live on the base of the step");
    long l = E->step_degree();
    long e = E->e_abs() / F->e_abs();
    if (l % E->p() == 0 && e != 1)
        throw spec_error("lambda for wild extensions must be supplied as oracle input");
    if (e == 1) return CycloNumber(Rat((l - 1) % 2 == 0 ? 1 : -1), 4);
    if (psi_on_F.level() != 1) throw spec_error("lambda closed forms assume a level-one psi");
    std::int64_t q = F->q();
    if (l != 2) return CycloNumber(Rat(legendre_long(static_cast<long>(q % l), l)), 4);
    // e = l = 2: direct summation of q^{-1/2} sum sgn^{-1}(x) psi_E(x)
    auto psi_E = psi_on_F.lift_to(E);
    const auto& k = E->residue_field();
    CycloBuilder sum(4 * E->p());
    FqElem t = k->zero();
    while (k->elem_increment(t)) {
        int sgn = k->quadratic_character(t);
        LocalElem u = E->teichmueller(t);
        RootOfUnity s = psi_E.eval(u);
        sum.add(s, Rat(sgn));
    }
    CycloNumber lam = sum.build().mul_p_half(E->p(), -F->f_abs());
    if (!unimodular(lam)) throw spec_error("lambda sum is not unimodular");
    return lam;
}

// ---------------------------------------------------------------------------
// abelian epsilon factors
// ---------------------------------------------------------------------------

inline EpsilonValue tate_epsilon(const QuasiCharacter& theta, const AdditiveCharacter& psi) {
    const NodePtr& node = theta.node();
    if (psi.node().get() != node.get()) throw spec_error("tate_epsilon: psi on the wrong field");
    long a = theta.conductor();
    long m = psi.level();
    long f = node->f_abs();
    if (a == 0) {
        CharValue c = theta.pi_value().pow(-m);
        return {c.materialize(4 * node->p()), -f * m, node->p(), f};
    }
    LocalElem gamma_inv = node->pi_pow(m - a);
    QuasiCharacter th = theta.retarget(a);
    const auto& ug = th.group();
    CycloBuilder sum(4 * node->p());
    ug->enumerate([&](const LocalElem& u, const std::vector<std::int64_t>& e) {
        RootOfUnity r;
        for (std::size_t i = 0; i < e.size(); ++i) r = r * th.images()[i].pow(e[i]).inverse();
        sum.add(r * psi.eval(u * gamma_inv));
    });
    CycloNumber constant = sum.build().mul_p_half(node->p(), -f * a);
    CharValue tg = theta.pi_value().pow(a - m);
    constant = constant.mul_root(tg.root).mul_p_half(node->p(), tg.half);
    return {constant, f * (a - m), node->p(), f};
}

// ---------------------------------------------------------------------------
// GL_l parameters and their epsilon factors
// ---------------------------------------------------------------------------

struct GLParam {
    NodePtr base;  // F
    NodePtr ext;   // E, one prime step above F (possibly via intermediate nodes)
    std::optional<LocalElem> beta;
    QuasiCharacter theta; // on E^x
    QuasiCharacter chi;   // twist, on F^x
    bool level1 = false;

    long degree() const { return ext->deg_qp() / base->deg_qp(); }
    long e_rel() const { return ext->e_abs() / base->e_abs(); }
    long f_rel() const { return ext->f_abs() / base->f_abs(); }
    bool wild() const { return e_rel() % ext->p() == 0 && e_rel() > 1; }

    void validate() const {
        if (!ext->is_ancestor_or_self(base)) throw spec_error("GLParam: E does not contain F");
        if (!is_prime_long(degree())) throw spec_error("GLParam: degree is not prime");
        if (theta.node().get() != ext.get()) throw spec_error("GLParam: theta lives on the wrong field");
        if (chi.node().get() != base.get()) throw spec_error("GLParam: chi lives on the wrong field");
        if (level1) {
            if (e_rel() != 1) throw spec_error("level-1 family needs E/F unramified");
            if (theta.conductor() > 1) throw spec_error("level-1 family needs theta trivial on 1 + P");
            if (beta) throw spec_error("level-1 family carries no beta");
        } else {
            if (!beta) throw spec_error("GLParam: beta required");
            if (!is_minimal(*beta, ext, base)) throw spec_error("GLParam: beta is not minimal");
            if (theta.conductor() != 1 - beta->valuation())
                throw spec_error("GLParam: conductor does not match 1 - v(beta)");
        }
    }
};

// conductor exponent of the (untwisted) parameter
inline long conductor_pi(const GLParam& g) {
    long l = g.degree();
    if (g.level1) return l * std::max(g.theta.conductor(), 1L);
    return g.f_rel() * (g.theta.conductor() - 1) + l;
}

struct GlTrace {
    int branch = 0;          // 1, 2, 3 per the case analysis
    long n = 0, n_chi = 0;
    std::string gauss_kind;  // "", "theta", "wild", "deep"
    std::string lambda_source; // "", "tame", "oracle"
    long conductor_twisted = 0; // f(chi * pi)
};

inline EpsilonValue gl_epsilon(const GLParam& g, const AdditiveCharacter& psi_F,
                               const std::optional<CycloNumber>& wild_lambda_oracle = std::nullopt,
                               GlTrace* trace = nullptr) {
    g.validate();
    if (psi_F.node().get() != g.base.get()) throw spec_error("gl_epsilon: psi must live on F");
    const NodePtr& E = g.ext;
    const NodePtr& F = g.base;
    long l = g.degree(), e = g.e_rel(), fr = g.f_rel();
    long p = E->p();
    auto psi_E = psi_F.lift_to(E);

    long n = g.theta.conductor();
    long a_chi = g.chi.conductor();
    long n_chi = std::max(n, e * (a_chi - 1) + 1);
    LocalElem c_chi = c_of_chi(g.chi, psi_F);
    LocalElem beta_chi = g.beta ? (*g.beta + E->embed(c_chi)) : E->embed(c_chi);

    GlTrace tr;
    tr.n = n;
    tr.n_chi = n_chi;
    tr.conductor_twisted = g.level1 && n_chi <= 1 ? l * std::max(n, 1L) : fr * (n_chi - 1) + l;

    auto finish = [&](EpsilonValue v) {
        if (trace) *trace = tr;
        v.f_display = F->f_abs();
        return v;
    };

    if (n_chi <= 1) {
        // level-1 family, shallow twist: (-1)^{l-1} epsilon(chi_E theta, psi_E)
        if (!g.level1) throw spec_error("gl_epsilon: pi(beta, theta) cannot have twisted level 1");
        tr.branch = 2;
        QuasiCharacter chiE_theta = g.chi.compose_norm_from(E) * g.theta;
        tr.conductor_twisted = l * std::max(chiE_theta.conductor(), 1L);
        EpsilonValue t = tate_epsilon(chiE_theta, psi_E);
        if (l % 2 == 0) t.constant = -t.constant;
        return finish(t);
    }

    // The odd theta-dominant tame branch pairs the front factor and the
    // residual Gauss sum through the same beta; the canonical beta of the
    // pairing keeps the two jointly representative-independent.
    bool odd = n_chi % 2 != 0;
    if (odd && n_chi == n && !g.wild())
        beta_chi = beta_of_theta(g.theta, psi_E) + E->embed(c_chi);

    // common front factor psi_E(beta_chi) (chi_E theta)(beta_chi)^{-1} |beta_chi|^s
    if (beta_chi.valuation() != 1 - n_chi)
        throw spec_error("gl_epsilon: degenerate twist (v(beta + c_chi) != 1 - n(chi))");
    RootOfUnity front_psi = psi_E.eval(beta_chi);
    CharValue cv = g.chi.eval(beta_chi.norm_to(F)).mul(g.theta.eval(beta_chi)).inverse();
    CycloNumber constant = CycloNumber::from_root(front_psi, 4 * p)
                               .mul_root(cv.root)
                               .mul_p_half(p, cv.half);
    long s_exp = E->f_abs() * (n_chi - 1);

    if (!odd) {
        tr.branch = 1;
        return finish({constant, s_exp, p, F->f_abs()});
    }

    tr.branch = 3;
    CycloNumber G = CycloNumber::one(4 * p);
    long h = (n_chi - 1) / 2;
    auto lambda_E = [&]() -> CycloNumber {
        if (!g.wild()) {
            tr.lambda_source = "tame";
            return lambda_tame(E, psi_F);
        }
        tr.lambda_source = "oracle";
        if (!wild_lambda_oracle)
            throw spec_error("gl_epsilon: wild branch requires the lambda oracle input");
        return *wild_lambda_oracle;
    };
    if (n_chi == n && g.wild()) {
        tr.gauss_kind = "wild";
        G = g_beta(*g.beta, E, psi_F);
    } else {
        // Residual sum of the full twisted character against the same beta
        // as the front factor; the lambda factor comes from inductivity.
        tr.gauss_kind = n_chi == n ? "theta" : "deep";
        CycloNumber gres = detail_eps::gauss_residual(
            [&](const LocalElem& u) {
                return g.chi.eval(u.norm_to(F)).mul(g.theta.eval(u)).root.inverse();
            },
            beta_chi, h, psi_E);
        G = lambda_E() * gres;
        // twist-dominant ramified quadratic: the rectifier contributes the
        // tame symbol of c_chi
        if (n_chi > n && e == 2 && sgn_quadratic(E, c_chi) == -1) G = -G;
    }
    return finish({constant * G, s_exp, p, F->f_abs()});
}

} // namespace locfac
