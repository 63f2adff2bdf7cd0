#pragma once

// Parameter-level Langlands machinery: the tame correspondence between
// monomial parameters Ind_{W_E}^{W_F}(theta) and GL_l parameters pi_F(beta,
// eta), tame base change along an auxiliary extension K/F with the
// determinant character Delta_K, Mackey restriction, and the reduction of
// the pair epsilon factor of GL_l x GL_l' to a single GL_l computation over
// the field cut out by the second representation.
//
// Orientation of the delta twist.  The two natural conventions differ by
// whether delta_E takes the value lambda_E or its inverse at beta_theta;
// the epsilon-preservation test fixes them so that the forward map reads
//     Ind(theta)  |-->  pi_F(delta_E^{-1} theta ... )
// equivalently: the parameter of pi_F(theta) is Ind(delta_E theta) with the
// lambda-valued delta, while phi_forward twists by the inverse.  The two agree
// whenever lambda^2 = 1 and differ exactly at ramified quadratic steps with
// q = 3 mod 4.

#include "locfac/epsilon.hpp"

namespace locfac {

// delta_E with a chosen orientation: value lambda at beta_theta when
// `lambda_orientation` is set, the inverse otherwise.
inline QuasiCharacter delta_of_step(const NodePtr& E, const AdditiveCharacter& psi_F,
                                    const std::optional<LocalElem>& beta_theta,
                                    bool lambda_orientation) {
    long e = E->e_abs() / E->parent()->e_abs();
    CycloNumber lam = lambda_tame(E, psi_F);
    RootOfUnity lam_root = as_root_of_unity(lam, 4).value();
    if (e != 2) return delta_unramified_shape(E, lam_root);
    if (!beta_theta) throw spec_error("delta_E with e = 2 needs beta_theta");
    return delta_ramified_quadratic(E, lam_root, *beta_theta, !lambda_orientation);
}

// ---------------------------------------------------------------------------
// monomial parameters and the correspondence
// ---------------------------------------------------------------------------

struct MonomialParam {
    NodePtr base; // F
    NodePtr ext;  // E
    QuasiCharacter xi;  // character of E^x
    QuasiCharacter chi; // twist on F^x
};

// forward map: Ind(theta) with twist chi to the GL parameter; theta must be
// generic and regular (minimal pairing element)
inline GLParam phi_forward(const MonomialParam& m, const AdditiveCharacter& psi_F) {
    const NodePtr& E = m.ext;
    const NodePtr& F = m.base;
    long l = E->deg_qp() / F->deg_qp();
    if (E->e_abs() / F->e_abs() % E->p() == 0 && E->e_abs() != F->e_abs())
        throw spec_error("phi_forward: E/F must be tame");
    if (!is_generic(m.xi, l)) throw spec_error("phi_forward: theta is not generic");
    auto psi_E = psi_F.lift_to(E);
    LocalElem beta_theta = beta_of_theta(m.xi, psi_E);
    if (!is_minimal(beta_theta, E, F)) throw spec_error("phi_forward: theta is not regular");
    QuasiCharacter delta = delta_of_step(E, psi_F, beta_theta, /*lambda_orientation=*/false);
    QuasiCharacter eta = delta * m.xi;
    LocalElem beta = beta_of_theta(eta, psi_E);
    GLParam g{F, E, beta, eta, m.chi, false};
    g.validate();
    return g;
}

// inverse map: strip the delta twist from the GL parameter's character
inline MonomialParam phi_inverse(const GLParam& g, const AdditiveCharacter& psi_F) {
    g.validate();
    if (g.level1) throw spec_error("phi_inverse: level-1 family is outside the generic correspondence");
    auto psi_E = psi_F.lift_to(g.ext);
    QuasiCharacter delta = delta_of_step(g.ext, psi_F, g.beta, /*lambda_orientation=*/false);
    QuasiCharacter theta = delta.inverse() * g.theta;
    return MonomialParam{g.base, g.ext, theta, g.chi};
}

// det Ind_{W_E}^{W_F}(xi) = Delta_{E/F} * (xi restricted to F^x)
inline QuasiCharacter det_induced(const MonomialParam& m) {
    QuasiCharacter d = Delta_K(m.ext);
    QuasiCharacter r = m.xi.restrict_to(m.base);
    long l = m.ext->deg_qp() / m.base->deg_qp();
    return d * r * m.chi.pow(l);
}

// central character of the GL parameter: theta|_{F^x} * chi^l
inline QuasiCharacter central_char(const GLParam& g) {
    QuasiCharacter r = g.theta.restrict_to(g.base);
    return r * g.chi.pow(g.degree());
}

// ---------------------------------------------------------------------------
// composita E.K over a common base
// ---------------------------------------------------------------------------

// EK as a tower over K, re-using E's defining data so the embedding E -> EK
// is generator-to-generator.  Supported whenever the re-used step stays of
// the same kind over K (Eisenstein steps need K/F unramified or E
// unramified; both-ramified composita are outside this artifact's range).
struct Compositum {
    NodePtr F, E, K, EK;

    LocalElem embed_E(const LocalElem& x) const {
        if (x.node().get() != E.get()) throw spec_error("embed_E: element not on E");
        long nF = F->ring().n;
        long l = E->step_degree();
        LocalElem gen = EK->uniformizer(); // placeholder; replaced below for unramified steps
        if (E->kind() == StepKind::Unramified) {
            FlatRing::Vec g(EK->ring().n, 0);
            g[K->ring().n] = 1; // the adjoined generator of the top step
            gen = LocalElem(EK, g, 0, EK->precision());
        }
        LocalElem acc = EK->zero();
        for (long i = 0; i < l; ++i) {
            // slice i of x: an F-element
            FlatRing::Vec slice(nF, 0);
            for (long t = 0; t < nF; ++t) slice[t] = x.rep()[i * nF + t];
            LocalElem cF(F, slice, x.shift(), x.valid());
            acc = acc + EK->embed(K->embed(cF)) * gen.pow(i);
        }
        return acc;
    }

    // norm and trace from EK down to E through the E-linear structure
    LocalElem norm_to_E(const LocalElem& x) const { return fold_to_E(x, /*norm=*/true); }
    LocalElem trace_to_E(const LocalElem& x) const { return fold_to_E(x, /*norm=*/false); }

private:
    LocalElem fold_to_E(const LocalElem& x, bool norm) const {
        if (x.node().get() != EK.get()) throw spec_error("fold: element not on EK");
        long d = K->step_degree();   // = [K:F] = [EK:E]
        long l = EK->step_degree();  // = [E:F]
        long nF = F->ring().n, nK = K->ring().n;
        // columns: x * genK^j expressed over the E-basis {genK^j}
        std::vector<std::vector<LocalElem>> M(d, std::vector<LocalElem>(d, E->zero()));
        for (long j = 0; j < d; ++j) {
            FlatRing::Vec gj(EK->ring().n, 0);
            gj[j * nF] = 1; // genK^j: K-index j*nF, top power 0
            LocalElem prod = LocalElem(EK, gj, 0, EK->precision()) * x;
            for (long k = 0; k < d; ++k) {
                // E-element with power-i slice = block (i, k)
                FlatRing::Vec ecoord(E->ring().n, 0);
                for (long i = 0; i < l; ++i)
                    for (long t = 0; t < nF; ++t)
                        ecoord[i * nF + t] = prod.rep()[i * nK + k * nF + t];
                M[k][j] = LocalElem(E, ecoord, prod.shift(), prod.valid());
            }
        }
        if (!norm) {
            LocalElem tr = E->zero();
            for (long j = 0; j < d; ++j) tr = tr + M[j][j];
            return tr;
        }
        std::vector<long> perm(d);
        for (long i = 0; i < d; ++i) perm[i] = i;
        LocalElem det = E->zero();
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
            LocalElem term = E->one();
            for (long i = 0; i < d; ++i) term = term * M[i][perm[i]];
            det = parity(perm) > 0 ? det + term : det - term;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return det;
    }
};

inline Compositum make_compositum(const NodePtr& E, const NodePtr& K) {
    if (E->parent().get() != K->parent().get() || !E->parent())
        throw spec_error("compositum: E and K must be single steps over a common base");
    // canonical EK per (E, K): parameter equality across routes compares
    // characters on one shared node
    static std::map<std::pair<const Node*, const Node*>, Compositum> cache;
    static std::mutex mtx;
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find({E.get(), K.get()});
        if (it != cache.end()) return it->second;
    }
    NodePtr F = E->parent();
    long l = E->step_degree(), d = K->step_degree();
    if (std::gcd(l, d) != 1) throw spec_error("compositum: degrees must be coprime");
    Compositum c;
    c.F = F;
    c.E = E;
    c.K = K;
    if (E->kind() == StepKind::Eisenstein) {
        if (K->kind() != StepKind::Unramified)
            throw spec_error("unsupported configuration: both steps ramified");
        std::vector<LocalElem> low;
        for (long i = 0; i < l; ++i) {
            LocalElem ai(F, E->eisenstein_coefficient(i), 0, F->precision());
            low.push_back(K->embed(ai));
        }
        c.EK = K->extend_eisenstein(low);
    } else {
        // re-use E's residue polynomial over K (irreducible since (d, l) = 1)
        std::vector<FqElem> low;
        const auto& kF = F->residue_field();
        const auto& kK = K->residue_field();
        for (const auto& cf : E->residue_field()->step_poly_low()) {
            if (kK.get() == kF.get()) {
                low.push_back(cf);
            } else {
                low.push_back(kK->embed_sub(cf));
            }
        }
        c.EK = K->extend_unramified_poly(low);
    }
    std::lock_guard<std::mutex> lock(mtx);
    return cache.emplace(std::make_pair(E.get(), K.get()), c).first->second;
}

// theta o N_{EK/E} across the compositum
inline QuasiCharacter compose_norm_compositum(const QuasiCharacter& theta, const Compositum& c,
                                              long level_hint = 0,
                                              std::int64_t guard = 0) {
    if (theta.node().get() != c.E.get()) throw spec_error("compose: theta must live on E");
    long e_rel = c.EK->e_abs() / c.E->e_abs();
    long lvl = level_hint > 0 ? level_hint : e_rel * std::max(theta.conductor() - 1, 0L) + 1;
    auto ug = unit_group(c.EK, std::max(lvl, 1L), guard);
    std::vector<RootOfUnity> ims;
    for (const auto& [g, ord] : ug->generators()) ims.push_back(theta.eval(c.norm_to_E(g)).root);
    CharValue at_pi = theta.eval(c.norm_to_E(c.EK->uniformizer()));
    return QuasiCharacter::from_data(c.EK, std::max(lvl, 1L), ims, at_pi, guard);
}

// ---------------------------------------------------------------------------
// tame base change
// ---------------------------------------------------------------------------

struct BaseChangeResult {
    Compositum comp;
    GLParam lifted;
};

// l_K(chi pi_F(beta, theta)) = chi_K pi_K(beta, (Delta~^{e-1} theta) o N_{EK/E})
inline BaseChangeResult base_change(const GLParam& g, const NodePtr& K,
                                    const AdditiveCharacter& psi_F) {
    g.validate();
    if (K->parent().get() != g.base.get()) throw spec_error("base_change: K must be a step over F");
    long l = g.degree(), d = K->step_degree();
    if (std::gcd(d, l) != 1) throw spec_error("base_change: ([K:F], l) must be 1");
    if (d % K->p() == 0) throw spec_error("base_change: K/F must be tame");
    (void)psi_F;
    Compositum c = make_compositum(g.ext, K);
    long e = g.e_rel();
    QuasiCharacter tw = g.theta;
    if ((e - 1) % 2 != 0) {
        // Delta~ = Delta_K o N_{E/F} enters exactly when e(E/F) = 2
        QuasiCharacter delta_tilde = Delta_K(K).compose_norm_from(g.ext);
        tw = tw * delta_tilde;
    }
    QuasiCharacter lifted_theta = compose_norm_compositum(tw, c);
    QuasiCharacter chi_K = g.chi.compose_norm_from(K);
    std::optional<LocalElem> beta;
    if (g.beta) beta = c.embed_E(*g.beta);
    GLParam out{K, c.EK, beta, lifted_theta, chi_K, g.level1};
    out.validate();
    return {std::move(c), std::move(out)};
}

// Mackey restriction of the monomial parameter: (EK/K, xi o N_{EK/E}).
inline MonomialParam mackey_restrict(const MonomialParam& m, const NodePtr& K) {
    if (K->parent().get() != m.base.get()) throw spec_error("mackey: K must be a step over F");
    Compositum c = make_compositum(m.ext, K);
    // restriction of Ind(xi) through W_E W_K = W_F, W_E cap W_K = W_EK
    QuasiCharacter lifted = compose_norm_compositum(m.xi, c);
    QuasiCharacter chi_K = m.chi.compose_norm_from(K);
    return MonomialParam{K, c.EK, lifted, chi_K};
}

// ---------------------------------------------------------------------------
// the pair epsilon factor
// ---------------------------------------------------------------------------

struct MonomialDatum {
    NodePtr ext;         // E2 over the common base
    QuasiCharacter theta; // generic character of E2^x
    QuasiCharacter chi;   // twist on F^x
};

struct PairTrace {
    long w = 0;
    std::string lambda2;
    GlTrace inner;
};

// epsilon(pi1 x pi2, s, psi_F) = lambda_{E2}^w epsilon((chi2 delta2 theta2) l_{E2}(pi1), s, psi_{E2})
inline EpsilonValue pair_epsilon(const GLParam& pi1, const MonomialDatum& pi2,
                                 const AdditiveCharacter& psi_F,
                                 const std::optional<CycloNumber>& wild_lambda_oracle = std::nullopt,
                                 std::optional<long> w_override = std::nullopt,
                                 PairTrace* trace = nullptr) {
    const NodePtr& F = pi1.base;
    const NodePtr& E2 = pi2.ext;
    if (E2->parent().get() != F.get()) throw spec_error("pair: E2 must be a step over F");
    long l = pi1.degree();
    long lp = E2->step_degree();
    if (lp == l) throw spec_error("pair: degrees must differ");
    if (lp % F->p() == 0) throw spec_error("pair: l' must differ from p");
    if (!is_generic(pi2.theta, lp)) throw spec_error("pair: theta2 must be generic");

    long w = w_override.value_or(l);
    CycloNumber lam2 = lambda_tame(E2, psi_F);
    auto psi_E2 = psi_F.lift_to(E2);

    // lift pi1 to E2 and twist by (chi2 o N) delta2 theta2
    BaseChangeResult bc = base_change(pi1, E2, psi_F);
    std::optional<LocalElem> bt2;
    if (E2->e_abs() / F->e_abs() == 2) bt2 = beta_of_theta(pi2.theta, psi_E2);
    QuasiCharacter delta2 = delta_of_step(E2, psi_F, bt2, /*lambda_orientation=*/true);
    QuasiCharacter chi2_E2 = pi2.chi.compose_norm_from(E2);
    QuasiCharacter total_twist = chi2_E2 * delta2 * pi2.theta * bc.lifted.chi;

    GLParam inner = bc.lifted;
    inner.chi = total_twist;
    GlTrace gtr;
    EpsilonValue eps = gl_epsilon(inner, psi_E2, wild_lambda_oracle, &gtr);
    CycloNumber lamw = lam2.pow(static_cast<unsigned long>(mod_long(w, 4)));
    // lambda has order dividing 4; reduce the exponent accordingly
    eps.constant = eps.constant * lamw;
    eps.f_display = F->f_abs();
    if (trace) {
        trace->w = w;
        trace->lambda2 = lam2.to_string();
        trace->inner = gtr;
    }
    return eps;
}

} // namespace locfac
