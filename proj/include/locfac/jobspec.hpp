#pragma once

// Declarative job runner: a JSON specification declares a tower of fields,
// named characters and GL parameters, and a list of computations; the
// runner resolves names, executes tasks (optionally in parallel), and emits
// a deterministic report with exact values plus float approximations.

#include "locfac/selfcheck.hpp"

#include <json.hpp>

#include <atomic>
#include <thread>

namespace locfac {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

inline Json cyclo_to_json(const CycloNumber& x) {
    Json terms = Json::array();
    for (const auto& [e, c] : x.terms()) terms.push_back(Json::array({e, rat_str(c)}));
    auto z = x.embed();
    return Json{{"modulus", x.modulus()},
                {"terms", terms},
                {"approx", Json::array({z.real(), z.imag()})}};
}

inline Json epsilon_to_json(const EpsilonValue& e) {
    Rat sq = e.s_exponent_in_base_q();
    return Json{{"constant", cyclo_to_json(e.constant)},
                {"s_exponent", rat_str(sq)},
                {"base_q", pow64_checked(e.p, static_cast<int>(e.f_display))},
                {"sign_convention", "+"}};
}

inline Json char_value_to_json(const CharValue& v) {
    return Json{{"root", Json::array({v.root.den(), v.root.num()})},
                {"p_half_power", v.half}};
}

// ---------------------------------------------------------------------------
// the job specification
// ---------------------------------------------------------------------------

struct JobSpec {
    Json raw;
    NodePtr base;
    std::map<std::string, NodePtr> fields;
    std::map<std::string, QuasiCharacter> characters;
    std::map<std::string, GLParam> gl_params;
    std::vector<Json> tasks;
    std::int64_t guard = UnitGroup::kDefaultGuard;
};

namespace detail_job {

// minimal integer-coefficient polynomial parser: "x^3-5", "x^2+3*x+10", ...
inline std::map<long, Int> parse_poly(const std::string& s) {
    std::map<long, Int> coeffs;
    std::size_t i = 0;
    auto skip_ws = [&]() { while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i; };
    int sign = 1;
    skip_ws();
    while (i < s.size()) {
        skip_ws();
        if (s[i] == '+') { sign = 1; ++i; skip_ws(); continue; }
        if (s[i] == '-') { sign = -1; ++i; skip_ws(); continue; }
        // term: [coeff][*][x[^k]]
        std::string digits;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i++];
        skip_ws();
        if (i < s.size() && s[i] == '*') { ++i; skip_ws(); }
        long deg = 0;
        if (i < s.size() && s[i] == 'x') {
            ++i;
            deg = 1;
            if (i < s.size() && s[i] == '^') {
                ++i;
                std::string d2;
                while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) d2 += s[i++];
                if (d2.empty()) throw spec_error("polynomial: missing exponent");
                deg = std::stol(d2);
            }
        }
        if (digits.empty() && deg == 0) throw spec_error("polynomial: empty term in '" + s + "'");
        Int c = digits.empty() ? Int(1) : Int(digits);
        if (sign < 0) c = -c;
        coeffs[deg] += c;
        sign = 1;
        skip_ws();
    }
    return coeffs;
}

inline RootOfUnity root_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw spec_error("root literal must be [order, power]");
    return RootOfUnity(j[1].get<long>(), j[0].get<long>());
}

} // namespace detail_job

inline JobSpec parse_jobspec(const Json& j) {
    using namespace detail_job;
    JobSpec spec;
    spec.raw = j;
    if (!j.contains("base")) throw spec_error("job: missing base field");
    const Json& b = j["base"];
    long p = b.at("p").get<long>();
    long f = b.value("f", 1L);
    int prec = b.value("precision", 14);
    spec.base = Node::make_base(p, f, prec);
    spec.fields["F"] = spec.base;
    if (j.contains("guard")) spec.guard = j["guard"].get<std::int64_t>();

    if (j.contains("extensions")) {
        long auto_id = 0;
        NodePtr prev = spec.base;
        for (const Json& e : j["extensions"]) {
            std::string over = e.value("over", std::string());
            NodePtr basef = over.empty() ? prev : spec.fields.at(over);
            std::string kind = e.at("kind").get<std::string>();
            NodePtr node;
            if (kind == "unramified") {
                node = basef->extend_unramified(e.at("degree").get<long>());
            } else if (kind == "eisenstein") {
                auto coeffs = parse_poly(e.at("poly").get<std::string>());
                long deg = coeffs.rbegin()->first;
                if (coeffs[deg] != 1) throw spec_error("eisenstein polynomial must be monic");
                std::vector<LocalElem> low(deg, basef->zero());
                for (const auto& [d, c] : coeffs)
                    if (d < deg) low[d] = basef->from_int(c);
                node = basef->extend_eisenstein(low);
            } else {
                throw spec_error("unknown extension kind: " + kind);
            }
            std::string name = e.value("name", "E" + std::to_string(++auto_id));
            if (spec.fields.count(name)) throw spec_error("duplicate field name: " + name);
            spec.fields[name] = node;
            prev = node;
        }
    }

    auto field_of = [&](const std::string& name) -> NodePtr {
        auto it = spec.fields.find(name);
        if (it == spec.fields.end()) throw spec_error("unresolved-ref: field '" + name + "'");
        return it->second;
    };

    if (j.contains("characters")) {
        for (const Json& c : j["characters"]) {
            std::string name = c.at("name").get<std::string>();
            NodePtr node = field_of(c.at("field").get<std::string>());
            long a = c.value("conductor", 0L);
            std::vector<RootOfUnity> ims;
            if (c.contains("unit_images"))
                for (const Json& im : c["unit_images"]) ims.push_back(root_from_json(im));
            CharValue at_pi = CharValue::one(node->p());
            if (c.contains("uniformizer")) {
                const Json& u = c["uniformizer"];
                if (u.contains("root")) at_pi.root = root_from_json(u["root"]);
                at_pi.half = u.value("p_half_power", 0L);
            }
            auto ug = unit_group(node, std::max(a, 1L), spec.guard);
            if (ims.empty()) ims.assign(ug->generators().size(), RootOfUnity());
            if (spec.characters.count(name)) throw spec_error("duplicate character name: " + name);
            spec.characters.emplace(name,
                                    QuasiCharacter::from_data(node, std::max(a, 1L), ims, at_pi, spec.guard));
        }
    }

    auto char_of = [&](const std::string& name) -> const QuasiCharacter& {
        auto it = spec.characters.find(name);
        if (it == spec.characters.end()) throw spec_error("unresolved-ref: character '" + name + "'");
        return it->second;
    };

    if (j.contains("gl_params")) {
        for (const Json& g : j["gl_params"]) {
            std::string name = g.at("name").get<std::string>();
            GLParam param;
            param.base = field_of(g.value("base", std::string("F")));
            param.ext = field_of(g.at("ext").get<std::string>());
            param.theta = char_of(g.at("theta").get<std::string>());
            param.chi = g.contains("chi") ? char_of(g["chi"].get<std::string>())
                                          : QuasiCharacter::trivial(param.base);
            param.level1 = g.value("level1", false);
            if (!param.level1) {
                if (g.contains("beta_pi_power")) {
                    // beta = unit * pi^k given by a Teichmueller digit and power
                    long k = g["beta_pi_power"].get<long>();
                    long digit = g.value("beta_digit", 1L);
                    param.beta = param.ext->pi_pow(k).scale_int(digit);
                } else {
                    auto psi = AdditiveCharacter::standard(param.base).lift_to(param.ext);
                    param.beta = beta_of_theta(param.theta, psi);
                }
            }
            param.validate();
            if (spec.gl_params.count(name)) throw spec_error("duplicate parameter name: " + name);
            spec.gl_params.emplace(name, std::move(param));
        }
    }

    if (j.contains("tasks"))
        for (const Json& t : j["tasks"]) spec.tasks.push_back(t);
    return spec;
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

inline Json generators_json(const NodePtr& node, long n, std::int64_t guard) {
    auto ug = unit_group(node, n, guard);
    Json gens = Json::array();
    for (const auto& [g, ord] : ug->generators()) {
        Json coords = Json::array();
        for (auto c : g.rep()) coords.push_back(c);
        gens.push_back(Json{{"order", ord}, {"coords", coords}, {"shift", g.shift()}});
    }
    return Json{{"level", n}, {"group_order", ug->group_order()}, {"generators", gens}};
}

inline Json run_task(const JobSpec& spec, const Json& t) {
    std::string op = t.at("op").get<std::string>();
    Json out;
    out["op"] = op;
    out["inputs"] = t;

    auto field_of = [&](const std::string& key) -> NodePtr {
        std::string name = t.at(key).get<std::string>();
        auto it = spec.fields.find(name);
        if (it == spec.fields.end()) throw spec_error("unresolved-ref: field '" + name + "'");
        return it->second;
    };
    auto char_of = [&](const std::string& key) -> const QuasiCharacter& {
        std::string name = t.at(key).get<std::string>();
        auto it = spec.characters.find(name);
        if (it == spec.characters.end()) throw spec_error("unresolved-ref: character '" + name + "'");
        return it->second;
    };
    auto param_of = [&](const std::string& key) -> const GLParam& {
        std::string name = t.at(key).get<std::string>();
        auto it = spec.gl_params.find(name);
        if (it == spec.gl_params.end()) throw spec_error("unresolved-ref: parameter '" + name + "'");
        return it->second;
    };
    auto psi_F = AdditiveCharacter::standard(spec.base);
    std::optional<CycloNumber> oracle;
    if (t.contains("lambda_oracle")) {
        RootOfUnity r = detail_job::root_from_json(t["lambda_oracle"]);
        oracle = CycloNumber::from_root(r, 4 * spec.base->p());
    }

    if (op == "lambda_tame") {
        NodePtr E = field_of("ext");
        auto psi_on = AdditiveCharacter::standard(spec.base).lift_to(E->parent());
        out["result"] = cyclo_to_json(lambda_tame(E, psi_on));
    } else if (op == "gauss_sum") {
        const QuasiCharacter& th = char_of("theta");
        auto psi = psi_F.lift_to(th.node());
        out["result"] = cyclo_to_json(gauss_sum(th, psi));
    } else if (op == "g0") {
        out["result"] = cyclo_to_json(g0(t.value("p", spec.base->p())));
    } else if (op == "g_beta") {
        const GLParam& g = param_of("param");
        if (!g.beta) throw spec_error("g_beta: parameter has no beta");
        auto psi_on = psi_F.lift_to(g.ext->parent());
        out["result"] = cyclo_to_json(g_beta(*g.beta, g.ext, psi_on));
    } else if (op == "tate_epsilon") {
        const QuasiCharacter& th = char_of("theta");
        auto psi = psi_F.lift_to(th.node());
        out["result"] = epsilon_to_json(tate_epsilon(th, psi));
    } else if (op == "conductor") {
        out["result"] = char_of("theta").conductor();
    } else if (op == "conductor_pi") {
        out["result"] = conductor_pi(param_of("param"));
    } else if (op == "gl_epsilon") {
        const GLParam& g = param_of("param");
        auto psi = psi_F.lift_to(g.base);
        GlTrace tr;
        EpsilonValue eps = gl_epsilon(g, psi, oracle, &tr);
        out["result"] = epsilon_to_json(eps);
        out["trace"] = Json{{"branch", tr.branch},
                            {"n", tr.n},
                            {"n_chi", tr.n_chi},
                            {"gauss_kind", tr.gauss_kind},
                            {"lambda_source", tr.lambda_source},
                            {"conductor_twisted", tr.conductor_twisted}};
    } else if (op == "pair_epsilon") {
        const GLParam& pi1 = param_of("pi1");
        MonomialDatum d2{field_of("e2"), char_of("theta2"),
                         t.contains("chi2") ? char_of("chi2") : QuasiCharacter::trivial(spec.base)};
        std::optional<long> w;
        if (t.contains("w")) w = t["w"].get<long>();
        PairTrace tr;
        EpsilonValue eps = pair_epsilon(pi1, d2, psi_F, oracle, w, &tr);
        out["result"] = epsilon_to_json(eps);
        out["trace"] = Json{{"w", tr.w},
                            {"lambda_E2", tr.lambda2},
                            {"inner_branch", tr.inner.branch},
                            {"inner_gauss", tr.inner.gauss_kind},
                            {"tower", d2.ext->name()}};
    } else if (op == "print_generators") {
        out["result"] = generators_json(field_of("field"), t.at("n").get<long>(), spec.guard);
    } else if (op == "beta_of_theta") {
        const QuasiCharacter& th = char_of("theta");
        auto psi = psi_F.lift_to(th.node());
        LocalElem b = beta_of_theta(th, psi);
        Json coords = Json::array();
        for (auto c : b.rep()) coords.push_back(c);
        out["result"] = Json{{"coords", coords}, {"shift", b.shift()}, {"valuation", b.valuation()}};
    } else {
        throw spec_error("unknown op: " + op);
    }
    return out;
}

struct RunReport {
    Json json;
    bool ok = true;
};

inline RunReport run_jobspec(const JobSpec& spec, int workers = 1) {
    UnitGroup::default_guard() = spec.guard;
    RunReport rep;
    std::vector<Json> results(spec.tasks.size());
    std::vector<std::string> errors(spec.tasks.size());
    std::vector<int> codes(spec.tasks.size(), 0);
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= spec.tasks.size()) break;
            try {
                results[i] = run_task(spec, spec.tasks[i]);
            } catch (const precision_error& e) {
                errors[i] = e.what();
                codes[i] = 3;
            } catch (const guard_error& e) {
                errors[i] = e.what();
                codes[i] = 3;
            } catch (const std::exception& e) {
                errors[i] = e.what();
                codes[i] = 2;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    Json tasks = Json::array();
    int exit_code = 0;
    for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
        if (codes[i] != 0) {
            const char* kind = codes[i] == 3 ? "precision-or-guard" : "spec";
            tasks.push_back(Json{{"op", spec.tasks[i].value("op", "?")},
                                 {"inputs", spec.tasks[i]},
                                 {"error", errors[i]},
                                 {"error_kind", kind}});
            exit_code = std::max(exit_code, codes[i]);
            rep.ok = false;
        } else {
            tasks.push_back(results[i]);
        }
    }
    rep.json = Json{{"base", spec.raw.value("base", Json())},
                    {"sign_convention", "+"},
                    {"tasks", tasks},
                    {"exit_code", exit_code}};
    return rep;
}

} // namespace locfac
