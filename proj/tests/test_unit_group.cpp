#include <doctest.h>

#include "locfac/unit_group.hpp"

#include <algorithm>
#include <set>

using namespace locfac;

namespace {
NodePtr ram(const NodePtr& b, long l) {
    std::vector<LocalElem> low(l, b->zero());
    low[0] = -b->uniformizer();
    return b->extend_eisenstein(low);
}
} // namespace

TEST_CASE("orders multiply to the group order") {
    // Q5, n = 2: phi(25) = 20
    auto q5 = Node::make_base(5, 1, 10);
    UnitGroup u(q5, 2);
    CHECK(u.group_order() == 20);

    // unramified quadratic over Q3, n = 1: single generator of order 8
    auto e9 = Node::make_base(3, 1, 10)->extend_unramified(2);
    UnitGroup u9(e9, 1);
    CHECK(u9.generators().size() == 1);
    CHECK(u9.generators()[0].second == 8);

    // any node, n = 1: one generator of order q - 1
    auto q7 = Node::make_base(7, 1, 10);
    UnitGroup u7(q7, 1);
    CHECK(u7.generators().size() == 1);
    CHECK(u7.generators()[0].second == 6);

    // ramified quadratic over Q5, n = 3: (q-1) q^2 = 100
    UnitGroup ur(ram(q5, 2), 3);
    CHECK(ur.group_order() == 100);

    // unramified quadratic over Q5, n = 3: 24 * 625... (q-1)q^{n-1} = 24*625
    auto e25 = q5->extend_unramified(2);
    UnitGroup u25(e25, 3);
    CHECK(u25.group_order() == 24 * 625);
}

TEST_CASE("dl round trips") {
    auto q5 = Node::make_base(5, 1, 12);
    auto nodes = std::vector<NodePtr>{q5, q5->extend_unramified(2), ram(q5, 2)};
    for (const auto& nd : nodes) {
        for (long n : {1L, 2L, 3L}) {
            UnitGroup ug(nd, n);
            DetRng rng(991 + n);
            const auto& gens = ug.generators();
            for (int t = 0; t < 12; ++t) {
                // build a unit from random exponents, ask for them back
                std::vector<std::int64_t> e(gens.size());
                LocalElem x = nd->one();
                for (std::size_t i = 0; i < gens.size(); ++i) {
                    e[i] = rng.below(static_cast<long>(gens[i].second));
                    x = x * gens[i].first.pow(static_cast<long>(e[i]));
                }
                auto d = ug.dl(x);
                CHECK(d == e);
            }
        }
    }
}

TEST_CASE("enumerate visits everything once") {
    auto q3 = Node::make_base(3, 1, 12);
    UnitGroup ug(ram(q3, 2), 3); // order 2 * 9 = 18
    long count = 0;
    std::vector<std::vector<std::int64_t>> seen;
    ug.enumerate([&](const LocalElem& u, const std::vector<std::int64_t>& e) {
        ++count;
        seen.push_back(e);
        // element matches its exponent vector
        LocalElem x = ug.node()->one();
        for (std::size_t i = 0; i < e.size(); ++i) x = x * ug.generators()[i].first.pow(static_cast<long>(e[i]));
        CHECK((x - u).valuation_at_least(3));
    });
    CHECK(count == ug.group_order());
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("wild node unit group") {
    auto q3 = Node::make_base(3, 1, 14);
    auto w = ram(q3, 3); // wild cubic
    UnitGroup ug(w, 3);
    CHECK(ug.group_order() == 2 * 9);
    // dl consistency on products
    const auto& g = ug.generators();
    LocalElem x = g[0].first * g[1].first;
    auto d = ug.dl(x);
    CHECK(d[0] == 1);
    CHECK(d[1] == 1);
}

TEST_CASE("norm image index for quadratic steps") {
    // ramified quadratic, n = 1: norms of units land in the squares: index 2
    auto q5 = Node::make_base(5, 1, 10);
    auto r = ram(q5, 2);
    UnitGroup down(q5, 1);
    std::set<std::vector<std::int64_t>> image;
    UnitGroup up(r, 1);
    up.enumerate([&](const LocalElem& u, const std::vector<std::int64_t>&) {
        image.insert(down.dl(u.norm_to(q5)));
    });
    CHECK(image.size() * 2 == static_cast<std::size_t>(down.group_order()));

    // unramified quadratic, n = 1: norm on units is onto (index 1)
    auto e = q5->extend_unramified(2);
    image.clear();
    UnitGroup upe(e, 1);
    upe.enumerate([&](const LocalElem& u, const std::vector<std::int64_t>&) {
        image.insert(down.dl(u.norm_to(q5)));
    });
    CHECK(image.size() == static_cast<std::size_t>(down.group_order()));
}

TEST_CASE("guard limit") {
    // construction (generators, discrete logs) stays cheap; full enumeration
    // is the guarded operation
    auto q13 = Node::make_base(13, 2, 8);
    UnitGroup big(q13->extend_unramified(3), 5);
    CHECK(big.generators().size() >= 2);
    CHECK_THROWS_AS(big.enumerate([](const LocalElem&, const std::vector<std::int64_t>&) {}),
                    guard_error);
}
