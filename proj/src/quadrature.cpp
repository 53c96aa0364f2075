#include "sch/quadrature.hpp"

#include <stdexcept>

namespace sch {

namespace {

void add_orbit1(TriQuadRule& r, double w) {
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(w);
}

// Three permutations of (1-2a, a, a).
void add_orbit3(TriQuadRule& r, double a, double w) {
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({b, a, a});
    r.points.push_back({a, b, a});
    r.points.push_back({a, a, b});
    r.weights.insert(r.weights.end(), 3, w);
}

// Six permutations of (a, b, c) with a+b+c = 1.
void add_orbit6(TriQuadRule& r, double a, double b, double w) {
    const double c = 1.0 - a - b;
    r.points.push_back({a, b, c});
    r.points.push_back({a, c, b});
    r.points.push_back({b, a, c});
    r.points.push_back({b, c, a});
    r.points.push_back({c, a, b});
    r.points.push_back({c, b, a});
    r.weights.insert(r.weights.end(), 6, w);
}

TriQuadRule make_degree1() {
    TriQuadRule r;
    r.degree = 1;
    add_orbit1(r, 1.0);
    return r;
}

TriQuadRule make_degree2() {
    TriQuadRule r;
    r.degree = 2;
    add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
    return r;
}

// Dunavant degree-4, 6 points.
TriQuadRule make_degree4() {
    TriQuadRule r;
    r.degree = 4;
    add_orbit3(r, 0.445948490915965, 0.223381589678011);
    add_orbit3(r, 0.091576213509771, 0.109951743655322);
    return r;
}

// Degree-5, 7 points.
TriQuadRule make_degree5() {
    TriQuadRule r;
    r.degree = 5;
    add_orbit1(r, 0.225);
    add_orbit3(r, 0.470142064105115, 0.132394152788506);
    add_orbit3(r, 0.101286507323456, 0.125939180544827);
    return r;
}

// Dunavant degree-6, 12 points.
TriQuadRule make_degree6() {
    TriQuadRule r;
    r.degree = 6;
    add_orbit3(r, 0.249286745170910, 0.116786275726379);
    add_orbit3(r, 0.063089014491502, 0.050844906370207);
    add_orbit6(r, 0.310352451033785, 0.636502499121399, 0.082851075618374);
    return r;
}

// Conical product of 5-point Gauss-Legendre rules (25 points, positive
// weights): int f = int_0^1 int_0^1 f(xi (1-eta), eta) (1-eta) dxi deta, the
// eta direction absorbing the (1-eta) factor, so total degree 8 is exact.
TriQuadRule make_degree8() {
    static const double node[5] = {0.5 - 0.45308992296933199640,
                                   0.5 - 0.26923465505284154552,
                                   0.5,
                                   0.5 + 0.26923465505284154552,
                                   0.5 + 0.45308992296933199640};
    static const double wt[5] = {0.11846344252809454376, 0.23931433524968323402,
                                 0.28444444444444444444, 0.23931433524968323402,
                                 0.11846344252809454376};
    TriQuadRule r;
    r.degree = 8;
    for (int i = 0; i < 5; ++i) {
        const double eta = node[i];
        for (int j = 0; j < 5; ++j) {
            const double x = node[j] * (1.0 - eta);
            r.points.push_back({1.0 - x - eta, x, eta});
            r.weights.push_back(2.0 * wt[i] * wt[j] * (1.0 - eta));
        }
    }
    return r;
}

} // namespace

const TriQuadRule& rule_for_order(int order) {
    static const TriQuadRule d1 = make_degree1();
    static const TriQuadRule d2 = make_degree2();
    static const TriQuadRule d4 = make_degree4();
    static const TriQuadRule d5 = make_degree5();
    static const TriQuadRule d6 = make_degree6();
    static const TriQuadRule d8 = make_degree8();
    if (order <= 1) return d1;
    if (order == 2) return d2;
    if (order <= 4) return d4;
    if (order == 5) return d5;
    if (order == 6) return d6;
    if (order <= 8) return d8;
    throw std::invalid_argument("rule_for_order: no rule beyond degree 8");
}

} // namespace sch
