#include "menisim/quadrature.hpp"

#include <cmath>

#include "menisim/common.hpp"

namespace menisim {

namespace {

QuadratureRule make_centroid() {
    QuadratureRule r;
    r.points = {{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0}};
    r.exactness_degree = 1;
    return r;
}

QuadratureRule make_midpoints() {
    QuadratureRule r;
    const double h = 0.5, w = 1.0 / 3;
    r.points = {{{h, h, 0.0}, w}, {{0.0, h, h}, w}, {{h, 0.0, h}, w}};
    r.exactness_degree = 2;
    return r;
}

// Dunavant degree-4 rule, 6 points.
QuadratureRule make_dunavant4() {
    QuadratureRule r;
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
        const double b = 1.0 - 2.0 * a;
        r.points.push_back({{a, a, b}, w});
        r.points.push_back({{a, b, a}, w});
        r.points.push_back({{b, a, a}, w});
    }
    r.exactness_degree = 4;
    return r;
}

// Dunavant degree-6 rule, 12 points.
QuadratureRule make_dunavant6() {
    QuadratureRule r;
    const double a1 = 0.063089014491502, w1 = 0.050844906370207;
    const double a2 = 0.249286745170910, w2 = 0.116786275726379;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
        const double b = 1.0 - 2.0 * a;
        r.points.push_back({{a, a, b}, w});
        r.points.push_back({{a, b, a}, w});
        r.points.push_back({{b, a, a}, w});
    }
    const double x = 0.310352451033785, y = 0.636502499121399;
    const double z = 1.0 - x - y, w3 = 0.082851075618374;
    r.points.push_back({{x, y, z}, w3});
    r.points.push_back({{y, z, x}, w3});
    r.points.push_back({{z, x, y}, w3});
    r.points.push_back({{x, z, y}, w3});
    r.points.push_back({{z, y, x}, w3});
    r.points.push_back({{y, x, z}, w3});
    r.exactness_degree = 6;
    return r;
}

} // namespace

const QuadratureRule& triangle_rule(int degree) {
    static const QuadratureRule deg1 = make_centroid();
    static const QuadratureRule deg2 = make_midpoints();
    static const QuadratureRule deg4 = make_dunavant4();
    static const QuadratureRule deg6 = make_dunavant6();
    if (degree <= 1) return deg1;
    if (degree <= 2) return deg2;
    if (degree <= 4) return deg4;
    require(degree <= 6, "no triangle rule of degree " + std::to_string(degree));
    return deg6;
}

const EdgeRule& edge_rule(int npoints) {
    static const EdgeRule g1{{{0.5, 1.0}}, 1};
    static const EdgeRule g2{{{0.5 - 0.5 / std::sqrt(3.0), 0.5}, {0.5 + 0.5 / std::sqrt(3.0), 0.5}},
                             3};
    static const EdgeRule g3{{{0.5 - 0.5 * std::sqrt(0.6), 5.0 / 18},
                              {0.5, 8.0 / 18},
                              {0.5 + 0.5 * std::sqrt(0.6), 5.0 / 18}},
                             5};
    if (npoints <= 1) return g1;
    if (npoints == 2) return g2;
    require(npoints == 3, "no edge rule with " + std::to_string(npoints) + " points");
    return g3;
}

} // namespace menisim
