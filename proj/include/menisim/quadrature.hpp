#pragma once

#include <array>
#include <vector>

namespace menisim {

/// Triangle quadrature in barycentric coordinates; weights sum to 1 and are
/// scaled by the element area at the point of use.
struct QuadratureRule {
    struct Point {
        std::array<double, 3> bary;
        double weight;
    };
    std::vector<Point> points;
    int exactness_degree = 0;
};

/// Smallest shipped rule exact for the requested polynomial degree
/// (degrees 1, 2 and 4 are the ones the assembly needs).
const QuadratureRule& triangle_rule(int degree);

/// Gauss rule on the unit interval [0,1]; npoints in {1,2,3}.
struct EdgeRule {
    struct Point {
        double t;
        double weight;
    };
    std::vector<Point> points;
    int exactness_degree = 0;
};
const EdgeRule& edge_rule(int npoints);

} // namespace menisim
