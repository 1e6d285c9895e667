#include <cmath>

#include "menisim/biology.hpp"
#include "menisim/common.hpp"
#include "menisim/quadrature.hpp"
#include "menisim/verification.hpp"

namespace menisim::verification {

namespace {

/// e^{-t} (A + B cos(a pi x) cos(b pi y)): zero normal derivative on the unit
/// square, so the zero-flux boundary condition is met exactly.
struct Separable {
    double A = 0.0, B = 0.0;
    int a = 1, b = 1;

    double value(Vec2 p, double t) const {
        return std::exp(-t) * (A + B * std::cos(a * M_PI * p.x) * std::cos(b * M_PI * p.y));
    }
    double ddt(Vec2 p, double t) const { return -value(p, t); }
    double dx(Vec2 p, double t) const {
        return -std::exp(-t) * B * a * M_PI * std::sin(a * M_PI * p.x) *
               std::cos(b * M_PI * p.y);
    }
    double dy(Vec2 p, double t) const {
        return -std::exp(-t) * B * b * M_PI * std::cos(a * M_PI * p.x) *
               std::sin(b * M_PI * p.y);
    }
    double laplacian(Vec2 p, double t) const {
        const double w = (a * a + b * b) * M_PI * M_PI;
        return -w * (value(p, t) - std::exp(-t) * A);
    }
};

struct Manufactured {
    Separable c1{0.6, 0.3, 1, 1};
    Separable c2{0.5, 0.25, 2, 1};
    Separable h{0.8, 0.4, 1, 2};
    Separable k{0.4, 0.2, 2, 2};
    BiologyParams params;
    double alpha1 = 0.05, alpha2 = 0.05;

    double source_c1(Vec2 p, double t) const {
        const double c1v = c1.value(p, t), c2v = c2.value(p, t), kv = k.value(p, t);
        const Vec2 grad_c1{c1.dx(p, t), c1.dy(p, t)};
        const Vec2 v{params.b1 * h.dx(p, t) + params.b2 * k.dx(p, t),
                     params.b1 * h.dy(p, t) + params.b2 * k.dy(p, t)};
        const double div_v = params.b1 * h.laplacian(p, t) + params.b2 * k.laplacian(p, t);
        return c1.ddt(p, t) - params.a1 * c1.laplacian(p, t) + grad_c1.dot(v) + c1v * div_v +
               alpha1 * c1v - alpha2 * c2v -
               params.beta * c1v * (1.0 - c1v - c2v - kv);
    }
    double source_c2(Vec2 p, double t) const {
        return c2.ddt(p, t) - c2.laplacian(p, t) - alpha1 * c1.value(p, t) +
               alpha2 * c2.value(p, t);
    }
    double source_h(Vec2 p, double t) const {
        const double c2v = c2.value(p, t);
        return h.ddt(p, t) + params.gamma1 * h.value(p, t) * c2v - c2v / (1.0 + c2v);
    }
    double source_k(Vec2 p, double t) const {
        return k.ddt(p, t) + params.delta1 * k.value(p, t) * c1.value(p, t) - c2.value(p, t);
    }
};

double l2_error_dg(const Field& uh, const Separable& exact, double t) {
    const Mesh& mesh = uh.space->mesh();
    const QuadratureRule& rule = triangle_rule(4);
    double err2 = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        for (const auto& q : rule.points) {
            const Vec2 x = mesh.vertex(el[0]) * q.bary[0] + mesh.vertex(el[1]) * q.bary[1] +
                           mesh.vertex(el[2]) * q.bary[2];
            const double d = evaluate_scalar(uh, e, q.bary).value - exact.value(x, t);
            err2 += q.weight * mesh.area(e) * d * d;
        }
    }
    return std::sqrt(err2);
}

} // namespace

ConvergenceReport mms_cells(const MmsOptions& opts) {
    menisim::require(opts.levels >= 3, "mms_cells: at least 3 levels required");
    Manufactured mms;
    if (!opts.with_taxis) mms.params.b1 = mms.params.b2 = 0.0;

    ConvergenceReport report;
    for (int level = 0; level < opts.levels; ++level) {
        const int n = opts.base_n << level;
        const Mesh mesh = structured_generator(n, n);
        const double dt = opts.dt0 / std::pow(4.0, level);
        const int steps = static_cast<int>(std::ceil(opts.T / dt - 1e-12));

        SolverSettings settings;
        settings.newton_tolerance = 1e-11;
        CellSolver solver(mesh, mms.params, settings);
        CellSources src;
        src.active = true;
        src.c1 = [&mms](Vec2 p, double t) { return mms.source_c1(p, t); };
        src.c2 = [&mms](Vec2 p, double t) { return mms.source_c2(p, t); };
        src.h = [&mms](Vec2 p, double t) { return mms.source_h(p, t); };
        src.k = [&mms](Vec2 p, double t) { return mms.source_k(p, t); };
        solver.set_sources(src);

        CellState state = solver.zero_state();
        state.c1 = interpolate([&](Vec2 p) { return mms.c1.value(p, 0.0); }, solver.dg_space());
        state.c2 = interpolate([&](Vec2 p) { return mms.c2.value(p, 0.0); }, solver.dg_space());
        state.h = interpolate([&](Vec2 p) { return mms.h.value(p, 0.0); }, solver.p1_space());
        state.k = interpolate([&](Vec2 p) { return mms.k.value(p, 0.0); }, solver.p1_space());

        const RateField rates =
            RateField::constant(mesh.num_elements(), mms.alpha1, mms.alpha2);
        double t = 0.0;
        for (int s = 0; s < steps; ++s) {
            const double dts = std::min(dt, opts.T - t);
            state = solver.newton_step(state, rates, dts);
            t += dts;
        }

        report.h.push_back(mesh.max_diameter());
        report.errors["c1"].push_back(l2_error_dg(state.c1, mms.c1, t));
        report.errors["c2"].push_back(l2_error_dg(state.c2, mms.c2, t));
        // nodal fields, quadrature through their P1 interpolation
        {
            Field h_dg = interpolate(
                [&](Vec2 p) { return 0.0; }, solver.dg_space());
            for (int e = 0; e < mesh.num_elements(); ++e)
                for (int i = 0; i < 3; ++i)
                    h_dg.coeffs[solver.dg_space().element_dof(e, i)] =
                        state.h.coeffs[solver.p1_space().vertex_dof(mesh.element(e)[i])];
            report.errors["h"].push_back(l2_error_dg(h_dg, mms.h, t));
        }
    }
    report.finalize();
    report.pass = report.min_order("c1") >= opts.order_threshold &&
                  report.min_order("c2") >= opts.order_threshold;
    return report;
}

} // namespace menisim::verification
