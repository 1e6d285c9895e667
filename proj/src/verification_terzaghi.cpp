#include <cmath>

#include "menisim/common.hpp"
#include "menisim/poro.hpp"
#include "menisim/verification.hpp"

namespace menisim::verification {

namespace {

/// Thin strip [0, W] x [0, L], ny rows: load + drainage on top, clamped
/// impermeable bottom, rollers on the sides. The solution is y-only, but the
/// cells are kept square: stretched triangles leave an O(dx^2) bias in the
/// RT0 flux approximation that does not vanish under y-refinement.
Mesh column_mesh(int nx, int ny, double width, double height) {
    std::vector<Vec2> verts((nx + 1) * (ny + 1));
    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            verts[vid(i, j)] = {width * i / nx, height * j / ny};
    std::vector<std::array<int, 3>> elems;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            elems.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            elems.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    std::vector<BoundaryEdgeSpec> bspec;
    for (int i = 0; i < nx; ++i) {
        bspec.push_back({vid(i, 0), vid(i + 1, 0), BoundaryTag::PorousWall});
        bspec.push_back({vid(i, ny), vid(i + 1, ny), BoundaryTag::Inflow});
    }
    for (int j = 0; j < ny; ++j) {
        bspec.push_back({vid(0, j), vid(0, j + 1), BoundaryTag::Free});
        bspec.push_back({vid(nx, j), vid(nx, j + 1), BoundaryTag::Free});
    }
    return build_mesh(std::move(verts), std::move(elems), {}, bspec);
}

PoroBCTable column_bcs(double p0) {
    PoroBCTable bcs;
    PoroBC top;
    top.disp = DisplacementBC::Free;
    top.darcy = DarcyBC::Pressure;
    top.pressure_datum = [](double) { return 0.0; };
    top.normal_pressure = [p0](double) { return p0; };
    bcs[BoundaryTag::Inflow] = top;

    PoroBC bottom;
    bottom.disp = DisplacementBC::Fixed;
    bottom.darcy = DarcyBC::Impermeable;
    bcs[BoundaryTag::PorousWall] = bottom;

    PoroBC side;
    side.disp = DisplacementBC::RollerX;
    side.darcy = DarcyBC::Impermeable;
    bcs[BoundaryTag::Free] = side;
    return bcs;
}

} // namespace

ConvergenceReport terzaghi(const TerzaghiOptions& opts) {
    menisim::require(opts.levels >= 3, "terzaghi: at least 3 levels required");

    MechParams params;  // Table values; mobility 10 mm^2/(MPa s)
    TerzaghiSetup setup;
    setup.L = 1.0;
    setup.p0 = 1.0;
    const LameParameters lame = lame_from_table(params);
    setup.lambda = lame.lambda;
    setup.mu = lame.mu;
    setup.alpha = params.alpha_biot;
    setup.inv_M = params.inv_M;
    setup.mobility = params.mobility_mm();
    const double cv = setup.consolidation_coefficient();
    const double p_i = setup.undrained_pressure();

    ConvergenceReport report;
    for (int level = 0; level < opts.levels; ++level) {
        const int ny = opts.base_ny << level;
        const int nx = std::max(opts.nx, 1);
        const double Tv_step = opts.Tv_step / (1 << level);
        const double dt = Tv_step * setup.L * setup.L / cv;
        const int steps = static_cast<int>(std::round(opts.Tv_end / Tv_step));

        const Mesh mesh = column_mesh(nx, ny, setup.L * nx / ny, setup.L);
        PoroSolver solver(mesh, params, column_bcs(setup.p0), dt);
        PoroState state = solver.zero_state();

        double err2 = 0.0, norm2 = 0.0;
        double U_at_1 = -1.0;
        for (int s = 1; s <= steps; ++s) {
            state = solver.step(state);
            const double Tv = setup.time_factor(state.t);
            if (Tv + 1e-12 >= opts.Tv_compare_from) {
                for (int e = 0; e < mesh.num_elements(); ++e) {
                    const double z = setup.L - mesh.centroid(e).y;  // from the drained top
                    const double exact =
                        terzaghi_pressure(setup, z, state.t, opts.series_terms);
                    const double diff = state.p.coeffs[e] - exact;
                    err2 += dt * mesh.area(e) * diff * diff;
                    norm2 += dt * mesh.area(e) * exact * exact;
                }
            }
            if (std::abs(Tv - 1.0) < 0.5 * Tv_step + 1e-12 && U_at_1 < 0.0) {
                double pint = 0.0;
                for (int e = 0; e < mesh.num_elements(); ++e)
                    pint += state.p.coeffs[e] * mesh.area(e);
                U_at_1 = 1.0 - pint / (p_i * mesh.total_area());
            }
        }
        report.h.push_back(setup.L / ny);
        report.errors["p"].push_back(std::sqrt(err2 / norm2));
        if (level == opts.levels - 1) {
            report.scalars["U_Tv1"] = U_at_1;
            report.scalars["U_series"] = terzaghi_consolidation_degree(1.0, opts.series_terms);
            report.scalars["undrained_p"] = p_i;
        }
    }
    report.finalize();

    bool monotone = true;
    const auto& errs = report.errors["p"];
    for (std::size_t l = 0; l + 1 < errs.size(); ++l) monotone = monotone && errs[l + 1] < errs[l];
    report.pass = monotone && errs.back() < opts.error_tolerance &&
                  std::abs(report.scalars["U_Tv1"] - 0.931) <= opts.u_tolerance;
    return report;
}

} // namespace menisim::verification
