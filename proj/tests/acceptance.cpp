// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code 0 iff all pass.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "menisim/biology.hpp"
#include "menisim/common.hpp"
#include "menisim/orchestrator.hpp"
#include "menisim/stimulus.hpp"
#include "menisim/stokes.hpp"
#include "menisim/verification.hpp"

using namespace menisim;

namespace {

const std::string kOut = "acceptance_out";

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw InputError("missing file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Result {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// 1. Parameter fidelity
// ---------------------------------------------------------------------------
Result parameter_fidelity() {
    const Config config;
    const nlohmann::json j = nlohmann::json::parse(config.to_json_text());
    const std::vector<std::tuple<std::string, std::string, std::string>> table = {
        {"biology", "a1", "0.015"},      {"biology", "beta", "0.5"},
        {"biology", "b1", "0.005"},      {"biology", "b2", "0.001"},
        {"biology", "delta1", "0.01"},   {"biology", "gamma1", "0.01"},
        {"stimulus", "alpha_min", "0.05"}, {"stimulus", "alpha_max", "0.1"},
        {"stimulus", "S_min", "1.0"},    {"stimulus", "S_max", "3.0"},
        {"mechanics", "p_max", "10.0"},  {"mechanics", "mu_f", "1e-09"},
        {"mechanics", "rho_p", "1100.0"}, {"mechanics", "kappa", "1e-14"},
        {"mechanics", "rho_f", "1000.0"}, {"mechanics", "Phi", "0.8"},
        {"mechanics", "E", "80.0"},      {"mechanics", "inv_M", "68.9"},
        {"mechanics", "nu", "0.167"},    {"mechanics", "alpha_biot", "1.0"},
    };
    for (const auto& [section, key, expected] : table) {
        const std::string got = j.at(section).at(key).dump();
        if (got != expected)
            return {false, section + "." + key + " = " + got + ", expected " + expected};
    }
    const LameParameters lame = lame_from_table(config.mechanics);
    // independent closed-form route
    const double E = 80.0, nu = 0.167;
    const double lam_ref = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu_ref = E / (2.0 * (1.0 + nu));
    if (std::abs(lame.lambda - lam_ref) > 1e-12 || std::abs(lame.mu - mu_ref) > 1e-12)
        return {false, "Lame parameters disagree with the closed form"};
    if (std::abs(lame.lambda - 17.19) > 0.005 || std::abs(lame.mu - 34.28) > 0.005)
        return {false, "lambda/mu outside the published rounding"};
    std::ostringstream os;
    os << "all table values verbatim; lambda_p = " << lame.lambda << ", mu_p = " << lame.mu;
    return {true, os.str()};
}

// ---------------------------------------------------------------------------
// 2. Conservation (orchestrator run, reused by criterion 10)
// ---------------------------------------------------------------------------
Config conservation_config(const std::string& out) {
    Config c;
    c.biology.beta = 0.0;
    c.run.mode = RunMode::BiologyOnly;
    c.run.n_steps = 300;
    c.run.dt = 0.1;
    c.run.output_stride = 100;
    c.run.output_dir = out;
    c.geometry.nx = 16;
    c.geometry.ny = 16;  // 512 elements
    c.solver.newton_tolerance = 1e-12;
    return c;
}

Result conservation() {
    std::filesystem::remove_all(kOut + "/conservation");
    Orchestrator orch(conservation_config(kOut + "/conservation"));
    const RunReport report = orch.run();
    std::ostringstream os;
    os << "relative drift of int(c1+c2) over 300 steps = " << report.conservation_drift;
    return {report.conservation_drift <= 1e-9, os.str()};
}

// ---------------------------------------------------------------------------
// 3. MMS convergence
// ---------------------------------------------------------------------------
Result mms() {
    verification::MmsOptions diffusion;
    diffusion.order_threshold = 1.8;
    const auto r1 = verification::mms_cells(diffusion);
    verification::MmsOptions taxis;
    taxis.with_taxis = true;
    taxis.order_threshold = 1.5;
    const auto r2 = verification::mms_cells(taxis);
    std::ostringstream os;
    os << "diffusion-reaction orders: c1 " << r1.min_order("c1") << ", c2 " << r1.min_order("c2")
       << " (>= 1.8); taxis: c1 " << r2.min_order("c1") << ", c2 " << r2.min_order("c2")
       << " (>= 1.5)";
    return {r1.pass && r2.pass, os.str()};
}

// ---------------------------------------------------------------------------
// 4. Uniform-state oracle
// ---------------------------------------------------------------------------
Result uniform_oracle() {
    Mesh mesh = structured_generator(4, 4);
    SolverSettings settings;
    settings.newton_tolerance = 1e-12;
    CellSolver solver(mesh, BiologyParams{}, settings);
    CellState state = solver.make_state(Expression::parse("0.4"), Expression::parse("0.1"),
                                        Expression::parse("0.8"), Expression::parse("0.05"));
    const RateField rates = RateField::constant(mesh.num_elements(), 0.05, 0.05);

    verification::OdeParams op;
    const verification::OdeState y0{0.4, 0.1, 0.8, 0.05};
    const auto euler = verification::implicit_euler_oracle(op, y0, 0.1, 300);
    double worst_euler = 0.0;
    for (int n = 1; n <= 300; ++n) {
        state = solver.newton_step(state, rates, 0.1);
        const auto& ref = euler[n];
        for (int i = 0; i < state.c1.coeffs.size(); ++i) {
            worst_euler = std::max(worst_euler, std::abs(state.c1.coeffs[i] - ref.c1));
            worst_euler = std::max(worst_euler, std::abs(state.c2.coeffs[i] - ref.c2));
        }
        for (int i = 0; i < state.h.coeffs.size(); ++i) {
            worst_euler = std::max(worst_euler, std::abs(state.h.coeffs[i] - ref.h));
            worst_euler = std::max(worst_euler, std::abs(state.k.coeffs[i] - ref.k));
        }
    }
    const verification::OdeState tight = verification::ode_oracle(op, y0, 30.0);
    double worst_tight = 0.0;
    worst_tight = std::max(worst_tight, std::abs(state.c1.coeffs[0] - tight.c1));
    worst_tight = std::max(worst_tight, std::abs(state.c2.coeffs[0] - tight.c2));
    worst_tight = std::max(worst_tight, std::abs(state.h.coeffs[0] - tight.h));
    worst_tight = std::max(worst_tight, std::abs(state.k.coeffs[0] - tight.k));
    std::ostringstream os;
    os << "max deviation from implicit-Euler oracle " << worst_euler
       << " (<= 1e-10), from adaptive oracle " << worst_tight << " (<= 0.05)";
    return {worst_euler <= 1e-10 && worst_tight <= 0.05, os.str()};
}

// ---------------------------------------------------------------------------
// 5. Terzaghi
// ---------------------------------------------------------------------------
Result terzaghi_gate() {
    verification::TerzaghiOptions opts;
    const auto report = verification::terzaghi(opts);
    std::ostringstream os;
    os << "U(Tv=1) = " << report.scalars.at("U_Tv1") << " (0.931 +- 0.02), finest rel L2 error "
       << report.errors.at("p").back() << " (< 0.02)";
    return {report.pass, os.str()};
}

// ---------------------------------------------------------------------------
// 6. Local mass conservation
// ---------------------------------------------------------------------------
Result local_conservation() {
    std::mt19937 rng(2026);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // biology: random coefficients, one implicit step
    Mesh mesh = uniform_refine(structured_generator(3, 3));
    BiologyParams params;
    params.a1 = 0.01 + 0.1 * u(rng);
    params.b1 = 0.01 * u(rng);
    params.b2 = 0.005 * u(rng);
    params.beta = 0.2 + 0.5 * u(rng);
    SolverSettings settings;
    settings.newton_tolerance = 1e-13;
    CellSolver cells(mesh, params, settings);
    CellState s = cells.make_state(Expression::parse("0.3*exp(-8*((x-0.4)^2+(y-0.5)^2))"),
                                   Expression::parse("0.05+0.03*y"),
                                   Expression::parse("1-0.2*x"), Expression::parse("0.05*y"));
    RateField rates = RateField::constant(mesh.num_elements(), 0, 0);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        rates.alpha1[e] = 0.05 + 0.05 * u(rng);
        rates.alpha2[e] = 0.05 + 0.05 * u(rng);
    }
    const CellState old = s;
    s = cells.newton_step(s, rates, 0.1);
    const double bio_balance = cells.local_balance_residual(s, old, rates, 0.1);

    // Darcy/Biot: random material, sinusoidal load
    GeometrySpec spec;
    spec.top_tag = BoundaryTag::Inflow;
    Mesh pmesh = structured_generator(5, 5, spec);
    MechParams mech;
    mech.E = 40.0 + 80.0 * u(rng);
    mech.kappa = 1e-14 * (0.5 + u(rng));
    PoroBCTable bcs = default_poro_bcs();
    PoroBC top;
    top.disp = DisplacementBC::Free;
    top.darcy = DarcyBC::Pressure;
    top.pressure_datum = [](double) { return 0.0; };
    top.normal_pressure = [](double t) { return 3.0 * std::sin(M_PI * t); };
    bcs[BoundaryTag::Inflow] = top;
    PoroSolver poro(pmesh, mech, bcs, 0.05);
    PoroState ps = poro.zero_state();
    double darcy_balance = 0.0;
    for (int n = 0; n < 5; ++n) {
        const PoroState pold = ps;
        ps = poro.step(ps);
        darcy_balance = std::max(darcy_balance, poro.local_mass_balance(ps, pold));
    }
    std::ostringstream os;
    os << "dG flux balance " << bio_balance << ", RT0/P0 balance " << darcy_balance
       << " (both <= 1e-10)";
    return {bio_balance <= 1e-10 && darcy_balance <= 1e-10, os.str()};
}

// ---------------------------------------------------------------------------
// 7. Stimulus mapping
// ---------------------------------------------------------------------------
Result stimulus_mapping() {
    StimulusParams p;  // Table 2 window
    if (std::abs(rate_map_value(0.0, p) - 0.05) > 1e-15) return {false, "alpha(0) != 0.05"};
    if (std::abs(rate_map_value(2.0, p) - 0.1) > 1e-15) return {false, "alpha(2) != 0.1"};
    const double w = p.ramp_fraction * (p.S_max - p.S_min);
    if (std::abs(rate_map_value(p.S_min + 0.5 * w, p) - 0.075) > 1e-15)
        return {false, "ramp midpoint != 0.075"};
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> s(-5.0, 10.0);
    for (int i = 0; i < 100000; ++i) {
        const double a = rate_map_value(s(rng), p);
        if (a < p.alpha_min - 1e-15 || a > p.alpha_max + 1e-15)
            return {false, "fuzzing escaped [alpha_min, alpha_max]"};
    }
    return {true, "alpha(0) = 0.05, alpha(2) = 0.1, midpoint 0.075, 1e5-point fuzz bounded"};
}

// ---------------------------------------------------------------------------
// 8. Qualitative coupled reproduction (two disconnected patches)
// ---------------------------------------------------------------------------
void write_two_patch_mesh(const std::string& path) {
    // patch A on [0,1]^2, patch B on [2,3]x[0,1]; no shared vertices, so no
    // transport connects them
    std::vector<Vec2> verts;
    std::vector<std::array<int, 3>> elems;
    std::vector<BoundaryEdgeSpec> bspec;
    const int n = 8;
    for (int patch = 0; patch < 2; ++patch) {
        const double x0 = patch == 0 ? 0.0 : 2.0;
        const int base = static_cast<int>(verts.size());
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i)
                verts.push_back({x0 + static_cast<double>(i) / n, static_cast<double>(j) / n});
        auto vid = [base, n](int i, int j) { return base + j * (n + 1) + i; };
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                elems.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
                elems.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
            }
        for (int i = 0; i < n; ++i) {
            bspec.push_back({vid(i, 0), vid(i + 1, 0), BoundaryTag::PorousWall});
            bspec.push_back({vid(i, n), vid(i + 1, n), BoundaryTag::PorousWall});
        }
        for (int j = 0; j < n; ++j) {
            bspec.push_back({vid(0, j), vid(0, j + 1), BoundaryTag::PorousWall});
            bspec.push_back({vid(n, j), vid(n, j + 1), BoundaryTag::PorousWall});
        }
    }
    write_msh(build_mesh(std::move(verts), std::move(elems), {}, bspec), path);
}

Config stress_window_config(const std::string& out, bool stress_mapped) {
    Config c;
    c.run.mode = RunMode::BiologyOnly;
    c.run.n_steps = 300;
    c.run.dt = 0.1;
    c.run.output_stride = 300;
    c.run.output_dir = out;
    c.geometry.mesh_file = kOut + "/two_patch.msh";
    c.initial.c1 = Expression::parse("0.4");
    c.initial.c2 = Expression::parse("0");
    c.initial.h = Expression::parse("1");
    c.initial.k = Expression::parse("0");
    if (stress_mapped) {
        c.stimulus.mode = StimulusMode::StressMapped;
        c.stimulus.source = StimulusSource::ExpressionField;
        // S = 2 inside the window for x < 0.5 (patch A only), 0 elsewhere
        c.stimulus.expression = Expression::parse("2*(1-min(1,floor(2*x)))");
    }
    return c;
}

Result stress_response() {
    std::filesystem::create_directories(kOut);
    write_two_patch_mesh(kOut + "/two_patch.msh");
    std::filesystem::remove_all(kOut + "/window_const");
    std::filesystem::remove_all(kOut + "/window_mapped");
    Orchestrator constant(stress_window_config(kOut + "/window_const", false));
    constant.run();
    Orchestrator mapped(stress_window_config(kOut + "/window_mapped", true));
    mapped.run();

    const CellState& a = *constant.cell_state();
    const CellState& b = *mapped.cell_state();
    const Mesh& mesh = constant.biology_mesh();
    const FunctionSpace& dg = *a.c2.space;

    double min_diff_window = 1e30, max_diff_outside = 0.0;
    int window_cells = 0, disconnected = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        double diff = 0.0;
        for (int i = 0; i < 3; ++i)
            diff = std::max(diff, std::abs(a.c2.coeffs[dg.element_dof(e, i)] -
                                           b.c2.coeffs[dg.element_dof(e, i)]));
        const double x = mesh.centroid(e).x;
        if (x < 0.5) {  // window-occupied, cells present
            min_diff_window = std::min(min_diff_window, diff);
            ++window_cells;
        } else if (x > 2.0) {  // other patch: no transport connects
            max_diff_outside = std::max(max_diff_outside, diff);
            ++disconnected;
        }
    }
    std::ostringstream os;
    os << "min |dc2| over " << window_cells << " window elements = " << min_diff_window
       << " (> 1e-8); max |dc2| over " << disconnected
       << " disconnected elements = " << max_diff_outside << " (<= 1e-10)";
    return {min_diff_window > 1e-8 && max_diff_outside <= 1e-10, os.str()};
}

// ---------------------------------------------------------------------------
// 9. Coupled mechanics smoke
// ---------------------------------------------------------------------------
Result coupled_smoke() {
    GeometrySpec spec = GeometrySpec::parse("channel-over-porous");
    Mesh mesh = structured_generator(8, 8, spec);
    MechParams params;

    auto run_with_gamma = [&](double gamma) {
        InterfaceParams iface;
        iface.gamma_N = gamma;
        CoupledSolver solver(mesh, params, iface, 0.1, paper_stokes_bcs(params.p_max),
                             default_poro_bcs());
        CoupledState s = solver.zero_state();
        CoupledState old = s;
        for (int n = 0; n < 9; ++n) {
            old = s;
            s = solver.step(s);
        }
        return std::make_pair(s, solver.interface_mismatch(s, old));
    };
    const auto [state100, mismatch100] = run_with_gamma(100.0);
    const auto [state_hi, mismatch_hi] = run_with_gamma(1e6);
    if (!(state100.t > 0.89)) return {false, "9-step run did not complete"};

    // forcing off: energy non-increasing per step after a short transient
    CoupledSolver off(mesh, params, InterfaceParams{}, 0.1, paper_stokes_bcs(0.0),
                      default_poro_bcs());
    CoupledState s = state100;
    double prev = 1e300;
    bool monotone = true;
    for (int n = 0; n < 12; ++n) {
        s = off.step(s);
        const double E = off.energy(s);
        if (n >= 2 && E > prev * (1.0 + 1e-10)) monotone = false;
        prev = E;
    }
    std::ostringstream os;
    os << "completed 9 steps; energy non-increasing: " << (monotone ? "yes" : "NO")
       << "; interface mismatch " << mismatch100 << " (gamma=100) vs " << mismatch_hi
       << " (gamma=1e6)";
    return {monotone && mismatch_hi < mismatch100, os.str()};
}

// ---------------------------------------------------------------------------
// 10. Determinism: rerun criteria 2 and 8, compare CSV bytes
// ---------------------------------------------------------------------------
Result determinism() {
    std::filesystem::remove_all(kOut + "/conservation_rerun");
    Orchestrator again(conservation_config(kOut + "/conservation_rerun"));
    again.run();
    if (slurp(kOut + "/conservation/cells.csv") != slurp(kOut + "/conservation_rerun/cells.csv"))
        return {false, "conservation cells.csv differs between reruns"};
    if (slurp(kOut + "/conservation/summary.csv") !=
        slurp(kOut + "/conservation_rerun/summary.csv"))
        return {false, "conservation summary.csv differs between reruns"};

    std::filesystem::remove_all(kOut + "/window_mapped_rerun");
    Orchestrator mapped(stress_window_config(kOut + "/window_mapped_rerun", true));
    mapped.run();
    if (slurp(kOut + "/window_mapped/cells.csv") !=
        slurp(kOut + "/window_mapped_rerun/cells.csv"))
        return {false, "stress-mapped cells.csv differs between reruns"};
    return {true, "criteria 2 and 8 reruns are bitwise identical"};
}

} // namespace

int main() {
    std::filesystem::create_directories(kOut);
    struct Criterion {
        int id;
        const char* name;
        std::function<Result()> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "parameter fidelity", parameter_fidelity},
        {2, "global conservation (beta = 0)", conservation},
        {3, "MMS convergence", mms},
        {4, "uniform-state ODE oracle", uniform_oracle},
        {5, "Terzaghi consolidation", terzaghi_gate},
        {6, "local mass conservation", local_conservation},
        {7, "stimulus mapping", stimulus_mapping},
        {8, "stress-window response", stress_response},
        {9, "coupled mechanics smoke", coupled_smoke},
        {10, "determinism", determinism},
    };
    int failures = 0;
    for (const auto& criterion : criteria) {
        Result result;
        try {
            result = criterion.fn();
        } catch (const std::exception& err) {
            result = {false, std::string("exception: ") + err.what()};
        }
        std::printf("[%s] %2d. %s: %s\n", result.pass ? "PASS" : "FAIL", criterion.id,
                    criterion.name, result.detail.c_str());
        std::fflush(stdout);
        if (!result.pass) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all criteria passed\n");
    return failures == 0 ? 0 : 1;
}
