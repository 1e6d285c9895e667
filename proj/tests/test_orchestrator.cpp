#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "menisim/common.hpp"
#include "menisim/orchestrator.hpp"

using namespace menisim;

namespace {

Config small_biology_config(const std::string& out) {
    Config c;
    c.run.mode = RunMode::BiologyOnly;
    c.run.n_steps = 12;
    c.run.output_stride = 6;
    c.run.output_dir = out;
    c.geometry.nx = 6;
    c.geometry.ny = 6;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::string path;
    explicit TempDir(const std::string& p) : path(p) { std::filesystem::remove_all(path); }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("biology-only run completes and emits the output set") {
    TempDir dir("orch_bio_out");
    Orchestrator orch(small_biology_config(dir.path));
    const RunReport report = orch.run();
    CHECK(report.steps == 12);
    CHECK(report.newton_total >= 12);
    CHECK(std::filesystem::exists(dir.path + "/cells.csv"));
    CHECK(std::filesystem::exists(dir.path + "/cells_00006.vtk"));
    CHECK(std::filesystem::exists(dir.path + "/cells_00012.vtk"));
    CHECK(std::filesystem::exists(dir.path + "/report.txt"));
    CHECK(std::filesystem::exists(dir.path + "/summary.csv"));
    // 12 data rows + header
    std::ifstream csv(dir.path + "/cells.csv");
    int lines = 0;
    std::string line;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 13);
}

TEST_CASE("determinism: identical configs give bitwise-identical CSV output") {
    TempDir d1("orch_det_a"), d2("orch_det_b");
    Config a = small_biology_config(d1.path);
    Config b = small_biology_config(d2.path);
    Orchestrator(a).run();
    Orchestrator(b).run();
    CHECK(slurp(d1.path + "/cells.csv") == slurp(d2.path + "/cells.csv"));
    CHECK(slurp(d1.path + "/summary.csv") == slurp(d2.path + "/summary.csv"));
}

TEST_CASE("mode lattice: biology-only equals coupled with frozen zero stress") {
    TempDir d1("orch_lat_a"), d2("orch_lat_b");
    Config bio = small_biology_config(d1.path);

    Config coupled = small_biology_config(d2.path);
    coupled.run.mode = RunMode::Coupled;
    coupled.run.mechanics_model = MechanicsModel::PoroTraction;
    coupled.run.frozen_stress = true;
    coupled.mechanics.p_max = 0.0;  // zero forcing -> zero stress
    coupled.stimulus.mode = StimulusMode::ConstantRates;

    Orchestrator o1(bio);
    o1.run();
    Orchestrator o2(coupled);
    o2.run();
    REQUIRE(o1.cell_state() != nullptr);
    REQUIRE(o2.cell_state() != nullptr);
    CHECK((o1.cell_state()->c1.coeffs - o2.cell_state()->c1.coeffs).lpNorm<Eigen::Infinity>() <=
          1e-12);
    CHECK((o1.cell_state()->c2.coeffs - o2.cell_state()->c2.coeffs).lpNorm<Eigen::Infinity>() <=
          1e-12);
    CHECK(slurp(d1.path + "/cells.csv") == slurp(d2.path + "/cells.csv"));
}

TEST_CASE("window never occupied equals constant rates at alpha_min") {
    TempDir d1("orch_win_a"), d2("orch_win_b");
    Config constant = small_biology_config(d1.path);

    Config mapped = small_biology_config(d2.path);
    mapped.stimulus.mode = StimulusMode::StressMapped;
    mapped.stimulus.source = StimulusSource::ExpressionField;
    mapped.stimulus.expression = Expression::parse("0.01");  // far below S_min
    mapped.run.output_dir = d2.path;

    Orchestrator o1(constant);
    o1.run();
    Orchestrator o2(mapped);
    o2.run();
    CHECK((o1.cell_state()->c1.coeffs - o2.cell_state()->c1.coeffs).lpNorm<Eigen::Infinity>() <=
          1e-10);
    CHECK((o1.cell_state()->c2.coeffs - o2.cell_state()->c2.coeffs).lpNorm<Eigen::Infinity>() <=
          1e-10);
}

TEST_CASE("mechanics-only coupled run matches a standalone solver loop bitwise") {
    TempDir dir("orch_mech_out");
    Config c;
    c.run.mode = RunMode::MechanicsOnly;
    c.run.mechanics_model = MechanicsModel::StokesBiot;
    c.run.n_steps = 4;
    c.run.output_dir = dir.path;
    c.geometry.spec = "channel-over-porous";
    c.geometry.nx = 6;
    c.geometry.ny = 6;
    Orchestrator orch(c);
    orch.run();

    GeometrySpec spec = GeometrySpec::parse("channel-over-porous");
    spec.length = c.geometry.length;
    spec.porous_height = c.geometry.porous_height;
    spec.fluid_height = c.geometry.fluid_height;
    Mesh mesh = structured_generator(6, 6, spec);
    CoupledSolver solver(mesh, c.mechanics,
                         InterfaceParams{c.coupling.gamma_N, c.coupling.bjs_slip}, c.run.dt,
                         paper_stokes_bcs(c.mechanics.p_max), default_poro_bcs());
    CoupledState s = solver.zero_state();
    for (int n = 0; n < 4; ++n) s = solver.step(s);

    REQUIRE(orch.coupled_state() != nullptr);
    CHECK((orch.coupled_state()->p_p.coeffs - s.p_p.coeffs).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((orch.coupled_state()->u_f.coeffs - s.u_f.coeffs).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("fallback traction mode produces a period-2 pore pressure response") {
    // prescribed traction -p_in(t) n on Inflow-tagged porous faces, as the
    // orchestrator's poro-traction mode applies it
    GeometrySpec spec;
    spec.left_tag = BoundaryTag::Inflow;
    Mesh mesh = structured_generator(6, 6, spec);
    MechParams params;
    PoroBCTable bcs = default_poro_bcs();
    PoroBC inflow;
    inflow.disp = DisplacementBC::Free;
    inflow.darcy = DarcyBC::Pressure;
    inflow.normal_pressure = [&](double t) { return params.p_max * std::sin(M_PI * t); };
    inflow.pressure_datum = inflow.normal_pressure;
    bcs[BoundaryTag::Inflow] = inflow;
    const double dt = 0.1;
    PoroSolver solver(mesh, params, bcs, dt);
    PoroState s = solver.zero_state();

    // signed pore pressure probe at a fixed interior element
    std::vector<double> p;
    for (int n = 0; n < 120; ++n) {
        s = solver.step(s);
        p.push_back(s.p.coeffs[mesh.num_elements() / 2]);
    }
    // DFT: dominant frequency must be 1/2 (period 2, matching sin(pi t));
    // skip the transient, analyse the last 80 samples (8 time units, 4 periods)
    const int n0 = 40, n = 80;
    double best_amp = 0.0, best_freq = 0.0;
    for (int k = 1; k <= n / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (int i = 0; i < n; ++i) {
            const double arg = 2.0 * M_PI * k * i / n;
            re += p[n0 + i] * std::cos(arg);
            im += p[n0 + i] * std::sin(arg);
        }
        const double amp = std::hypot(re, im);
        if (amp > best_amp) {
            best_amp = amp;
            best_freq = k / (n * dt);
        }
    }
    CHECK(best_freq == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("checkpoint and restore reproduce the uninterrupted run bitwise") {
    TempDir d1("orch_ck_a"), d2("orch_ck_b");
    Config full = small_biology_config(d1.path);
    full.run.n_steps = 10;
    full.run.checkpoint_stride = 5;
    Orchestrator o1(full);
    const RunReport r1 = o1.run();

    Config resumed = full;
    resumed.run.output_dir = d2.path;
    Orchestrator o2(resumed);
    o2.restore(d1.path + "/checkpoint_00005.bin");
    CHECK(o2.current_step() == 5);
    const RunReport r2 = o2.run();
    CHECK(r2.int_c1 == r1.int_c1);  // bitwise-equal final integrals
    CHECK(r2.int_c2 == r1.int_c2);
    CHECK((o1.cell_state()->c1.coeffs - o2.cell_state()->c1.coeffs).lpNorm<Eigen::Infinity>() ==
          0.0);

    // the restarted CSV rows must equal the uninterrupted tail
    std::istringstream a(slurp(d1.path + "/cells.csv")), b(slurp(d2.path + "/cells.csv"));
    std::vector<std::string> rows_a, rows_b;
    std::string line;
    while (std::getline(a, line)) rows_a.push_back(line);
    while (std::getline(b, line)) rows_b.push_back(line);
    REQUIRE(rows_a.size() == 11);  // header + 10
    REQUIRE(rows_b.size() == 6);   // header + 5 (steps 6..10)
    for (int i = 0; i < 5; ++i) CHECK(rows_b[1 + i] == rows_a[6 + i]);
}

TEST_CASE("restore rejects mismatched config and mesh") {
    TempDir d1("orch_rej_a"), d2("orch_rej_b");
    Config base = small_biology_config(d1.path);
    base.run.checkpoint_stride = 5;
    base.run.n_steps = 6;
    Orchestrator o1(base);
    o1.run();

    Config other = base;
    other.run.output_dir = d2.path;
    other.geometry.nx = 7;  // different mesh
    Orchestrator o2(other);
    CHECK_THROWS_WITH_AS(o2.restore(d1.path + "/checkpoint_00005.bin"),
                         doctest::Contains("different"), InputError);

    Config third = base;
    third.run.output_dir = d2.path;
    third.biology.a1 = 0.02;  // different physics
    Orchestrator o3(third);
    CHECK_THROWS_WITH_AS(o3.restore(d1.path + "/checkpoint_00005.bin"),
                         doctest::Contains("different config"), InputError);
}

TEST_CASE("checkpoint of the zero state restores the zero state") {
    TempDir dir("orch_zero_out");
    Config c = small_biology_config(dir.path);
    c.initial.c1 = Expression::parse("0");
    c.initial.h = Expression::parse("0");
    Orchestrator o1(c);
    o1.checkpoint(dir.path + "/zero.bin");
    Orchestrator o2(c);
    o2.restore(dir.path + "/zero.bin");
    CHECK(o2.cell_state()->c1.coeffs.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(o2.cell_state()->h.coeffs.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(o2.current_step() == 0);
}
