#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "menisim/common.hpp"
#include "menisim/config.hpp"
#include "menisim/expr.hpp"
#include "menisim/io.hpp"

using namespace menisim;

TEST_CASE("expression parser evaluates the supported grammar") {
    CHECK(Expression::parse("2 + 3*4")(Vec2{0, 0}) == 14.0);
    CHECK(Expression::parse("-x^2 + y")(Vec2{3, 1}) == doctest::Approx(-8.0));
    CHECK(Expression::parse("2^3^2")(Vec2{0, 0}) == 512.0);  // right associative
    CHECK(Expression::parse("sin(pi/2)")(Vec2{0, 0}) == doctest::Approx(1.0));
    CHECK(Expression::parse("min(min(x,1-x),min(y,1-y))")(Vec2{0.2, 0.7}) ==
          doctest::Approx(0.2));
    CHECK(Expression::parse("exp(-t)*cos(pi*x)")(Vec2{1, 0}, 2.0) ==
          doctest::Approx(-std::exp(-2.0)));
    CHECK(Expression::parse("max(0, x - 0.5)")(Vec2{0.75, 0}) == doctest::Approx(0.25));
}

TEST_CASE("expression parser reports position on malformed input") {
    CHECK_THROWS_WITH_AS(Expression::parse("2 +"), doctest::Contains("position"), InputError);
    CHECK_THROWS_WITH_AS(Expression::parse("foo(3)"), doctest::Contains("unknown identifier"),
                         InputError);
    CHECK_THROWS_WITH_AS(Expression::parse("min(1)"), doctest::Contains("two arguments"),
                         InputError);
    CHECK_THROWS_AS(Expression::parse("(1 + 2"), InputError);
}

TEST_CASE("default config carries the published parameter tables") {
    Config c;
    CHECK(c.biology.a1 == 0.015);
    CHECK(c.biology.beta == 0.5);
    CHECK(c.biology.b1 == 0.005);
    CHECK(c.biology.b2 == 0.001);
    CHECK(c.biology.delta1 == 0.01);
    CHECK(c.biology.gamma1 == 0.01);
    CHECK(c.stimulus.alpha_min == 0.05);
    CHECK(c.stimulus.alpha_max == 0.1);
    CHECK(c.stimulus.S_min == 1.0);
    CHECK(c.stimulus.S_max == 3.0);
    CHECK(c.mechanics.p_max == 10.0);
    CHECK(c.mechanics.mu_f == 1e-9);
    CHECK(c.mechanics.rho_p == 1.1e3);
    CHECK(c.mechanics.kappa == 1e-14);
    CHECK(c.mechanics.rho_f == 1e3);
    CHECK(c.mechanics.Phi == 0.8);
    CHECK(c.mechanics.E == 80.0);
    CHECK(c.mechanics.inv_M == 68.9);
    CHECK(c.mechanics.nu == 0.167);
    CHECK(c.mechanics.alpha_biot == 1.0);
}

TEST_CASE("config load -> save -> load is a fixed point") {
    Config c;
    const std::string text = c.to_json_text();
    Config reloaded = Config::from_json_text(text);
    CHECK(reloaded.to_json_text() == text);
    CHECK(reloaded.content_hash() == c.content_hash());
}

TEST_CASE("config rejects unknown keys and bad values naming the key") {
    CHECK_THROWS_WITH_AS(Config::from_json_text(R"({"biology": {"a2": 1.0}})"),
                         doctest::Contains("biology.a2"), InputError);
    CHECK_THROWS_WITH_AS(Config::from_json_text(R"({"mechanics": {"nu": 0.6}})"),
                         doctest::Contains("nu"), InputError);
    CHECK_THROWS_WITH_AS(Config::from_json_text(R"({"mechanics": {"Phi": 1.5}})"),
                         doctest::Contains("Phi"), InputError);
    CHECK_THROWS_WITH_AS(Config::from_json_text("{\n  \"run\": {\n  bad\n}}"),
                         doctest::Contains("line 3"), InputError);
}

TEST_CASE("lame parameters from the default table") {
    const LameParameters lame = lame_from_table(MechParams{});
    // closed-form evaluation: E nu/((1+nu)(1-2nu)) and E/(2(1+nu))
    CHECK(lame.lambda == doctest::Approx(17.19).epsilon(5e-4));
    CHECK(lame.mu == doctest::Approx(34.28).epsilon(5e-4));
    MechParams nu0 = MechParams{};
    nu0.nu = 1e-12;  // nu -> 0 limit
    CHECK(lame_from_table(nu0).lambda == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(lame_from_table(nu0).mu == doctest::Approx(40.0));
}

TEST_CASE("unit conversion: the single mobility constant") {
    MechParams p;
    CHECK(p.mobility_mm() == doctest::Approx(10.0));  // 1e-5 m^2/(MPa s) in mm^2
    CHECK(p.rho_f_t() == doctest::Approx(1e-9));
    CHECK(p.rho_p_t() == doctest::Approx(1.1e-9));
}

TEST_CASE("VTK writer: cell data, header, and value round-trip") {
    Mesh m = build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
    FunctionSpace p0(m, SpaceKind::P0);
    Field f(p0);
    f.coeffs << 0.123456789012345678, -7.5;
    write_vtk(m, {{"pressure", &f}}, "vtk_test.vtk");

    std::ifstream in("vtk_test.vtk");
    REQUIRE(in.good());
    std::string first;
    std::getline(in, first);
    CHECK(first == "# vtk DataFile Version 3.0");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    CHECK(text.find("UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(text.find("CELL_DATA 2") != std::string::npos);
    // full-precision round trip of the written values
    const auto pos = text.find("LOOKUP_TABLE default");
    REQUIRE(pos != std::string::npos);
    std::istringstream vals(text.substr(pos + 21));
    double v0, v1;
    vals >> v0 >> v1;
    CHECK(v0 == f.coeffs[0]);
    CHECK(v1 == f.coeffs[1]);
    std::remove("vtk_test.vtk");
}

TEST_CASE("VTK writer: dG fields produce a discontinuous point cloud") {
    Mesh m = build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
    FunctionSpace dg(m, SpaceKind::DGP1);
    Field f(dg);
    f.coeffs.setLinSpaced(6, 0.0, 5.0);
    write_vtk(m, {{"c1", &f}}, "vtk_dg_test.vtk");
    std::ifstream in("vtk_dg_test.vtk");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    CHECK(text.find("POINTS 6 double") != std::string::npos);  // 3 per triangle
    CHECK(text.find("POINT_DATA 6") != std::string::npos);
    std::remove("vtk_dg_test.vtk");
}

TEST_CASE("CSV series: header, rows, schema drift") {
    {
        SeriesWriter w("series_test.csv", {"t", "mass"});
        w.append({0.0, 1.0});
        w.append({0.1, 0.999999999999999});
        CHECK_THROWS_AS(w.append({1.0}), InputError);
    }
    std::ifstream in("series_test.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,mass");
    std::getline(in, line);
    CHECK(line == "0,1");
    std::getline(in, line);
    CHECK(line == "0.10000000000000001,0.999999999999999");
    std::remove("series_test.csv");
}

TEST_CASE("empty series writes the header only") {
    { SeriesWriter w("series_empty.csv", {"a", "b", "c"}); }
    std::ifstream in("series_empty.csv");
    std::string line;
    CHECK(std::getline(in, line));
    CHECK(line == "a,b,c");
    CHECK(!std::getline(in, line));
    std::remove("series_empty.csv");
}

TEST_CASE("MSH 2.2 round trip preserves mesh, tags and subdomains") {
    GeometrySpec spec = GeometrySpec::parse("channel-over-porous");
    Mesh m = structured_generator(4, 4, spec);
    write_msh(m, "mesh_test.msh");
    Mesh r = read_msh("mesh_test.msh");
    CHECK(r.num_vertices() == m.num_vertices());
    CHECK(r.num_elements() == m.num_elements());
    CHECK(r.total_area() == doctest::Approx(m.total_area()).epsilon(1e-14));
    for (auto tag : {BoundaryTag::Inflow, BoundaryTag::Outflow, BoundaryTag::FluidWall,
                     BoundaryTag::PorousWall})
        CHECK(r.tag_measure(tag) == doctest::Approx(m.tag_measure(tag)).epsilon(1e-13));
    CHECK(r.subdomain_area(Subdomain::Fluid) ==
          doctest::Approx(m.subdomain_area(Subdomain::Fluid)).epsilon(1e-13));
    CHECK(r.interface_faces().size() == m.interface_faces().size());
    std::remove("mesh_test.msh");
}

TEST_CASE("MSH reader fixes clockwise triangles and rejects garbage") {
    {
        std::ofstream out("cw_test.msh");
        out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
        out << "$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n";
        out << "$Elements\n1\n1 2 2 1 0 1 3 2\n$EndElements\n";  // clockwise
    }
    Mesh m = read_msh("cw_test.msh");
    CHECK(m.total_area() == doctest::Approx(0.5));
    std::remove("cw_test.msh");

    {
        std::ofstream out("bad_test.msh");
        out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n0\n$EndNodes\n";
        out << "$Elements\n0\n$EndElements\n";
    }
    CHECK_THROWS_WITH_AS(read_msh("bad_test.msh"), doctest::Contains("no triangles"), InputError);
    std::remove("bad_test.msh");
}

TEST_CASE("shipped default config file matches the built-in defaults") {
    Config file = Config::load(std::string(MENISIM_SOURCE_DIR) + "/configs/default.json");
    CHECK(file.to_json_text() == Config{}.to_json_text());
    CHECK(file.content_hash() == Config{}.content_hash());
    Config channel = Config::load(std::string(MENISIM_SOURCE_DIR) + "/configs/channel.json");
    CHECK(channel.run.mode == RunMode::Coupled);
    CHECK(channel.geometry.spec == "channel-over-porous");
}

TEST_CASE("VTK conformance: block counts are mutually consistent") {
    Mesh m = uniform_refine(structured_generator(2, 2));
    FunctionSpace dg(m, SpaceKind::DGP1);
    FunctionSpace p0(m, SpaceKind::P0);
    Field a = interpolate([](Vec2 p) { return p.x * p.y; }, dg);
    Field b = interpolate([](Vec2 p) { return p.x - p.y; }, p0);
    write_vtk(m, {{"c1", &a}, {"pp", &b}}, "vtk_conform.vtk");
    std::ifstream in("vtk_conform.vtk");
    std::string line;
    int points = -1, cells = -1, cell_entries = -1, cell_types = -1, point_data = -1,
        cell_data = -1;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "POINTS") ls >> points;
        if (word == "CELLS") ls >> cells >> cell_entries;
        if (word == "CELL_TYPES") ls >> cell_types;
        if (word == "POINT_DATA") ls >> point_data;
        if (word == "CELL_DATA") ls >> cell_data;
    }
    CHECK(points == 3 * m.num_elements());  // discontinuous cloud for the dG field
    CHECK(cells == m.num_elements());
    CHECK(cell_entries == 4 * m.num_elements());
    CHECK(cell_types == m.num_elements());
    CHECK(point_data == points);
    CHECK(cell_data == cells);
    std::remove("vtk_conform.vtk");
}
