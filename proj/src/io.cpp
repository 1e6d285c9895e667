#include "menisim/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "menisim/common.hpp"

namespace menisim {

namespace {

bool is_dg(const Field& f) { return f.space->kind() == SpaceKind::DGP1; }
bool is_cellwise(const Field& f) {
    return f.space->kind() == SpaceKind::P0 || f.space->kind() == SpaceKind::RT0;
}

void write_scalar_values(std::FILE* out, const std::vector<double>& values) {
    for (double v : values) std::fprintf(out, "%.17g\n", v);
}

} // namespace

void write_vtk(const Mesh& mesh, const std::vector<NamedField>& fields, const std::string& path) {
    for (const auto& nf : fields)
        require(nf.field && &nf.field->space->mesh() == &mesh,
                "write_vtk: field '" + nf.name + "' is not defined on the given mesh");
    const bool discontinuous =
        std::any_of(fields.begin(), fields.end(), [](const NamedField& nf) { return is_dg(*nf.field); });

    std::FILE* out = std::fopen(path.c_str(), "w");
    require(out != nullptr, "write_vtk: cannot open '" + path + "'");
    std::fprintf(out, "# vtk DataFile Version 3.0\n");
    std::fprintf(out, "menisim fields\nASCII\nDATASET UNSTRUCTURED_GRID\n");

    const int ne = mesh.num_elements();
    if (discontinuous) {
        // one private point per element corner
        std::fprintf(out, "POINTS %d double\n", 3 * ne);
        for (int e = 0; e < ne; ++e)
            for (int i = 0; i < 3; ++i) {
                const Vec2 p = mesh.vertex(mesh.element(e)[i]);
                std::fprintf(out, "%.17g %.17g 0\n", p.x, p.y);
            }
        std::fprintf(out, "CELLS %d %d\n", ne, 4 * ne);
        for (int e = 0; e < ne; ++e) std::fprintf(out, "3 %d %d %d\n", 3 * e, 3 * e + 1, 3 * e + 2);
    } else {
        std::fprintf(out, "POINTS %d double\n", mesh.num_vertices());
        for (const auto& p : mesh.vertices()) std::fprintf(out, "%.17g %.17g 0\n", p.x, p.y);
        std::fprintf(out, "CELLS %d %d\n", ne, 4 * ne);
        for (int e = 0; e < ne; ++e) {
            const auto& el = mesh.element(e);
            std::fprintf(out, "3 %d %d %d\n", el[0], el[1], el[2]);
        }
    }
    std::fprintf(out, "CELL_TYPES %d\n", ne);
    for (int e = 0; e < ne; ++e) std::fprintf(out, "5\n");

    // point data
    bool point_header = false;
    const int npoints = discontinuous ? 3 * ne : mesh.num_vertices();
    for (const auto& nf : fields) {
        const Field& f = *nf.field;
        if (is_cellwise(f)) continue;
        if (!point_header) {
            std::fprintf(out, "POINT_DATA %d\n", npoints);
            point_header = true;
        }
        const bool vector_field = f.space->vector_dim() == 2;
        if (vector_field)
            std::fprintf(out, "VECTORS %s double\n", nf.name.c_str());
        else
            std::fprintf(out, "SCALARS %s double 1\nLOOKUP_TABLE default\n", nf.name.c_str());
        auto emit = [&](int e, int vertex, int local) {
            if (vector_field) {
                double vx, vy;
                if (f.space->kind() == SpaceKind::DGP1) {
                    vx = f.coeffs[f.space->element_dof(e, local, 0)];
                    vy = f.coeffs[f.space->element_dof(e, local, 1)];
                } else {
                    vx = f.coeffs[f.space->vertex_dof(vertex, 0)];
                    vy = f.coeffs[f.space->vertex_dof(vertex, 1)];
                }
                std::fprintf(out, "%.17g %.17g 0\n", vx, vy);
            } else {
                const double v = f.space->kind() == SpaceKind::DGP1
                                     ? f.coeffs[f.space->element_dof(e, local)]
                                     : f.coeffs[f.space->vertex_dof(vertex)];
                std::fprintf(out, "%.17g\n", v);
            }
        };
        if (discontinuous) {
            for (int e = 0; e < ne; ++e)
                for (int i = 0; i < 3; ++i) emit(e, mesh.element(e)[i], i);
        } else {
            for (int v = 0; v < mesh.num_vertices(); ++v) emit(-1, v, -1);
        }
    }

    bool cell_header = false;
    for (const auto& nf : fields) {
        const Field& f = *nf.field;
        if (!is_cellwise(f)) continue;
        if (!cell_header) {
            std::fprintf(out, "CELL_DATA %d\n", ne);
            cell_header = true;
        }
        if (f.space->kind() == SpaceKind::RT0) {
            std::fprintf(out, "VECTORS %s double\n", nf.name.c_str());
            for (int e = 0; e < ne; ++e) {
                const VectorEval ev = evaluate_vector(f, e, {1. / 3, 1. / 3, 1. / 3});
                std::fprintf(out, "%.17g %.17g 0\n", ev.value.x, ev.value.y);
            }
        } else {
            std::fprintf(out, "SCALARS %s double 1\nLOOKUP_TABLE default\n", nf.name.c_str());
            std::vector<double> values(ne);
            for (int e = 0; e < ne; ++e) values[e] = f.coeffs[f.space->element_dof(e, 0)];
            write_scalar_values(out, values);
        }
    }
    std::fclose(out);
}

SeriesWriter::SeriesWriter(const std::string& path, std::vector<std::string> schema)
    : schema_(std::move(schema)) {
    require(!schema_.empty(), "SeriesWriter: empty schema");
    file_ = std::fopen(path.c_str(), "w");
    require(file_ != nullptr, "SeriesWriter: cannot open '" + path + "'");
    for (std::size_t i = 0; i < schema_.size(); ++i)
        std::fprintf(file_, "%s%s", schema_[i].c_str(), i + 1 < schema_.size() ? "," : "\n");
}

SeriesWriter::~SeriesWriter() {
    if (file_) std::fclose(file_);
}

SeriesWriter::SeriesWriter(SeriesWriter&& o) noexcept
    : file_(o.file_), schema_(std::move(o.schema_)) {
    o.file_ = nullptr;
}

SeriesWriter& SeriesWriter::operator=(SeriesWriter&& o) noexcept {
    std::swap(file_, o.file_);
    std::swap(schema_, o.schema_);
    return *this;
}

void SeriesWriter::append(const std::vector<double>& row) {
    require(file_ != nullptr, "SeriesWriter: writer is closed");
    require(row.size() == schema_.size(),
            "SeriesWriter: row has " + std::to_string(row.size()) + " values, schema has " +
                std::to_string(schema_.size()));
    for (std::size_t i = 0; i < row.size(); ++i)
        std::fprintf(file_, "%.17g%s", row[i], i + 1 < row.size() ? "," : "\n");
}

void SeriesWriter::flush() {
    if (file_) std::fflush(file_);
}

namespace {

// physical ids for the numeric fallback mapping
constexpr int kSubdomainBase = 1;  // 1 = porous, 2 = fluid
int tag_id(BoundaryTag t) { return static_cast<int>(t) + 1; }

} // namespace

Mesh read_msh(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "read_msh: cannot open '" + path + "'");

    std::string line;
    std::map<int, std::string> physical_names;
    std::vector<Vec2> nodes;
    std::map<long, int> node_index;  // gmsh id -> dense index
    std::vector<std::array<int, 3>> triangles;
    std::vector<Subdomain> subdomains;
    std::vector<std::pair<std::array<int, 2>, int>> boundary_lines;  // vertices, physical

    auto expect_line = [&](const std::string& want) {
        require(static_cast<bool>(std::getline(in, line)), "read_msh: truncated file, expected " + want);
    };

    while (std::getline(in, line)) {
        if (line.rfind("$MeshFormat", 0) == 0) {
            expect_line("format line");
            std::istringstream fmt(line);
            double version = 0.0;
            int file_type = -1;
            fmt >> version >> file_type;
            require(version >= 2.0 && version < 3.0 && file_type == 0,
                    "read_msh: only ASCII MSH 2.x is supported");
            expect_line("$EndMeshFormat");
        } else if (line.rfind("$PhysicalNames", 0) == 0) {
            expect_line("count");
            const int n = std::stoi(line);
            for (int i = 0; i < n; ++i) {
                expect_line("physical name");
                std::istringstream ls(line);
                int dim, id;
                std::string name;
                ls >> dim >> id;
                std::getline(ls, name);
                // strip blanks and quotes
                name.erase(std::remove(name.begin(), name.end(), '"'), name.end());
                name.erase(0, name.find_first_not_of(' '));
                physical_names[id] = name;
            }
            expect_line("$EndPhysicalNames");
        } else if (line.rfind("$Nodes", 0) == 0) {
            expect_line("node count");
            const int n = std::stoi(line);
            nodes.reserve(n);
            for (int i = 0; i < n; ++i) {
                expect_line("node");
                std::istringstream ls(line);
                long id;
                double x, y, z;
                ls >> id >> x >> y >> z;
                node_index[id] = static_cast<int>(nodes.size());
                nodes.push_back({x, y});
            }
            expect_line("$EndNodes");
        } else if (line.rfind("$Elements", 0) == 0) {
            expect_line("element count");
            const int n = std::stoi(line);
            for (int i = 0; i < n; ++i) {
                expect_line("element");
                std::istringstream ls(line);
                long id;
                int type, ntags;
                ls >> id >> type >> ntags;
                int physical = 0;
                for (int t = 0; t < ntags; ++t) {
                    int tag;
                    ls >> tag;
                    if (t == 0) physical = tag;
                }
                if (type == 2) {
                    long a, b, c;
                    ls >> a >> b >> c;
                    std::array<int, 3> tri = {node_index.at(a), node_index.at(b),
                                              node_index.at(c)};
                    subdomains.push_back(physical == kSubdomainBase + 1 ? Subdomain::Fluid
                                                                        : Subdomain::Porous);
                    if (auto it = physical_names.find(physical); it != physical_names.end()) {
                        std::string lower = it->second;
                        std::transform(lower.begin(), lower.end(), lower.begin(),
                                       [](unsigned char ch) { return std::tolower(ch); });
                        subdomains.back() =
                            lower == "fluid" ? Subdomain::Fluid : Subdomain::Porous;
                    }
                    triangles.push_back(tri);
                } else if (type == 1) {
                    long a, b;
                    ls >> a >> b;
                    boundary_lines.push_back({{node_index.at(a), node_index.at(b)}, physical});
                } else {
                    // points and higher-dimensional entities are outside the subset
                    require(type == 15, "read_msh: unsupported element type " +
                                            std::to_string(type) + " (subset: lines, triangles)");
                }
            }
            expect_line("$EndElements");
        }
    }
    require(!triangles.empty(), "read_msh: no triangles found in '" + path + "'");

    // reorient clockwise triangles before the validating constructor
    for (auto& tri : triangles) {
        if (triangle_signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) < 0.0)
            std::swap(tri[1], tri[2]);
    }

    std::vector<BoundaryEdgeSpec> bspec;
    for (const auto& [verts, physical] : boundary_lines) {
        BoundaryTag tag = BoundaryTag::Free;
        if (auto it = physical_names.find(physical); it != physical_names.end()) {
            if (auto parsed = boundary_tag_from_string(it->second)) tag = *parsed;
        } else if (physical >= 1 && physical <= 6) {
            tag = static_cast<BoundaryTag>(physical - 1);
        }
        bspec.push_back({verts[0], verts[1], tag});
    }
    return build_mesh(std::move(nodes), std::move(triangles), std::move(subdomains), bspec);
}

void write_msh(const Mesh& mesh, const std::string& path) {
    std::FILE* out = std::fopen(path.c_str(), "w");
    require(out != nullptr, "write_msh: cannot open '" + path + "'");
    std::fprintf(out, "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");

    std::fprintf(out, "$PhysicalNames\n8\n");
    std::fprintf(out, "2 %d \"porous\"\n", kSubdomainBase);
    std::fprintf(out, "2 %d \"fluid\"\n", kSubdomainBase + 1);
    for (auto tag : {BoundaryTag::PorousWall, BoundaryTag::FluidWall, BoundaryTag::Inflow,
                     BoundaryTag::Outflow, BoundaryTag::Interface, BoundaryTag::Free})
        std::fprintf(out, "1 %d \"%s\"\n", 10 + tag_id(tag), to_string(tag));
    std::fprintf(out, "$EndPhysicalNames\n");

    std::fprintf(out, "$Nodes\n%d\n", mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v)
        std::fprintf(out, "%d %.17g %.17g 0\n", v + 1, mesh.vertex(v).x, mesh.vertex(v).y);
    std::fprintf(out, "$EndNodes\n");

    int nlines = 0;
    for (const auto& f : mesh.faces())
        if (f.is_boundary()) ++nlines;
    std::fprintf(out, "$Elements\n%d\n", mesh.num_elements() + nlines);
    int next_id = 1;
    for (const auto& f : mesh.faces()) {
        if (!f.is_boundary()) continue;
        std::fprintf(out, "%d 1 2 %d 0 %d %d\n", next_id++, 10 + tag_id(f.tag), f.v0 + 1,
                     f.v1 + 1);
    }
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        const int phys =
            mesh.subdomain(e) == Subdomain::Fluid ? kSubdomainBase + 1 : kSubdomainBase;
        std::fprintf(out, "%d 2 2 %d 0 %d %d %d\n", next_id++, phys, el[0] + 1, el[1] + 1,
                     el[2] + 1);
    }
    std::fprintf(out, "$EndElements\n");
    std::fclose(out);
}

} // namespace menisim
