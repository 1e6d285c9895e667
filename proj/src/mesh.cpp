#include "menisim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "menisim/common.hpp"

namespace menisim {

const char* to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::PorousWall: return "PorousWall";
        case BoundaryTag::FluidWall: return "FluidWall";
        case BoundaryTag::Inflow: return "Inflow";
        case BoundaryTag::Outflow: return "Outflow";
        case BoundaryTag::Interface: return "Interface";
        case BoundaryTag::Free: return "Free";
    }
    return "?";
}

std::optional<BoundaryTag> boundary_tag_from_string(const std::string& name) {
    for (auto tag : {BoundaryTag::PorousWall, BoundaryTag::FluidWall, BoundaryTag::Inflow,
                     BoundaryTag::Outflow, BoundaryTag::Interface, BoundaryTag::Free}) {
        if (name == to_string(tag)) return tag;
    }
    return std::nullopt;
}

Mesh build_mesh(std::vector<Vec2> vertices,
                std::vector<std::array<int, 3>> elements,
                std::vector<Subdomain> subdomain_labels,
                const std::vector<BoundaryEdgeSpec>& boundary_spec) {
    require(!elements.empty(), "build_mesh: mesh needs at least one element");
    const int nv = static_cast<int>(vertices.size());
    const int ne = static_cast<int>(elements.size());

    if (subdomain_labels.empty()) subdomain_labels.assign(ne, Subdomain::Porous);
    require(static_cast<int>(subdomain_labels.size()) == ne,
            "build_mesh: subdomain label count does not match element count");

    Mesh m;
    m.vertices_ = std::move(vertices);
    m.elements_ = std::move(elements);
    m.subdomain_ = std::move(subdomain_labels);

    std::set<std::array<int, 3>> seen;
    m.area_.resize(ne);
    m.centroid_.resize(ne);
    m.diameter_.resize(ne);
    for (int e = 0; e < ne; ++e) {
        const auto& el = m.elements_[e];
        for (int k = 0; k < 3; ++k) {
            require(el[k] >= 0 && el[k] < nv,
                    "build_mesh: element " + std::to_string(e) + " references vertex " +
                        std::to_string(el[k]) + " outside [0," + std::to_string(nv) + ")");
        }
        std::array<int, 3> key = el;
        std::sort(key.begin(), key.end());
        require(key[0] != key[1] && key[1] != key[2],
                "build_mesh: element " + std::to_string(e) + " repeats a vertex");
        require(seen.insert(key).second,
                "build_mesh: duplicate element " + std::to_string(e));

        const Vec2 &a = m.vertices_[el[0]], &b = m.vertices_[el[1]], &c = m.vertices_[el[2]];
        const double sa = triangle_signed_area(a, b, c);
        require(sa > 0.0, "build_mesh: element " + std::to_string(e) +
                              " has nonpositive area " + std::to_string(sa));
        m.area_[e] = sa;
        m.centroid_[e] = (a + b + c) / 3.0;
        m.diameter_[e] = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
        if (m.subdomain_[e] == Subdomain::Fluid) m.has_fluid_ = true;
        else m.has_porous_ = true;
    }

    // Face table: first element owning an edge becomes 'left' and fixes the
    // orientation; edges are visited in (element, local edge) order so the
    // table is deterministic.
    std::map<std::pair<int, int>, int> edge_to_face;
    m.elem_faces_.assign(ne, {-1, -1, -1});
    for (int e = 0; e < ne; ++e) {
        const auto& el = m.elements_[e];
        for (int k = 0; k < 3; ++k) {
            const int a = el[k], b = el[(k + 1) % 3];
            const auto key = std::minmax(a, b);
            auto it = edge_to_face.find(key);
            if (it == edge_to_face.end()) {
                Face f;
                f.v0 = a;
                f.v1 = b;
                f.left = e;
                const Vec2 t = m.vertices_[b] - m.vertices_[a];
                f.measure = t.norm();
                // Outward normal of the left (CCW) element: rotate the edge
                // tangent by -90 degrees.
                f.normal = Vec2{t.y, -t.x} / f.measure;
                const int fid = static_cast<int>(m.faces_.size());
                m.faces_.push_back(f);
                edge_to_face.emplace(key, fid);
                m.elem_faces_[e][k] = fid;
            } else {
                Face& f = m.faces_[it->second];
                require(f.right < 0, "build_mesh: edge (" + std::to_string(a) + "," +
                                         std::to_string(b) + ") shared by more than two elements");
                f.right = e;
                m.elem_faces_[e][k] = it->second;
            }
        }
    }

    // Tags: boundary_spec entries, Interface detection, Free fallback.
    std::map<std::pair<int, int>, BoundaryTag> spec_tags;
    for (const auto& s : boundary_spec) {
        require(s.v0 >= 0 && s.v0 < nv && s.v1 >= 0 && s.v1 < nv,
                "build_mesh: boundary spec references an invalid vertex");
        spec_tags[std::minmax(s.v0, s.v1)] = s.tag;
    }
    for (auto& f : m.faces_) {
        if (f.is_boundary()) {
            auto it = spec_tags.find(std::minmax(f.v0, f.v1));
            f.tag = (it != spec_tags.end()) ? it->second : BoundaryTag::Free;
            require(f.tag != BoundaryTag::Interface,
                    "build_mesh: boundary face cannot be tagged Interface");
        } else if (m.subdomain_[f.left] != m.subdomain_[f.right]) {
            f.tag = BoundaryTag::Interface;
            // Keep the interface normal pointing fluid -> porous so coupling
            // terms see a consistent n_f.
            if (m.subdomain_[f.left] != Subdomain::Fluid) {
                std::swap(f.left, f.right);
                std::swap(f.v0, f.v1);
                f.normal = -f.normal;
            }
        }
    }
    return m;
}

double Mesh::total_area() const {
    double s = 0.0;
    for (double a : area_) s += a;
    return s;
}

double Mesh::subdomain_area(Subdomain sd) const {
    double s = 0.0;
    for (int e = 0; e < num_elements(); ++e)
        if (subdomain_[e] == sd) s += area_[e];
    return s;
}

double Mesh::max_diameter() const {
    double h = 0.0;
    for (double d : diameter_) h = std::max(h, d);
    return h;
}

std::vector<int> Mesh::boundary_faces(BoundaryTag tag) const {
    std::vector<int> out;
    for (int f = 0; f < num_faces(); ++f)
        if (faces_[f].is_boundary() && faces_[f].tag == tag) out.push_back(f);
    return out;
}

std::vector<int> Mesh::interface_faces() const {
    std::vector<int> out;
    for (int f = 0; f < num_faces(); ++f)
        if (faces_[f].is_interface()) out.push_back(f);
    return out;
}

double Mesh::tag_measure(BoundaryTag tag) const {
    double s = 0.0;
    for (const auto& f : faces_)
        if (f.tag == tag) s += f.measure;
    return s;
}

std::uint64_t Mesh::content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& v : vertices_) mix(&v, sizeof(v));
    for (const auto& e : elements_) mix(e.data(), sizeof(int) * 3);
    for (const auto& s : subdomain_) { int v = static_cast<int>(s); mix(&v, sizeof(v)); }
    for (const auto& f : faces_) { int t = static_cast<int>(f.tag); mix(&t, sizeof(t)); }
    return h;
}

Mesh uniform_refine(const Mesh& mesh) {
    const auto& verts = mesh.vertices();
    std::vector<Vec2> new_verts = verts;
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int id = static_cast<int>(new_verts.size());
        new_verts.push_back((verts[a] + verts[b]) * 0.5);
        midpoint.emplace(key, id);
        return id;
    };

    std::vector<std::array<int, 3>> new_elems;
    std::vector<Subdomain> new_sub;
    new_elems.reserve(4 * mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        const int m01 = mid(el[0], el[1]), m12 = mid(el[1], el[2]), m20 = mid(el[2], el[0]);
        new_elems.push_back({el[0], m01, m20});
        new_elems.push_back({m01, el[1], m12});
        new_elems.push_back({m20, m12, el[2]});
        new_elems.push_back({m01, m12, m20});
        for (int k = 0; k < 4; ++k) new_sub.push_back(mesh.subdomain(e));
    }

    std::vector<BoundaryEdgeSpec> spec;
    for (const auto& f : mesh.faces()) {
        if (!f.is_boundary()) continue;
        const int mp = midpoint.at(std::minmax(f.v0, f.v1));
        spec.push_back({f.v0, mp, f.tag});
        spec.push_back({mp, f.v1, f.tag});
    }
    return build_mesh(std::move(new_verts), std::move(new_elems), std::move(new_sub), spec);
}

GeometrySpec GeometrySpec::parse(const std::string& name) {
    GeometrySpec spec;
    if (name == "unit-square-porous") {
        spec.kind = Kind::UnitSquarePorous;
    } else if (name == "channel-over-porous") {
        spec.kind = Kind::ChannelOverPorous;
    } else {
        throw InputError("unknown geometry spec '" + name +
                         "' (expected unit-square-porous or channel-over-porous)");
    }
    return spec;
}

Mesh structured_generator(int nx, int ny, const GeometrySpec& spec) {
    require(nx >= 1 && ny >= 1, "structured_generator: nx, ny must be >= 1");

    double lx = 1.0, ly = 1.0;
    int ny_porous = ny;
    if (spec.kind == GeometrySpec::Kind::ChannelOverPorous) {
        lx = spec.length;
        ly = spec.porous_height + spec.fluid_height;
        ny_porous = spec.ny_porous > 0 ? spec.ny_porous : ny / 2;
        require(ny_porous >= 1 && ny_porous < ny,
                "structured_generator: channel-over-porous needs porous and fluid rows");
    }

    std::vector<Vec2> verts((nx + 1) * (ny + 1));
    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j) {
        double y;
        if (spec.kind == GeometrySpec::Kind::ChannelOverPorous) {
            // Grade rows so the interface lands exactly on a mesh line.
            y = (j <= ny_porous)
                ? spec.porous_height * j / ny_porous
                : spec.porous_height + spec.fluid_height * (j - ny_porous) / (ny - ny_porous);
        } else {
            y = ly * j / ny;
        }
        for (int i = 0; i <= nx; ++i) verts[vid(i, j)] = {lx * i / nx, y};
    }

    std::vector<std::array<int, 3>> elems;
    std::vector<Subdomain> sub;
    elems.reserve(2 * nx * ny);
    for (int j = 0; j < ny; ++j) {
        const bool fluid = spec.kind == GeometrySpec::Kind::ChannelOverPorous && j >= ny_porous;
        for (int i = 0; i < nx; ++i) {
            elems.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            elems.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
            sub.push_back(fluid ? Subdomain::Fluid : Subdomain::Porous);
            sub.push_back(fluid ? Subdomain::Fluid : Subdomain::Porous);
        }
    }

    std::vector<BoundaryEdgeSpec> bspec;
    auto tag_side = [&](auto edge_of, int count, BoundaryTag tag) {
        for (int k = 0; k < count; ++k) {
            auto [a, b] = edge_of(k);
            bspec.push_back({a, b, tag});
        }
    };
    if (spec.kind == GeometrySpec::Kind::UnitSquarePorous) {
        const BoundaryTag l = spec.left_tag.value_or(BoundaryTag::PorousWall);
        const BoundaryTag r = spec.right_tag.value_or(BoundaryTag::PorousWall);
        const BoundaryTag b = spec.bottom_tag.value_or(BoundaryTag::PorousWall);
        const BoundaryTag t = spec.top_tag.value_or(BoundaryTag::PorousWall);
        tag_side([&](int j) { return std::pair(vid(0, j), vid(0, j + 1)); }, ny, l);
        tag_side([&](int j) { return std::pair(vid(nx, j), vid(nx, j + 1)); }, ny, r);
        tag_side([&](int i) { return std::pair(vid(i, 0), vid(i + 1, 0)); }, nx, b);
        tag_side([&](int i) { return std::pair(vid(i, ny), vid(i + 1, ny)); }, nx, t);
    } else {
        // Channel over porous: Inflow/Outflow/FluidWall on the fluid layer,
        // PorousWall elsewhere; the shared mesh line becomes Interface
        // automatically from the subdomain labels.
        tag_side([&](int j) { return std::pair(vid(0, j), vid(0, j + 1)); }, ny_porous,
                 BoundaryTag::PorousWall);
        tag_side([&](int j) { return std::pair(vid(nx, j), vid(nx, j + 1)); }, ny_porous,
                 BoundaryTag::PorousWall);
        tag_side([&](int i) { return std::pair(vid(i, 0), vid(i + 1, 0)); }, nx,
                 BoundaryTag::PorousWall);
        tag_side([&](int j) { int jj = ny_porous + j; return std::pair(vid(0, jj), vid(0, jj + 1)); },
                 ny - ny_porous, BoundaryTag::Inflow);
        tag_side([&](int j) { int jj = ny_porous + j; return std::pair(vid(nx, jj), vid(nx, jj + 1)); },
                 ny - ny_porous, BoundaryTag::Outflow);
        tag_side([&](int i) { return std::pair(vid(i, ny), vid(i + 1, ny)); }, nx,
                 BoundaryTag::FluidWall);
    }
    return build_mesh(std::move(verts), std::move(elems), std::move(sub), bspec);
}

Submesh extract_submesh(const Mesh& mesh, Subdomain keep, BoundaryTag interface_becomes) {
    Submesh out;
    std::vector<int> vmap(mesh.num_vertices(), -1);
    std::vector<Vec2> verts;
    std::vector<std::array<int, 3>> elems;
    std::vector<Subdomain> sub;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.subdomain(e) != keep) continue;
        std::array<int, 3> el;
        for (int k = 0; k < 3; ++k) {
            const int v = mesh.element(e)[k];
            if (vmap[v] < 0) {
                vmap[v] = static_cast<int>(verts.size());
                verts.push_back(mesh.vertex(v));
                out.vertex_map.push_back(v);
            }
            el[k] = vmap[v];
        }
        elems.push_back(el);
        sub.push_back(keep);
        out.element_map.push_back(e);
    }
    require(!elems.empty(), "extract_submesh: requested subdomain is empty");

    std::vector<BoundaryEdgeSpec> bspec;
    for (const auto& f : mesh.faces()) {
        const bool keep_left = f.left >= 0 && mesh.subdomain(f.left) == keep;
        const bool keep_right = f.right >= 0 && mesh.subdomain(f.right) == keep;
        if (f.is_boundary() && keep_left) {
            bspec.push_back({vmap[f.v0], vmap[f.v1], f.tag});
        } else if (f.is_interface() && (keep_left != keep_right)) {
            bspec.push_back({vmap[f.v0], vmap[f.v1], interface_becomes});
        }
    }
    out.mesh = build_mesh(std::move(verts), std::move(elems), std::move(sub), bspec);
    return out;
}

} // namespace menisim
