#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "menisim/geometry.hpp"

namespace menisim {

enum class BoundaryTag : int {
    PorousWall = 0,
    FluidWall  = 1,
    Inflow     = 2,
    Outflow    = 3,
    Interface  = 4,
    Free       = 5,
};

const char* to_string(BoundaryTag tag);
std::optional<BoundaryTag> boundary_tag_from_string(const std::string& name);

enum class Subdomain : int { Porous = 0, Fluid = 1 };

/// Codim-1 entity (edge in 2D). The stored unit normal points from the left
/// element into the right element, or outward for boundary faces (right < 0).
/// Jump/average/upwind sign conventions in the dG assembly all derive from
/// this one orientation.
struct Face {
    int v0 = -1, v1 = -1;  // endpoints, ordered CCW within the left element
    int left = -1, right = -1;
    Vec2 normal;
    double measure = 0.0;
    BoundaryTag tag = BoundaryTag::Free;

    bool is_boundary() const { return right < 0; }
    bool is_interface() const { return tag == BoundaryTag::Interface; }
};

struct BoundaryEdgeSpec {
    int v0 = -1, v1 = -1;  // unordered vertex pair
    BoundaryTag tag = BoundaryTag::Free;
};

/// Immutable simplicial 2D mesh with full face connectivity and boundary tags.
/// Safe for concurrent read once constructed.
class Mesh {
public:
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_elements() const { return static_cast<int>(elements_.size()); }
    int num_faces() const { return static_cast<int>(faces_.size()); }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const Vec2& vertex(int v) const { return vertices_[v]; }
    const std::vector<std::array<int, 3>>& elements() const { return elements_; }
    const std::array<int, 3>& element(int e) const { return elements_[e]; }
    const std::vector<Face>& faces() const { return faces_; }
    const Face& face(int f) const { return faces_[f]; }

    Subdomain subdomain(int e) const { return subdomain_[e]; }
    bool has_fluid() const { return has_fluid_; }
    bool has_porous() const { return has_porous_; }

    double area(int e) const { return area_[e]; }
    Vec2 centroid(int e) const { return centroid_[e]; }
    /// Longest edge of the element.
    double diameter(int e) const { return diameter_[e]; }
    double max_diameter() const;
    double total_area() const;
    double subdomain_area(Subdomain s) const;

    /// The three faces of element e, in the local CCW edge order
    /// (v0,v1), (v1,v2), (v2,v0).
    const std::array<int, 3>& element_faces(int e) const { return elem_faces_[e]; }
    /// +1 if element e is the left element of face f (normal points outward).
    double face_sign(int e, int f) const { return faces_[f].left == e ? 1.0 : -1.0; }

    std::vector<int> boundary_faces(BoundaryTag tag) const;
    std::vector<int> interface_faces() const;
    double tag_measure(BoundaryTag tag) const;

    /// FNV-1a hash over geometry, connectivity and tags; used to guard
    /// checkpoint/restore against mesh mismatch.
    std::uint64_t content_hash() const;

private:
    friend Mesh build_mesh(std::vector<Vec2> vertices,
                           std::vector<std::array<int, 3>> elements,
                           std::vector<Subdomain> subdomain_labels,
                           const std::vector<BoundaryEdgeSpec>& boundary_spec);

    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> elements_;
    std::vector<Subdomain> subdomain_;
    std::vector<Face> faces_;
    std::vector<std::array<int, 3>> elem_faces_;
    std::vector<double> area_;
    std::vector<Vec2> centroid_;
    std::vector<double> diameter_;
    bool has_fluid_ = false;
    bool has_porous_ = false;
};

/// Builds the face table and geometric caches. Throws InputError on dangling
/// vertex indices, duplicate elements, or nonpositive element area, naming the
/// offending entity. Boundary faces not covered by boundary_spec default to
/// Free; interior faces separating the two subdomains are tagged Interface.
Mesh build_mesh(std::vector<Vec2> vertices,
                std::vector<std::array<int, 3>> elements,
                std::vector<Subdomain> subdomain_labels = {},
                const std::vector<BoundaryEdgeSpec>& boundary_spec = {});

/// Red refinement: each triangle split into 4 congruent children. Boundary
/// tags and subdomain labels are inherited.
Mesh uniform_refine(const Mesh& mesh);

struct GeometrySpec {
    enum class Kind { UnitSquarePorous, ChannelOverPorous };
    Kind kind = Kind::UnitSquarePorous;

    // ChannelOverPorous: [0,length] x [0,porous_height] is porous,
    // [0,length] x [porous_height, porous_height+fluid_height] is fluid.
    double length = 1.0;
    double porous_height = 0.5;
    double fluid_height = 0.5;
    int ny_porous = 0;  // rows of cells in the porous layer; 0 = split ny evenly

    // UnitSquarePorous: optional per-side tag overrides (default PorousWall).
    std::optional<BoundaryTag> left_tag, right_tag, bottom_tag, top_tag;

    static GeometrySpec parse(const std::string& name);
};

/// Structured right-triangle mesh of nx-by-ny cells (2 triangles per cell)
/// with subdomains and boundary tags assigned per the geometry spec.
Mesh structured_generator(int nx, int ny, const GeometrySpec& spec = {});

/// Restriction of the mesh to one subdomain. Former interface faces become
/// boundary faces; their tag is kept as `interface_becomes` (default
/// FluidWall, so a fluid submesh can be run with wall conditions there).
/// vertex_map/element_map give parent indices for each kept entity.
struct Submesh {
    Mesh mesh;
    std::vector<int> vertex_map;
    std::vector<int> element_map;
};
Submesh extract_submesh(const Mesh& mesh, Subdomain keep,
                        BoundaryTag interface_becomes = BoundaryTag::FluidWall);

} // namespace menisim
