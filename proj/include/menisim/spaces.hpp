#pragma once

#include <array>
#include <functional>

#include "menisim/mesh.hpp"
#include "menisim/sparse.hpp"

namespace menisim {

enum class SpaceKind { P1, DGP1, P0, RT0, P1Bubble };

const char* to_string(SpaceKind kind);

/// Discrete space over a mesh. Degrees of freedom:
///   P1        one per vertex (times vector_dim, node-major interleaved)
///   DGP1      three per element (local vertex values; broken across faces)
///   P0        one per element
///   RT0       one per face: the (constant) normal velocity component in the
///             direction of the stored face normal
///   P1Bubble  P1 dofs followed by one cubic bubble dof per element and
///             component; the bubble has value 1 at the centroid and zero
///             trace on all faces
class FunctionSpace {
public:
    FunctionSpace(const Mesh& mesh, SpaceKind kind, int vector_dim = 1);

    const Mesh& mesh() const { return *mesh_; }
    SpaceKind kind() const { return kind_; }
    int vector_dim() const { return vector_dim_; }
    int ndof() const { return ndof_; }

    // Dof maps. comp is the vector component.
    int vertex_dof(int v, int comp = 0) const;          // P1, P1Bubble
    int element_dof(int e, int local, int comp = 0) const;  // DGP1 (local in 0..2), P0 (local=0)
    int bubble_dof(int e, int comp = 0) const;           // P1Bubble
    int face_dof(int f) const;                           // RT0

private:
    const Mesh* mesh_;
    SpaceKind kind_;
    int vector_dim_;
    int ndof_;
};

struct Field {
    const FunctionSpace* space = nullptr;
    Vector coeffs;

    explicit Field(const FunctionSpace& s) : space(&s), coeffs(Vector::Zero(s.ndof())) {}
    Field(const FunctionSpace& s, Vector c);
};

/// P1 barycentric basis gradients of an element (constant over the element).
std::array<Vec2, 3> p1_gradients(const Mesh& mesh, int e);

struct ScalarEval {
    double value = 0.0;
    Vec2 gradient;  // broken gradient for DGP1, zero for P0
};
struct VectorEval {
    Vec2 value;
    double divergence = 0.0;
};

/// Element-local evaluation at a barycentric point. dG spaces evaluate the
/// trace of the given element only.
ScalarEval evaluate_scalar(const Field& f, int e, const std::array<double, 3>& bary,
                           int comp = 0);
VectorEval evaluate_vector(const Field& f, int e, const std::array<double, 3>& bary);

/// Interpolation per space kind: nodal values for P1/DGP1, centroid values
/// for P0, mean face-normal moments for RT0, centroid-matched bubbles for
/// P1Bubble.
Field interpolate(const std::function<double(Vec2)>& f, const FunctionSpace& space);
Field interpolate_vector(const std::function<Vec2(Vec2)>& f, const FunctionSpace& space);

/// Exact integral of the discrete scalar field over the mesh (or one
/// subdomain).
double integrate(const Field& f);
double integrate(const Field& f, Subdomain sd);

} // namespace menisim
