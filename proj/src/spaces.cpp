#include "menisim/spaces.hpp"

#include "menisim/common.hpp"
#include "menisim/quadrature.hpp"

namespace menisim {

const char* to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::P1: return "P1";
        case SpaceKind::DGP1: return "dG-P1";
        case SpaceKind::P0: return "P0";
        case SpaceKind::RT0: return "RT0";
        case SpaceKind::P1Bubble: return "P1-bubble";
    }
    return "?";
}

FunctionSpace::FunctionSpace(const Mesh& mesh, SpaceKind kind, int vector_dim)
    : mesh_(&mesh), kind_(kind), vector_dim_(vector_dim) {
    require(vector_dim >= 1 && vector_dim <= 2, "vector_dim must be 1 or 2");
    switch (kind) {
        case SpaceKind::P1: ndof_ = vector_dim * mesh.num_vertices(); break;
        case SpaceKind::DGP1: ndof_ = vector_dim * 3 * mesh.num_elements(); break;
        case SpaceKind::P0: ndof_ = vector_dim * mesh.num_elements(); break;
        case SpaceKind::RT0:
            require(vector_dim == 1, "RT0 carries vector values through scalar face dofs");
            ndof_ = mesh.num_faces();
            break;
        case SpaceKind::P1Bubble:
            ndof_ = vector_dim * (mesh.num_vertices() + mesh.num_elements());
            break;
    }
}

int FunctionSpace::vertex_dof(int v, int comp) const {
    return v * vector_dim_ + comp;
}

int FunctionSpace::element_dof(int e, int local, int comp) const {
    if (kind_ == SpaceKind::P0) return e * vector_dim_ + comp;
    return (3 * e + local) * vector_dim_ + comp;
}

int FunctionSpace::bubble_dof(int e, int comp) const {
    return vector_dim_ * mesh_->num_vertices() + e * vector_dim_ + comp;
}

int FunctionSpace::face_dof(int f) const { return f; }

Field::Field(const FunctionSpace& s, Vector c) : space(&s), coeffs(std::move(c)) {
    require(coeffs.size() == s.ndof(), "field coefficient length does not match space");
}

std::array<Vec2, 3> p1_gradients(const Mesh& mesh, int e) {
    const auto& el = mesh.element(e);
    const double inv2A = 0.5 / mesh.area(e);
    std::array<Vec2, 3> g;
    for (int i = 0; i < 3; ++i) {
        const Vec2 edge = mesh.vertex(el[(i + 2) % 3]) - mesh.vertex(el[(i + 1) % 3]);
        g[i] = edge.perp() * inv2A;
    }
    return g;
}

namespace {

Vec2 bary_to_point(const Mesh& mesh, int e, const std::array<double, 3>& b) {
    const auto& el = mesh.element(e);
    return mesh.vertex(el[0]) * b[0] + mesh.vertex(el[1]) * b[1] + mesh.vertex(el[2]) * b[2];
}

int opposite_vertex(const Mesh& mesh, int e, int face) {
    const auto& ef = mesh.element_faces(e);
    for (int k = 0; k < 3; ++k)
        if (ef[k] == face) return mesh.element(e)[(k + 2) % 3];
    throw InputError("face does not belong to element");
}

} // namespace

ScalarEval evaluate_scalar(const Field& f, int e, const std::array<double, 3>& bary, int comp) {
    const FunctionSpace& sp = *f.space;
    const Mesh& mesh = sp.mesh();
    require(e >= 0 && e < mesh.num_elements(), "evaluate: element index out of range");
    ScalarEval out;
    switch (sp.kind()) {
        case SpaceKind::P0:
            out.value = f.coeffs[sp.element_dof(e, 0, comp)];
            return out;
        case SpaceKind::DGP1: {
            const auto grads = p1_gradients(mesh, e);
            for (int i = 0; i < 3; ++i) {
                const double c = f.coeffs[sp.element_dof(e, i, comp)];
                out.value += c * bary[i];
                out.gradient += grads[i] * c;
            }
            return out;
        }
        case SpaceKind::P1: {
            const auto grads = p1_gradients(mesh, e);
            const auto& el = mesh.element(e);
            for (int i = 0; i < 3; ++i) {
                const double c = f.coeffs[sp.vertex_dof(el[i], comp)];
                out.value += c * bary[i];
                out.gradient += grads[i] * c;
            }
            return out;
        }
        case SpaceKind::P1Bubble: {
            const auto grads = p1_gradients(mesh, e);
            const auto& el = mesh.element(e);
            for (int i = 0; i < 3; ++i) {
                const double c = f.coeffs[sp.vertex_dof(el[i], comp)];
                out.value += c * bary[i];
                out.gradient += grads[i] * c;
            }
            const double cb = f.coeffs[sp.bubble_dof(e, comp)];
            out.value += cb * 27.0 * bary[0] * bary[1] * bary[2];
            out.gradient += cb * 27.0 *
                            (grads[0] * (bary[1] * bary[2]) + grads[1] * (bary[0] * bary[2]) +
                             grads[2] * (bary[0] * bary[1]));
            return out;
        }
        case SpaceKind::RT0:
            throw InputError("evaluate_scalar: RT0 is vector-valued");
    }
    return out;
}

VectorEval evaluate_vector(const Field& f, int e, const std::array<double, 3>& bary) {
    const FunctionSpace& sp = *f.space;
    const Mesh& mesh = sp.mesh();
    require(e >= 0 && e < mesh.num_elements(), "evaluate: element index out of range");
    VectorEval out;
    if (sp.kind() == SpaceKind::RT0) {
        const Vec2 x = bary_to_point(mesh, e, bary);
        const double A = mesh.area(e);
        for (int k = 0; k < 3; ++k) {
            const int fid = mesh.element_faces(e)[k];
            const Face& face = mesh.face(fid);
            const double s = mesh.face_sign(e, fid);
            const double c = f.coeffs[sp.face_dof(fid)];
            const Vec2 pop = mesh.vertex(opposite_vertex(mesh, e, fid));
            out.value += (x - pop) * (c * s * face.measure / (2.0 * A));
            out.divergence += c * s * face.measure / A;
        }
        return out;
    }
    require(sp.vector_dim() == 2, "evaluate_vector needs a 2-vector space");
    for (int comp = 0; comp < 2; ++comp) {
        const ScalarEval se = evaluate_scalar(f, e, bary, comp);
        (comp == 0 ? out.value.x : out.value.y) = se.value;
        out.divergence += comp == 0 ? se.gradient.x : se.gradient.y;
    }
    return out;
}

Field interpolate(const std::function<double(Vec2)>& f, const FunctionSpace& space) {
    require(space.vector_dim() == 1 && space.kind() != SpaceKind::RT0,
            "interpolate: scalar space expected");
    const Mesh& mesh = space.mesh();
    Field out(space);
    switch (space.kind()) {
        case SpaceKind::P1:
            for (int v = 0; v < mesh.num_vertices(); ++v)
                out.coeffs[space.vertex_dof(v)] = f(mesh.vertex(v));
            break;
        case SpaceKind::DGP1:
            for (int e = 0; e < mesh.num_elements(); ++e)
                for (int i = 0; i < 3; ++i)
                    out.coeffs[space.element_dof(e, i)] = f(mesh.vertex(mesh.element(e)[i]));
            break;
        case SpaceKind::P0:
            for (int e = 0; e < mesh.num_elements(); ++e)
                out.coeffs[space.element_dof(e, 0)] = f(mesh.centroid(e));
            break;
        case SpaceKind::P1Bubble:
            for (int v = 0; v < mesh.num_vertices(); ++v)
                out.coeffs[space.vertex_dof(v)] = f(mesh.vertex(v));
            for (int e = 0; e < mesh.num_elements(); ++e) {
                const auto& el = mesh.element(e);
                const double p1_at_c = (out.coeffs[space.vertex_dof(el[0])] +
                                        out.coeffs[space.vertex_dof(el[1])] +
                                        out.coeffs[space.vertex_dof(el[2])]) /
                                       3.0;
                out.coeffs[space.bubble_dof(e)] = f(mesh.centroid(e)) - p1_at_c;
            }
            break;
        default: break;
    }
    return out;
}

Field interpolate_vector(const std::function<Vec2(Vec2)>& f, const FunctionSpace& space) {
    const Mesh& mesh = space.mesh();
    Field out(space);
    if (space.kind() == SpaceKind::RT0) {
        const EdgeRule& rule = edge_rule(2);
        for (int fid = 0; fid < mesh.num_faces(); ++fid) {
            const Face& face = mesh.face(fid);
            const Vec2 a = mesh.vertex(face.v0), b = mesh.vertex(face.v1);
            double flux = 0.0;
            for (const auto& q : rule.points)
                flux += q.weight * f(a + (b - a) * q.t).dot(face.normal);
            out.coeffs[space.face_dof(fid)] = flux;  // mean normal component
        }
        return out;
    }
    require(space.vector_dim() == 2, "interpolate_vector needs RT0 or a 2-vector space");
    for (int comp = 0; comp < 2; ++comp) {
        auto fc = [&](Vec2 x) { double v = comp == 0 ? f(x).x : f(x).y; return v; };
        switch (space.kind()) {
            case SpaceKind::P1:
                for (int v = 0; v < mesh.num_vertices(); ++v)
                    out.coeffs[space.vertex_dof(v, comp)] = fc(mesh.vertex(v));
                break;
            case SpaceKind::P1Bubble:
                for (int v = 0; v < mesh.num_vertices(); ++v)
                    out.coeffs[space.vertex_dof(v, comp)] = fc(mesh.vertex(v));
                for (int e = 0; e < mesh.num_elements(); ++e) {
                    const auto& el = mesh.element(e);
                    const double p1_at_c =
                        (out.coeffs[space.vertex_dof(el[0], comp)] +
                         out.coeffs[space.vertex_dof(el[1], comp)] +
                         out.coeffs[space.vertex_dof(el[2], comp)]) /
                        3.0;
                    out.coeffs[space.bubble_dof(e, comp)] = fc(mesh.centroid(e)) - p1_at_c;
                }
                break;
            case SpaceKind::DGP1:
                for (int e = 0; e < mesh.num_elements(); ++e)
                    for (int i = 0; i < 3; ++i)
                        out.coeffs[space.element_dof(e, i, comp)] =
                            fc(mesh.vertex(mesh.element(e)[i]));
                break;
            case SpaceKind::P0:
                for (int e = 0; e < mesh.num_elements(); ++e)
                    out.coeffs[space.element_dof(e, 0, comp)] = fc(mesh.centroid(e));
                break;
            default: break;
        }
    }
    return out;
}

double integrate(const Field& f) {
    double total = 0.0;
    const Mesh& mesh = f.space->mesh();
    // Centroid value times area is exact for every affine-per-element space
    // here (the bubble integrates to 9/20 A, handled separately).
    for (int e = 0; e < mesh.num_elements(); ++e) {
        double v = evaluate_scalar(f, e, {1.0 / 3, 1.0 / 3, 1.0 / 3}).value;
        if (f.space->kind() == SpaceKind::P1Bubble) {
            const double cb = f.coeffs[f.space->bubble_dof(e)];
            v += cb * (9.0 / 20.0 - 1.0);  // replace centroid bubble value by its mean
        }
        total += v * mesh.area(e);
    }
    return total;
}

double integrate(const Field& f, Subdomain sd) {
    double total = 0.0;
    const Mesh& mesh = f.space->mesh();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.subdomain(e) != sd) continue;
        double v = evaluate_scalar(f, e, {1.0 / 3, 1.0 / 3, 1.0 / 3}).value;
        if (f.space->kind() == SpaceKind::P1Bubble)
            v += f.coeffs[f.space->bubble_dof(e)] * (9.0 / 20.0 - 1.0);
        total += v * mesh.area(e);
    }
    return total;
}

} // namespace menisim
