#pragma once

#include <string>
#include <vector>

#include "menisim/mesh.hpp"
#include "menisim/spaces.hpp"

namespace menisim {

struct NamedField {
    std::string name;
    const Field* field = nullptr;
};

/// Legacy ASCII VTK (DataFile Version 3.0, UNSTRUCTURED_GRID). Nodal fields
/// go to POINT_DATA, elementwise fields to CELL_DATA; vector P1 fields are
/// written as point VECTORS, RT0 as cell VECTORS (centroid values). If any
/// dG field is present the grid is written as a discontinuous point cloud
/// (three private points per triangle) so per-element traces survive.
void write_vtk(const Mesh& mesh, const std::vector<NamedField>& fields, const std::string& path);

/// Append-safe CSV writer with a fixed schema per run and full double
/// precision; identical runs produce identical bytes.
class SeriesWriter {
public:
    SeriesWriter() = default;
    SeriesWriter(const std::string& path, std::vector<std::string> schema);
    ~SeriesWriter();
    SeriesWriter(SeriesWriter&&) noexcept;
    SeriesWriter& operator=(SeriesWriter&&) noexcept;

    void append(const std::vector<double>& row);
    void flush();
    const std::vector<std::string>& schema() const { return schema_; }

private:
    std::FILE* file_ = nullptr;
    std::vector<std::string> schema_;
};

/// Reader/writer for the $Nodes/$Elements subset of Gmsh MSH 2.2.
/// Triangles carry a physical tag mapped to the subdomain (1 = porous,
/// 2 = fluid); boundary lines carry a physical tag mapped to BoundaryTag
/// (1..6 in enum order). $PhysicalNames, when present, overrides the
/// numeric mapping by name. Clockwise triangles are reoriented on read.
Mesh read_msh(const std::string& path);
void write_msh(const Mesh& mesh, const std::string& path);

} // namespace menisim
