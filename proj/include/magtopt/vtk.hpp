#pragma once

#include <string>
#include <utility>
#include <vector>

#include "magtopt/mesh.hpp"

namespace magtopt::io {

using NamedField = std::pair<std::string, std::vector<double>>;

/// Legacy ASCII VTK unstructured grid. The title line carries `header`.
std::string vtk_string(const mesh::TriMesh& m, const std::string& header, const std::vector<NamedField>& point_data,
                       const std::vector<NamedField>& cell_data);
void write_vtk(const std::string& path, const mesh::TriMesh& m, const std::string& header,
               const std::vector<NamedField>& point_data, const std::vector<NamedField>& cell_data);

}  // namespace magtopt::io
