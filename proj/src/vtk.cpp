#include "magtopt/vtk.hpp"

#include <fmt/format.h>

#include <stdexcept>

#include "magtopt/util.hpp"

namespace magtopt::io {

namespace {

void append_fields(std::string& out, const std::vector<NamedField>& fields, std::size_t n) {
  for (const auto& [name, values] : fields) {
    if (values.size() != n) throw std::invalid_argument("vtk field '" + name + "' has the wrong length");
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("vtk field names may not contain whitespace");
    out += fmt::format("SCALARS {} double 1\nLOOKUP_TABLE default\n", name);
    for (double v : values) out += fmt17(v) + "\n";
  }
}

}  // namespace

std::string vtk_string(const mesh::TriMesh& m, const std::string& header, const std::vector<NamedField>& point_data,
                       const std::vector<NamedField>& cell_data) {
  std::string title = header;
  for (char& c : title)
    if (c == '\n' || c == '\r') c = ' ';
  if (title.size() > 255) title.resize(255);
  std::string out = "# vtk DataFile Version 3.0\n" + title + "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += fmt::format("POINTS {} double\n", m.nodes.size());
  for (const auto& p : m.nodes) out += fmt17(p.x) + " " + fmt17(p.y) + " 0\n";
  out += fmt::format("CELLS {} {}\n", m.tris.size(), 4 * m.tris.size());
  for (const auto& t : m.tris) out += fmt::format("3 {} {} {}\n", t[0], t[1], t[2]);
  out += fmt::format("CELL_TYPES {}\n", m.tris.size());
  for (std::size_t i = 0; i < m.tris.size(); ++i) out += "5\n";
  if (!point_data.empty()) {
    out += fmt::format("POINT_DATA {}\n", m.nodes.size());
    append_fields(out, point_data, m.nodes.size());
  }
  std::vector<NamedField> cells = cell_data;
  std::vector<double> region(m.tris.size());
  for (std::size_t i = 0; i < m.tris.size(); ++i) region[i] = static_cast<double>(m.regions[i]);
  cells.emplace_back("region", std::move(region));
  out += fmt::format("CELL_DATA {}\n", m.tris.size());
  append_fields(out, cells, m.tris.size());
  return out;
}

void write_vtk(const std::string& path, const mesh::TriMesh& m, const std::string& header,
               const std::vector<NamedField>& point_data, const std::vector<NamedField>& cell_data) {
  write_text_file(path, vtk_string(m, header, point_data, cell_data));
}

}  // namespace magtopt::io
