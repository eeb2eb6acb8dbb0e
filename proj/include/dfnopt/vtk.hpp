// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_VTK_HPP
#define DFNOPT_VTK_HPP

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dfnopt/geometry.hpp"
#include "dfnopt/io.hpp"
#include "dfnopt/meshing.hpp"

namespace dfnopt {

/// Legacy ASCII unstructured grid of one fracture mesh with a nodal field.
inline void write_vtk(std::ostream& os, const FractureMesh& mesh, const LocalFrame& frame, const Eigen::VectorXd& field,
                      const std::string& field_name = "head") {
  os << "# vtk DataFile Version 3.0\n";
  os << "fracture " << mesh.fracture_id << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.nodes.size() << " double\n";
  for (const auto& n : mesh.nodes) {
    const Vec3 g = frame.to_global(n);
    os << format_double(g.x()) << ' ' << format_double(g.y()) << ' ' << format_double(g.z()) << '\n';
  }
  os << "CELLS " << mesh.triangles.size() << ' ' << 4 * mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << mesh.triangles.size() << '\n';
  for (std::size_t k = 0; k < mesh.triangles.size(); ++k) os << "5\n";
  os << "POINT_DATA " << mesh.nodes.size() << '\n';
  os << "SCALARS " << field_name << " double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index k = 0; k < field.size(); ++k) os << format_double(field(k)) << '\n';
}

/// Multiblock index referencing the per-fracture files.
inline std::string vtm_index(const std::vector<std::string>& files) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\"?>\n";
  os << "<VTKFile type=\"vtkMultiBlockDataSet\" version=\"1.0\">\n  <vtkMultiBlockDataSet>\n";
  for (std::size_t k = 0; k < files.size(); ++k)
    os << "    <DataSet index=\"" << k << "\" file=\"" << files[k] << "\"/>\n";
  os << "  </vtkMultiBlockDataSet>\n</VTKFile>\n";
  return os.str();
}

/// RFC 4180 field quoting.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

}  // namespace dfnopt

#endif  // DFNOPT_VTK_HPP
