#pragma once

#include <iosfwd>
#include <string>

#include "recon/mesh.hpp"

namespace recon {

/// Plain-text "tri-mesh v1" format:
///
///     tri-mesh v1
///     nodes N
///     x y                (N lines)
///     triangles T
///     i j k region       (T lines)
///     boundary B
///     i j label          (B lines)
///
/// Indices are 0-based. Lines starting with '#' are comments; the writer
/// emits "# boundary-circle cx cy r" for disk meshes and the reader restores
/// the circle from it.
void write_mesh(const TriMesh& mesh, std::ostream& out);
void write_mesh(const TriMesh& mesh, const std::string& path);

/// Throws ParseError (with line number) on malformed input and
/// ValidationError when the parsed mesh violates a TriMesh invariant.
TriMesh read_mesh(std::istream& in);
TriMesh read_mesh(const std::string& path);

}  // namespace recon
