#include "recon/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "recon/errors.hpp"

namespace recon {

void write_mesh(const TriMesh& mesh, std::ostream& out) {
  out << "tri-mesh v1\n";
  out << std::setprecision(17);
  if (const auto& c = mesh.circle()) {
    out << "# boundary-circle " << c->center.x << ' ' << c->center.y << ' ' << c->radius << '\n';
  }
  out << "nodes " << mesh.num_nodes() << '\n';
  for (const auto& p : mesh.nodes()) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.num_triangles() << '\n';
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.regions()[t] << '\n';
  }
  out << "boundary " << mesh.num_boundary_edges() << '\n';
  for (const auto& e : mesh.boundary_edges()) {
    out << e.nodes[0] << ' ' << e.nodes[1] << ' ' << e.label << '\n';
  }
}

void write_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_mesh(mesh, out);
  if (!out) throw IoError("failed writing mesh to '" + path + "'");
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty, non-comment line; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      if (line[first] == '#') {
        comments_.emplace_back(line.substr(first + 1), number_);
        continue;
      }
      return true;
    }
    return false;
  }

  std::string expect(const char* what) {
    std::string line;
    if (!next(line)) throw ParseError(std::string("unexpected end of file, expected ") + what, number_ + 1);
    return line;
  }

  int number() const noexcept { return number_; }
  const std::vector<std::pair<std::string, int>>& comments() const noexcept { return comments_; }

 private:
  std::istream& in_;
  int number_ = 0;
  std::vector<std::pair<std::string, int>> comments_;
};

std::size_t parse_section(LineReader& reader, const std::string& keyword) {
  std::istringstream ss(reader.expect(keyword.c_str()));
  std::string word;
  long long count = -1;
  if (!(ss >> word) || word != keyword || !(ss >> count) || count < 0) {
    throw ParseError("expected '" + keyword + " <count>'", reader.number());
  }
  std::string extra;
  if (ss >> extra) throw ParseError("trailing tokens after section header", reader.number());
  return static_cast<std::size_t>(count);
}

template <typename... T>
void parse_row(LineReader& reader, const char* what, T&... values) {
  std::istringstream ss(reader.expect(what));
  if (!(... && static_cast<bool>(ss >> values))) {
    throw ParseError(std::string("malformed ") + what + " row", reader.number());
  }
  std::string extra;
  if (ss >> extra) throw ParseError(std::string("trailing tokens in ") + what + " row", reader.number());
}

}  // namespace

TriMesh read_mesh(std::istream& in) {
  LineReader reader(in);
  {
    const std::string header = reader.expect("header");
    std::istringstream ss(header);
    std::string a, b;
    ss >> a >> b;
    if (a != "tri-mesh" || b != "v1") throw ParseError("expected header 'tri-mesh v1'", reader.number());
  }

  const std::size_t n_nodes = parse_section(reader, "nodes");
  std::vector<Point> nodes(n_nodes);
  for (auto& p : nodes) parse_row(reader, "node", p.x, p.y);

  const std::size_t n_tris = parse_section(reader, "triangles");
  std::vector<std::array<int, 3>> tris(n_tris);
  std::vector<int> regions(n_tris);
  for (std::size_t t = 0; t < n_tris; ++t) {
    long long i, j, k, r;
    parse_row(reader, "triangle", i, j, k, r);
    for (long long v : {i, j, k}) {
      if (v < 0 || v >= static_cast<long long>(n_nodes)) {
        throw ParseError("node index " + std::to_string(v) + " out of range", reader.number());
      }
    }
    if (r < 0) throw ParseError("negative region id", reader.number());
    tris[t] = {static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)};
    regions[t] = static_cast<int>(r);
  }

  const std::size_t n_bnd = parse_section(reader, "boundary");
  std::vector<BoundaryEdge> boundary(n_bnd);
  for (auto& e : boundary) {
    long long i, j, label;
    parse_row(reader, "boundary", i, j, label);
    for (long long v : {i, j}) {
      if (v < 0 || v >= static_cast<long long>(n_nodes)) {
        throw ParseError("node index " + std::to_string(v) + " out of range", reader.number());
      }
    }
    e = {{static_cast<int>(i), static_cast<int>(j)}, static_cast<int>(label)};
  }
  std::string rest;
  if (reader.next(rest)) throw ParseError("unexpected content after boundary section", reader.number());

  std::optional<Circle> circle;
  for (const auto& [text, line] : reader.comments()) {
    std::istringstream ss(text);
    std::string tag;
    if (ss >> tag && tag == "boundary-circle") {
      Circle c;
      if (!(ss >> c.center.x >> c.center.y >> c.radius) || !(c.radius > 0.0)) {
        throw ParseError("malformed boundary-circle annotation", line);
      }
      circle = c;
    }
  }
  return TriMesh(std::move(nodes), std::move(tris), std::move(boundary), std::move(regions), circle);
}

TriMesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_mesh(in);
}

}  // namespace recon
