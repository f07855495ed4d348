#include "potflow/exterior_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "potflow/errors.hpp"

namespace potflow {

namespace {

using FaceKey = std::array<Index, 3>;

FaceKey face_key(int dim, std::span<const Index> v) {
  FaceKey k{v[0], v[1], dim == 3 ? v[2] : Index{-1}};
  std::sort(k.begin(), k.begin() + dim);
  return k;
}

std::array<Vec3, 4> cell_points(const std::vector<Vec3>& verts,
                                 const std::array<Index, 4>& c, int dim) {
  std::array<Vec3, 4> p{};
  for (int i = 0; i <= dim; ++i) p[i] = verts[c[i]];
  return p;
}

void orient_positive(int dim, const std::vector<Vec3>& verts, std::array<Index, 4>& c) {
  auto p = cell_points(verts, c, dim);
  if (signed_measure(dim, {p.data(), static_cast<std::size_t>(dim + 1)}) < 0.0)
    std::swap(c[dim - 1], c[dim]);
}

std::vector<double> radial_nodes(double inner, double outer, int n, double grading) {
  std::vector<double> r(n + 1);
  if (grading == 1.0) {
    for (int k = 0; k <= n; ++k) r[k] = inner + (outer - inner) * k / n;
  } else {
    const double d0 = (outer - inner) * (grading - 1.0) / (std::pow(grading, n) - 1.0);
    for (int k = 0; k <= n; ++k)
      r[k] = inner + d0 * (std::pow(grading, k) - 1.0) / (grading - 1.0);
  }
  r[0] = inner;
  r[n] = outer;
  return r;
}

const char* tag_name(BoundaryTag t) {
  return t == BoundaryTag::Obstacle ? "OBSTACLE" : "OUTER";
}

}  // namespace

double signed_measure(int dim, std::span<const Vec3> p) {
  if (dim == 2) {
    const Vec3 a = p[1] - p[0], b = p[2] - p[0];
    return 0.5 * (a[0] * b[1] - a[1] * b[0]);
  }
  return dot(p[1] - p[0], cross(p[2] - p[0], p[3] - p[0])) / 6.0;
}

double simplex_quality(int dim, std::span<const Vec3> p) {
  const double m = std::abs(signed_measure(dim, p));
  if (m == 0.0) return 0.0;
  if (dim == 2) {
    const double a = norm(p[1] - p[0]), b = norm(p[2] - p[1]), c = norm(p[0] - p[2]);
    const double r_in = 2.0 * m / (a + b + c);
    const double r_circ = a * b * c / (4.0 * m);
    return 2.0 * r_in / r_circ;
  }
  double faces = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Vec3& x = p[(i + 1) % 4];
    const Vec3& y = p[(i + 2) % 4];
    const Vec3& z = p[(i + 3) % 4];
    faces += 0.5 * norm(cross(y - x, z - x));
  }
  const double r_in = 3.0 * m / faces;
  const Vec3 a = p[1] - p[0], b = p[2] - p[0], c = p[3] - p[0];
  const Vec3 num = dot(a, a) * cross(b, c) + dot(b, b) * cross(c, a) + dot(c, c) * cross(a, b);
  const double r_circ = norm(num) / (2.0 * std::abs(dot(a, cross(b, c))));
  return 3.0 * r_in / r_circ;
}

ExteriorMesh::ExteriorMesh(int dim, std::vector<Vec3> vertices,
                           std::vector<std::array<Index, 4>> cells,
                           std::vector<BoundaryFace> boundary, MeshValidation opts)
    : dim_(dim),
      vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      boundary_(std::move(boundary)) {
  validate(opts);
}

void ExteriorMesh::validate(const MeshValidation& opts) {
  if (dim_ != 2 && dim_ != 3) throw ValidationError("dimension must be 2 or 3");
  if (cells_.empty()) throw ValidationError("mesh has no cells");
  const auto nv = static_cast<Index>(vertices_.size());
  for (const auto& v : vertices_)
    if (dim_ == 2 && v[2] != 0.0) throw ValidationError("2D vertex with nonzero z");

  std::map<FaceKey, std::pair<Index, Index>> faces;  // key -> (cell, cell or -1)
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& cell = cells_[c];
    for (int i = 0; i <= dim_; ++i)
      if (cell[i] < 0 || cell[i] >= nv)
        throw ValidationError("cell " + std::to_string(c) + " has an out-of-range vertex");
    auto p = cell_points(vertices_, cell, dim_);
    std::span<const Vec3> ps(p.data(), dim_ + 1);
    if (!(signed_measure(dim_, ps) > 0.0))
      throw ValidationError("orientation: cell " + std::to_string(c) +
                            " is not positively oriented");
    if (simplex_quality(dim_, ps) < opts.quality_floor)
      throw ValidationError("quality: cell " + std::to_string(c) + " below quality floor");
    for (int i = 0; i <= dim_; ++i) {
      std::array<Index, 3> fv{-1, -1, -1};
      int n = 0;
      for (int j = 0; j <= dim_; ++j)
        if (j != i) fv[n++] = cell[j];
      const FaceKey key = face_key(dim_, fv);
      auto [it, inserted] = faces.try_emplace(key, static_cast<Index>(c), Index{-1});
      if (!inserted) {
        if (it->second.second != -1)
          throw ValidationError("face shared by more than two cells");
        it->second.second = static_cast<Index>(c);
      }
    }
  }

  interior_faces_.clear();
  std::map<FaceKey, Index> open;
  for (const auto& [key, cells] : faces) {
    if (cells.second == -1) {
      open.emplace(key, cells.first);
    } else {
      interior_faces_.push_back({key, cells.first, cells.second});
    }
  }
  if (open.size() != boundary_.size())
    throw ValidationError("tags: " + std::to_string(open.size()) + " boundary faces but " +
                          std::to_string(boundary_.size()) + " tagged");
  boundary_cell_.assign(boundary_.size(), -1);
  outer_vertex_.assign(vertices_.size(), false);
  std::map<FaceKey, int> seen;
  obstacle_radius_ = 0.0;
  outer_radius_ = 0.0;
  for (std::size_t f = 0; f < boundary_.size(); ++f) {
    const auto& bf = boundary_[f];
    for (int i = 0; i < dim_; ++i)
      if (bf.v[i] < 0 || bf.v[i] >= nv)
        throw ValidationError("boundary face with out-of-range vertex");
    const FaceKey key = face_key(dim_, bf.v);
    auto it = open.find(key);
    if (it == open.end())
      throw ValidationError("tags: face " + std::to_string(f) + " is not on the boundary");
    if (++seen[key] > 1) throw ValidationError("tags: boundary face tagged twice");
    boundary_cell_[f] = it->second;
    for (int i = 0; i < dim_; ++i) {
      const double r = norm(vertices_[bf.v[i]]);
      if (bf.tag == BoundaryTag::Outer) {
        outer_vertex_[bf.v[i]] = true;
        outer_radius_ = std::max(outer_radius_, r);
      } else {
        obstacle_radius_ = std::max(obstacle_radius_, r);
      }
    }
  }
  for (const auto& bf : boundary_) {
    if (bf.tag != BoundaryTag::Outer) continue;
    for (int i = 0; i < dim_; ++i)
      if (std::abs(norm(vertices_[bf.v[i]]) - outer_radius_) >
          opts.sphere_tolerance * outer_radius_)
        throw ValidationError("outer: OUTER vertex off the sphere |x| = R");
  }
}

double ExteriorMesh::cell_volume(std::size_t c) const {
  auto p = cell_points(vertices_, cells_[c], dim_);
  return signed_measure(dim_, {p.data(), static_cast<std::size_t>(dim_ + 1)});
}

Vec3 ExteriorMesh::barycenter(std::size_t c) const {
  Vec3 s{0, 0, 0};
  for (int i = 0; i <= dim_; ++i) s = s + vertices_[cells_[c][i]];
  return (1.0 / (dim_ + 1)) * s;
}

double ExteriorMesh::face_measure(std::span<const Index> f) const {
  if (dim_ == 2) return norm(vertices_[f[1]] - vertices_[f[0]]);
  return 0.5 * norm(cross(vertices_[f[1]] - vertices_[f[0]], vertices_[f[2]] - vertices_[f[0]]));
}

Vec3 ExteriorMesh::face_centroid(std::span<const Index> f) const {
  Vec3 s{0, 0, 0};
  for (int i = 0; i < dim_; ++i) s = s + vertices_[f[i]];
  return (1.0 / dim_) * s;
}

std::vector<Vec3> boundary_normals(const ExteriorMesh& mesh) {
  const int dim = mesh.dim();
  const auto& verts = mesh.vertices();
  std::vector<Vec3> normals;
  normals.reserve(mesh.boundary().size());
  for (std::size_t f = 0; f < mesh.boundary().size(); ++f) {
    const auto& bf = mesh.boundary()[f];
    Vec3 n;
    if (dim == 2) {
      const Vec3 t = verts[bf.v[1]] - verts[bf.v[0]];
      n = normalized(Vec3{t[1], -t[0], 0.0});
    } else {
      n = normalized(cross(verts[bf.v[1]] - verts[bf.v[0]], verts[bf.v[2]] - verts[bf.v[0]]));
    }
    // Point away from the vertex of the adjacent cell opposite the face.
    const auto& cell = mesh.cells()[mesh.boundary_cell(f)];
    for (int i = 0; i <= dim; ++i) {
      const Index v = cell[i];
      if (std::find(bf.v.begin(), bf.v.begin() + dim, v) != bf.v.begin() + dim) continue;
      if (dot(n, verts[v] - verts[bf.v[0]]) > 0.0) n = -1.0 * n;
      break;
    }
    normals.push_back(n);
  }
  return normals;
}

ExteriorMesh generate_annulus_2d(double inner, double outer, int n_radial, int n_angular,
                                 double grading) {
  if (!(inner > 0.0) || !(outer > inner))
    throw GeometryError("annulus needs 0 < inner_radius < outer_radius");
  if (n_radial < 4 || n_angular < 4)
    throw GeometryError("annulus needs n_radial, n_angular >= 4");
  if (!(grading >= 1.0)) throw GeometryError("grading must be >= 1");
  const auto r = radial_nodes(inner, outer, n_radial, grading);
  std::vector<Vec3> verts;
  verts.reserve((n_radial + 1) * n_angular);
  for (int k = 0; k <= n_radial; ++k)
    for (int j = 0; j < n_angular; ++j) {
      const double t = 2.0 * std::numbers::pi * j / n_angular;
      verts.push_back({r[k] * std::cos(t), r[k] * std::sin(t), 0.0});
    }
  auto id = [n_angular](int k, int j) {
    return static_cast<Index>(k * n_angular + (j % n_angular));
  };
  std::vector<std::array<Index, 4>> cells;
  cells.reserve(2 * n_radial * n_angular);
  for (int k = 0; k < n_radial; ++k)
    for (int j = 0; j < n_angular; ++j) {
      const Index a = id(k, j), b = id(k, j + 1), c = id(k + 1, j), d = id(k + 1, j + 1);
      if ((k + j) % 2 == 0) {
        cells.push_back({a, b, d, -1});
        cells.push_back({a, d, c, -1});
      } else {
        cells.push_back({a, b, c, -1});
        cells.push_back({b, d, c, -1});
      }
    }
  for (auto& c : cells) orient_positive(2, verts, c);
  std::vector<BoundaryFace> boundary;
  for (int j = 0; j < n_angular; ++j) {
    boundary.push_back({{id(0, j), id(0, j + 1), -1}, BoundaryTag::Obstacle});
  }
  for (int j = 0; j < n_angular; ++j) {
    boundary.push_back({{id(n_radial, j), id(n_radial, j + 1), -1}, BoundaryTag::Outer});
  }
  return ExteriorMesh(2, std::move(verts), std::move(cells), std::move(boundary));
}

ExteriorMesh generate_disk_2d(double radius, int n_radial, int n_angular) {
  if (!(radius > 0.0)) throw GeometryError("disk radius must be positive");
  if (n_radial < 1 || n_angular < 4) throw GeometryError("disk needs n_radial >= 1, n_angular >= 4");
  std::vector<Vec3> verts{{0.0, 0.0, 0.0}};
  for (int k = 1; k <= n_radial; ++k)
    for (int j = 0; j < n_angular; ++j) {
      const double t = 2.0 * std::numbers::pi * j / n_angular;
      const double rk = radius * k / n_radial;
      verts.push_back({rk * std::cos(t), rk * std::sin(t), 0.0});
    }
  auto id = [n_angular](int k, int j) {
    return static_cast<Index>(1 + (k - 1) * n_angular + (j % n_angular));
  };
  std::vector<std::array<Index, 4>> cells;
  for (int j = 0; j < n_angular; ++j) cells.push_back({0, id(1, j), id(1, j + 1), -1});
  for (int k = 1; k < n_radial; ++k)
    for (int j = 0; j < n_angular; ++j) {
      const Index a = id(k, j), b = id(k, j + 1), c = id(k + 1, j), d = id(k + 1, j + 1);
      cells.push_back({a, b, d, -1});
      cells.push_back({a, d, c, -1});
    }
  for (auto& c : cells) orient_positive(2, verts, c);
  std::vector<BoundaryFace> boundary;
  for (int j = 0; j < n_angular; ++j)
    boundary.push_back({{id(n_radial, j), id(n_radial, j + 1), -1}, BoundaryTag::Outer});
  return ExteriorMesh(2, std::move(verts), std::move(cells), std::move(boundary));
}

Icosphere make_icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere s;
  s.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : s.vertices) v = normalized(v);
  s.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<Index, Index>, Index> midpoint;
    auto mid = [&](Index a, Index b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      s.vertices.push_back(normalized(0.5 * (s.vertices[a] + s.vertices[b])));
      const auto idx = static_cast<Index>(s.vertices.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<Index, 3>> next;
    next.reserve(4 * s.faces.size());
    for (const auto& f : s.faces) {
      const Index a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    s.faces = std::move(next);
  }
  return s;
}

ExteriorMesh generate_shell_3d(double inner, double outer, int level, int n_radial,
                               double grading, int obstacle_layers) {
  if (!(inner > 0.0) || !(outer > inner))
    throw GeometryError("shell needs 0 < inner_radius < outer_radius");
  if (level < 0 || level > 3) throw GeometryError("refinement_level must be in [0, 3]");
  if (n_radial < 1) throw GeometryError("shell needs n_radial >= 1");
  if (!(grading >= 1.0)) throw GeometryError("grading must be >= 1");
  const Icosphere sphere = make_icosphere(level);
  const auto ns = static_cast<Index>(sphere.vertices.size());
  const auto r = radial_nodes(inner, outer, n_radial, grading);
  std::vector<Vec3> verts;
  verts.reserve(ns * (n_radial + 1));
  for (int k = 0; k <= n_radial; ++k)
    for (const auto& d : sphere.vertices) verts.push_back(r[k] * d);

  std::vector<std::array<Index, 4>> cells;
  cells.reserve(3 * sphere.faces.size() * n_radial);
  for (int k = 0; k < n_radial; ++k) {
    const Index lo = k * ns, hi = (k + 1) * ns;
    for (auto f : sphere.faces) {
      std::sort(f.begin(), f.end());
      const Index a = lo + f[0], b = lo + f[1], c = lo + f[2];
      const Index A = hi + f[0], B = hi + f[1], C = hi + f[2];
      cells.push_back({a, b, c, A});
      cells.push_back({b, c, A, B});
      cells.push_back({c, A, B, C});
    }
  }
  for (auto& c : cells) orient_positive(3, verts, c);

  std::vector<BoundaryFace> boundary;
  for (const auto& f : sphere.faces)
    boundary.push_back({{f[0], f[2], f[1]}, BoundaryTag::Obstacle});
  for (const auto& f : sphere.faces)
    boundary.push_back({{n_radial * ns + f[0], n_radial * ns + f[1], n_radial * ns + f[2]},
                        BoundaryTag::Outer});
  ExteriorMesh mesh(3, std::move(verts), std::move(cells), std::move(boundary));

  ObstacleInterior body;
  body.radius = inner;
  const int layers = std::max(1, obstacle_layers);
  for (int l = 0; l < layers; ++l) {
    const double r0 = inner * l / layers, r1 = inner * (l + 1) / layers;
    for (const auto& f : sphere.faces)
      body.cells.push_back({r0, r1, {sphere.vertices[f[0]], sphere.vertices[f[1]],
                                     sphere.vertices[f[2]]}});
  }
  mesh.obstacle_interior = std::move(body);
  return mesh;
}

ExteriorMesh load_mesh(const std::filesystem::path& path, MeshValidation opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  int lineno = 0;
  std::string line;
  auto next_line = [&]() -> std::istringstream {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw ParseError(lineno + 1, "unexpected end of file");
  };
  int dim = 0;
  long nv = 0, nc = 0, nb = 0;
  {
    auto ls = next_line();
    if (!(ls >> dim >> nv >> nc >> nb)) throw ParseError(lineno, "header must be 'dim nv nc nb'");
    if (dim != 2 && dim != 3) throw ParseError(lineno, "dimension must be 2 or 3");
    if (nv <= 0 || nc <= 0 || nb < 0) throw ParseError(lineno, "bad counts in header");
  }
  std::vector<Vec3> verts(nv, Vec3{0, 0, 0});
  for (long i = 0; i < nv; ++i) {
    auto ls = next_line();
    for (int d = 0; d < dim; ++d)
      if (!(ls >> verts[i][d])) throw ParseError(lineno, "expected " + std::to_string(dim) + " coordinates");
  }
  std::vector<std::array<Index, 4>> cells(nc, {-1, -1, -1, -1});
  for (long i = 0; i < nc; ++i) {
    auto ls = next_line();
    for (int d = 0; d <= dim; ++d)
      if (!(ls >> cells[i][d])) throw ParseError(lineno, "expected " + std::to_string(dim + 1) + " cell indices");
  }
  std::vector<BoundaryFace> boundary(nb);
  for (long i = 0; i < nb; ++i) {
    auto ls = next_line();
    boundary[i].v = {-1, -1, -1};
    for (int d = 0; d < dim; ++d)
      if (!(ls >> boundary[i].v[d])) throw ParseError(lineno, "expected face vertex indices");
    std::string tag;
    if (!(ls >> tag)) throw ParseError(lineno, "missing boundary tag");
    if (tag == "OBSTACLE" || tag == "1") {
      boundary[i].tag = BoundaryTag::Obstacle;
    } else if (tag == "OUTER" || tag == "2") {
      boundary[i].tag = BoundaryTag::Outer;
    } else {
      throw ParseError(lineno, "unknown boundary tag '" + tag + "'");
    }
  }
  return ExteriorMesh(dim, std::move(verts), std::move(cells), std::move(boundary), opts);
}

void save_mesh(const ExteriorMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file " + path.string());
  const int dim = mesh.dim();
  out << dim << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << ' '
      << mesh.boundary().size() << '\n';
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) {
    for (int d = 0; d < dim; ++d) out << (d ? " " : "") << v[d];
    out << '\n';
  }
  for (const auto& c : mesh.cells()) {
    for (int d = 0; d <= dim; ++d) out << (d ? " " : "") << c[d];
    out << '\n';
  }
  for (const auto& f : mesh.boundary()) {
    for (int d = 0; d < dim; ++d) out << f.v[d] << ' ';
    out << tag_name(f.tag) << '\n';
  }
  if (!out) throw IoError("failed writing mesh file " + path.string());
}

}  // namespace potflow
