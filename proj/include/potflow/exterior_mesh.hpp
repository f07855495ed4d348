#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "potflow/types.hpp"

namespace potflow {

enum class BoundaryTag : int { Obstacle = 1, Outer = 2 };

/// A boundary facet: an edge (2D, v[2] unused) or a triangle (3D).
struct BoundaryFace {
  std::array<Index, 3> v;
  BoundaryTag tag;
};

/// Cone-shell segment {r s : r in [r0, r1], s in the spherical triangle spanned
/// by dirs}. Cells of this kind tile a ball exactly; they carry the obstacle
/// mass for Newtonian body forces.
struct SphericalCell {
  double r0;
  double r1;
  std::array<Vec3, 3> dirs;  // unit vectors
};

struct ObstacleInterior {
  double radius = 0.0;
  std::vector<SphericalCell> cells;
};

/// Interior facet shared by two cells.
struct InteriorFace {
  std::array<Index, 3> v;
  Index left;
  Index right;
};

struct MeshValidation {
  double quality_floor = 1e-3;    // inradius / circumradius, normalized to 1
  double sphere_tolerance = 1e-8;  // relative, for OUTER vertices
};

/// Simplicial P1 mesh of a truncated exterior domain
///   Omega_R = { x outside the obstacle, |x| < R }
/// with tagged obstacle (natural slip condition) and outer (Dirichlet)
/// boundaries. The constructor validates orientation, quality, and boundary
/// tagging, and builds face adjacency.
class ExteriorMesh {
 public:
  ExteriorMesh(int dim, std::vector<Vec3> vertices,
               std::vector<std::array<Index, 4>> cells,
               std::vector<BoundaryFace> boundary, MeshValidation opts = {});

  int dim() const { return dim_; }
  int vertices_per_cell() const { return dim_ + 1; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return cells_.size(); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<Index, 4>>& cells() const { return cells_; }
  const std::vector<BoundaryFace>& boundary() const { return boundary_; }
  const std::vector<InteriorFace>& interior_faces() const { return interior_faces_; }
  /// The unique cell adjacent to boundary face f.
  Index boundary_cell(std::size_t f) const { return boundary_cell_[f]; }

  double cell_volume(std::size_t c) const;
  Vec3 barycenter(std::size_t c) const;
  double face_measure(std::span<const Index> face) const;
  Vec3 face_centroid(std::span<const Index> face) const;
  std::span<const Index> face_vertices(const BoundaryFace& f) const {
    return {f.v.data(), static_cast<std::size_t>(dim_)};
  }

  /// Vertices touching an OUTER face.
  const std::vector<bool>& outer_vertex() const { return outer_vertex_; }

  /// Largest |x| over OBSTACLE / OUTER vertices (0 when absent).
  double obstacle_radius() const { return obstacle_radius_; }
  double outer_radius() const { return outer_radius_; }

  /// Interior of the obstacle, kept only for Newtonian body forces.
  std::optional<ObstacleInterior> obstacle_interior;

 private:
  void validate(const MeshValidation& opts);

  int dim_;
  std::vector<Vec3> vertices_;
  std::vector<std::array<Index, 4>> cells_;
  std::vector<BoundaryFace> boundary_;
  std::vector<InteriorFace> interior_faces_;
  std::vector<Index> boundary_cell_;
  std::vector<bool> outer_vertex_;
  double obstacle_radius_ = 0.0;
  double outer_radius_ = 0.0;
};

/// Signed measure (area in 2D, volume in 3D) of a simplex.
double signed_measure(int dim, std::span<const Vec3> pts);
/// Inradius / circumradius scaled so that the regular simplex scores 1.
double simplex_quality(int dim, std::span<const Vec3> pts);

/// Graded polar triangulation of inner <= |x| <= outer. Layer widths grow
/// geometrically by `grading` from the obstacle outwards.
ExteriorMesh generate_annulus_2d(double inner_radius, double outer_radius,
                                 int n_radial, int n_angular, double grading = 1.0);

/// Disk |x| <= radius with a central fan and only OUTER boundary; used as a
/// free-space reference.
ExteriorMesh generate_disk_2d(double radius, int n_radial, int n_angular);

/// Layered tetrahedral shell between two icospheres. Each prism between
/// layers is split into three tetrahedra with conforming diagonals. The
/// obstacle interior (ball of inner_radius) is attached for body forces.
ExteriorMesh generate_shell_3d(double inner_radius, double outer_radius,
                               int refinement_level, int n_radial,
                               double grading = 1.0, int obstacle_layers = 2);

/// Unit-sphere icosahedral subdivision: vertices and outward-oriented faces.
struct Icosphere {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 3>> faces;
};
Icosphere make_icosphere(int level);

/// Unit outward normals with respect to the flow region, one per boundary face.
std::vector<Vec3> boundary_normals(const ExteriorMesh& mesh);

/// ASCII format: "dim nv nc nb", nv coordinate lines, nc cell lines (0-based),
/// nb lines "face-vertex-indices TAG" with TAG in {OBSTACLE, OUTER}.
ExteriorMesh load_mesh(const std::filesystem::path& path, MeshValidation opts = {});
void save_mesh(const ExteriorMesh& mesh, const std::filesystem::path& path);

}  // namespace potflow
