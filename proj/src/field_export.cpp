#include "potflow/field_export.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace potflow {
namespace {

double mach_number(const GasLaw& law, double speed_sq, double rho) {
  return std::sqrt(speed_sq) / law.sound_speed(rho);
}

}  // namespace

std::string fields_vtk(const EnergyModel& model, const FlowState& state) {
  const auto& mesh = model.mesh();
  const int nv = mesh.vertices_per_cell();
  const CellFields f = model.fields(state);
  std::ostringstream os;
  os.precision(17);
  os << "# vtk DataFile Version 3.0\n"
     << "potflow q_infinity=" << state.q_infinity << " theta=" << state.theta << "\n"
     << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& x : mesh.vertices()) os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
  os << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (nv + 1) << '\n';
  for (const auto& c : mesh.cells()) {
    os << nv;
    for (int i = 0; i < nv; ++i) os << ' ' << c[i];
    os << '\n';
  }
  os << "CELL_TYPES " << mesh.num_cells() << '\n';
  const int type = mesh.dim() == 2 ? 5 : 10;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) os << type << '\n';

  os << "POINT_DATA " << mesh.num_vertices() << '\n';
  os << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  for (double v : state.phi) os << v << '\n';
  os << "SCALARS psi double 1\nLOOKUP_TABLE default\n";
  for (const auto& x : mesh.vertices()) os << model.force().psi(x) << '\n';

  os << "CELL_DATA " << mesh.num_cells() << '\n';
  os << "VECTORS velocity double\n";
  for (const auto& u : f.velocity) os << u[0] << ' ' << u[1] << ' ' << u[2] << '\n';
  os << "SCALARS density double 1\nLOOKUP_TABLE default\n";
  for (double r : f.rho_tilde) os << r << '\n';
  os << "SCALARS mach double 1\nLOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    os << mach_number(model.law(), f.speed_sq[c], f.rho_tilde[c]) << '\n';
  os << "SCALARS cutoff_active int 1\nLOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) os << (f.cutoff_active[c] ? 1 : 0) << '\n';
  return os.str();
}

std::string fields_csv(const EnergyModel& model, const FlowState& state) {
  const auto& mesh = model.mesh();
  const CellFields f = model.fields(state);
  std::ostringstream os;
  os.precision(17);
  os << "cell,x,y,z,u_x,u_y,u_z,density,mach,mach_ratio,psi,cutoff_active\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const Vec3 x = mesh.barycenter(c);
    const Vec3& u = f.velocity[c];
    os << c << ',' << x[0] << ',' << x[1] << ',' << x[2] << ',' << u[0] << ',' << u[1] << ','
       << u[2] << ',' << f.rho_tilde[c] << ','
       << mach_number(model.law(), f.speed_sq[c], f.rho_tilde[c]) << ',' << f.mach_ratio[c]
       << ',' << model.disc().psi(c) << ',' << (f.cutoff_active[c] ? 1 : 0) << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

void export_fields(const EnergyModel& model, const FlowState& state, FieldFormat format,
                   const std::filesystem::path& path) {
  write_text(path, format == FieldFormat::Vtk ? fields_vtk(model, state)
                                              : fields_csv(model, state));
}

}  // namespace potflow
