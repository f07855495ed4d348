#pragma once

#include <filesystem>
#include <string>

#include "potflow/energy_solver.hpp"

namespace potflow {

enum class FieldFormat { Vtk, Csv };

/// Legacy ASCII VTK unstructured grid. Point data: phi, psi. Cell data:
/// velocity, density (the cut-off density, equal to the Bernoulli density on
/// physical cells), mach = |u| / c(density), cutoff_active.
std::string fields_vtk(const EnergyModel& model, const FlowState& state);

/// One row per cell:
/// "cell,x,y,z,u_x,u_y,u_z,density,mach,mach_ratio,psi,cutoff_active".
std::string fields_csv(const EnergyModel& model, const FlowState& state);

/// Throws IoError when the file cannot be written.
void export_fields(const EnergyModel& model, const FlowState& state, FieldFormat format,
                   const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace potflow
