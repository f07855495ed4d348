#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "potflow/bers_continuation.hpp"

namespace potflow {

struct PropertyCheck {
  std::string name;
  bool passed;
  double value;
  double limit;
  std::string note;
};

/// Property suite on a configured problem: closure round trips, ellipticity,
/// finite-difference checks of the gradient and Hessian, Hessian symmetry,
/// convergence, uniqueness from two starts, monotone energy, obstacle mass
/// flux, and, for certified solutions, an inactive cut-off and an exact
/// Bernoulli closure.
std::vector<PropertyCheck> verify_problem(const ProblemData& data, double theta,
                                          double q_infinity, std::uint64_t seed = 20240601);

/// Relative error of the directional derivative g.d against a fourth-order
/// central difference of the energy.
double fd_gradient_error(const EnergyModel& model, const FlowState& s,
                         const std::vector<double>& direction, double step);

/// ||H d - D_d g|| / ||H d|| with D_d g a fourth-order central difference.
double fd_hessian_error(const EnergyModel& model, const FlowState& s,
                        const std::vector<double>& direction, double step);

}  // namespace potflow
