#pragma once

#include <span>

#include "rsvol/grid.hpp"
#include "rsvol/model.hpp"
#include "rsvol/theta_scheme.hpp"

namespace rsvol {

/// Forward system in y = ln(K/S*), tau = T - t*, observed from state j*.
struct ForwardProblem {
  DiscreteModel model;
  ObservationSpec obs;
  int time_steps = 400;
  StepperConfig stepper{};

  TimeGrid time() const { return TimeGrid(obs.tau_star, time_steps); }
};

/// Component i at (y, tau) is C_{i j*}(K = S* e^y, t* + tau).
SolutionField solve_dupire(const ForwardProblem& p);

/// v = w_yy - w_y evolved directly from a discrete delta at y = 0 in state j*.
SolutionField solve_aux_density(const ForwardProblem& p);

/// Zero-data solution of (d_tau - L_{A1}) w = G v, with G given per
/// component and node (n * m values) and v sampled from its own time grid.
SolutionField solve_linearized(const DiscreteModel& a1, std::span<const double> g,
                               const SolutionField& v, const StepperConfig& stepper = {});

/// (D2 - D1) w on every level, interior central differences, edge copies.
SolutionField curvature_field(const SolutionField& w);

/// max(v, 0) entrywise.
void clip_negative(SolutionField& v);

}  // namespace rsvol
