#pragma once

#include <functional>
#include <string>
#include <vector>

#include "topicpara/parameter.hpp"
#include "topicpara/tape.hpp"

namespace topicpara {

struct GradCheckEntry {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double floor = 0.0;  // denominator floor actually used
  GradCheckEntry worst;
  std::vector<GradCheckEntry> failures;  // entries with rel_error > tol

  bool passed() const { return failures.empty(); }
};

// Builds a scalar loss on the given tape. Must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

// Relative error used by check_gradients:
//   |a - n| / max(|a|, |n|, floor)
// The floor keeps entries whose true gradient is ~0 from dividing roundoff by
// roundoff.
double gradient_rel_error(double analytic, double numeric, double floor);

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-6;
  double floor = 1e-3;
  // Raise the floor to eps_mach * |f| / (eps * tol), the gradient size below
  // which the central difference cannot resolve a relative error of tol.
  bool roundoff_floor = true;
};

// Compares analytic gradients of `loss` w.r.t. every entry of `params` with
// the central difference (f(x+eps) - f(x-eps)) / (2 eps).
GradCheckReport check_gradients(const LossBuilder& loss, const std::vector<Parameter*>& params,
                                const GradCheckOptions& options = {});

}  // namespace topicpara
