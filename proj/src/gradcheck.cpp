#include "topicpara/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topicpara/error.hpp"

namespace topicpara {

namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape(false);
  const double value = loss(tape).value().item();
  if (!std::isfinite(value)) throw NumericError("check_gradients: non-finite loss");
  return value;
}

}  // namespace

double gradient_rel_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(const LossBuilder& loss, const std::vector<Parameter*>& params,
                                const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  double center = 0.0;
  {
    Tape tape(true);
    Var root = loss(tape);
    center = root.value().item();
    if (!std::isfinite(center)) throw NumericError("check_gradients: non-finite loss");
    tape.backward(root);
  }
  GradCheckReport report;
  report.floor = options.floor;
  if (options.roundoff_floor) {
    report.floor = std::max(report.floor, std::numeric_limits<double>::epsilon() * std::abs(center) /
                                              (options.eps * options.tol));
  }
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    auto values = p->value.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.eps;
      const double up = evaluate(loss);
      values[i] = saved - options.eps;
      const double down = evaluate(loss);
      values[i] = saved;
      GradCheckEntry entry{p->name, i, p->grad[i], (up - down) / (2.0 * options.eps), 0.0};
      report.max_abs_error = std::max(report.max_abs_error, std::abs(entry.analytic - entry.numeric));
      entry.rel_error = gradient_rel_error(entry.analytic, entry.numeric, report.floor);
      ++report.checked;
      if (entry.rel_error > report.max_rel_error || report.checked == 1) {
        report.max_rel_error = std::max(report.max_rel_error, entry.rel_error);
        if (entry.rel_error >= report.max_rel_error) report.worst = entry;
      }
      if (entry.rel_error > options.tol) report.failures.push_back(entry);
    }
  }
  return report;
}

}  // namespace topicpara
