#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "airguard/error.hpp"
#include "airguard/kernels.hpp"
#include "airguard/simworld.hpp"

namespace airguard::sim {

double mean_abs_perception_error(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty,
                                 double ref_x, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one perception sample");
  const auto errs = kernels::par::perception_errors(pm, jm, duty, ref_x, n, seed);
  double sum = 0.0;
  for (double e : errs) sum += std::abs(e);
  return sum / static_cast<double>(n);
}

double calibrate_weber(const airflow::PerceptionModel& pm, const airflow::JetModel& jm, double duty, double ref_x,
                       double target_err, std::size_t n, std::uint64_t seed) {
  airflow::PerceptionModel probe = pm;
  auto err_at = [&](double w) {
    probe.weber = w;
    return mean_abs_perception_error(probe, jm, duty, ref_x, n, seed);
  };
  double lo = 1e-4;
  double hi = 1.0;
  if (err_at(lo) > target_err || err_at(hi) < target_err)
    throw Error(ErrorCode::CalibrationFailed, "target perception error not bracketed by weber in [1e-4, 1]");
  for (int i = 0; i < 60 && hi - lo > 1e-7; ++i) {
    const double mid = 0.5 * (lo + hi);
    (err_at(mid) < target_err ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

struct Evaluation {
  double v_mean = 0.0;
  double va_mean = 0.0;
  bool ok = false;
};

Evaluation evaluate(const TrialSetup& setup, const CalibrationOptions& opts) {
  std::vector<std::uint64_t> seeds(opts.n_seeds);
  std::iota(seeds.begin(), seeds.end(), opts.seed);
  const auto pairs = kernels::par::paired_below_had(setup, seeds);
  double v = 0.0;
  double va = 0.0;
  std::size_t n = 0;
  for (const auto& p : pairs) {
    if (!p.v || !p.va) continue;
    v += *p.v;
    va += *p.va;
    ++n;
  }
  if (n == 0) return {};
  return {v / static_cast<double>(n), va / static_cast<double>(n), true};
}

double loss(const Evaluation& e, const CalibrationTargets& t) {
  if (!e.ok) return 1e12;
  const double a = (e.v_mean - t.v_mean) / t.tolerance;
  const double b = (e.va_mean - t.va_mean) / t.tolerance;
  return a * a + b * b;
}

bool within(const Evaluation& e, const CalibrationTargets& t) {
  return e.ok && std::abs(e.v_mean - t.v_mean) <= t.tolerance && std::abs(e.va_mean - t.va_mean) <= t.tolerance;
}

// A search coordinate of the human model: multiplicative (log-space) or additive steps.
struct Coordinate {
  double HumanModel::*field;
  double lo;
  double hi;
  double step;
  bool multiplicative;
};

}  // namespace

CalibrationResult calibrate_search(const TrialSetup& start, const CalibrationTargets& targets,
                                   const CalibrationOptions& opts) {
  CalibrationResult res;
  res.human = start.human;
  res.perception = start.perception;
  if (opts.budget < 1) return res;
  start.validate();

  // The perception coordinate decouples from the trial statistics, so its
  // line search is an exact bisection on the single-reference error.
  res.perception.weber = calibrate_weber(start.perception, start.jet, start.duty_pct, targets.exp1_ref_m,
                                         targets.exp1_err, opts.exp1_samples, opts.seed);
  res.exp1_err = mean_abs_perception_error(res.perception, start.jet, start.duty_pct, targets.exp1_ref_m,
                                           opts.exp1_samples, opts.seed);
  res.evaluations = 1;
  const bool exp1_ok = std::abs(res.exp1_err - targets.exp1_err) <= targets.tolerance;

  TrialSetup setup = start;
  setup.perception = res.perception;
  if (res.evaluations >= opts.budget) return res;
  Evaluation best = evaluate(setup, opts);
  ++res.evaluations;

  std::array<Coordinate, 3> coords{{
      {&HumanModel::attention_p, 1e-5, 1.0, 2.0, true},
      {&HumanModel::excursion_rate, 0.01, 1.0, 1.5, true},
      {&HumanModel::retreat_speed, 0.1, 2.0, 0.15, false},
  }};

  auto candidate = [](const Coordinate& c, double value, int dir) {
    const double v = c.multiplicative ? (dir > 0 ? value * c.step : value / c.step) : value + dir * c.step;
    return std::clamp(v, c.lo, c.hi);
  };

  while (!within(best, targets) && res.evaluations < opts.budget) {
    bool any_improved = false;
    for (auto& c : coords) {
      if (within(best, targets) || res.evaluations >= opts.budget) break;
      const double current = setup.human.*(c.field);
      double best_value = current;
      Evaluation best_eval = best;
      for (int dir : {+1, -1}) {
        if (res.evaluations >= opts.budget) break;
        const double value = candidate(c, current, dir);
        if (value == current) continue;
        TrialSetup trial = setup;
        trial.human.*(c.field) = value;
        const Evaluation e = evaluate(trial, opts);
        ++res.evaluations;
        if (loss(e, targets) < loss(best_eval, targets)) {
          best_eval = e;
          best_value = value;
        }
      }
      if (best_value != current) {
        setup.human.*(c.field) = best_value;
        best = best_eval;
        any_improved = true;
      } else {
        c.step = c.multiplicative ? std::sqrt(c.step) : 0.5 * c.step;
      }
    }
    if (!any_improved && std::all_of(coords.begin(), coords.end(), [](const Coordinate& c) {
          return c.multiplicative ? c.step < 1.001 : c.step < 1e-4;
        }))
      break;
  }

  res.human = setup.human;
  res.v_mean = best.v_mean;
  res.va_mean = best.va_mean;
  res.converged = exp1_ok && within(best, targets);
  return res;
}

CalibrationResult calibrate(const TrialSetup& start, const CalibrationTargets& targets,
                            const CalibrationOptions& opts) {
  if (opts.budget < 1) throw Error(ErrorCode::CalibrationFailed, "evaluation budget must be >= 1");
  CalibrationResult r = calibrate_search(start, targets, opts);
  if (!r.converged)
    throw Error(ErrorCode::CalibrationFailed,
                "residuals after " + std::to_string(r.evaluations) + " evaluations: v " +
                    std::to_string(r.v_residual(targets)) + ", va " + std::to_string(r.va_residual(targets)) +
                    ", exp1 " + std::to_string(r.exp1_residual(targets)));
  return r;
}

}  // namespace airguard::sim
