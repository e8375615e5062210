#include "qbridge/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qbridge/dynamics.hpp"
#include "qbridge/errors.hpp"
#include "qbridge/spectrum.hpp"

namespace qbridge {

namespace {

void check_common(double gate_time, double nu_idle, double nu_op, int n_samples) {
  if (!(gate_time > 0.0) || !std::isfinite(gate_time)) {
    throw InvalidParameter("gate time must be positive");
  }
  if (!(nu_idle > 0.0) || !(nu_op > 0.0)) throw InvalidParameter("bus frequencies must be positive");
  if (n_samples < 16) throw InvalidParameter("a pulse needs at least 16 samples");
}

double odd_sum(const std::vector<double>& coeffs) {
  double s = 0.0;
  for (size_t i = 0; i < coeffs.size(); i += 2) s += coeffs[i];  // n = i + 1
  return s;
}

// zeta along a grid running from the idle point outwards, labels tracked by
// continuity from the idle end.
struct ZetaTable {
  std::vector<double> nu;
  std::vector<double> zeta;

  ZetaTable(const ChainConfig& chain, double from, double to, int points) {
    nu = linspace(from, to, std::max(points, 2));
    const ChainHamiltonian model(chain);
    std::optional<DressedSpectrum> previous;
    for (double v : nu) {
      DressedSpectrum s = dressed_spectrum(model.dense(v), chain.dims(), previous ? &*previous : nullptr);
      zeta.push_back(zz_from_spectrum(s));
      previous = std::move(s);
    }
  }

  double operator()(double v) const {
    if (nu.back() == nu.front()) return zeta.front();
    const double t = (v - nu.front()) / (nu.back() - nu.front()) * (nu.size() - 1);
    const double clamped = std::clamp(t, 0.0, static_cast<double>(nu.size() - 1));
    const size_t i = std::min(static_cast<size_t>(clamped), nu.size() - 2);
    const double w = clamped - i;
    return (1.0 - w) * zeta[i] + w * zeta[i + 1];
  }
};

double adiabatic_phase(const ZetaTable& table, const CZPulse& pulse) {
  // Trapezoid rule on a fine time grid; zeta is already interpolated.
  const int n = 2048;
  const double h = pulse.gate_time / n;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    sum += w * table(pulse.frequency(k * h));
  }
  return -kTwoPi * sum * h;
}

CZPulse make_pulse(const CalibrationOptions& options, double gate_time, double nu_op,
                   const std::vector<double>& coeffs) {
  if (options.shape == PulseShape::Flattop) {
    return flattop_trajectory(gate_time, options.ramp_frac, options.nu_idle, nu_op,
                              options.n_samples);
  }
  return fourier_trajectory(gate_time, coeffs, options.nu_idle, nu_op, options.n_samples);
}

struct PhasePoint {
  double nu_op;
  double phase;  // NaN when the computational block is not phase-like
  double offset;  // phase - pi wrapped into [-pi, pi]
};

// One calibration at fixed pulse shape and coefficients.
class PhaseCalibrator {
 public:
  PhaseCalibrator(const ChainConfig& chain, double gate_time, const CalibrationOptions& options,
                  std::vector<double> coeffs, const ComputationalFrame& frame)
      : chain_(chain), gate_time_(gate_time), options_(options), coeffs_(std::move(coeffs)),
        frame_(frame) {}

  PhasePoint evaluate(double nu_op) {
    ++evaluations_;
    const Matrix4c u =
        propagate_computational(chain_, make_pulse(options_, gate_time_, nu_op, coeffs_),
                                options_.dt, frame_);
    PhasePoint p{nu_op, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN()};
    try {
      p.phase = conditional_phase(u);
      p.offset = std::remainder(p.phase - M_PI, kTwoPi);
      max_phase_ = std::max(max_phase_, std::abs(p.phase));
    } catch (const NotPhaseLike&) {
    }
    return p;
  }

  // Illinois regula falsi between two points with offsets of opposite sign.
  PhasePoint refine(PhasePoint a, PhasePoint b) {
    PhasePoint best = std::abs(a.offset) < std::abs(b.offset) ? a : b;
    int side = 0;
    for (int it = 0; it < 60; ++it) {
      if (std::abs(best.offset) < 0.05 * options_.phase_tol) break;
      if (std::abs(a.nu_op - b.nu_op) < 1e-12) break;
      double nu = (a.nu_op * b.offset - b.nu_op * a.offset) / (b.offset - a.offset);
      if (!(std::min(a.nu_op, b.nu_op) < nu && nu < std::max(a.nu_op, b.nu_op))) {
        nu = 0.5 * (a.nu_op + b.nu_op);
      }
      PhasePoint c = evaluate(nu);
      if (std::isnan(c.offset)) break;
      if (std::abs(c.offset) < std::abs(best.offset)) best = c;
      if (std::signbit(c.offset) == std::signbit(a.offset)) {
        a = c;
        if (side == -1) b.offset *= 0.5;
        side = -1;
      } else {
        b = c;
        if (side == 1) a.offset *= 0.5;
        side = 1;
      }
    }
    return best;
  }

  // Bounded golden-section minimization of |offset|.
  PhasePoint minimize(double lo, double hi) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto cost = [](const PhasePoint& p) { return std::isnan(p.offset) ? INFINITY : std::abs(p.offset); };
    PhasePoint c = evaluate(hi - inv_phi * (hi - lo));
    PhasePoint d = evaluate(lo + inv_phi * (hi - lo));
    for (int it = 0; it < 40 && hi - lo > 1e-9; ++it) {
      if (cost(c) < cost(d)) {
        hi = d.nu_op;
        d = c;
        c = evaluate(hi - inv_phi * (hi - lo));
      } else {
        lo = c.nu_op;
        c = d;
        d = evaluate(lo + inv_phi * (hi - lo));
      }
    }
    return cost(c) < cost(d) ? c : d;
  }

  int evaluations() const { return evaluations_; }
  double max_phase() const { return max_phase_; }

 private:
  const ChainConfig& chain_;
  double gate_time_;
  const CalibrationOptions& options_;
  std::vector<double> coeffs_;
  const ComputationalFrame& frame_;
  int evaluations_ = 0;
  double max_phase_ = 0.0;
};

bool brackets_pi(const PhasePoint& a, const PhasePoint& b) {
  if (std::isnan(a.offset) || std::isnan(b.offset)) return false;
  if (std::signbit(a.offset) == std::signbit(b.offset)) return false;
  // A jump across the branch cut at phase 0 is not a crossing of pi.
  return std::abs(a.offset - b.offset) < M_PI;
}

struct SearchOutcome {
  PhasePoint point;
  int evaluations;
  double max_phase;
};

// Candidate nu_op values: where the adiabatic estimate reaches fixed fractions
// of the target, then a uniform fill of the bracket.
std::vector<double> scan_points(const ChainConfig& chain, double gate_time,
                                const CalibrationOptions& options,
                                const std::vector<double>& coeffs, double far_end) {
  const ZetaTable table(chain, options.nu_idle, far_end, 400);
  std::vector<double> est(table.nu.size());
  for (size_t i = 0; i < table.nu.size(); ++i) {
    est[i] = std::abs(adiabatic_phase(table, make_pulse(options, gate_time, table.nu[i], coeffs)));
  }
  std::vector<double> points;
  for (double frac : {0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0, 3.0}) {
    const double target = frac * M_PI;
    for (size_t i = 1; i < est.size(); ++i) {
      if (est[i - 1] < target && est[i] >= target) {
        const double w = (target - est[i - 1]) / (est[i] - est[i - 1]);
        points.push_back(table.nu[i - 1] + w * (table.nu[i] - table.nu[i - 1]));
        break;
      }
    }
  }
  for (double v : linspace(options.nu_idle, far_end, 17)) {
    if (v != options.nu_idle) points.push_back(v);
  }
  return points;
}

SearchOutcome calibrate_phase(const ChainConfig& chain, double gate_time,
                              const CalibrationOptions& options, const std::vector<double>& coeffs,
                              const ComputationalFrame& frame, double near_end, double far_end) {
  PhaseCalibrator cal(chain, gate_time, options, coeffs, frame);
  const bool downward = far_end < options.nu_idle;
  auto order = [&](std::vector<PhasePoint>& pts) {
    std::sort(pts.begin(), pts.end(), [&](const PhasePoint& x, const PhasePoint& y) {
      return downward ? x.nu_op > y.nu_op : x.nu_op < y.nu_op;
    });
  };

  std::vector<PhasePoint> points{cal.evaluate(near_end)};
  const double lo = std::min(near_end, far_end);
  const double hi = std::max(near_end, far_end);
  // Adiabatic-estimate candidates first; stop at the first bracket nearest idle.
  std::optional<PhasePoint> found;
  for (double v : scan_points(chain, gate_time, options, coeffs, far_end)) {
    if (v < lo || v > hi || v == near_end) continue;
    points.push_back(cal.evaluate(v));
    order(points);
    for (size_t i = 1; i < points.size(); ++i) {
      if (brackets_pi(points[i - 1], points[i])) {
        const PhasePoint p = cal.refine(points[i - 1], points[i]);
        if (std::abs(p.offset) < options.phase_tol && (!found || std::abs(p.offset) < std::abs(found->offset))) {
          found = p;
        }
        break;
      }
    }
    if (found && std::abs(found->offset) < 0.05 * options.phase_tol) break;
  }
  if (!found) {
    // No clean sign change: minimize |phi - pi| around the closest sample.
    const auto best = std::min_element(points.begin(), points.end(), [](const auto& x, const auto& y) {
      const double a = std::isnan(x.offset) ? INFINITY : std::abs(x.offset);
      const double b = std::isnan(y.offset) ? INFINITY : std::abs(y.offset);
      return a < b;
    });
    const size_t i = static_cast<size_t>(best - points.begin());
    const double a = points[i == 0 ? 0 : i - 1].nu_op;
    const double b = points[std::min(i + 1, points.size() - 1)].nu_op;
    const PhasePoint p = cal.minimize(std::min(a, b), std::max(a, b));
    if (!std::isnan(p.offset) && std::abs(p.offset) < options.phase_tol) found = p;
  }
  if (!found) {
    throw CalibrationInfeasible("conditional phase pi is not reachable in the nu_op bracket at T = " +
                                    std::to_string(gate_time) + " ns; max |phase| " +
                                    std::to_string(cal.max_phase()) + " rad",
                                cal.max_phase());
  }
  return {*found, cal.evaluations(), cal.max_phase()};
}

CalibrationResult finish(const ChainConfig& chain, double gate_time,
                         const CalibrationOptions& options, const std::vector<double>& coeffs,
                         const ComputationalFrame& frame, const SearchOutcome& outcome) {
  CalibrationResult result;
  result.pulse = make_pulse(options, gate_time, outcome.point.nu_op, coeffs);
  const Matrix4c u = propagate_computational(chain, result.pulse, options.dt, frame);
  result.conditional_phase = conditional_phase(u);
  result.leakage = leakage(u);
  result.unitary_error = average_gate_error(remove_local_phases(u));
  result.evaluations = outcome.evaluations + 1;
  return result;
}

// Minimal Nelder-Mead on a few pulse coefficients.
template <class F>
std::vector<double> nelder_mead(F&& f, std::vector<double> x0, double step, int max_evals) {
  const size_t n = x0.size();
  std::vector<std::vector<double>> simplex{x0};
  for (size_t i = 0; i < n; ++i) {
    auto x = x0;
    x[i] += step;
    simplex.push_back(x);
  }
  std::vector<double> fx;
  int evals = 0;
  for (const auto& x : simplex) {
    fx.push_back(f(x));
    ++evals;
  }
  while (evals < max_evals) {
    std::vector<size_t> idx(n + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return fx[a] < fx[b]; });
    const size_t best = idx.front();
    const size_t worst = idx.back();
    const size_t second = idx[n - 1];
    if (fx[worst] - fx[best] < 1e-7) break;
    std::vector<double> centroid(n, 0.0);
    for (size_t k : idx) {
      if (k == worst) continue;
      for (size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / n;
    }
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (simplex[worst][i] - centroid[i]);
      return x;
    };
    const auto xr = along(-1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fx[best]) {
      const auto xe = along(-2.0);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        simplex[worst] = xe;
        fx[worst] = fe;
      } else {
        simplex[worst] = xr;
        fx[worst] = fr;
      }
    } else if (fr < fx[second]) {
      simplex[worst] = xr;
      fx[worst] = fr;
    } else {
      const auto xc = along(fr < fx[worst] ? -0.5 : 0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fx[worst])) {
        simplex[worst] = xc;
        fx[worst] = fc;
      } else {
        for (size_t k : idx) {
          if (k == best) continue;
          for (size_t i = 0; i < n; ++i) {
            simplex[k][i] = simplex[best][i] + 0.5 * (simplex[k][i] - simplex[best][i]);
          }
          fx[k] = f(simplex[k]);
          ++evals;
        }
      }
    }
  }
  return simplex[std::min_element(fx.begin(), fx.end()) - fx.begin()];
}

}  // namespace

std::string to_string(PulseShape shape) {
  return shape == PulseShape::Flattop ? "flattop" : "fourier-adiabatic";
}

PulseShape parse_pulse_shape(const std::string& text) {
  if (text == "flattop") return PulseShape::Flattop;
  if (text == "fourier-adiabatic" || text == "fourier") return PulseShape::FourierAdiabatic;
  throw ConfigurationError("unknown pulse shape '" + text +
                           "' (expected flattop or fourier-adiabatic)");
}

double CZPulse::envelope(double t) const {
  if (!(t > 0.0) || !(t < gate_time)) return 0.0;
  if (shape == PulseShape::Flattop) {
    const double ramp = ramp_frac * gate_time;
    const double edge = std::min(t, gate_time - t);
    if (edge >= ramp) return 1.0;
    return 0.5 * (1.0 - std::cos(M_PI * edge / ramp));
  }
  double e = 0.0;
  for (size_t i = 0; i < fourier_coeffs.size(); ++i) {
    e += fourier_coeffs[i] * (1.0 - std::cos(kTwoPi * static_cast<double>(i + 1) * t / gate_time));
  }
  return std::clamp(e / (2.0 * odd_sum(fourier_coeffs)), 0.0, 1.0);
}

double CZPulse::sample_time(int k) const {
  const int n = static_cast<int>(samples.size());
  if (k < 0 || k >= n) throw IndexError("sample index out of range");
  return gate_time * k / (n - 1);
}

void CZPulse::resample(int n_samples) {
  if (n_samples < 16) throw InvalidParameter("a pulse needs at least 16 samples");
  samples.assign(n_samples, 0.0);
  for (int k = 0; k < n_samples; ++k) samples[k] = frequency(gate_time * k / (n_samples - 1));
}

CZPulse flattop_trajectory(double gate_time, double ramp_frac, double nu_idle, double nu_op,
                           int n_samples) {
  check_common(gate_time, nu_idle, nu_op, n_samples);
  if (!(ramp_frac >= 0.0 && ramp_frac <= 0.5)) {
    throw InvalidParameter("ramp_frac must lie in [0, 0.5]");
  }
  CZPulse p;
  p.shape = PulseShape::Flattop;
  p.gate_time = gate_time;
  p.ramp_frac = ramp_frac;
  p.nu_idle = nu_idle;
  p.nu_op = nu_op;
  p.resample(n_samples);
  return p;
}

CZPulse fourier_trajectory(double gate_time, std::vector<double> coeffs, double nu_idle,
                           double nu_op, int n_samples) {
  check_common(gate_time, nu_idle, nu_op, n_samples);
  if (coeffs.empty()) throw InvalidParameter("Fourier pulse needs at least one coefficient");
  for (double c : coeffs) {
    if (!std::isfinite(c)) throw InvalidParameter("Fourier coefficients must be finite");
  }
  if (std::abs(odd_sum(coeffs)) < 1e-12) {
    throw InvalidParameter("odd Fourier coefficients sum to zero; pulse has no amplitude");
  }
  CZPulse p;
  p.shape = PulseShape::FourierAdiabatic;
  p.gate_time = gate_time;
  p.ramp_frac = 0.0;
  p.nu_idle = nu_idle;
  p.nu_op = nu_op;
  p.fourier_coeffs = std::move(coeffs);
  p.resample(n_samples);
  return p;
}

double adiabatic_phase_estimate(const ChainConfig& chain, const CZPulse& pulse, int table_points) {
  if (pulse.nu_op == pulse.nu_idle) {
    return -kTwoPi * zz_coupling(chain, pulse.nu_idle).zeta * pulse.gate_time;
  }
  const ZetaTable table(chain, pulse.nu_idle, pulse.nu_op, table_points);
  return adiabatic_phase(table, pulse);
}

CalibrationResult calibrate_cz(const ChainConfig& chain, double gate_time,
                               const CalibrationOptions& options) {
  chain.validate();
  if (!(gate_time > 0.0)) throw InvalidParameter("gate time must be positive");
  if (!(options.phase_tol > 0.0)) throw InvalidParameter("phase tolerance must be positive");
  if (!(options.nu_idle > 0.0)) throw InvalidParameter("idle frequency must be positive");

  // The search runs from the bracket end nearest the idle point outwards.
  double near_end = options.nu_idle;
  double far_end;
  if (options.nu_op_bracket) {
    auto [lo, hi] = *options.nu_op_bracket;
    if (!(lo > 0.0) || !(hi > lo)) throw InvalidParameter("nu_op bracket must satisfy 0 < lo < hi");
    const bool downward = std::abs(lo - options.nu_idle) >= std::abs(hi - options.nu_idle);
    far_end = downward ? lo : hi;
    near_end = std::clamp(options.nu_idle, lo, hi);
  } else {
    far_end = std::max(chain.modes[kQ1].freq, chain.modes[kQ2].freq) + 0.02;
    if (!(far_end < options.nu_idle)) {
      throw InvalidParameter("default nu_op bracket is empty: idle point is below the qubits");
    }
  }

  const ComputationalFrame frame = computational_frame(chain, options.nu_idle);

  std::vector<double> coeffs = options.fourier_coeffs;
  if (options.shape == PulseShape::FourierAdiabatic && options.optimize_coefficients &&
      coeffs.size() >= 2) {
    // Keep the first coefficient fixed and search the rest for the lowest error.
    const double c1 = coeffs[0];
    auto objective = [&](const std::vector<double>& rest) {
      std::vector<double> c{c1};
      c.insert(c.end(), rest.begin(), rest.end());
      try {
        if (std::abs(odd_sum(c)) < 1e-6) return 1.0;
        const SearchOutcome o = calibrate_phase(chain, gate_time, options, c, frame, near_end, far_end);
        return finish(chain, gate_time, options, c, frame, o).unitary_error;
      } catch (const Error&) {
        return 1.0;
      }
    };
    const std::vector<double> rest(coeffs.begin() + 1, coeffs.end());
    const std::vector<double> best = nelder_mead(objective, rest, 0.1, options.max_optimizer_evaluations);
    coeffs.assign(1, c1);
    coeffs.insert(coeffs.end(), best.begin(), best.end());
  }
  const SearchOutcome outcome = calibrate_phase(chain, gate_time, options, coeffs, frame, near_end, far_end);
  return finish(chain, gate_time, options, coeffs, frame, outcome);
}

}  // namespace qbridge
