#include "dprmdi/key_rate.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "dprmdi/parallel.hpp"

namespace dprmdi {

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error(fmt::format("probability {} outside [0, 1]", p));
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double delta_bias(double fidelity, double yield) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw std::domain_error(fmt::format("fidelity {} outside [0, 1]", fidelity));
  }
  if (!(yield > 0.0)) return 0.5;
  return std::min(0.5, (1.0 - fidelity) / (2.0 * yield));
}

double phase_error_upper(double bit_error, double delta) {
  if (!(bit_error >= 0.0 && bit_error <= 0.5)) {
    throw std::domain_error(fmt::format("bit error {} outside [0, 1/2]", bit_error));
  }
  if (!(delta >= 0.0 && delta <= 0.5)) {
    throw std::domain_error(fmt::format("bias {} outside [0, 1/2]", delta));
  }
  const double d = delta;
  const double e = bit_error;
  const double value = e + 4.0 * d * (1.0 - d) * (1.0 - 2.0 * e) +
                       4.0 * (1.0 - 2.0 * d) * std::sqrt(d * (1.0 - d) * e * (1.0 - e));
  return std::min(0.5, value);
}

void KeyRateInputs::validate() const {
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(q_rect) || !in_unit(e_rect) || !in_unit(p1) || !in_unit(y11_lo) ||
      !in_unit(e11b_hi) || !in_unit(f11)) {
    throw std::domain_error("key-rate inputs must lie in [0, 1]");
  }
  if (!(ec_efficiency >= 1.0)) throw std::domain_error("ec_efficiency must be >= 1");
}

KeyRateReport key_rate(const KeyRateInputs& in) {
  in.validate();
  KeyRateReport r;
  r.ec_term = in.q_rect * in.ec_efficiency * binary_entropy(in.e_rect);
  r.delta_vacuous = !(in.y11_lo > 0.0);
  r.delta = delta_bias(in.f11, in.y11_lo);
  r.phase_error = phase_error_upper(std::min(in.e11b_hi, 0.5), r.delta);
  r.pa_term = in.p1 * in.p1 * in.y11_lo * (1.0 - binary_entropy(r.phase_error));
  r.raw_rate = r.pa_term - r.ec_term;
  r.rate = std::max(0.0, r.raw_rate);
  return r;
}

PipelineResult evaluate_key_rate(const ChannelParams& params, const PhaseCount& phases,
                                 const IntensitySettings& intensities,
                                 const PipelineOptions& options) {
  intensities.validate();
  const ObservedStats stats = simulate_stats(params, intensities, intensities);
  const auto sources = make_sources(phases, intensities.as_vector());
  const YieldBounds bounds = estimate_yield_bounds(stats, sources, options.estimation,
                                                   ClassSelection::single(1), options.series);

  PipelineResult out;
  const SourceConfig& signal = sources[0];
  // Without at least two phases the single-photon class is empty.
  const bool has_class1 = signal.is_continuous() || signal.phases().count() >= 2;
  out.inputs.q_rect = stats.gain(0, 0);
  out.inputs.e_rect = stats.error_rate(0, 0);
  out.inputs.p1 = has_class1 ? class_probability(signal, 1, options.series) : 0.0;
  out.inputs.y11_lo = bounds.gain.intervals(1, 1).lo;
  out.inputs.e11b_hi = options.e11b_override.value_or(bounds.e11_upper);
  out.inputs.f11 = has_class1 && signal.intensity() > 0.0
                       ? fidelity_bound_xy(signal, 1, options.series)
                       : 0.0;
  out.inputs.ec_efficiency = params.ec_efficiency;
  out.report = key_rate(out.inputs);
  out.epsilon = compute_epsilon(signal, sources[1], options.series);
  out.diagnostics = bounds.diagnostics();
  return out;
}

void IntensityGrid::validate() const {
  if (mu_points < 1 || nu_points < 1) throw std::domain_error("intensity grid needs points");
  if (!(mu_min > 0.0 && mu_max >= mu_min)) throw std::domain_error("need 0 < mu_min <= mu_max");
  if (!(nu_min > 0.0 && nu_min < mu_min)) throw std::domain_error("need 0 < nu_min < mu_min");
}

namespace {
double geometric(double lo, double hi, int k, int count) {
  if (count == 1) return lo;
  return lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1));
}
}  // namespace

std::vector<IntensitySettings> IntensityGrid::points() const {
  validate();
  std::vector<IntensitySettings> out;
  out.reserve(static_cast<std::size_t>(mu_points) * nu_points);
  for (int m = 0; m < mu_points; ++m) {
    const double mu = geometric(mu_min, mu_max, m, mu_points);
    for (int n = 0; n < nu_points; ++n) {
      // nu_points values from nu_min up to, but excluding, mu.
      const double nu = nu_min * std::pow(mu / nu_min, static_cast<double>(n) / nu_points);
      out.push_back({mu, nu});
    }
  }
  return out;
}

OptimizedRate optimize_intensities(const ChannelParams& params, const PhaseCount& phases,
                                   const IntensityGrid& grid, const PipelineOptions& options,
                                   int threads) {
  const auto points = grid.points();
  if (points.empty()) throw std::domain_error("empty intensity grid");
  std::vector<PipelineResult> results(points.size());
  parallel_for(points.size(), threads,
               [&](std::size_t i) { results[i] = evaluate_key_rate(params, phases, points[i], options); });

  // Points are generated in ascending (mu, nu) order, so the first maximum
  // wins ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (results[i].report.raw_rate > results[best].report.raw_rate) best = i;
  }
  OptimizedRate out{points[best], results[best], !(results[best].report.rate > 0.0)};
  return out;
}

}  // namespace dprmdi
