#include "dprmdi/commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dprmdi/key_rate.hpp"
#include "dprmdi/parallel.hpp"

namespace dprmdi {

namespace {

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::vector<PhaseCount> sorted_phases(const std::vector<PhaseCount>& phases) {
  std::vector<PhaseCount> out = phases;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PipelineOptions pipeline_options(const ExperimentConfig& c) {
  PipelineOptions o;
  o.estimation = c.estimation;
  o.series = c.series;
  return o;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw std::runtime_error(fmt::format("error writing '{}'", path.string()));
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument(fmt::format("'{}' is not a number", s));
  }
  return v;
}

int parse_setting(const std::string& s, int settings) {
  int v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && end == s.data() + s.size() && !s.empty()) {
    if (v < 0 || v >= settings) throw std::invalid_argument(fmt::format("setting index {} out of range", v));
    return v;
  }
  return setting_index(s, settings);
}

}  // namespace

std::vector<KeyRateRow> keyrate_sweep(const ExperimentConfig& config, int threads) {
  config.validate();
  const auto phases = sorted_phases(config.phases);
  const auto distances = config.distance.values();
  const PipelineOptions options = pipeline_options(config);

  std::vector<KeyRateRow> rows(phases.size() * distances.size());
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    const PhaseCount& n = phases[k / distances.size()];
    ChannelParams channel = config.channel;
    channel.distance_km = distances[k % distances.size()];
    const OptimizedRate best = optimize_intensities(channel, n, config.grid, options, 1);
    const auto& r = best.result;
    rows[k] = {n,
               channel.distance_km,
               best.intensities.signal,
               best.intensities.decoy,
               r.report.rate,
               r.report.raw_rate,
               r.inputs.y11_lo,
               r.inputs.e11b_hi,
               r.inputs.f11,
               r.report.delta,
               r.report.phase_error};
  });
  return rows;
}

std::vector<NoiseRow> noise_sweep(const ExperimentConfig& config, int threads) {
  config.validate();
  const auto phases = sorted_phases(config.phases);
  const auto levels = config.noise.e11b.values();

  std::vector<NoiseRow> rows(phases.size() * levels.size());
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    const PhaseCount& n = phases[k / levels.size()];
    const double e = levels[k % levels.size()];
    ChannelParams channel = config.channel;
    channel.distance_km = config.noise.distance_km;
    if (config.noise.couple_misalignment) channel.misalignment = e;
    PipelineOptions options = pipeline_options(config);
    options.e11b_override = e;
    const OptimizedRate best = optimize_intensities(channel, n, config.grid, options, 1);
    rows[k] = {n, e, best.result.report.rate, best.result.report.raw_rate};
  });
  return rows;
}

void write_keyrate_csv(std::ostream& os, const std::vector<KeyRateRow>& rows) {
  os << "num_phases,distance_km,mu_opt,nu_opt,key_rate,raw_rate,Y11_lo,e11b_hi,F11,delta,phase_error\n";
  for (const auto& r : rows) {
    os << r.phases.to_string() << ',' << num(r.distance_km) << ',' << num(r.mu_opt) << ','
       << num(r.nu_opt) << ',' << num(r.key_rate) << ',' << num(r.raw_rate) << ','
       << num(r.y11_lo) << ',' << num(r.e11b_hi) << ',' << num(r.f11) << ',' << num(r.delta)
       << ',' << num(r.phase_error) << '\n';
  }
}

void write_noise_csv(std::ostream& os, const std::vector<NoiseRow>& rows) {
  os << "num_phases,e11b,key_rate,raw_rate\n";
  for (const auto& r : rows) {
    os << r.phases.to_string() << ',' << num(r.e11b) << ',' << num(r.key_rate) << ','
       << num(r.raw_rate) << '\n';
  }
}

std::optional<double> noise_threshold(const std::vector<NoiseRow>& rows, const PhaseCount& phases) {
  std::vector<const NoiseRow*> pts;
  for (const auto& r : rows) {
    if (r.phases == phases) pts.push_back(&r);
  }
  std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->e11b < b->e11b; });
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double y0 = pts[i - 1]->raw_rate;
    const double y1 = pts[i]->raw_rate;
    if (y0 > 0.0 && y1 <= 0.0) {
      const double x0 = pts[i - 1]->e11b;
      const double x1 = pts[i]->e11b;
      return x0 + (x1 - x0) * y0 / (y0 - y1);
    }
  }
  return std::nullopt;
}

std::optional<double> max_positive_distance(const std::vector<KeyRateRow>& rows,
                                            const PhaseCount& phases) {
  std::optional<double> best;
  for (const auto& r : rows) {
    if (r.phases == phases && r.key_rate > 0.0 && (!best || r.distance_km > *best)) {
      best = r.distance_km;
    }
  }
  return best;
}

void write_stats_csv(std::ostream& os, const ObservedStats& stats) {
  const int s = stats.num_settings();
  os << "alice_setting,bob_setting,gain,error_rate\n";
  for (int a = 0; a < s; ++a) {
    for (int b = 0; b < s; ++b) {
      os << setting_name(a, s) << ',' << setting_name(b, s) << ',' << num(stats.gain(a, b)) << ','
         << num(stats.error_rate(a, b)) << '\n';
    }
  }
}

ObservedStats read_stats_csv(std::istream& is, const IntensitySettings& intensities) {
  intensities.validate();
  const auto values = intensities.as_vector();
  const int s = static_cast<int>(values.size());
  ObservedStats stats(values, values);
  std::vector<int> seen(static_cast<std::size_t>(s * s), 0);

  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (!header) {
      const std::vector<std::string> expected{"alice_setting", "bob_setting", "gain", "error_rate"};
      if (cells != expected) {
        throw std::runtime_error(fmt::format(
            "line {}: expected header 'alice_setting,bob_setting,gain,error_rate'", line_no));
      }
      header = true;
      continue;
    }
    try {
      if (cells.size() != 4) {
        throw std::invalid_argument(fmt::format("expected 4 fields, found {}", cells.size()));
      }
      const int a = parse_setting(cells[0], s);
      const int b = parse_setting(cells[1], s);
      auto& mark = seen[static_cast<std::size_t>(a * s + b)];
      if (mark) throw std::invalid_argument(fmt::format("duplicate pair ({}, {})", cells[0], cells[1]));
      mark = line_no;
      stats.set(a, b, parse_double(cells[2]), parse_double(cells[3]));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  if (!header) throw std::runtime_error("statistics file is empty");

  std::vector<std::string> missing;
  for (int a = 0; a < s; ++a) {
    for (int b = 0; b < s; ++b) {
      if (!seen[static_cast<std::size_t>(a * s + b)]) {
        missing.push_back(fmt::format("({}, {})", setting_name(a, s), setting_name(b, s)));
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw std::runtime_error(fmt::format("missing setting pairs: {}", list));
  }
  return stats;
}

void write_bounds_csv(std::ostream& os, const PhaseCount& phases, const YieldBounds& bounds) {
  const std::string n = phases.to_string();
  auto grid = [&](const char* name, const IntervalGrid& g, bool bob_rows) {
    for (int r = 0; r < g.rows(); ++r) {
      for (int c = 0; c < g.cols(); ++c) {
        const Interval& iv = g(r, c);
        const std::string first = bob_rows ? setting_name(r, g.rows()) : std::to_string(r);
        os << n << ',' << name << ',' << first << ',' << c << ',' << num(iv.lo) << ','
           << num(iv.hi) << '\n';
      }
    }
  };
  grid("stage1_gain", bounds.gain_stage1.intervals, true);
  grid("stage1_error_product", bounds.error_stage1.intervals, true);
  grid("gain", bounds.gain.intervals, false);
  grid("error_product", bounds.error.intervals, false);
  os << n << ",e11b,1,1," << num(0.0) << ',' << num(bounds.e11_upper) << '\n';
}

void write_attack_record(std::ostream& os, const AttackReport& r) {
  os << "key,value\n";
  os << "mu," << num(r.scenario.mu) << '\n';
  os << "nu," << num(r.scenario.nu) << '\n';
  os << "eta," << num(r.scenario.eta) << '\n';
  os << "cutoff," << r.scenario.max_photon_number << '\n';
  os << "q_opt," << num(r.q_opt) << '\n';
  os << "feasible," << (r.feasible ? "true" : "false") << '\n';
  if (r.policy) {
    os << "z1_signal_min," << num(r.policy->z1_signal_min) << '\n';
    os << "tolerance," << num(r.policy->tolerance) << '\n';
    os << "signal_residual," << num(r.policy->signal_residual) << '\n';
    os << "decoy_residual," << num(r.policy->decoy_residual) << '\n';
  }
  if (r.honest) os << "y11_lo," << num(r.honest->y11) << '\n';
  os << "rate_lower," << num(r.rate_lower) << '\n';
  os << "rate_upper," << num(r.rate_upper) << '\n';
  os << "closed_form_signal_residual," << num(r.closed_form_signal_residual) << '\n';
  os << "closed_form_decoy_residual," << num(r.closed_form_decoy_residual) << '\n';
  os << "success," << (r.success ? "true" : "false") << '\n';
}

AttackScenario attack_scenario(const AttackSettings& s) {
  AttackScenario sc = AttackScenario::standard(s.mu, s.nu, s.cutoff);
  if (s.eta) sc.eta = *s.eta;
  return sc;
}

void cmd_keyrate_sweep(const ExperimentConfig& config, const std::filesystem::path& out, int threads) {
  const auto rows = keyrate_sweep(config, threads);
  auto os = open_output(out);
  write_keyrate_csv(os, rows);
  finish(os, out);
}

void cmd_noise_sweep(const ExperimentConfig& config, const std::filesystem::path& out, int threads) {
  const auto rows = noise_sweep(config, threads);
  auto os = open_output(out);
  write_noise_csv(os, rows);
  finish(os, out);
}

int cmd_attack_demo(const ExperimentConfig& config, const std::filesystem::path& out) {
  const AttackReport report = attack_demo(attack_scenario(config.attack));
  {
    auto os = open_output(out);
    os << format_report(report);
    finish(os, out);
  }
  std::filesystem::path record = out;
  record += ".csv";
  auto os = open_output(record);
  write_attack_record(os, report);
  finish(os, record);
  return report.feasible ? 0 : 2;
}

std::vector<std::string> cmd_estimate(const ExperimentConfig& config,
                                      const std::filesystem::path& out) {
  config.validate();
  if (config.estimate.stats_csv.empty()) {
    throw std::runtime_error("estimate: no statistics file given ([estimate] stats_csv)");
  }
  std::ifstream in(config.estimate.stats_csv, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", config.estimate.stats_csv));
  const IntensitySettings intensities{config.estimate.signal, config.estimate.decoy};
  ObservedStats stats = [&] {
    try {
      return read_stats_csv(in, intensities);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("{}: {}", config.estimate.stats_csv, e.what()));
    }
  }();

  std::vector<std::string> diagnostics;
  auto os = open_output(out);
  os << "num_phases,quantity,first,second,lo,hi\n";
  for (const auto& n : sorted_phases(config.phases)) {
    const auto sources = make_sources(n, intensities.as_vector());
    const YieldBounds b = estimate_yield_bounds(stats, sources, config.estimation,
                                                ClassSelection::all(), config.series);
    write_bounds_csv(os, n, b);
    for (const auto& d : b.diagnostics()) diagnostics.push_back(n.to_string() + ": " + d);
  }
  finish(os, out);
  return diagnostics;
}

}  // namespace dprmdi
