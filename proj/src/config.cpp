#include "dprmdi/config.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace dprmdi {

void Range::validate(const char* what) const {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
    throw std::domain_error(fmt::format("{}: range values must be finite", what));
  }
  if (!(step > 0.0)) throw std::domain_error(fmt::format("{}: step must be > 0", what));
  if (stop < start) throw std::domain_error(fmt::format("{}: empty range (stop < start)", what));
}

std::vector<double> Range::values() const {
  std::vector<double> out;
  // Integer stepping keeps the grid free of accumulated rounding.
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  out.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
  return out;
}

void ExperimentConfig::validate() const {
  channel.validate();
  if (phases.empty()) throw std::domain_error("phases: list is empty");
  distance.validate("distance_sweep");
  noise.e11b.validate("noise_sweep");
  if (noise.e11b.start < 0.0 || noise.e11b.stop > 0.5) {
    throw std::domain_error("noise_sweep: e11b range must lie in [0, 0.5]");
  }
  if (noise.distance_km < 0.0) throw std::domain_error("noise_sweep: distance_km must be >= 0");
  grid.validate();
  estimation.validate();
  if (estimation.num_decoys_M != 2) {
    throw std::domain_error("estimation: the simulation pipeline uses signal, decoy and vacuum (num_decoys_M = 2)");
  }
  series.validate();
}

std::vector<PhaseCount> parse_phase_list(const std::string& text) {
  std::vector<PhaseCount> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    boost::algorithm::trim(item);
    if (item.empty()) throw std::invalid_argument(fmt::format("empty entry in phase list '{}'", text));
    out.push_back(PhaseCount::parse(item));
  }
  if (out.empty()) throw std::invalid_argument("phase list is empty");
  return out;
}

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"channel",
       {"distance_km", "fiber_loss_db_per_km", "other_loss", "misalignment", "dark_count",
        "ec_efficiency"}},
      {"source", {"phases"}},
      {"distance_sweep", {"start_km", "stop_km", "step_km"}},
      {"noise_sweep",
       {"distance_km", "e11b_start", "e11b_stop", "e11b_step", "couple_misalignment"}},
      {"intensity_grid", {"mu_points", "nu_points", "mu_min", "mu_max", "nu_min"}},
      {"estimation", {"truncation_K", "num_decoys_M", "epsilon_override", "max_widenings"}},
      {"series", {"relative_term_cutoff", "max_terms"}},
      {"output", {"path"}},
      {"attack", {"mu", "nu", "cutoff", "eta"}},
      {"estimate", {"stats_csv", "signal", "decoy"}},
  };
  return s;
}

template <class T>
void read(const pt::ptree& tree, const std::string& key, T& target) {
  const auto node = tree.get_child_optional(key);
  if (!node) return;
  const auto value = node->get_value_optional<T>();
  if (!value) throw std::runtime_error(fmt::format("bad value '{}' for {}", node->data(), key));
  target = *value;
}

template <class T>
void read_optional(const pt::ptree& tree, const std::string& key, std::optional<T>& target) {
  if (!tree.get_child_optional(key)) return;
  T v{};
  read(tree, key, v);
  target = v;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
  }

  try {
    for (const auto& [section, body] : tree) {
      const auto it = schema().find(section);
      if (it == schema().end()) throw std::runtime_error(fmt::format("unknown section [{}]", section));
      if (body.empty() && !body.data().empty()) {
        throw std::runtime_error(fmt::format("key '{}' outside any section", section));
      }
      for (const auto& [key, value] : body) {
        if (!it->second.contains(key)) {
          throw std::runtime_error(fmt::format("unknown key '{}' in [{}]", key, section));
        }
      }
    }

    ExperimentConfig c;
    read(tree, "channel.distance_km", c.channel.distance_km);
    read(tree, "channel.fiber_loss_db_per_km", c.channel.fiber_loss_db_per_km);
    read(tree, "channel.other_loss", c.channel.other_loss);
    read(tree, "channel.misalignment", c.channel.misalignment);
    read(tree, "channel.dark_count", c.channel.dark_count);
    read(tree, "channel.ec_efficiency", c.channel.ec_efficiency);

    if (const auto phases = tree.get_optional<std::string>("source.phases")) {
      c.phases = parse_phase_list(*phases);
    }

    read(tree, "distance_sweep.start_km", c.distance.start);
    read(tree, "distance_sweep.stop_km", c.distance.stop);
    read(tree, "distance_sweep.step_km", c.distance.step);

    read(tree, "noise_sweep.distance_km", c.noise.distance_km);
    read(tree, "noise_sweep.e11b_start", c.noise.e11b.start);
    read(tree, "noise_sweep.e11b_stop", c.noise.e11b.stop);
    read(tree, "noise_sweep.e11b_step", c.noise.e11b.step);
    read(tree, "noise_sweep.couple_misalignment", c.noise.couple_misalignment);

    read(tree, "intensity_grid.mu_points", c.grid.mu_points);
    read(tree, "intensity_grid.nu_points", c.grid.nu_points);
    read(tree, "intensity_grid.mu_min", c.grid.mu_min);
    read(tree, "intensity_grid.mu_max", c.grid.mu_max);
    read(tree, "intensity_grid.nu_min", c.grid.nu_min);

    read(tree, "estimation.truncation_K", c.estimation.truncation_K);
    read(tree, "estimation.num_decoys_M", c.estimation.num_decoys_M);
    read_optional(tree, "estimation.epsilon_override", c.estimation.epsilon_override);
    read(tree, "estimation.max_widenings", c.estimation.max_widenings);

    read(tree, "series.relative_term_cutoff", c.series.relative_term_cutoff);
    read(tree, "series.max_terms", c.series.max_terms);

    read(tree, "output.path", c.output);

    read(tree, "attack.mu", c.attack.mu);
    read(tree, "attack.nu", c.attack.nu);
    read(tree, "attack.cutoff", c.attack.cutoff);
    read_optional(tree, "attack.eta", c.attack.eta);

    read(tree, "estimate.stats_csv", c.estimate.stats_csv);
    read(tree, "estimate.signal", c.estimate.signal);
    read(tree, "estimate.decoy", c.estimate.decoy);

    c.validate();
    return c;
  } catch (const std::exception& e) {
    throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace dprmdi
