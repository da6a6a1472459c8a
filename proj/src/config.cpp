#include "elab/config.hpp"

#include <fstream>
#include <sstream>

#include "elab/surface.hpp"

namespace elab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cf;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("malformed section header at line " +
                          std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      cf.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("empty key at line " + std::to_string(lineno));
    cf.data_[section][key] = value;
  }
  return cf;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  return s != data_.end() && s->second.contains(key);
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  const auto s = data_.find(section);
  if (s == data_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  if (!has(section, key)) return fallback;
  return std::stod(get(section, key, ""));
}

int ConfigFile::get_int(const std::string& section, const std::string& key,
                        int fallback) const {
  if (!has(section, key)) return fallback;
  return std::stoi(get(section, key, ""));
}

std::uint64_t ConfigFile::get_u64(const std::string& section,
                                  const std::string& key,
                                  std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  return std::stoull(get(section, key, ""));
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("not a boolean: " + section + "." + key + " = " + v);
}

std::vector<std::string> ConfigFile::sections_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : data_)
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  return out;
}

namespace {

LoadedConfig build(const ConfigFile& cf) {
  LoadedConfig lc;
  CampaignConfig& c = lc.campaign;

  c.campaign_id = cf.get("campaign", "id", c.campaign_id);
  c.seed = cf.get_u64("campaign", "seed", c.seed);
  c.budget = cf.get_int("campaign", "budget", c.budget);

  c.grid.bounds.ec_frac.lo = cf.get_double("grid", "ec_min", c.grid.bounds.ec_frac.lo);
  c.grid.bounds.ec_frac.hi = cf.get_double("grid", "ec_max", c.grid.bounds.ec_frac.hi);
  c.grid.ec_levels = cf.get_int("grid", "ec_levels", c.grid.ec_levels);
  c.grid.bounds.dmc_ratio.lo =
      cf.get_double("grid", "ratio_min", c.grid.bounds.dmc_ratio.lo);
  c.grid.bounds.dmc_ratio.hi =
      cf.get_double("grid", "ratio_max", c.grid.bounds.dmc_ratio.hi);
  c.grid.ratio_levels = cf.get_int("grid", "ratio_levels", c.grid.ratio_levels);
  c.grid.bounds.molality.lo =
      cf.get_double("grid", "molality_min", c.grid.bounds.molality.lo);
  c.grid.bounds.molality.hi =
      cf.get_double("grid", "molality_max", c.grid.bounds.molality.hi);
  c.grid.molality_levels =
      cf.get_int("grid", "molality_levels", c.grid.molality_levels);

  c.planner.init_count = cf.get_int("planner", "init_count", c.planner.init_count);
  c.planner.random_period =
      cf.get_int("planner", "random_period", c.planner.random_period);
  c.planner.ucb_beta = cf.get_double("planner", "ucb_beta", c.planner.ucb_beta);
  c.planner.temperature_correct = cf.get_bool("planner", "temperature_correct",
                                              c.planner.temperature_correct);
  c.planner.temp_coeff_per_c = cf.get_double("planner", "temp_coeff_per_c",
                                             c.planner.temp_coeff_per_c);
  c.planner.ref_temp_c = cf.get_double("planner", "ref_temp_c", c.planner.ref_temp_c);
  if (cf.has("planner", "cycle")) {
    c.planner.cycle.clear();
    std::stringstream ss(cf.get("planner", "cycle", ""));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) c.planner.cycle.push_back(acquisition_from_string(tok));
    }
  }

  LabConfig lab = LabConfig::with_default_feeders();
  lab.sample_mass_g = cf.get_double("lab", "sample_mass_g", lab.sample_mass_g);
  lab.contamination_fraction =
      cf.get_double("lab", "contamination_fraction", lab.contamination_fraction);
  lab.run_mad_fraction =
      cf.get_double("lab", "run_mad_fraction", lab.run_mad_fraction);
  lab.impedance_noise_rel =
      cf.get_double("lab", "impedance_noise_rel", lab.impedance_noise_rel);
  lab.temp_lo_c = cf.get_double("lab", "temp_lo_c", lab.temp_lo_c);
  lab.temp_hi_c = cf.get_double("lab", "temp_hi_c", lab.temp_hi_c);
  lab.rinse_residual_ms_cm =
      cf.get_double("lab", "rinse_residual_ms_cm", lab.rinse_residual_ms_cm);
  lab.calibration_standard_ms_cm = cf.get_double(
      "lab", "calibration_standard_ms_cm", lab.calibration_standard_ms_cm);
  lab.physical_cell_constant_per_cm =
      cf.get_double("lab", "physical_cell_constant_per_cm",
                    lab.physical_cell_constant_per_cm);
  lab.dose_s = cf.get_double("lab", "dose_s", lab.dose_s);
  lab.run_s = cf.get_double("lab", "run_s", lab.run_s);
  lab.rinse_s = cf.get_double("lab", "rinse_s", lab.rinse_s);
  lab.replicates = cf.get_int("lab", "replicates", lab.replicates);

  lab.density.ec_density_g_ml =
      cf.get_double("density", "ec_g_ml", lab.density.ec_density_g_ml);
  lab.density.dmc_density_g_ml =
      cf.get_double("density", "dmc_g_ml", lab.density.dmc_density_g_ml);
  lab.density.emc_density_g_ml =
      cf.get_double("density", "emc_g_ml", lab.density.emc_density_g_ml);
  lab.density.ref_temp_c =
      cf.get_double("density", "ref_temp_c", lab.density.ref_temp_c);
  lab.density.temp_slope_g_ml_per_c = cf.get_double(
      "density", "temp_slope_g_ml_per_c", lab.density.temp_slope_g_ml_per_c);
  lab.density.salt_molar_mass_kg_mol = cf.get_double(
      "density", "salt_molar_mass_kg_mol", lab.density.salt_molar_mass_kg_mol);
  lab.density.salt_apparent_volume_ml_mol =
      cf.get_double("density", "salt_apparent_volume_ml_mol",
                    lab.density.salt_apparent_volume_ml_mol);

  // Feeder roster: any [feeder <id>] section replaces the default set.
  const auto feeder_sections = cf.sections_with_prefix("feeder ");
  if (!feeder_sections.empty()) {
    lab.feeders.clear();
    for (const std::string& sec : feeder_sections) {
      FeederSolution f;
      f.id = trim(sec.substr(7));
      f.composition.blend.w_ec = cf.get_double(sec, "w_ec", 0.0);
      f.composition.blend.w_dmc = cf.get_double(sec, "w_dmc", 0.0);
      f.composition.blend.w_emc = cf.get_double(sec, "w_emc", 0.0);
      f.composition.molality = cf.get_double(sec, "molality", 0.0);
      f.density_g_ml = cf.get_double(sec, "density_g_ml", 0.0);
      f.inventory_ml = cf.get_double(sec, "inventory_ml", 400.0);
      lab.feeders.push_back(std::move(f));
    }
  }

  // Ground truth: pinned parameters win, otherwise calibrate from anchors.
  if (cf.has("surface", "peak_base")) {
    SurfaceParams p;
    p.peak_base = cf.get_double("surface", "peak_base", p.peak_base);
    p.ec_curvature = cf.get_double("surface", "ec_curvature", p.ec_curvature);
    p.ratio_gain = cf.get_double("surface", "ratio_gain", p.ratio_gain);
    p.best_ec_frac = cf.get_double("surface", "best_ec_frac", p.best_ec_frac);
    p.peak_molality = cf.get_double("surface", "peak_molality", p.peak_molality);
    p.shape_a = cf.get_double("surface", "shape_a", p.shape_a);
    p.shape_b = cf.get_double("surface", "shape_b", p.shape_b);
    p.temp_coeff_per_c =
        cf.get_double("surface", "temp_coeff_per_c", p.temp_coeff_per_c);
    p.ref_temp_c = cf.get_double("surface", "ref_temp_c", p.ref_temp_c);
    lab.surface = p;
  } else {
    const std::string anchors_csv = cf.get("lab", "anchors_csv", "");
    const auto anchors =
        anchors_csv.empty() ? default_anchor_set() : load_anchors_csv(anchors_csv);
    SurfaceParams init;
    init.temp_coeff_per_c =
        cf.get_double("surface", "temp_coeff_per_c", init.temp_coeff_per_c);
    init.ref_temp_c = cf.get_double("surface", "ref_temp_c", init.ref_temp_c);
    lab.surface = calibrate_surface(anchors, init).params;
  }
  c.lab = lab;

  c.baseline.enabled = cf.get_bool("baseline", "enabled", c.baseline.enabled);
  c.baseline.composition.blend.w_ec =
      cf.get_double("baseline", "w_ec", c.baseline.composition.blend.w_ec);
  c.baseline.composition.blend.w_dmc =
      cf.get_double("baseline", "w_dmc", c.baseline.composition.blend.w_dmc);
  c.baseline.composition.blend.w_emc =
      cf.get_double("baseline", "w_emc", c.baseline.composition.blend.w_emc);
  c.baseline.composition.molality =
      cf.get_double("baseline", "molality", c.baseline.composition.molality);

  lc.protocol.bind = cf.get("protocol", "bind", lc.protocol.bind);
  lc.protocol.port = cf.get_int("protocol", "port", lc.protocol.port);

  lc.human.hours_per_day =
      cf.get_double("human", "hours_per_day", lc.human.hours_per_day);
  lc.human.minutes_per_experiment = cf.get_double(
      "human", "minutes_per_experiment", lc.human.minutes_per_experiment);
  lc.robot.hours_per_day =
      cf.get_double("robot", "hours_per_day", lc.robot.hours_per_day);
  lc.robot.minutes_per_experiment = cf.get_double(
      "robot", "minutes_per_experiment", lc.robot.minutes_per_experiment);

  c.finalize();
  return lc;
}

}  // namespace

LoadedConfig load_config(const std::string& path) {
  return build(ConfigFile::parse_file(path));
}

LoadedConfig default_config() { return build(ConfigFile::parse_string("")); }

std::string render_default_config() {
  return R"(# Closed-loop electrolyte conductivity optimization: campaign configuration.
# Every key is optional; values shown are the defaults.

[campaign]
id = campaign-1
seed = 1
budget = 40

[grid]
ec_min = 0.30
ec_max = 0.50
ec_levels = 11
ratio_min = 0.0
ratio_max = 1.0
ratio_levels = 11
molality_min = 0.0
molality_max = 1.8
molality_levels = 11

[planner]
init_count = 5
random_period = 5
ucb_beta = 2.0
cycle = thompson, ei, ttei, ucb
temperature_correct = true
temp_coeff_per_c = 0.02
ref_temp_c = 27.0

[lab]
sample_mass_g = 10.0
contamination_fraction = 0.08
run_mad_fraction = 0.013
impedance_noise_rel = 0.0
temp_lo_c = 26.0
temp_hi_c = 28.0
rinse_residual_ms_cm = 0.0
calibration_standard_ms_cm = 12.39
physical_cell_constant_per_cm = 1.0
dose_s = 360
run_s = 480
rinse_s = 240
replicates = 3
# anchors_csv = configs/anchors.csv   # calibrate the surface from a CSV

[density]
ec_g_ml = 1.321
dmc_g_ml = 1.069
emc_g_ml = 1.006
ref_temp_c = 25.0
temp_slope_g_ml_per_c = 0.001
salt_molar_mass_kg_mol = 0.15191
salt_apparent_volume_ml_mol = 45.0

[baseline]
enabled = true
w_ec = 0.30
w_dmc = 0.0
w_emc = 0.70
molality = 1.1

[protocol]
bind = 127.0.0.1
port = 8080

[human]
hours_per_day = 8
minutes_per_experiment = 28.8

[robot]
hours_per_day = 24
minutes_per_experiment = 80

# Feeder stocks. Any [feeder <id>] section replaces the built-in roster of
# three neat solvents plus three 4 mol/kg salted stocks.
# [feeder EC]
# w_ec = 1.0
# w_dmc = 0.0
# w_emc = 0.0
# molality = 0.0
# density_g_ml = 0      # 0 means estimate from the mixing rule
# inventory_ml = 400
)";
}

}  // namespace elab
