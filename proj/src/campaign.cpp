#include "elab/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace elab {

using nlohmann::ordered_json;

void CampaignConfig::finalize() {
  if (budget < 0) throw ConfigError("budget must be >= 0");
  const DomainGrid g = grid.enumerate();
  if (static_cast<std::size_t>(budget) > g.size())
    throw ConfigError("budget exceeds grid size");
  planner.seed = mix_seed(seed, "planner");
  planner.budget = budget;
  lab.seed = mix_seed(seed, "lab");
  if (baseline.enabled) baseline.composition.validate();
}

// ---------------------------------------------------------------------------
// JSON persistence
// ---------------------------------------------------------------------------

namespace {

ordered_json axes_json(const DesignAxes& a) {
  return ordered_json{{"ec_frac", a.ec_frac},
                      {"dmc_ratio", a.dmc_ratio},
                      {"molality", a.molality}};
}

ordered_json surface_json(const SurfaceParams& p) {
  return ordered_json{{"peak_base", p.peak_base},
                      {"ec_curvature", p.ec_curvature},
                      {"ratio_gain", p.ratio_gain},
                      {"best_ec_frac", p.best_ec_frac},
                      {"peak_molality", p.peak_molality},
                      {"shape_a", p.shape_a},
                      {"shape_b", p.shape_b},
                      {"temp_coeff_per_c", p.temp_coeff_per_c},
                      {"ref_temp_c", p.ref_temp_c}};
}

SurfaceParams surface_from(const ordered_json& j) {
  SurfaceParams p;
  p.peak_base = j.at("peak_base").get<double>();
  p.ec_curvature = j.at("ec_curvature").get<double>();
  p.ratio_gain = j.at("ratio_gain").get<double>();
  p.best_ec_frac = j.at("best_ec_frac").get<double>();
  p.peak_molality = j.at("peak_molality").get<double>();
  p.shape_a = j.at("shape_a").get<double>();
  p.shape_b = j.at("shape_b").get<double>();
  p.temp_coeff_per_c = j.at("temp_coeff_per_c").get<double>();
  p.ref_temp_c = j.at("ref_temp_c").get<double>();
  return p;
}

ordered_json composition_json(const Electrolyte& e) {
  return ordered_json{{"w_ec", e.blend.w_ec},
                      {"w_dmc", e.blend.w_dmc},
                      {"w_emc", e.blend.w_emc},
                      {"molality", e.molality}};
}

Electrolyte composition_from(const ordered_json& j) {
  return Electrolyte{SolventBlend{j.at("w_ec").get<double>(),
                                  j.at("w_dmc").get<double>(),
                                  j.at("w_emc").get<double>()},
                     j.at("molality").get<double>()};
}

ordered_json lab_json(const LabConfig& c) {
  ordered_json feeders = ordered_json::array();
  for (const auto& f : c.feeders) {
    feeders.push_back(ordered_json{{"id", f.id},
                                   {"composition", composition_json(f.composition)},
                                   {"density_g_ml", f.density_g_ml},
                                   {"inventory_ml", f.inventory_ml}});
  }
  return ordered_json{
      {"surface", surface_json(c.surface)},
      {"density_model",
       ordered_json{{"ec_density_g_ml", c.density.ec_density_g_ml},
                    {"dmc_density_g_ml", c.density.dmc_density_g_ml},
                    {"emc_density_g_ml", c.density.emc_density_g_ml},
                    {"ref_temp_c", c.density.ref_temp_c},
                    {"temp_slope_g_ml_per_c", c.density.temp_slope_g_ml_per_c},
                    {"salt_molar_mass_kg_mol", c.density.salt_molar_mass_kg_mol},
                    {"salt_apparent_volume_ml_mol",
                     c.density.salt_apparent_volume_ml_mol}}},
      {"feeders", feeders},
      {"sample_mass_g", c.sample_mass_g},
      {"contamination_fraction", c.contamination_fraction},
      {"run_mad_fraction", c.run_mad_fraction},
      {"impedance_noise_rel", c.impedance_noise_rel},
      {"temp_lo_c", c.temp_lo_c},
      {"temp_hi_c", c.temp_hi_c},
      {"rinse_residual_ms_cm", c.rinse_residual_ms_cm},
      {"calibration_standard_ms_cm", c.calibration_standard_ms_cm},
      {"physical_cell_constant_per_cm", c.physical_cell_constant_per_cm},
      {"dose_s", c.dose_s},
      {"run_s", c.run_s},
      {"rinse_s", c.rinse_s},
      {"cpe_magnitude", c.cpe_magnitude},
      {"cpe_exponent", c.cpe_exponent},
      {"replicates", c.replicates},
      {"seed", c.seed}};
}

LabConfig lab_from(const ordered_json& j) {
  LabConfig c;
  c.surface = surface_from(j.at("surface"));
  const auto& d = j.at("density_model");
  c.density.ec_density_g_ml = d.at("ec_density_g_ml").get<double>();
  c.density.dmc_density_g_ml = d.at("dmc_density_g_ml").get<double>();
  c.density.emc_density_g_ml = d.at("emc_density_g_ml").get<double>();
  c.density.ref_temp_c = d.at("ref_temp_c").get<double>();
  c.density.temp_slope_g_ml_per_c = d.at("temp_slope_g_ml_per_c").get<double>();
  c.density.salt_molar_mass_kg_mol = d.at("salt_molar_mass_kg_mol").get<double>();
  c.density.salt_apparent_volume_ml_mol =
      d.at("salt_apparent_volume_ml_mol").get<double>();
  c.feeders.clear();
  for (const auto& fj : j.at("feeders")) {
    FeederSolution f;
    f.id = fj.at("id").get<std::string>();
    f.composition = composition_from(fj.at("composition"));
    f.density_g_ml = fj.at("density_g_ml").get<double>();
    f.inventory_ml = fj.at("inventory_ml").get<double>();
    c.feeders.push_back(std::move(f));
  }
  c.sample_mass_g = j.at("sample_mass_g").get<double>();
  c.contamination_fraction = j.at("contamination_fraction").get<double>();
  c.run_mad_fraction = j.at("run_mad_fraction").get<double>();
  c.impedance_noise_rel = j.at("impedance_noise_rel").get<double>();
  c.temp_lo_c = j.at("temp_lo_c").get<double>();
  c.temp_hi_c = j.at("temp_hi_c").get<double>();
  c.rinse_residual_ms_cm = j.at("rinse_residual_ms_cm").get<double>();
  c.calibration_standard_ms_cm = j.at("calibration_standard_ms_cm").get<double>();
  c.physical_cell_constant_per_cm =
      j.at("physical_cell_constant_per_cm").get<double>();
  c.dose_s = j.at("dose_s").get<double>();
  c.run_s = j.at("run_s").get<double>();
  c.rinse_s = j.at("rinse_s").get<double>();
  c.cpe_magnitude = j.at("cpe_magnitude").get<double>();
  c.cpe_exponent = j.at("cpe_exponent").get<double>();
  c.replicates = j.at("replicates").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string config_line(const CampaignConfig& cfg) {
  ordered_json cycle = ordered_json::array();
  for (AcquisitionKind k : cfg.planner.cycle) cycle.push_back(to_string(k));
  ordered_json j{
      {"type", "config"},
      {"campaign_id", cfg.campaign_id},
      {"seed", cfg.seed},
      {"budget", cfg.budget},
      {"grid",
       ordered_json{{"ec", {cfg.grid.bounds.ec_frac.lo, cfg.grid.bounds.ec_frac.hi,
                            cfg.grid.ec_levels}},
                    {"ratio",
                     {cfg.grid.bounds.dmc_ratio.lo, cfg.grid.bounds.dmc_ratio.hi,
                      cfg.grid.ratio_levels}},
                    {"molality",
                     {cfg.grid.bounds.molality.lo, cfg.grid.bounds.molality.hi,
                      cfg.grid.molality_levels}}}},
      {"planner", ordered_json{{"init_count", cfg.planner.init_count},
                               {"random_period", cfg.planner.random_period},
                               {"ucb_beta", cfg.planner.ucb_beta},
                               {"cycle", cycle},
                               {"temperature_correct",
                                cfg.planner.temperature_correct},
                               {"temp_coeff_per_c", cfg.planner.temp_coeff_per_c},
                               {"ref_temp_c", cfg.planner.ref_temp_c}}},
      {"lab", lab_json(cfg.lab)},
      {"baseline", ordered_json{{"enabled", cfg.baseline.enabled},
                                {"composition",
                                 composition_json(cfg.baseline.composition)}}}};
  return j.dump();
}

CampaignConfig config_from_line(const std::string& line) {
  const ordered_json j = ordered_json::parse(line);
  if (j.value("type", "") != "config")
    throw ConfigError("log does not start with a config line");
  CampaignConfig cfg;
  cfg.campaign_id = j.at("campaign_id").get<std::string>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.budget = j.at("budget").get<int>();
  const auto& g = j.at("grid");
  auto axis = [&](const char* name, AxisRange& r, int& levels) {
    r.lo = g.at(name).at(0).get<double>();
    r.hi = g.at(name).at(1).get<double>();
    levels = g.at(name).at(2).get<int>();
  };
  axis("ec", cfg.grid.bounds.ec_frac, cfg.grid.ec_levels);
  axis("ratio", cfg.grid.bounds.dmc_ratio, cfg.grid.ratio_levels);
  axis("molality", cfg.grid.bounds.molality, cfg.grid.molality_levels);
  const auto& p = j.at("planner");
  cfg.planner.init_count = p.at("init_count").get<int>();
  cfg.planner.random_period = p.at("random_period").get<int>();
  cfg.planner.ucb_beta = p.at("ucb_beta").get<double>();
  cfg.planner.cycle.clear();
  for (const auto& s : p.at("cycle"))
    cfg.planner.cycle.push_back(acquisition_from_string(s.get<std::string>()));
  cfg.planner.temperature_correct = p.at("temperature_correct").get<bool>();
  cfg.planner.temp_coeff_per_c = p.at("temp_coeff_per_c").get<double>();
  cfg.planner.ref_temp_c = p.at("ref_temp_c").get<double>();
  cfg.lab = lab_from(j.at("lab"));
  cfg.baseline.enabled = j.at("baseline").at("enabled").get<bool>();
  cfg.baseline.composition =
      composition_from(j.at("baseline").at("composition"));
  cfg.finalize();
  return cfg;
}

std::string entry_line(const LogEntry& e) {
  ordered_json j{{"type", "entry"},
                 {"step", e.step},
                 {"kind", e.kind},
                 {"request", ordered_json::parse(to_json(e.request))},
                 {"response", ordered_json::parse(to_json(e.response))},
                 {"best_so_far", e.best_so_far}};
  if (e.gp) {
    j["gp"] = ordered_json{
        {"lengthscales",
         {e.gp->lengthscales(0), e.gp->lengthscales(1), e.gp->lengthscales(2)}},
        {"signal_var", e.gp->signal_var},
        {"noise_var", e.gp->noise_var}};
  }
  return j.dump();
}

LogEntry entry_from_line(const std::string& line) {
  const ordered_json j = ordered_json::parse(line);
  if (j.value("type", "") != "entry") throw ConfigError("not an entry line");
  LogEntry e;
  e.step = j.at("step").get<int>();
  e.kind = j.at("kind").get<std::string>();
  e.request = request_from_json(j.at("request").dump());
  e.response = response_from_json(j.at("response").dump());
  e.best_so_far = j.at("best_so_far").get<double>();
  if (j.contains("gp")) {
    GpHyperparams h;
    const auto& gj = j.at("gp");
    h.lengthscales << gj.at("lengthscales").at(0).get<double>(),
        gj.at("lengthscales").at(1).get<double>(),
        gj.at("lengthscales").at(2).get<double>();
    h.signal_var = gj.at("signal_var").get<double>();
    h.noise_var = gj.at("noise_var").get<double>();
    e.gp = h;
  }
  return e;
}

std::string summary_line(const CampaignSummary& s) {
  ordered_json j{{"type", "summary"},
                 {"experiments", s.experiments},
                 {"best_ms_cm", s.best_ms_cm},
                 {"lab_clock_s", s.lab_clock_s},
                 {"grid_exhausted", s.grid_exhausted}};
  if (s.best_composition) j["best_composition"] = composition_json(*s.best_composition);
  return j.dump();
}

CampaignLog load_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open log: " + path.string());
  CampaignLog log;
  std::string line;
  bool have_config = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const ordered_json j = ordered_json::parse(line);
    const std::string type = j.value("type", "");
    if (type == "config") {
      log.config = config_from_line(line);
      have_config = true;
    } else if (type == "entry") {
      log.entries.push_back(entry_from_line(line));
    } else if (type == "summary") {
      CampaignSummary s;
      s.experiments = j.at("experiments").get<int>();
      s.best_ms_cm = j.at("best_ms_cm").get<double>();
      s.lab_clock_s = j.at("lab_clock_s").get<double>();
      s.grid_exhausted = j.at("grid_exhausted").get<bool>();
      if (j.contains("best_composition"))
        s.best_composition = composition_from(j.at("best_composition"));
      log.summary = s;
    } else {
      throw ConfigError("unknown log line type: " + type);
    }
  }
  if (!have_config) throw ConfigError("log has no config line");
  return log;
}

// ---------------------------------------------------------------------------
// The closed loop
// ---------------------------------------------------------------------------

namespace {

std::size_t grid_index_of(const DomainGrid& grid, const Electrolyte& e) {
  const DesignAxes a = electrolyte_to_axes(e);
  auto nearest = [](const std::vector<double>& values, double v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
      if (std::abs(values[i] - v) < std::abs(values[best] - v)) best = i;
    return best;
  };
  const std::size_t ie = nearest(grid.ec_values, a.ec_frac);
  const std::size_t ir = nearest(grid.ratio_values, a.dmc_ratio);
  const std::size_t im = nearest(grid.molality_values, a.molality);
  const std::size_t idx = grid.flat_index(static_cast<int>(ie),
                                          static_cast<int>(ir),
                                          static_cast<int>(im));
  const DesignAxes& g = grid.points[idx];
  if (std::abs(g.ec_frac - a.ec_frac) > 1e-9 ||
      std::abs(g.dmc_ratio - a.dmc_ratio) > 1e-9 ||
      std::abs(g.molality - a.molality) > 1e-9)
    throw ConfigError("logged composition is not a grid point");
  return idx;
}

}  // namespace

CampaignLog run_campaign(const CampaignConfig& cfg_in, Transport& transport,
                         const std::filesystem::path& log_path,
                         const std::function<void(const LogEntry&)>& on_entry) {
  CampaignConfig cfg = cfg_in;
  cfg.finalize();

  // Load any existing prefix; it must have been written with this config.
  std::vector<LogEntry> prefix;
  bool fresh = true;
  if (std::filesystem::exists(log_path) &&
      std::filesystem::file_size(log_path) > 0) {
    CampaignLog existing = load_log(log_path);
    if (config_line(existing.config) != config_line(cfg))
      throw ConfigError("existing log was written with a different config");
    if (existing.summary)
      return existing;  // already complete
    prefix = std::move(existing.entries);
    fresh = false;
  }

  std::ofstream out;
  if (fresh) {
    if (!log_path.parent_path().empty())
      std::filesystem::create_directories(log_path.parent_path());
    out.open(log_path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write log: " + log_path.string());
    out << config_line(cfg) << "\n" << std::flush;
  } else {
    out.open(log_path, std::ios::app);
    if (!out) throw ConfigError("cannot append log: " + log_path.string());
  }

  CampaignLog log;
  log.config = cfg;

  Planner planner(cfg.grid.enumerate(), cfg.planner);
  double best = -std::numeric_limits<double>::infinity();
  int next_step = 1;

  auto record = [&](LogEntry e, bool from_prefix) {
    if (e.kind != "reference" && e.response.status == ResponseStatus::kOk) {
      best = std::max(best, e.response.conductivity_ms_cm);
    }
    e.best_so_far = best > -std::numeric_limits<double>::infinity() ? best : 0.0;
    if (!from_prefix) {
      out << entry_line(e) << "\n" << std::flush;
      if (on_entry) on_entry(e);
    }
    log.entries.push_back(std::move(e));
  };

  // Re-submit the prefix: a live instrument answers from its idempotency
  // cache, a fresh one deterministically re-executes, either way its state
  // advances to match the log.
  for (const LogEntry& pe : prefix) {
    ExperimentResponse resp = submit_experiment(transport, pe.request);
    if (to_json(resp) != to_json(pe.response))
      throw ConfigError("prefix replay diverged at step " +
                        std::to_string(pe.step));
    if (pe.kind != "reference") {
      const std::size_t idx = grid_index_of(planner.grid(), pe.request.composition);
      if (resp.status == ResponseStatus::kOk)
        planner.observe(idx, cfg.planner.corrected(resp.conductivity_ms_cm,
                                                   resp.temperature_c));
      else
        planner.mark_failed(idx);
      next_step = pe.step + 1;
    }
    LogEntry e = pe;
    record(std::move(e), /*from_prefix=*/true);
  }

  // Baseline reference measurement (step 0), once per campaign. Any
  // non-empty prefix of a baseline-enabled campaign already starts with it.
  if (cfg.baseline.enabled && prefix.empty()) {
    ExperimentRequest req;
    req.campaign_id = cfg.campaign_id;
    req.experiment_id = 1;
    req.composition = cfg.baseline.composition;
    req.replicates = cfg.lab.replicates;
    LogEntry e;
    e.step = 0;
    e.kind = "reference";
    e.request = req;
    e.response = submit_experiment(transport, req);
    record(std::move(e), false);
  }

  bool exhausted = false;
  for (int step = next_step; step <= cfg.budget; ++step) {
    std::optional<PlannedPoint> pick = planner.next_point(step);
    if (!pick) {
      exhausted = true;
      break;
    }
    ExperimentRequest req;
    req.campaign_id = cfg.campaign_id;
    req.experiment_id = static_cast<std::uint64_t>(step) + 1;
    req.composition = axes_to_electrolyte(pick->axes, planner.grid().bounds);
    req.replicates = cfg.lab.replicates;

    LogEntry e;
    e.step = step;
    e.kind = to_string(pick->kind);
    e.request = req;
    e.gp = pick->gp;
    e.response = submit_experiment(transport, req);

    if (e.response.status == ResponseStatus::kOk)
      planner.observe(pick->grid_index,
                      cfg.planner.corrected(e.response.conductivity_ms_cm,
                                            e.response.temperature_c));
    else
      planner.mark_failed(pick->grid_index);

    record(std::move(e), false);
  }

  CampaignSummary s;
  s.experiments = static_cast<int>(log.entries.size());
  s.grid_exhausted = exhausted;
  s.best_ms_cm = 0.0;
  for (const LogEntry& e : log.entries) {
    if (e.kind == "reference" || e.response.status != ResponseStatus::kOk)
      continue;
    if (e.response.conductivity_ms_cm > s.best_ms_cm) {
      s.best_ms_cm = e.response.conductivity_ms_cm;
      s.best_composition = e.request.composition;
    }
  }
  s.lab_clock_s = transport.get_status().clock_s;
  log.summary = s;
  out << summary_line(s) << "\n" << std::flush;
  return log;
}

CampaignLog run_campaign(const CampaignConfig& cfg,
                         const std::filesystem::path& log_path) {
  CampaignConfig c = cfg;
  c.finalize();
  auto service = std::make_shared<InstrumentService>(c.lab);
  LoopbackTransport transport(service);
  return run_campaign(c, transport, log_path);
}

// ---------------------------------------------------------------------------
// Log analysis
// ---------------------------------------------------------------------------

std::vector<CandidateRule> default_candidate_rules() {
  return {
      CandidateRule{CandidateRule::Kind::kTopConductivity, 3, 0.0, ""},
      CandidateRule{CandidateRule::Kind::kHighMolalityAbove, 2, 10.0, ""},
      CandidateRule{CandidateRule::Kind::kLowMolalityAbove, 1, 10.0, ""},
  };
}

CandidateRule candidate_rule_from_string(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  if (parts.empty()) throw ConfigError("empty candidate rule");
  CandidateRule r;
  if (parts[0] == "top") {
    r.kind = CandidateRule::Kind::kTopConductivity;
    if (parts.size() > 1) r.n = std::stoi(parts[1]);
  } else if (parts[0] == "high_molality") {
    r.kind = CandidateRule::Kind::kHighMolalityAbove;
    if (parts.size() < 3) throw ConfigError("high_molality:<kappa_min>:<n>");
    r.kappa_min_ms_cm = std::stod(parts[1]);
    r.n = std::stoi(parts[2]);
  } else if (parts[0] == "low_molality") {
    r.kind = CandidateRule::Kind::kLowMolalityAbove;
    if (parts.size() < 3) throw ConfigError("low_molality:<kappa_min>:<n>");
    r.kappa_min_ms_cm = std::stod(parts[1]);
    r.n = std::stoi(parts[2]);
  } else if (parts[0] == "with_solvent") {
    r.kind = CandidateRule::Kind::kTopWithSolventPresent;
    if (parts.size() < 3) throw ConfigError("with_solvent:<solvent>:<n>");
    r.solvent = parts[1];
    r.n = std::stoi(parts[2]);
  } else {
    throw ConfigError("unknown candidate rule: " + parts[0]);
  }
  if (r.n < 1) throw ConfigError("candidate rule count must be >= 1");
  return r;
}

namespace {

struct Measured {
  Electrolyte composition;
  double kappa = 0.0;
  int step = 0;
};

double solvent_fraction(const Electrolyte& e, const std::string& solvent) {
  if (solvent == "ec") return e.blend.w_ec;
  if (solvent == "dmc") return e.blend.w_dmc;
  if (solvent == "emc") return e.blend.w_emc;
  throw ConfigError("unknown solvent: " + solvent);
}

}  // namespace

std::vector<Candidate> select_candidates(const CampaignLog& log,
                                         std::span<const CandidateRule> rules) {
  // Unique measured compositions, keeping the highest reading per
  // composition so selection does not depend on entry order.
  std::vector<Measured> pool;
  for (const LogEntry& e : log.entries) {
    if (e.kind == "reference" || e.response.status != ResponseStatus::kOk)
      continue;
    auto same = std::find_if(pool.begin(), pool.end(), [&](const Measured& m) {
      return std::abs(m.composition.blend.w_ec - e.request.composition.blend.w_ec) < 1e-12 &&
             std::abs(m.composition.blend.w_dmc - e.request.composition.blend.w_dmc) < 1e-12 &&
             std::abs(m.composition.blend.w_emc - e.request.composition.blend.w_emc) < 1e-12 &&
             std::abs(m.composition.molality - e.request.composition.molality) < 1e-12;
    });
    if (same != pool.end()) {
      if (e.response.conductivity_ms_cm > same->kappa) {
        same->kappa = e.response.conductivity_ms_cm;
        same->step = e.step;
      }
    } else {
      pool.push_back(Measured{e.request.composition,
                              e.response.conductivity_ms_cm, e.step});
    }
  }

  // Deterministic pool order independent of log sequence.
  std::sort(pool.begin(), pool.end(), [](const Measured& a, const Measured& b) {
    if (a.kappa != b.kappa) return a.kappa > b.kappa;
    if (a.composition.molality != b.composition.molality)
      return a.composition.molality < b.composition.molality;
    return a.composition.blend.w_ec < b.composition.blend.w_ec;
  });

  std::vector<Candidate> out;
  std::set<std::size_t> taken;
  auto take = [&](std::size_t i, const std::string& rule) {
    if (!taken.insert(i).second) return false;
    out.push_back(Candidate{pool[i].composition, pool[i].kappa, pool[i].step, rule});
    return true;
  };

  for (const CandidateRule& r : rules) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) order[i] = i;
    std::string name;
    switch (r.kind) {
      case CandidateRule::Kind::kTopConductivity:
        name = "top_conductivity";
        // pool is already sorted by conductivity descending
        break;
      case CandidateRule::Kind::kHighMolalityAbove:
        name = "high_molality";
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return pool[a].composition.molality > pool[b].composition.molality;
        });
        break;
      case CandidateRule::Kind::kLowMolalityAbove:
        name = "low_molality";
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return pool[a].composition.molality < pool[b].composition.molality;
        });
        break;
      case CandidateRule::Kind::kTopWithSolventPresent:
        name = "with_" + r.solvent;
        break;
    }
    int taken_here = 0;
    for (std::size_t i : order) {
      if (taken_here >= r.n) break;
      if (r.kind == CandidateRule::Kind::kHighMolalityAbove ||
          r.kind == CandidateRule::Kind::kLowMolalityAbove) {
        if (pool[i].kappa <= r.kappa_min_ms_cm) continue;
      }
      if (r.kind == CandidateRule::Kind::kTopWithSolventPresent &&
          solvent_fraction(pool[i].composition, r.solvent) <= 0.0)
        continue;
      if (take(i, name)) ++taken_here;
    }
  }
  return out;
}

std::vector<CurvePoint> best_so_far(const CampaignLog& log) {
  std::vector<CurvePoint> curve;
  double best = 0.0;
  bool any = false;
  for (const LogEntry& e : log.entries) {
    if (e.kind == "reference") continue;
    if (e.response.status == ResponseStatus::kOk) {
      best = any ? std::max(best, e.response.conductivity_ms_cm)
                 : e.response.conductivity_ms_cm;
      any = true;
    }
    curve.push_back(CurvePoint{e.step, any ? best : 0.0});
  }
  return curve;
}

std::string log_to_csv(const CampaignLog& log) {
  std::ostringstream os;
  os << "step,kind,w_ec,w_dmc,w_emc,molality,conductivity_ms_cm,temperature_c,"
        "density_g_ml,best_so_far\n";
  char buf[512];
  for (const LogEntry& e : log.entries) {
    const auto& c = e.request.composition;
    std::snprintf(buf, sizeof(buf),
                  "%d,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  e.step, e.kind.c_str(), c.blend.w_ec, c.blend.w_dmc,
                  c.blend.w_emc, c.molality, e.response.conductivity_ms_cm,
                  e.response.temperature_c, e.response.density_g_ml,
                  e.best_so_far);
    os << buf;
  }
  return os.str();
}

}  // namespace elab
