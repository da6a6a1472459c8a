#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "elab/planner.hpp"
#include "elab/protocol.hpp"

namespace elab {

struct GridSpec {
  AxisBounds bounds{AxisRange{0.30, 0.50}, AxisRange{0.0, 1.0},
                    AxisRange{0.0, 1.8}};
  int ec_levels = 11;
  int ratio_levels = 11;
  int molality_levels = 11;

  DomainGrid enumerate() const {
    return enumerate_grid(bounds, ec_levels, ratio_levels, molality_levels);
  }
};

struct BaselineSpec {
  bool enabled = true;
  Electrolyte composition{SolventBlend{0.30, 0.0, 0.70}, 1.1};
};

struct CampaignConfig {
  std::string campaign_id = "campaign-1";
  std::uint64_t seed = 1;
  int budget = 40;
  GridSpec grid;
  PlannerConfig planner;
  LabConfig lab;
  BaselineSpec baseline;

  /// Fills the derived fields (planner/lab seeds from the master seed,
  /// surface calibration if not already pinned) and validates.
  void finalize();
};

struct LogEntry {
  int step = 0;                 // 0 is the baseline reference measurement
  std::string kind;             // acquisition kind, or "reference"
  ExperimentRequest request;
  ExperimentResponse response;
  double best_so_far = 0.0;     // prefix max over non-reference ok entries
  std::optional<GpHyperparams> gp;
};

struct CampaignSummary {
  int experiments = 0;
  double best_ms_cm = 0.0;
  std::optional<Electrolyte> best_composition;
  double lab_clock_s = 0.0;
  bool grid_exhausted = false;
};

struct CampaignLog {
  CampaignConfig config;
  std::vector<LogEntry> entries;
  std::optional<CampaignSummary> summary;
};

// JSONL persistence. A log is one config line, zero or more entry lines and
// an optional summary line; any prefix that ends on a line boundary parses.
std::string config_line(const CampaignConfig& cfg);
std::string entry_line(const LogEntry& e);
std::string summary_line(const CampaignSummary& s);
CampaignConfig config_from_line(const std::string& line);
LogEntry entry_from_line(const std::string& line);
CampaignLog load_log(const std::filesystem::path& path);

/// Runs (or resumes) the closed loop against `transport`, appending to
/// `log_path` after every experiment. Existing log content is treated as a
/// prefix: its requests are re-submitted (idempotent on a live instrument,
/// deterministic re-execution on a fresh one) and the campaign continues.
CampaignLog run_campaign(const CampaignConfig& cfg, Transport& transport,
                         const std::filesystem::path& log_path,
                         const std::function<void(const LogEntry&)>& on_entry = {});

/// Convenience: own instrument, loopback transport.
CampaignLog run_campaign(const CampaignConfig& cfg,
                         const std::filesystem::path& log_path);

struct CandidateRule {
  enum class Kind { kTopConductivity, kHighMolalityAbove, kLowMolalityAbove,
                    kTopWithSolventPresent };
  Kind kind = Kind::kTopConductivity;
  int n = 1;
  double kappa_min_ms_cm = 0.0;
  std::string solvent;  // "ec" | "dmc" | "emc"
};

std::vector<CandidateRule> default_candidate_rules();
CandidateRule candidate_rule_from_string(const std::string& s);

struct Candidate {
  Electrolyte composition;
  double conductivity_ms_cm = 0.0;
  int step = 0;
  std::string rule;
};

/// Applies the rules in order over the unique measured compositions
/// (reference entries excluded), deduplicating across rules.
std::vector<Candidate> select_candidates(const CampaignLog& log,
                                         std::span<const CandidateRule> rules);

struct CurvePoint {
  int step = 0;
  double best_ms_cm = 0.0;
};

std::vector<CurvePoint> best_so_far(const CampaignLog& log);

/// Analysis-ready flat export of a log.
std::string log_to_csv(const CampaignLog& log);

}  // namespace elab
