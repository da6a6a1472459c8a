#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "elab/analytics.hpp"
#include "elab/campaign.hpp"
#include "elab/config.hpp"

namespace fs = std::filesystem;

namespace {

elab::LoadedConfig load_or_default(const std::string& path) {
  return path.empty() ? elab::default_config() : elab::load_config(path);
}

int cmd_run(const std::string& config_path, std::uint64_t seed, int budget,
            const std::string& out_dir, const std::string& server) {
  elab::LoadedConfig lc = load_or_default(config_path);
  if (seed != 0) lc.campaign.seed = seed;
  if (budget >= 0) lc.campaign.budget = budget;
  lc.campaign.finalize();

  const fs::path out(out_dir);
  fs::create_directories(out);
  const fs::path log_path = out / "campaign.jsonl";

  auto on_entry = [](const elab::LogEntry& e) {
    std::cout << "step " << e.step << "  " << e.kind << "  ec "
              << e.request.composition.blend.w_ec << "  ratio_m "
              << e.request.composition.molality << "  -> "
              << (e.response.status == elab::ResponseStatus::kOk
                      ? std::to_string(e.response.conductivity_ms_cm) + " mS/cm"
                      : elab::to_string(e.response.status))
              << "  best " << e.best_so_far << "\n";
  };

  elab::CampaignLog log;
  if (server.empty()) {
    auto service = std::make_shared<elab::InstrumentService>(lc.campaign.lab);
    elab::LoopbackTransport transport(service);
    log = elab::run_campaign(lc.campaign, transport, log_path, on_entry);
  } else {
    const auto colon = server.rfind(':');
    if (colon == std::string::npos)
      throw elab::ConfigError("--server expects host:port");
    elab::HttpTransport transport(server.substr(0, colon),
                                  std::stoi(server.substr(colon + 1)));
    log = elab::run_campaign(lc.campaign, transport, log_path, on_entry);
  }

  std::ofstream csv(out / "campaign.csv");
  csv << elab::log_to_csv(log);

  if (log.summary) {
    std::cout << "campaign complete: " << log.summary->experiments
              << " entries, best " << log.summary->best_ms_cm << " mS/cm\n";
  }
  std::cout << "log: " << log_path.string() << "\n";
  return 0;
}

int cmd_replay(const std::string& log_path) {
  const elab::CampaignLog original = elab::load_log(log_path);

  const fs::path replay_path =
      fs::path(log_path).parent_path() /
      (fs::path(log_path).stem().string() + ".replay.jsonl");
  fs::remove(replay_path);

  auto service = std::make_shared<elab::InstrumentService>(original.config.lab);
  elab::LoopbackTransport transport(service);
  elab::run_campaign(original.config, transport, replay_path);

  std::ifstream a(log_path), b(replay_path);
  std::string line_a, line_b;
  int line_no = 0;
  bool identical = true;
  while (true) {
    const bool more_a = static_cast<bool>(std::getline(a, line_a));
    const bool more_b = static_cast<bool>(std::getline(b, line_b));
    ++line_no;
    if (!more_a && !more_b) break;
    if (more_a != more_b || line_a != line_b) {
      identical = false;
      std::cout << "replay diverges at line " << line_no << "\n";
      break;
    }
  }
  std::cout << (identical ? "replay: byte-identical" : "replay: MISMATCH")
            << " (" << replay_path.string() << ")\n";
  return identical ? 0 : 1;
}

int cmd_candidates(const std::string& log_path,
                   const std::vector<std::string>& rule_specs) {
  const elab::CampaignLog log = elab::load_log(log_path);
  std::vector<elab::CandidateRule> rules;
  if (rule_specs.empty()) {
    rules = elab::default_candidate_rules();
  } else {
    for (const auto& s : rule_specs)
      rules.push_back(elab::candidate_rule_from_string(s));
  }
  const auto picks = elab::select_candidates(log, rules);
  std::cout << "rank,rule,step,w_ec,w_dmc,w_emc,molality,conductivity_ms_cm\n";
  int rank = 1;
  for (const auto& c : picks) {
    std::cout << rank++ << "," << c.rule << "," << c.step << ","
              << c.composition.blend.w_ec << "," << c.composition.blend.w_dmc
              << "," << c.composition.blend.w_emc << ","
              << c.composition.molality << "," << c.conductivity_ms_cm << "\n";
  }
  return 0;
}

int cmd_curve(const std::string& log_path, const std::string& format) {
  const elab::CampaignLog log = elab::load_log(log_path);
  if (format != "csv")
    throw elab::ConfigError("unsupported curve format: " + format);
  std::cout << "step,best_ms_cm\n";
  for (const auto& p : elab::best_so_far(log))
    std::cout << p.step << "," << p.best_ms_cm << "\n";
  return 0;
}

int cmd_efficiency(const std::string& config_path, int n) {
  elab::LoadedConfig lc = load_or_default(config_path);
  const int experiments = n > 0 ? n : lc.campaign.budget;
  const auto report = elab::efficiency_report(lc.human, lc.robot, experiments,
                                              /*factorial_levels=*/5,
                                              /*factors=*/3,
                                              /*ml_doe_count=*/42);
  std::cout << elab::to_json(report) << "\n\n" << elab::to_table(report);
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& bind, int port) {
  elab::LoadedConfig lc = load_or_default(config_path);
  if (!bind.empty()) lc.protocol.bind = bind;
  if (port > 0) lc.protocol.port = port;

  auto service = std::make_shared<elab::InstrumentService>(lc.campaign.lab);
  elab::InstrumentServer server(service, lc.protocol.bind, lc.protocol.port);
  std::cout << "instrument listening on " << lc.protocol.bind << ":"
            << lc.protocol.port << "\n";
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop electrolyte conductivity optimization"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", server, log_path;
  std::string bind, format = "csv";
  std::uint64_t seed = 0;
  int budget = -1, port = 0, n = 0;
  std::vector<std::string> rule_specs;

  auto* run = app.add_subcommand("run", "Run (or resume) a campaign");
  run->add_option("--config", config_path, "Config file path");
  run->add_option("--seed", seed, "Override campaign seed");
  run->add_option("--budget", budget, "Override experiment budget");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--server", server,
                  "Run against a remote instrument (host:port) instead of the "
                  "in-process lab");

  auto* replay = app.add_subcommand("replay", "Re-execute a log and verify it");
  replay->add_option("--log", log_path, "Campaign log (JSONL)")->required();

  auto* cand = app.add_subcommand("candidates", "Apply candidate-selection rules");
  cand->add_option("--log", log_path, "Campaign log (JSONL)")->required();
  cand->add_option("--rule", rule_specs,
                   "Rule spec (top:<n>, high_molality:<kmin>:<n>, "
                   "low_molality:<kmin>:<n>, with_solvent:<s>:<n>); repeatable");

  auto* curve = app.add_subcommand("curve", "Emit the best-so-far curve");
  curve->add_option("--log", log_path, "Campaign log (JSONL)")->required();
  curve->add_option("--format", format, "Output format (csv)");

  auto* eff = app.add_subcommand("efficiency", "Time/sample efficiency report");
  eff->add_option("--config", config_path, "Config file path");
  eff->add_option("--n", n, "Experiment count (default: campaign budget)");

  auto* serve = app.add_subcommand("serve", "Serve the virtual instrument");
  serve->add_option("--config", config_path, "Config file path");
  serve->add_option("--bind", bind, "Bind address");
  serve->add_option("--port", port, "Port");

  auto* defcfg = app.add_subcommand("print-config", "Print the default config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, budget, out_dir, server);
    if (replay->parsed()) return cmd_replay(log_path);
    if (cand->parsed()) return cmd_candidates(log_path, rule_specs);
    if (curve->parsed()) return cmd_curve(log_path, format);
    if (eff->parsed()) return cmd_efficiency(config_path, n);
    if (serve->parsed()) return cmd_serve(config_path, bind, port);
    if (defcfg->parsed()) {
      std::cout << elab::render_default_config();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
