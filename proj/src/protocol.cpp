#include "elab/protocol.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace elab {

using nlohmann::ordered_json;

std::string to_string(ResponseStatus s) {
  switch (s) {
    case ResponseStatus::kOk: return "ok";
    case ResponseStatus::kInfeasibleDose: return "infeasible_dose";
    case ResponseStatus::kInventoryExhausted: return "inventory_exhausted";
    case ResponseStatus::kInstrumentFault: return "instrument_fault";
  }
  return "instrument_fault";
}

ResponseStatus response_status_from_string(const std::string& s) {
  if (s == "ok") return ResponseStatus::kOk;
  if (s == "infeasible_dose") return ResponseStatus::kInfeasibleDose;
  if (s == "inventory_exhausted") return ResponseStatus::kInventoryExhausted;
  if (s == "instrument_fault") return ResponseStatus::kInstrumentFault;
  throw TransportError("unknown response status: " + s);
}

void ExperimentRequest::validate() const {
  if (campaign_id.empty()) throw DomainError("campaign_id must be non-empty");
  if (experiment_id < 1) throw DomainError("experiment_id must be >= 1");
  if (replicates < 2)
    throw DomainError("replicates must be >= 2 (reporting excludes run 0)");
  composition.validate();
}

namespace {

ordered_json composition_json(const Electrolyte& e) {
  return ordered_json{{"w_ec", e.blend.w_ec},
                      {"w_dmc", e.blend.w_dmc},
                      {"w_emc", e.blend.w_emc},
                      {"molality", e.molality}};
}

Electrolyte composition_from(const ordered_json& j) {
  Electrolyte e;
  e.blend.w_ec = j.at("w_ec").get<double>();
  e.blend.w_dmc = j.at("w_dmc").get<double>();
  e.blend.w_emc = j.at("w_emc").get<double>();
  e.molality = j.at("molality").get<double>();
  return e;
}

}  // namespace

std::string to_json(const ExperimentRequest& r) {
  ordered_json j{{"campaign_id", r.campaign_id},
                 {"experiment_id", r.experiment_id},
                 {"composition", composition_json(r.composition)},
                 {"replicates", r.replicates}};
  return j.dump();
}

ExperimentRequest request_from_json(const std::string& body) {
  ordered_json j = ordered_json::parse(body);
  ExperimentRequest r;
  r.campaign_id = j.at("campaign_id").get<std::string>();
  r.experiment_id = j.at("experiment_id").get<std::uint64_t>();
  r.composition = composition_from(j.at("composition"));
  r.replicates = j.value("replicates", 3);
  return r;
}

std::string to_json(const ExperimentResponse& r) {
  ordered_json j;
  j["experiment_id"] = r.experiment_id;
  j["status"] = to_string(r.status);
  if (r.status == ResponseStatus::kOk) {
    j["conductivity_ms_cm"] = r.conductivity_ms_cm;
    j["density_g_ml"] = r.density_g_ml;
    j["temperature_c"] = r.temperature_c;
    j["runs"] = r.runs_ms_cm;
    j["duration_s"] = r.duration_s;
  } else {
    j["reason"] = r.reason;
  }
  return j.dump();
}

ExperimentResponse response_from_json(const std::string& body) {
  ordered_json j = ordered_json::parse(body);
  ExperimentResponse r;
  r.experiment_id = j.at("experiment_id").get<std::uint64_t>();
  r.status = response_status_from_string(j.at("status").get<std::string>());
  if (r.status == ResponseStatus::kOk) {
    r.conductivity_ms_cm = j.at("conductivity_ms_cm").get<double>();
    r.density_g_ml = j.at("density_g_ml").get<double>();
    r.temperature_c = j.at("temperature_c").get<double>();
    r.runs_ms_cm = j.at("runs").get<std::vector<double>>();
    r.duration_s = j.at("duration_s").get<double>();
  } else {
    r.reason = j.value("reason", "");
  }
  return r;
}

std::string to_json(const InstrumentStatus& s) {
  ordered_json inv = ordered_json::object();
  for (const auto& [id, ml] : s.inventory_ml) inv[id] = ml;
  ordered_json j{{"inventory_ml", inv},
                 {"clock_s", s.clock_s},
                 {"residual_ms_cm", s.residual_ms_cm},
                 {"cell_constant_per_cm", s.cell_constant_per_cm},
                 {"experiments_completed", s.experiments_completed}};
  return j.dump();
}

InstrumentStatus status_from_json(const std::string& body) {
  ordered_json j = ordered_json::parse(body);
  InstrumentStatus s;
  for (const auto& [id, ml] : j.at("inventory_ml").items())
    s.inventory_ml[id] = ml.get<double>();
  s.clock_s = j.at("clock_s").get<double>();
  s.residual_ms_cm = j.at("residual_ms_cm").get<double>();
  s.cell_constant_per_cm = j.at("cell_constant_per_cm").get<double>();
  s.experiments_completed = j.at("experiments_completed").get<std::uint64_t>();
  return s;
}

// ---------------------------------------------------------------------------
// InstrumentService
// ---------------------------------------------------------------------------

InstrumentService::InstrumentService(LabConfig cfg) : lab_(std::move(cfg)) {}

ExperimentResponse InstrumentService::handle_experiment(const ExperimentRequest& req) {
  req.validate();

  // FIFO ticket: requests execute strictly in arrival order.
  std::unique_lock<std::mutex> lock(mu_);
  const std::uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return serving_ticket_ == ticket; });

  ExperimentResponse resp;
  const auto key = std::make_pair(req.campaign_id, req.experiment_id);
  if (auto it = cache_.find(key); it != cache_.end()) {
    resp = it->second;  // idempotent retransmission: no second measurement
  } else {
    resp = execute(req);
    if (cache_counts_[req.campaign_id] < kCacheCapPerCampaign) {
      cache_[key] = resp;
      ++cache_counts_[req.campaign_id];
    }
  }

  ++serving_ticket_;
  lock.unlock();
  cv_.notify_all();
  return resp;
}

ExperimentResponse InstrumentService::execute(const ExperimentRequest& req) {
  ExperimentResponse resp;
  resp.experiment_id = req.experiment_id;
  try {
    LabConfig& cfg = lab_.config;
    const int saved = cfg.replicates;
    cfg.replicates = req.replicates;
    MeasurementRecord rec;
    try {
      rec = run_measurement(req.composition, lab_);
    } catch (...) {
      cfg.replicates = saved;
      throw;
    }
    cfg.replicates = saved;
    rinse(lab_);

    resp.status = ResponseStatus::kOk;
    resp.conductivity_ms_cm = rec.reported_ms_cm;
    resp.density_g_ml = rec.density_g_ml;
    resp.temperature_c = rec.temperature_c;
    resp.runs_ms_cm = rec.runs_ms_cm;
    resp.duration_s = rec.finished_s - rec.started_s;
  } catch (const InfeasibleDoseError& e) {
    resp.status = ResponseStatus::kInfeasibleDose;
    resp.reason = e.what();
  } catch (const InventoryError& e) {
    resp.status = ResponseStatus::kInventoryExhausted;
    resp.reason = e.what();
  } catch (const std::exception& e) {
    resp.status = ResponseStatus::kInstrumentFault;
    resp.reason = e.what();
  }
  return resp;
}

InstrumentStatus InstrumentService::status() const {
  std::lock_guard<std::mutex> lock(mu_);
  InstrumentStatus s;
  for (const auto& f : lab_.feeders) s.inventory_ml[f.id] = f.inventory_ml;
  s.clock_s = lab_.clock_s;
  s.residual_ms_cm = lab_.residual_line_ms_cm;
  s.cell_constant_per_cm = lab_.cell_constant.value_per_cm;
  s.experiments_completed = lab_.experiments_started;
  return s;
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

ExperimentResponse LoopbackTransport::post_experiment(const ExperimentRequest& req) {
  // Round-trip through the codec so loopback exercises the same wire format.
  const ExperimentRequest decoded = request_from_json(to_json(req));
  return response_from_json(to_json(service_->handle_experiment(decoded)));
}

InstrumentStatus LoopbackTransport::get_status() {
  return status_from_json(to_json(service_->status()));
}

struct HttpTransport::Impl {
  httplib::Client client;
  Impl(const std::string& host, int port) : client(host, port) {
    client.set_read_timeout(600, 0);
    client.set_connection_timeout(10, 0);
  }
};

HttpTransport::HttpTransport(std::string host, int port)
    : impl_(std::make_unique<Impl>(host, port)) {}

HttpTransport::~HttpTransport() = default;

ExperimentResponse HttpTransport::post_experiment(const ExperimentRequest& req) {
  auto res = impl_->client.Post("/experiment", to_json(req), "application/json");
  if (!res) throw TransportError("POST /experiment failed: no response");
  if (res->status >= 400 && res->status < 500)
    throw DomainError("request rejected: " + res->body);
  if (res->status != 200)
    throw TransportError("POST /experiment failed: HTTP " +
                         std::to_string(res->status));
  return response_from_json(res->body);
}

InstrumentStatus HttpTransport::get_status() {
  auto res = impl_->client.Get("/status");
  if (!res || res->status != 200) throw TransportError("GET /status failed");
  return status_from_json(res->body);
}

bool HttpTransport::health() {
  auto res = impl_->client.Get("/health");
  return res && res->status == 200;
}

ExperimentResponse submit_experiment(Transport& transport,
                                     const ExperimentRequest& req,
                                     int max_attempts) {
  req.validate();
  std::string last_error;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    try {
      return transport.post_experiment(req);
    } catch (const TransportError& e) {
      last_error = e.what();
      std::this_thread::sleep_for(std::chrono::milliseconds(50 * (attempt + 1)));
    }
  }
  throw TransportError("submit_experiment exhausted retries: " + last_error);
}

// ---------------------------------------------------------------------------
// HTTP server
// ---------------------------------------------------------------------------

struct InstrumentServer::Impl {
  std::shared_ptr<InstrumentService> service;
  std::string host;
  int port;
  httplib::Server server;
  std::thread thread;
  int bound_port = -1;

  Impl(std::shared_ptr<InstrumentService> svc, std::string h, int p)
      : service(std::move(svc)), host(std::move(h)), port(p) {
    server.Post("/experiment", [this](const httplib::Request& req,
                                      httplib::Response& res) {
      ExperimentRequest er;
      try {
        er = request_from_json(req.body);
        er.validate();
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(
            nlohmann::ordered_json{{"status", "invalid_request"},
                                   {"reason", e.what()}}
                .dump(),
            "application/json");
        return;
      }
      const ExperimentResponse resp = service->handle_experiment(er);
      res.set_content(to_json(resp), "application/json");
    });
    server.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(to_json(service->status()), "application/json");
    });
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(nlohmann::ordered_json{{"status", "ok"}}.dump(),
                      "application/json");
    });
  }
};

InstrumentServer::InstrumentServer(std::shared_ptr<InstrumentService> service,
                                   std::string host, int port)
    : impl_(std::make_unique<Impl>(std::move(service), std::move(host), port)) {}

InstrumentServer::~InstrumentServer() { stop(); }

int InstrumentServer::start() {
  if (impl_->port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(impl_->host);
  } else {
    if (!impl_->server.bind_to_port(impl_->host, impl_->port))
      throw TransportError("cannot bind " + impl_->host + ":" +
                           std::to_string(impl_->port));
    impl_->bound_port = impl_->port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->bound_port;
}

void InstrumentServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void InstrumentServer::run() {
  if (impl_->port == 0) throw ConfigError("run() needs an explicit port");
  impl_->bound_port = impl_->port;
  impl_->server.listen(impl_->host, impl_->port);
}

}  // namespace elab
