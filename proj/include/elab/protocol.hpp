#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "elab/instrument.hpp"
#include "elab/types.hpp"

namespace elab {

enum class ResponseStatus {
  kOk,
  kInfeasibleDose,
  kInventoryExhausted,
  kInstrumentFault,
};

std::string to_string(ResponseStatus s);
ResponseStatus response_status_from_string(const std::string& s);

struct ExperimentRequest {
  std::string campaign_id;
  std::uint64_t experiment_id = 1;
  Electrolyte composition;
  int replicates = 3;

  void validate() const;
};

struct ExperimentResponse {
  std::uint64_t experiment_id = 0;
  ResponseStatus status = ResponseStatus::kOk;
  double conductivity_ms_cm = 0.0;
  double density_g_ml = 0.0;
  double temperature_c = 0.0;
  std::vector<double> runs_ms_cm;
  double duration_s = 0.0;
  std::string reason;  // populated for non-ok statuses
};

struct InstrumentStatus {
  std::map<std::string, double> inventory_ml;
  double clock_s = 0.0;
  double residual_ms_cm = 0.0;
  double cell_constant_per_cm = 0.0;
  std::uint64_t experiments_completed = 0;
};

// JSON codec. Field names are the wire contract.
std::string to_json(const ExperimentRequest& r);
std::string to_json(const ExperimentResponse& r);
std::string to_json(const InstrumentStatus& s);
ExperimentRequest request_from_json(const std::string& body);
ExperimentResponse response_from_json(const std::string& body);
InstrumentStatus status_from_json(const std::string& body);

/// The instrument behind the wire: serializes execution against the single
/// LabState in FIFO ticket order and caches responses by
/// (campaign_id, experiment_id) so retransmissions never re-measure.
class InstrumentService {
 public:
  explicit InstrumentService(LabConfig cfg);

  ExperimentResponse handle_experiment(const ExperimentRequest& req);
  InstrumentStatus status() const;

  const LabState& lab() const { return lab_; }

 private:
  ExperimentResponse execute(const ExperimentRequest& req);

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ticket_ = 0;
  LabState lab_;
  std::map<std::pair<std::string, std::uint64_t>, ExperimentResponse> cache_;
  static constexpr std::size_t kCacheCapPerCampaign = 4096;
  std::map<std::string, std::size_t> cache_counts_;
};

/// Transport abstraction so the campaign loop runs identically over a real
/// socket or an in-process loopback.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ExperimentResponse post_experiment(const ExperimentRequest& req) = 0;
  virtual InstrumentStatus get_status() = 0;
  virtual bool health() = 0;
};

class LoopbackTransport : public Transport {
 public:
  explicit LoopbackTransport(std::shared_ptr<InstrumentService> service)
      : service_(std::move(service)) {}
  ExperimentResponse post_experiment(const ExperimentRequest& req) override;
  InstrumentStatus get_status() override;
  bool health() override { return service_ != nullptr; }

 private:
  std::shared_ptr<InstrumentService> service_;
};

class HttpTransport : public Transport {
 public:
  HttpTransport(std::string host, int port);
  ~HttpTransport() override;
  ExperimentResponse post_experiment(const ExperimentRequest& req) override;
  InstrumentStatus get_status() override;
  bool health() override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocking submission with idempotent retries on transport failure.
ExperimentResponse submit_experiment(Transport& transport,
                                     const ExperimentRequest& req,
                                     int max_attempts = 3);

/// HTTP/1.1 server exposing POST /experiment, GET /status, GET /health.
class InstrumentServer {
 public:
  InstrumentServer(std::shared_ptr<InstrumentService> service, std::string host,
                   int port);
  ~InstrumentServer();

  /// Start in a background thread; returns the bound port (resolves port 0).
  int start();
  void stop();
  /// Serve on the calling thread until stopped.
  void run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace elab
