#include <atomic>
#include <thread>

#include "doctest.h"
#include "elab/config.hpp"
#include "elab/protocol.hpp"
#include "elab/surface.hpp"

using namespace elab;

namespace {

LabConfig test_lab() {
  LabConfig cfg = LabConfig::with_default_feeders();
  cfg.surface = calibrate_surface(default_anchor_set()).params;
  cfg.seed = 7;
  return cfg;
}

ExperimentRequest baseline_request(std::uint64_t id = 1) {
  ExperimentRequest req;
  req.campaign_id = "proto-test";
  req.experiment_id = id;
  req.composition = Electrolyte{SolventBlend{0.30, 0.0, 0.70}, 1.1};
  req.replicates = 3;
  return req;
}

}  // namespace

TEST_CASE("codec round-trips requests and responses structurally") {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    ExperimentRequest req;
    req.campaign_id = "c" + std::to_string(rng.below(1000));
    req.experiment_id = 1 + rng.below(10000);
    const double ec = rng.uniform(0.30, 0.50);
    const double ratio = rng.uniform(0.0, 1.0);
    req.composition = axes_to_electrolyte(
        DesignAxes{ec, ratio, rng.uniform(0.0, 2.0)});
    req.replicates = 2 + static_cast<int>(rng.below(3));
    const ExperimentRequest back = request_from_json(to_json(req));
    CHECK(back.campaign_id == req.campaign_id);
    CHECK(back.experiment_id == req.experiment_id);
    CHECK(back.replicates == req.replicates);
    CHECK(back.composition.blend.w_ec == req.composition.blend.w_ec);
    CHECK(back.composition.blend.w_dmc == req.composition.blend.w_dmc);
    CHECK(back.composition.blend.w_emc == req.composition.blend.w_emc);
    CHECK(back.composition.molality == req.composition.molality);
    CHECK(to_json(back) == to_json(req));

    ExperimentResponse resp;
    resp.experiment_id = req.experiment_id;
    const auto statuses = {ResponseStatus::kOk, ResponseStatus::kInfeasibleDose,
                           ResponseStatus::kInventoryExhausted,
                           ResponseStatus::kInstrumentFault};
    resp.status = *(statuses.begin() + rng.below(4));
    if (resp.status == ResponseStatus::kOk) {
      resp.conductivity_ms_cm = rng.uniform(0.0, 15.0);
      resp.density_g_ml = rng.uniform(1.0, 1.4);
      resp.temperature_c = rng.uniform(26.0, 28.0);
      for (int r = 0; r < req.replicates; ++r)
        resp.runs_ms_cm.push_back(rng.uniform(0.0, 15.0));
      resp.duration_s = rng.uniform(100.0, 4000.0);
    } else {
      resp.reason = "synthetic failure";
    }
    const ExperimentResponse rback = response_from_json(to_json(resp));
    CHECK(to_json(rback) == to_json(resp));
  }
}

TEST_CASE("request validation rejects malformed compositions") {
  ExperimentRequest req = baseline_request();
  req.composition.blend.w_emc = 0.60;  // sums to 0.9
  CHECK_THROWS_AS(req.validate(), DomainError);

  req = baseline_request();
  req.replicates = 1;
  CHECK_THROWS_AS(req.validate(), DomainError);

  req = baseline_request();
  req.experiment_id = 0;
  CHECK_THROWS_AS(req.validate(), DomainError);
}

TEST_CASE("service measures the baseline near its published conductivity") {
  InstrumentService service(test_lab());
  const ExperimentResponse resp = service.handle_experiment(baseline_request());
  CHECK(resp.status == ResponseStatus::kOk);
  CHECK(resp.conductivity_ms_cm == doctest::Approx(9.8).epsilon(0.08));
  CHECK(resp.runs_ms_cm.size() == 3);
  CHECK(resp.temperature_c >= 26.0);
  CHECK(resp.temperature_c <= 28.0);
  CHECK(resp.duration_s > 0.0);
}

TEST_CASE("idempotent resubmission returns the cached response") {
  auto service = std::make_shared<InstrumentService>(test_lab());
  LoopbackTransport transport(service);

  const ExperimentResponse first =
      submit_experiment(transport, baseline_request());
  const double clock_after_first = service->status().clock_s;
  const ExperimentResponse again =
      submit_experiment(transport, baseline_request());
  CHECK(to_json(first) == to_json(again));
  CHECK(service->status().clock_s == clock_after_first);  // no re-measurement
  CHECK(service->status().experiments_completed == 1);
}

TEST_CASE("replicate count beyond three still reports mean of runs 1..n") {
  InstrumentService service(test_lab());
  ExperimentRequest req = baseline_request();
  req.replicates = 5;
  const ExperimentResponse resp = service.handle_experiment(req);
  REQUIRE(resp.status == ResponseStatus::kOk);
  REQUIRE(resp.runs_ms_cm.size() == 5);
  double mean = 0.0;
  for (std::size_t i = 1; i < 5; ++i) mean += resp.runs_ms_cm[i];
  mean /= 4.0;
  CHECK(resp.conductivity_ms_cm == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("dose failures map to distinct statuses") {
  LabConfig cfg = test_lab();
  InstrumentService service(cfg);

  // Inventory exhaustion.
  LabConfig starved = cfg;
  for (auto& f : starved.feeders) f.inventory_ml = 0.1;
  InstrumentService starved_service(starved);
  ExperimentRequest req = baseline_request();
  const ExperimentResponse r1 = starved_service.handle_experiment(req);
  CHECK(r1.status == ResponseStatus::kInventoryExhausted);
  CHECK(!r1.reason.empty());

  // Infeasible target: no salt-bearing feeder.
  LabConfig saltless = cfg;
  saltless.feeders = {cfg.feeders[0], cfg.feeders[1], cfg.feeders[2]};
  InstrumentService saltless_service(saltless);
  const ExperimentResponse r2 = saltless_service.handle_experiment(req);
  CHECK(r2.status == ResponseStatus::kInfeasibleDose);
}

TEST_CASE("http server: health, status, experiment, malformed bodies") {
  auto service = std::make_shared<InstrumentService>(test_lab());
  InstrumentServer server(service, "127.0.0.1", 0);
  const int port = server.start();
  REQUIRE(port > 0);

  HttpTransport client("127.0.0.1", port);
  CHECK(client.health());

  const InstrumentStatus before = client.get_status();
  CHECK(before.experiments_completed == 0);
  CHECK(before.inventory_ml.size() == 6);

  const ExperimentResponse resp =
      submit_experiment(client, baseline_request());
  CHECK(resp.status == ResponseStatus::kOk);
  CHECK(client.get_status().experiments_completed == 1);

  // Composition failing its invariants is rejected with a 400-class reason.
  ExperimentRequest bad = baseline_request(2);
  bad.composition.blend.w_emc = 0.55;
  CHECK_THROWS_AS(client.post_experiment(bad), DomainError);

  server.stop();
}

TEST_CASE("loopback and socket transports produce identical streams") {
  const LabConfig cfg = test_lab();

  auto loop_service = std::make_shared<InstrumentService>(cfg);
  LoopbackTransport loop(loop_service);

  auto sock_service = std::make_shared<InstrumentService>(cfg);
  InstrumentServer server(sock_service, "127.0.0.1", 0);
  const int port = server.start();
  HttpTransport sock("127.0.0.1", port);

  Rng rng(5);
  for (std::uint64_t id = 1; id <= 8; ++id) {
    ExperimentRequest req;
    req.campaign_id = "equiv";
    req.experiment_id = id;
    req.composition = axes_to_electrolyte(DesignAxes{
        rng.uniform(0.30, 0.50), rng.uniform(0.0, 1.0), rng.uniform(0.1, 1.8)});
    const ExperimentResponse a = submit_experiment(loop, req);
    const ExperimentResponse b = submit_experiment(sock, req);
    CHECK(to_json(a) == to_json(b));
  }
  server.stop();
}

TEST_CASE("concurrent submissions are serialized in FIFO order") {
  auto service = std::make_shared<InstrumentService>(test_lab());

  // Hammer the service from several threads; distinct experiment ids.
  std::vector<std::thread> threads;
  std::atomic<int> ok_count{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 5; ++i) {
        ExperimentRequest req = baseline_request(
            static_cast<std::uint64_t>(t) * 100 + i + 1);
        req.composition = axes_to_electrolyte(
            DesignAxes{0.30 + 0.02 * t, 0.1 * i, 0.9});
        const ExperimentResponse resp = service->handle_experiment(req);
        if (resp.status == ResponseStatus::kOk) ++ok_count;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(ok_count == 20);
  CHECK(service->status().experiments_completed == 20);
  // The clock advanced by exactly 20 serialized measurements + rinses.
  const LabConfig cfg = test_lab();
  CHECK(service->status().clock_s ==
        doctest::Approx(20.0 * (cfg.dose_s + 3 * cfg.run_s + cfg.rinse_s)));
}
