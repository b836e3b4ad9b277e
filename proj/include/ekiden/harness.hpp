#pragma once

#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ekiden/client.hpp"
#include "ekiden/keymgr.hpp"
#include "ekiden/node.hpp"
#include "ekiden/pop.hpp"

namespace ekiden::harness {

// One fault, applied exactly once at the named protocol boundary.
struct FaultSpec {
  std::string fault;  // drop_message | crash_node | terminate_enclave |
                      // delay_timer | replay_stale_state
  std::string step;   // protocol boundary (see step names in the README)
  uint64_t when = 1;  // fires at the n-th occurrence of the step
  uint32_t node = UINT32_MAX;      // restrict to one node (crash/drop)
  uint32_t contract = UINT32_MAX;  // restrict to one contract (by list index)
  double amount = 0.0;             // delay_timer seconds
  uint64_t snapshot_index = 0;     // replay_stale_state: which old item
};

struct Workload {
  std::string type = "none";  // none | token_random | counter_queries
  uint64_t requests = 0;
  uint64_t accounts = 100;  // token sink-account pool
  double read_ratio = 0.2;  // fraction of get_balance requests
  uint64_t supply = 1000000;
  uint64_t max_amount = 50;
};

struct PopSweep {
  bool enabled = false;
  std::vector<double> p = {0.1};
  std::vector<double> epsilon = {2.0};
  uint32_t n_c = 10;
  double tau = 1.0;
  uint64_t trials = 10000;
  uint32_t difficulty = 8;
  double t1_delay = 0.0;  // delay_timer injection for the verifier
};

struct Scenario {
  uint64_t seed = 1;
  uint32_t nodes = 2;
  uint32_t clients = 2;
  std::string ledger_backend = "quorum";  // quorum | powsim

  uint32_t committee_n = 5;
  double committee_f = 0.4;
  uint64_t kappa = 1024;
  uint64_t delta = 1;

  bool wal = false;
  uint64_t batch_size = 1;
  uint64_t checkpoint_interval = 64;
  uint64_t epoch_advance_every = 0;  // completed requests per epoch bump; 0 = off

  // one session at a time: a fixed serialization of the workload, used when
  // comparing runs whose write points differ (wal vs full-state)
  bool sequential = false;

  std::vector<contracts::ContractCode> contract_list = {{"token", 0}};
  Workload workload;
  std::vector<FaultSpec> adversary;
  PopSweep pop;
  bool record_transcript = false;
};

// Parses the structured config text (JSON). Throws Error::config with
// line/field diagnostics.
Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& s);

struct AuditRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct PopRow {
  double p = 0, epsilon = 0;
  uint32_t n_c = 0;
  double false_reject_rate = 0, forgery_success_rate = 0;
  uint64_t trials = 0;
};

struct BenchRow {
  uint64_t batch = 0;
  uint64_t requests = 0;
  uint64_t writes = 0;
  double writes_per_request = 0;
};

struct RunReport {
  uint64_t requests = 0;
  uint64_t outputs_delivered = 0;
  uint64_t contract_refusals = 0;  // requests answered with an error output
  uint64_t client_failures = 0;    // retry budgets exhausted
  uint64_t ledger_writes = 0;      // accepted during the workload phase
  uint64_t ledger_rejects = 0;
  uint64_t faults_fired = 0;
  std::map<std::string, uint64_t> chain_bytes;  // per contract (hex cid)
  std::map<std::string, uint64_t> chain_items;
  std::vector<AuditRow> audits;
  std::vector<BenchRow> bench_rows;
  std::vector<PopRow> pop_rows;
  std::string transcript;      // empty unless recording was enabled
  std::string outputs_digest;  // hash over (request index, output plaintext)
  std::map<uint64_t, Bytes> outputs_by_request;

  bool ok() const;
  std::string text() const;   // human-readable summary
  std::string table() const;  // delimited rows (bench/pop/bytes)
};

class Simulation;

// Interposition layer: fault injection, transcript capture, release events.
class Adversary : public node::Instrumentation {
 public:
  Adversary(Simulation& sim, const std::vector<FaultSpec>& plan, bool record);

  bool boundary(std::string_view step, const Ctx& ctx) override;
  void message(std::string_view step, const Ctx& ctx, ByteView payload) override;
  void output_released(const crypto::Digest& cid, const crypto::Digest& h_outp,
                       bool read_only) override;

  struct ReleaseEvent {
    uint64_t seq;
    crypto::Digest cid;
    crypto::Digest h_outp;
    bool read_only;
  };
  const std::vector<ReleaseEvent>& releases() const { return releases_; }
  uint64_t faults_fired() const { return fired_; }
  std::string transcript() const { return transcript_; }

 private:
  Simulation& sim_;
  std::vector<FaultSpec> plan_;
  std::vector<bool> armed_;
  std::vector<uint64_t> fault_counts_;
  std::vector<ReleaseEvent> releases_;
  uint64_t seq_ = 0;
  uint64_t fired_ = 0;
  bool record_;
  std::string transcript_;
};

// The whole simulated world, built from one scenario.
class Simulation {
 public:
  explicit Simulation(Scenario scenario);
  ~Simulation();

  // Executes the scenario workload, then the ledger-linearity and
  // atomic-delivery audits. Every run ends with audits; a failed audit makes
  // report.ok() false.
  RunReport run();

  // Ledger writes per request for the given batch sizes (fresh world per
  // row, same workload).
  static RunReport bench(const Scenario& scenario, const std::vector<uint64_t>& batch_sizes);

  // Monte Carlo sweep over the PoP parameter grid.
  RunReport pop_sweep();

  // On-chain byte totals for this scenario's workload under WAL+batching
  // versus the full-state-per-request baseline.
  struct StorageComparison {
    uint64_t baseline_bytes = 0;
    uint64_t wal_bytes = 0;
    double ratio = 0;
  };
  static StorageComparison storage_comparison(Scenario scenario);

  // Adversary action: feed a stale state snapshot to a fresh enclave and
  // try to land its transition and claim its output. Returns true if the
  // ledger rejected the stale write and withheld the output.
  bool replay_stale_state(const crypto::Digest& cid, uint64_t snapshot_index);

  // Accessors for tests and audits.
  ledger::Ledger& ledger() { return *ledger_; }
  enclave::Platform& platform() { return *platform_; }
  keymgr::KeyManagerService& keymanager() { return *km_; }
  keys::EpochClock& epochs() { return epochs_; }
  node::ComputeNode& node_at(size_t i) { return *nodes_.at(i); }
  client::Client& client_at(size_t i) { return *clients_.at(i); }
  size_t node_count() const { return nodes_.size(); }
  const std::vector<crypto::Digest>& contract_ids() const { return cids_; }
  const Scenario& scenario() const { return scenario_; }
  Adversary& adversary() { return *adversary_; }

  // Decrypts and replays the contract's on-chain log (audit access).
  contracts::State final_state(const crypto::Digest& cid);

  void setup_contracts();  // create + mint, outside the workload metrics

  std::vector<AuditRow> run_audits();

 private:
  Scenario scenario_;
  Rng rng_;
  pop::SimClock clock_;
  std::unique_ptr<group::Group> group_;
  keys::EpochClock epochs_;
  std::unique_ptr<Adversary> adversary_;
  std::unique_ptr<enclave::Platform> platform_;
  std::unique_ptr<ledger::Ledger> ledger_;
  std::unique_ptr<keymgr::KeyManagerService> km_;
  std::vector<std::unique_ptr<node::ComputeNode>> nodes_;
  std::vector<std::unique_ptr<client::Client>> clients_;
  std::vector<crypto::Digest> cids_;
  std::map<std::string, uint64_t> minted_;  // expected token supply per cid

  friend class Adversary;

  void drive_workload(RunReport& report);
};

// Enumerates single-fault schedules (drop / crash / terminate at every
// protocol boundary of one request) and verifies atomic delivery under each:
// either the transition landed and the output is recoverable through a
// second enclave, or nothing was written and no output plaintext appeared.
struct ScheduleAuditResult {
  uint64_t schedules = 0;
  uint64_t violations = 0;
  std::vector<std::string> failures;
};
ScheduleAuditResult atomic_delivery_schedule_audit(uint64_t seed);

// Budget-3 counter under an adversary replaying pre-query snapshots; counts
// answered queries across the given number of replay schedules.
struct RewindAuditResult {
  uint64_t schedules = 0;
  uint64_t answered = 0;       // max counter value reached anywhere
  bool budget_respected = false;
};
RewindAuditResult rewind_attack_audit(uint64_t seed, uint64_t budget, uint64_t schedules);

// Offline audit of a previously recorded transcript file.
RunReport audit_transcript(std::istream& in);

}  // namespace ekiden::harness
