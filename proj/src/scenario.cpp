#include <algorithm>
#include <iomanip>
#include <istream>
#include <sstream>

#include "ekiden/harness.hpp"
#include "json.hpp"

namespace ekiden::harness {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Error::Code::config, std::string("field '") + key + "': " + e.what());
  }
}

std::string fmt_rate(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(Error::Code::config, std::string("config parse error: ") + e.what());
  }

  Scenario s;
  s.seed = get_or<uint64_t>(j, "seed", 1);
  s.nodes = get_or<uint32_t>(j, "nodes", 2);
  s.clients = get_or<uint32_t>(j, "clients", 2);
  s.ledger_backend = get_or<std::string>(j, "ledger", "quorum");
  if (s.nodes == 0) fail(Error::Code::config, "field 'nodes': must be positive");
  if (s.clients == 0) fail(Error::Code::config, "field 'clients': must be positive");

  if (j.contains("committee")) {
    const json& c = j.at("committee");
    s.committee_n = get_or<uint32_t>(c, "n", 5);
    s.committee_f = get_or<double>(c, "f", 0.4);
    s.kappa = get_or<uint64_t>(c, "kappa", 1024);
    s.delta = get_or<uint64_t>(c, "delta", 1);
  }

  if (j.contains("mode")) {
    const json& m = j.at("mode");
    s.wal = get_or<bool>(m, "wal", false);
    s.batch_size = get_or<uint64_t>(m, "batch_size", 1);
    s.checkpoint_interval = get_or<uint64_t>(m, "checkpoint_interval", 64);
    s.epoch_advance_every = get_or<uint64_t>(m, "epoch_advance_every", 0);
  }

  if (j.contains("contracts")) {
    s.contract_list.clear();
    for (const json& c : j.at("contracts")) {
      contracts::ContractCode code;
      code.kind = get_or<std::string>(c, "kind", "token");
      code.param = get_or<uint64_t>(c, "param", 0);
      if (code.kind != "token" && code.kind != "counter")
        fail(Error::Code::config, "field 'contracts.kind': unknown kind " + code.kind);
      s.contract_list.push_back(code);
    }
    if (s.contract_list.empty()) fail(Error::Code::config, "field 'contracts': empty list");
  }

  if (j.contains("workload")) {
    const json& w = j.at("workload");
    s.workload.type = get_or<std::string>(w, "type", "none");
    s.workload.requests = get_or<uint64_t>(w, "requests", 0);
    s.workload.accounts = get_or<uint64_t>(w, "accounts", 100);
    s.workload.read_ratio = get_or<double>(w, "read_ratio", 0.2);
    s.workload.supply = get_or<uint64_t>(w, "supply", 1000000);
    s.workload.max_amount = get_or<uint64_t>(w, "max_amount", 50);
    if (s.workload.type != "none" && s.workload.type != "token_random" &&
        s.workload.type != "counter_queries")
      fail(Error::Code::config, "field 'workload.type': unknown type " + s.workload.type);
  }

  if (j.contains("adversary")) {
    for (const json& a : j.at("adversary")) {
      FaultSpec f;
      f.fault = get_or<std::string>(a, "fault", "");
      f.step = get_or<std::string>(a, "step", "");
      f.when = get_or<uint64_t>(a, "when", 1);
      f.node = get_or<uint32_t>(a, "node", UINT32_MAX);
      f.contract = get_or<uint32_t>(a, "contract", UINT32_MAX);
      f.amount = get_or<double>(a, "amount", 0.0);
      f.snapshot_index = get_or<uint64_t>(a, "snapshot_index", 0);
      static const std::vector<std::string> known = {
          "drop_message", "crash_node", "terminate_enclave", "delay_timer", "replay_stale_state"};
      if (std::find(known.begin(), known.end(), f.fault) == known.end())
        fail(Error::Code::config, "field 'adversary.fault': unknown fault " + f.fault);
      static const std::vector<std::string> steps = {
          "create.install",        "create.enclave_create", "create.ledger_write",
          "request.client_send",   "request.ledger_read",   "request.enclave_exec",
          "request.enclave_reply", "claim.client_send",     "claim.ledger_write",
          "claim.enclave_release", "claim.enclave_reply",   "batch.submit",
          "batch.commit",          "batch.ledger_write"};
      if (f.fault != "delay_timer" &&
          std::find(steps.begin(), steps.end(), f.step) == steps.end())
        fail(Error::Code::config, "field 'adversary.step': unknown step " + f.step);
      s.adversary.push_back(f);
      if (f.fault == "delay_timer") s.pop.t1_delay = f.amount;
    }
  }

  if (j.contains("pop")) {
    const json& p = j.at("pop");
    s.pop.enabled = true;
    s.pop.p = get_or<std::vector<double>>(p, "p", {0.1});
    s.pop.epsilon = get_or<std::vector<double>>(p, "epsilon", {2.0});
    s.pop.n_c = get_or<uint32_t>(p, "n_c", 10);
    s.pop.tau = get_or<double>(p, "tau", 1.0);
    s.pop.trials = get_or<uint64_t>(p, "trials", 10000);
    s.pop.difficulty = get_or<uint32_t>(p, "difficulty", 8);
  }

  s.sequential = get_or<bool>(j, "sequential", false);
  s.record_transcript = get_or<bool>(j, "transcript", false);
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["seed"] = s.seed;
  j["nodes"] = s.nodes;
  j["clients"] = s.clients;
  j["ledger"] = s.ledger_backend;
  j["committee"] = {{"n", s.committee_n}, {"f", s.committee_f}, {"kappa", s.kappa}, {"delta", s.delta}};
  j["mode"] = {{"wal", s.wal},
               {"batch_size", s.batch_size},
               {"checkpoint_interval", s.checkpoint_interval},
               {"epoch_advance_every", s.epoch_advance_every}};
  j["contracts"] = json::array();
  for (const auto& c : s.contract_list) j["contracts"].push_back({{"kind", c.kind}, {"param", c.param}});
  j["workload"] = {{"type", s.workload.type},     {"requests", s.workload.requests},
                   {"accounts", s.workload.accounts}, {"read_ratio", s.workload.read_ratio},
                   {"supply", s.workload.supply}, {"max_amount", s.workload.max_amount}};
  if (s.pop.enabled)
    j["pop"] = {{"p", s.pop.p},     {"epsilon", s.pop.epsilon},   {"n_c", s.pop.n_c},
                {"tau", s.pop.tau}, {"trials", s.pop.trials},     {"difficulty", s.pop.difficulty}};
  j["sequential"] = s.sequential;
  j["transcript"] = s.record_transcript;
  return j.dump(2);
}

// ---------------------------------------------------------------------------

bool RunReport::ok() const {
  return std::all_of(audits.begin(), audits.end(), [](const AuditRow& r) { return r.pass; });
}

std::string RunReport::text() const {
  std::ostringstream os;
  os << "requests=" << requests << " outputs=" << outputs_delivered
     << " refusals=" << contract_refusals << " failures=" << client_failures << "\n";
  os << "ledger: writes=" << ledger_writes << " rejects=" << ledger_rejects
     << " faults_fired=" << faults_fired << "\n";
  if (!outputs_digest.empty()) os << "outputs_digest=" << outputs_digest << "\n";
  for (const auto& [cid, bytes] : chain_bytes)
    os << "chain " << cid.substr(0, 12) << ": items=" << chain_items.at(cid) << " bytes=" << bytes
       << "\n";
  for (const auto& row : bench_rows)
    os << "bench batch=" << row.batch << " requests=" << row.requests << " writes=" << row.writes
       << " writes/request=" << fmt_rate(row.writes_per_request) << "\n";
  for (const auto& row : pop_rows)
    os << "pop p=" << fmt_rate(row.p) << " n_c=" << row.n_c << " eps=" << fmt_rate(row.epsilon)
       << " false_reject=" << fmt_rate(row.false_reject_rate)
       << " forgery=" << fmt_rate(row.forgery_success_rate) << " trials=" << row.trials << "\n";
  os << "audits:\n";
  for (const auto& row : audits)
    os << "  [" << (row.pass ? "PASS" : "FAIL") << "] " << row.name
       << (row.detail.empty() ? "" : " (" + row.detail + ")") << "\n";
  return os.str();
}

std::string RunReport::table() const {
  std::ostringstream os;
  for (const auto& row : bench_rows)
    os << "bench\t" << row.batch << "\t" << row.requests << "\t" << row.writes << "\t"
       << fmt_rate(row.writes_per_request) << "\n";
  for (const auto& row : pop_rows)
    os << "pop\t" << fmt_rate(row.p) << "\t" << row.n_c << "\t" << fmt_rate(row.epsilon) << "\t"
       << fmt_rate(row.false_reject_rate) << "\t" << fmt_rate(row.forgery_success_rate) << "\t"
       << row.trials << "\n";
  for (const auto& [cid, bytes] : chain_bytes)
    os << "chain\t" << cid << "\t" << chain_items.at(cid) << "\t" << bytes << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Offline transcript audit: linearity of the dumped ledger plus the
// output/transition matching, re-verifying every attestation under the
// recorded platform key.

RunReport audit_transcript(std::istream& in) {
  RunReport report;
  std::string line;
  if (!std::getline(in, line) || line != "ekiden-transcript v1")
    fail(Error::Code::config, "not an ekiden transcript (missing header)");
  if (!std::getline(in, line) || line.rfind("platform_pk=", 0) != 0)
    fail(Error::Code::config, "transcript missing platform_pk");
  Bytes pk_bytes = hex_decode(line.substr(std::string("platform_pk=").size()));
  crypto::VerifyKey platform_pk = crypto::VerifyKey::from_bytes(ByteView(pk_bytes.data(), pk_bytes.size()));

  struct Release {
    crypto::Digest cid;
    crypto::Digest h_outp;
    bool read_only;
  };
  std::vector<Release> releases;
  std::string ledger_dump;

  enum class Section { none, events, ledger, messages } section = Section::none;
  while (std::getline(in, line)) {
    if (line == "[events]") {
      section = Section::events;
      continue;
    }
    if (line == "[ledger]") {
      section = Section::ledger;
      continue;
    }
    if (line == "[messages]") {
      section = Section::messages;
      continue;
    }
    if (section == Section::events && line.rfind("output_released ", 0) == 0) {
      Release r;
      auto grab = [&](const std::string& key) {
        size_t at = line.find(key + "=");
        if (at == std::string::npos) fail(Error::Code::config, "malformed event line");
        size_t end = line.find(' ', at);
        return line.substr(at + key.size() + 1,
                           (end == std::string::npos ? line.size() : end) - at - key.size() - 1);
      };
      Bytes cid = hex_decode(grab("cid"));
      Bytes ho = hex_decode(grab("h_outp"));
      r.cid = crypto::Digest::from_bytes(ByteView(cid.data(), cid.size()));
      r.h_outp = crypto::Digest::from_bytes(ByteView(ho.data(), ho.size()));
      r.read_only = grab("read_only") == "1";
      releases.push_back(r);
    } else if (section == Section::ledger) {
      ledger_dump += line + "\n";
    }
  }

  ledger::Ledger led([](const ledger::EntryId&, const ledger::LedgerEntry*, const Bytes&) {
    return true;  // restore path only
  });
  std::istringstream dump(ledger_dump);
  led.restore(dump);

  // linearity + attestation re-verification per contract entry
  bool linear = true;
  std::string detail;
  uint64_t transitions = 0;
  for (const auto& id : led.entry_ids()) {
    auto entry = led.read(id);
    if (entry->items.empty()) continue;
    if (records::item_kind(ByteView(entry->items[0].payload.data(), entry->items[0].payload.size())) !=
        records::ItemKind::genesis)
      continue;  // system entries
    auto genesis = records::GenesisItem::from_bytes(
        ByteView(entry->items[0].payload.data(), entry->items[0].payload.size()));
    crypto::Digest prog = records::wrapper_program_hash(genesis.code);
    Bytes gp = records::attest_payload(prog, genesis.to_create_result().encoded());
    if (!crypto::verify(platform_pk, genesis.sig_tee, ByteView(gp.data(), gp.size()))) {
      linear = false;
      detail = "genesis attestation failed";
      break;
    }
    crypto::Digest head = records::item_state_hash(
        ByteView(entry->items[0].payload.data(), entry->items[0].payload.size()));
    for (size_t i = 1; i < entry->items.size(); i++) {
      auto t = records::TransitionItem::from_bytes(
          ByteView(entry->items[i].payload.data(), entry->items[i].payload.size()));
      records::AtomDeliver atom = t.sigma.to_atom(genesis.cid, t.st_ct);
      Bytes payload = records::attest_payload(prog, atom.encoded());
      if (t.sigma.h_prev != head ||
          !crypto::verify(platform_pk, t.sigma.sig_tee, ByteView(payload.data(), payload.size()))) {
        linear = false;
        detail = "break at item " + std::to_string(i) + " of " + id.hex().substr(0, 8);
        break;
      }
      head = crypto::sha256(ByteView(t.st_ct.data(), t.st_ct.size()));
      transitions++;
    }
    if (!linear) break;
  }
  report.audits.push_back({"ledger-linearity", linear,
                           linear ? std::to_string(transitions) + " transitions chained" : detail});

  bool atomic = true;
  std::string adetail;
  for (const auto& r : releases) {
    if (r.read_only) continue;
    bool found = false;
    auto entry = led.read(r.cid);
    if (entry) {
      for (const auto& item : entry->items) {
        if (records::item_kind(ByteView(item.payload.data(), item.payload.size())) !=
            records::ItemKind::transition)
          continue;
        auto t = records::TransitionItem::from_bytes(
            ByteView(item.payload.data(), item.payload.size()));
        if (std::find(t.sigma.h_outp.begin(), t.sigma.h_outp.end(), r.h_outp) !=
            t.sigma.h_outp.end()) {
          found = true;
          break;
        }
      }
    }
    if (!found) {
      atomic = false;
      adetail = "released output lacks an on-chain transition";
      break;
    }
  }
  report.audits.push_back(
      {"atomic-delivery", atomic, atomic ? std::to_string(releases.size()) + " events checked" : adetail});
  return report;
}

}  // namespace ekiden::harness
