#include "ekiden/harness.hpp"

#include <algorithm>
#include <set>
#include <istream>
#include <sstream>

namespace ekiden::harness {

namespace {
ByteView view(const Bytes& b) { return ByteView(b.data(), b.size()); }

std::string cid_short(const crypto::Digest& d) { return d.hex().substr(0, 8); }
}  // namespace

// ---------------------------------------------------------------------------
// Adversary

Adversary::Adversary(Simulation& sim, const std::vector<FaultSpec>& plan, bool record)
    : sim_(sim), plan_(plan), armed_(plan.size(), true), fault_counts_(plan.size(), 0), record_(record) {}

bool Adversary::boundary(std::string_view step, const Ctx& ctx) {
  seq_++;
  if (record_) {
    transcript_ += std::to_string(seq_) + "|" + std::string(step) +
                   "|node=" + std::to_string(ctx.node) +
                   (ctx.cid ? "|cid=" + cid_short(*ctx.cid) : "") + "\n";
  }

  bool pass = true;
  for (size_t i = 0; i < plan_.size(); i++) {
    if (!armed_[i]) continue;
    const FaultSpec& f = plan_[i];
    if (f.step != step) continue;
    if (f.node != UINT32_MAX && f.node != ctx.node) continue;
    if (f.contract != UINT32_MAX &&
        (!ctx.cid || f.contract >= sim_.cids_.size() || sim_.cids_[f.contract] != *ctx.cid))
      continue;
    // `when` counts occurrences that match this fault's own filters
    if (++fault_counts_[i] != f.when) continue;

    armed_[i] = false;
    fired_++;
    if (record_) transcript_ += "  fault=" + f.fault + "\n";

    if (f.fault == "drop_message") {
      pass = false;
    } else if (f.fault == "crash_node") {
      uint32_t target = f.node != UINT32_MAX ? f.node : ctx.node;
      if (target < sim_.nodes_.size()) sim_.nodes_[target]->crash();
      pass = false;
    } else if (f.fault == "terminate_enclave") {
      if (ctx.eid != 0) sim_.platform_->terminate(ctx.eid);
    } else if (f.fault == "replay_stale_state") {
      if (ctx.cid) sim_.replay_stale_state(*ctx.cid, f.snapshot_index);
    }
    // delay_timer is interpreted by the PoP sweep, not at boundaries
  }
  return pass;
}

void Adversary::message(std::string_view step, const Ctx& ctx, ByteView payload) {
  if (!record_) return;
  transcript_ += "  msg|" + std::string(step) + "|node=" + std::to_string(ctx.node) + "|" +
                 hex_encode(payload) + "\n";
}

void Adversary::output_released(const crypto::Digest& cid, const crypto::Digest& h_outp,
                                bool read_only) {
  releases_.push_back({++seq_, cid, h_outp, read_only});
  if (record_)
    transcript_ += std::to_string(seq_) + "|output_released|cid=" + cid_short(cid) +
                   "|h_outp=" + h_outp.hex() + "|read_only=" + (read_only ? "1" : "0") + "\n";
}

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(Scenario scenario)
    : scenario_(std::move(scenario)), rng_(scenario_.seed), group_(group::make_ristretto_group()) {
  adversary_ = std::make_unique<Adversary>(*this, scenario_.adversary, scenario_.record_transcript);

  enclave::Platform::Config pc;
  pc.checkpoint_interval = scenario_.checkpoint_interval;
  platform_ = std::make_unique<enclave::Platform>(rng_, pc);

  auto succ = ledger::make_ekiden_succ(platform_->attestation_pk());
  if (scenario_.ledger_backend == "powsim") {
    ledger_ = std::make_unique<pop::PowSimLedger>(succ, scenario_.pop.difficulty, &clock_,
                                                  rng_.fork("powsim"));
  } else if (scenario_.ledger_backend == "quorum") {
    ledger_ = std::make_unique<ledger::Ledger>(succ);
  } else {
    fail(Error::Code::config, "unknown ledger backend: " + scenario_.ledger_backend);
  }

  km_ = std::make_unique<keymgr::KeyManagerService>(
      *group_,
      keymgr::KeyManagerService::Config{{scenario_.committee_n, scenario_.committee_f},
                                        scenario_.kappa, scenario_.delta},
      &epochs_, ledger_.get(), platform_.get(), rng_.fork("keymgr"));

  platform_->set_key_provider(km_.get());
  platform_->set_ledger_view(ledger_.get());
  platform_->set_host_crashed(
      [this](keys::NodeId id) { return id < nodes_.size() && nodes_[id]->crashed(); });

  node::NodeConfig nc;
  nc.wal_mode = scenario_.wal;
  nc.batch_size = scenario_.batch_size;
  for (uint32_t i = 0; i < scenario_.nodes; i++)
    nodes_.push_back(
        std::make_unique<node::ComputeNode>(i, *platform_, *ledger_, adversary_.get(), nc));

  for (uint32_t i = 0; i < scenario_.clients; i++) {
    // priority list rotated per client so load spreads and failover works
    std::vector<node::ComputeNode*> order;
    for (uint32_t k = 0; k < scenario_.nodes; k++)
      order.push_back(nodes_[(i + k) % scenario_.nodes].get());
    clients_.push_back(std::make_unique<client::Client>(
        i, rng_.fork("client." + std::to_string(i)), order, *ledger_, platform_->attestation_pk(),
        adversary_.get()));
  }
}

Simulation::~Simulation() = default;

void Simulation::setup_contracts() {
  if (!cids_.empty()) return;
  for (const auto& code : scenario_.contract_list) {
    crypto::Digest cid = clients_.at(0)->create_contract(code);
    cids_.push_back(cid);
    if (code.kind == "token") {
      Bytes out = clients_[0]->execute(cid, contracts::token_mint(scenario_.workload.supply, 0));
      auto o = contracts::Output::from_bytes(view(out));
      if (!o.ok) fail(Error::Code::contract_abort, "mint failed: " + o.text);
      minted_[cid.hex()] = scenario_.workload.supply;
      // stake every client so workload transfers have funds to move
      uint64_t stake = scenario_.workload.supply / (2 * std::max<size_t>(clients_.size(), 1));
      for (size_t i = 1; i < clients_.size(); i++) {
        Bytes res = clients_[0]->execute(
            cid, contracts::token_transfer(contracts::token_account(clients_[i]->spk()), stake, i));
        if (!contracts::Output::from_bytes(view(res)).ok)
          fail(Error::Code::contract_abort, "client staking failed");
      }
    }
  }
}

bool Simulation::replay_stale_state(const crypto::Digest& cid, uint64_t snapshot_index) {
  auto entry = ledger_->read(cid);
  if (!entry || snapshot_index >= entry->items.size()) return true;  // nothing to replay

  // the adversary acts directly on the platform and ledger: a fresh enclave,
  // a stale state ciphertext and its own client identity
  auto genesis = records::GenesisItem::from_bytes(view(entry->items.front().payload));
  Bytes stale_ct;
  auto kind = records::item_kind(view(entry->items[snapshot_index].payload));
  if (kind == records::ItemKind::genesis) {
    stale_ct = genesis.st0_ct;
  } else {
    auto t = records::TransitionItem::from_bytes(view(entry->items[snapshot_index].payload));
    if (t.sigma.is_diff) return true;  // a diff is not a resumable snapshot
    stale_ct = t.st_ct;
  }

  Rng arng = rng_.fork("replay." + std::to_string(snapshot_index));
  auto att_sig = crypto::SigKeypair::generate(arng);
  auto att_box = crypto::PkKeypair::generate(arng);

  // latest published input key
  records::BoxPk pk_in = genesis.pk_in;
  uint64_t epoch = genesis.epoch;
  for (size_t i = entry->items.size(); i-- > 0;) {
    if (records::item_kind(view(entry->items[i].payload)) != records::ItemKind::transition) break;
    auto t = records::TransitionItem::from_bytes(view(entry->items[i].payload));
    pk_in = t.sigma.pk_in;
    epoch = t.sigma.epoch;
    break;
  }

  Bytes payload = genesis.code.kind == "token" ? contracts::token_get_balance(arng.next_u64())
                                               : contracts::counter_query(arng.next_u64());
  records::ClientInput ci{payload, arng.next_u64()};
  Bytes inp_ct = records::seal(epoch, crypto::pk_enc(pk_in, view(ci.encoded()), arng));
  Bytes sp = records::client_sig_payload(cid, view(inp_ct));

  records::WrapperInput in;
  in.op = records::WrapperInput::Op::request;
  in.cid = cid;
  in.inp_ct = inp_ct;
  in.spk = att_sig.vk;
  in.client_sig = crypto::sign(att_sig, view(sp));
  in.st_ct = stale_ct;

  keys::EnclaveId eid = platform_->install(0, genesis.code);
  bool contained = false;
  try {
    auto out = platform_->resume(eid, in);
    auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
    auto sigma = records::SigmaBundle::from_atom(atom, out.sig_tee);

    bool is_latest = snapshot_index + 1 == entry->items.size();
    if (!sigma.is_empty) {
      records::TransitionItem item{atom.st_ct, sigma};
      if (ledger_->write(cid, item.encoded(), "adversary") == ledger::WriteStatus::receipt &&
          !is_latest) {
        return false;  // a genuinely stale write landed: rewind defense failed
      }
    }
    // the output must stay withheld unless the transition (or, for
    // read-only results, the base state) is legitimately on the chain
    records::WrapperInput claim;
    claim.op = records::WrapperInput::Op::claim_output;
    claim.cid = cid;
    claim.claim_st_ct = atom.st_ct;
    claim.claim_outp_ct = out.outp2;
    claim.claim_sigma = sigma;
    claim.epk = att_box.pk;
    try {
      platform_->resume(eid, claim);
      contained = sigma.is_empty || is_latest;
    } catch (const Error&) {
      contained = true;  // withheld
    }
  } catch (const Error&) {
    contained = true;  // the enclave aborted outright
  }
  platform_->terminate(eid);
  return contained;
}

contracts::State Simulation::final_state(const crypto::Digest& cid) {
  // log replay needs no live node state, only ledger reads and audit keys
  auto wal = nodes_.front()->reconstruct_state(cid);
  contracts::State st;
  for (const auto& item : wal.items) {
    Bytes st_ct;
    bool is_diff = false;
    if (records::item_kind(view(item)) == records::ItemKind::genesis) {
      st_ct = records::GenesisItem::from_bytes(view(item)).st0_ct;
    } else {
      auto t = records::TransitionItem::from_bytes(view(item));
      st_ct = t.st_ct;
      is_diff = t.sigma.is_diff;
    }
    auto [epoch, ct] = records::unseal(view(st_ct));
    Bytes plain = crypto::sym_dec(km_->audit_bundle(cid, epoch).k_state, view(ct));
    st = is_diff ? contracts::apply(st, contracts::StateDiff::from_bytes(view(plain)))
                 : contracts::State::from_bytes(view(plain));
  }
  return st;
}

std::vector<AuditRow> Simulation::run_audits() {
  std::vector<AuditRow> rows;

  // Ledger linearity: the accepted items of every contract form a single
  // hash-linked chain of attested transitions, all emitted by real enclaves.
  {
    uint64_t items = 0;
    std::string detail;
    bool pass = true;
    for (const auto& cid : cids_) {
      auto entry = ledger_->read(cid);
      if (!entry || entry->items.empty()) {
        pass = false;
        detail = "missing genesis for " + cid_short(cid);
        break;
      }
      auto genesis = records::GenesisItem::from_bytes(view(entry->items.front().payload));
      crypto::Digest prog = records::wrapper_program_hash(genesis.code);
      Bytes gp = records::attest_payload(prog, genesis.to_create_result().encoded());
      if (!crypto::verify(platform_->attestation_pk(), genesis.sig_tee, view(gp)) ||
          !platform_->was_emitted(gp)) {
        pass = false;
        detail = "genesis attestation not from the platform";
        break;
      }
      crypto::Digest head = records::item_state_hash(view(entry->items.front().payload));
      for (size_t i = 1; i < entry->items.size() && pass; i++) {
        auto t = records::TransitionItem::from_bytes(view(entry->items[i].payload));
        if (t.sigma.h_prev != head) {
          pass = false;
          detail = "fork or stale transition at item " + std::to_string(i);
          break;
        }
        records::AtomDeliver atom = t.sigma.to_atom(cid, t.st_ct);
        Bytes payload = records::attest_payload(prog, atom.encoded());
        if (!crypto::verify(platform_->attestation_pk(), t.sigma.sig_tee, view(payload)) ||
            !platform_->was_emitted(payload)) {
          pass = false;
          detail = "unattested transition at item " + std::to_string(i);
          break;
        }
        head = crypto::sha256(view(t.st_ct));
        items++;
      }
      if (!pass) break;
    }
    rows.push_back(
        {"ledger-linearity", pass, pass ? std::to_string(items) + " transitions chained" : detail});
  }

  // Atomic delivery: every released state-changing output corresponds to a
  // transition on the chain. One pass builds the output index per contract.
  {
    bool pass = true;
    std::string detail;
    uint64_t checked = 0;
    std::map<crypto::Digest, std::set<crypto::Digest>> outputs_on_chain;
    for (const auto& cid : cids_) {
      auto& outs = outputs_on_chain[cid];
      auto entry = ledger_->read(cid);
      if (!entry) continue;
      for (const auto& item : entry->items) {
        if (records::item_kind(view(item.payload)) != records::ItemKind::transition) continue;
        auto t = records::TransitionItem::from_bytes(view(item.payload));
        outs.insert(t.sigma.h_outp.begin(), t.sigma.h_outp.end());
      }
    }
    for (const auto& ev : adversary_->releases()) {
      if (ev.read_only) continue;
      if (outputs_on_chain[ev.cid].count(ev.h_outp) == 0) {
        pass = false;
        detail = "output " + ev.h_outp.hex().substr(0, 8) + " has no on-chain transition";
        break;
      }
      checked++;
    }
    rows.push_back({"atomic-delivery", pass,
                    pass ? std::to_string(checked) + " outputs matched to transitions" : detail});
  }

  // Token conservation: decrypting and replaying the chain shows exactly the
  // minted supply.
  for (const auto& cid : cids_) {
    auto it = minted_.find(cid.hex());
    if (it == minted_.end()) continue;
    contracts::State st = final_state(cid);
    uint64_t total = 0;
    for (const auto& [acct, balance] : contracts::token_balances(st)) total += balance;
    bool pass = total == it->second;
    rows.push_back({"token-conservation", pass,
                    "supply " + std::to_string(total) + " of " + std::to_string(it->second)});
  }

  return rows;
}

void Simulation::drive_workload(RunReport& report) {
  const Workload& w = scenario_.workload;
  if (w.type == "none" || w.requests == 0) return;

  struct Job {
    uint32_t client;
    Bytes payload;
  };
  std::vector<Job> jobs;
  Rng wrng = rng_.fork("workload");
  std::vector<crypto::Digest> sink_accounts;
  for (uint64_t i = 0; i < w.accounts; i++) {
    wire::Encoder e;
    e.tag("ekiden.sink");
    e.u64(i);
    sink_accounts.push_back(crypto::hash_bytes(view(e.out)));
  }
  for (auto& c : clients_) sink_accounts.push_back(contracts::token_account(c->spk()));

  crypto::Digest cid = cids_.at(0);
  const auto& code = scenario_.contract_list.at(0);
  for (uint64_t i = 0; i < w.requests; i++) {
    Job j;
    j.client = static_cast<uint32_t>(wrng.uniform(clients_.size()));
    if (code.kind == "counter") {
      j.payload = contracts::counter_query(i);
    } else if (wrng.next_double() < w.read_ratio) {
      j.payload = contracts::token_get_balance(i);
    } else {
      size_t pick_sink = wrng.uniform(sink_accounts.size());
      // a transfer to self nets to zero and writes nothing; always move value
      if (sink_accounts[pick_sink] == contracts::token_account(clients_[j.client]->spk()))
        pick_sink = (pick_sink + 1) % sink_accounts.size();
      j.payload = contracts::token_transfer(sink_accounts[pick_sink], 1 + wrng.uniform(w.max_amount), i);
    }
    jobs.push_back(std::move(j));
  }

  // session scheduler: each request is a small state machine and the seeded
  // scheduler interleaves them, so snapshot races actually happen
  struct Session {
    enum class Phase { need_request, have_reply, wait_batch, done, failed } phase =
        Phase::need_request;
    size_t job = 0;
    std::optional<client::Client::Attempt> attempt;
    int budget = client::Client::kMaxAttempts;
    size_t node_offset = 0;
    uint32_t batch_node = 0;
  };

  const bool batching = scenario_.wal && scenario_.batch_size > 1;
  const size_t window = scenario_.sequential ? std::max<size_t>(scenario_.batch_size, 1)
                                             : (batching ? std::max<size_t>(scenario_.batch_size, 4) : 4);
  std::deque<size_t> backlog;
  for (size_t i = 0; i < jobs.size(); i++) backlog.push_back(i);
  std::vector<Session> active;
  Rng srng = rng_.fork("scheduler");
  uint64_t completed = 0;

  auto fail_session = [&](Session& s) {
    s.phase = Session::Phase::failed;
    report.client_failures++;
  };

  std::map<size_t, Bytes> delivered;
  auto record_output = [&](Session& s, const Bytes& outp) {
    auto o = contracts::Output::from_bytes(view(outp));
    if (!o.ok) report.contract_refusals++;
    delivered[s.job] = outp;
    report.outputs_delivered++;
    completed++;
    if (scenario_.epoch_advance_every > 0 && completed % scenario_.epoch_advance_every == 0)
      epochs_.current++;
    s.phase = Session::Phase::done;
  };

  auto try_commit_batches = [&](bool flush) {
    for (auto& n : nodes_) {
      if (n->crashed()) continue;
      uint64_t buffered = n->buffered(cid);
      if (buffered == 0 || (!flush && buffered < scenario_.batch_size)) continue;
      std::optional<node::ComputeNode::BatchResult> batch;
      try {
        batch = n->commit_batch(cid);
      } catch (const Error&) {
        batch.reset();
      }
      for (auto& s : active) {
        if (s.phase != Session::Phase::wait_batch || s.batch_node != n->id()) continue;
        if (!batch) {
          s.phase = Session::Phase::need_request;  // commit lost; resubmit
          s.attempt.reset();
          if (--s.budget <= 0) fail_session(s);
          continue;
        }
        crypto::Digest mine = crypto::sha256(view(s.attempt->inp_ct));
        for (size_t k = 0; k < batch->h_inp.size(); k++) {
          if (batch->h_inp[k] != mine) continue;
          clients_[jobs[s.job].client]->adopt_batch_reply(*s.attempt, batch->st_ct,
                                                          batch->outp_cts[k], batch->sigma);
          s.phase = Session::Phase::have_reply;
          break;
        }
      }
    }
  };

  auto all_waiting = [&] {
    return std::all_of(active.begin(), active.end(), [](const Session& sess) {
      return sess.phase == Session::Phase::wait_batch;
    });
  };

  while (!backlog.empty() || !active.empty()) {
    while (active.size() < window && !backlog.empty()) {
      Session s;
      s.job = backlog.front();
      backlog.pop_front();
      active.push_back(std::move(s));
    }
    if (active.empty()) break;

    size_t pick = srng.uniform(active.size());
    Session& s = active[pick];
    client::Client& cl = *clients_[jobs[s.job].client];

    try {
      switch (s.phase) {
        case Session::Phase::need_request: {
          if (batching) {
            node::ComputeNode& target = cl.node_at(s.node_offset);
            if (target.crashed()) {
              s.node_offset++;
              if (--s.budget <= 0) fail_session(s);
              break;
            }
            s.attempt = cl.submit_to_batch(target, cid, jobs[s.job].payload);
            s.batch_node = target.id();
            s.phase = Session::Phase::wait_batch;
          } else {
            auto a = cl.begin_attempt(cid, jobs[s.job].payload);
            a.node_index = s.node_offset;
            cl.request_leg(a);
            s.attempt = a;
            s.phase = Session::Phase::have_reply;
          }
          break;
        }
        case Session::Phase::have_reply: {
          auto out = cl.claim_leg(*s.attempt);
          if (out) {
            record_output(s, *out);
            break;
          }
          // previous state used by a parallel query: retry from the top.
          // The retry runs start-to-finish inside this slot, like the
          // client's blocking loop, so losers are never starved by a stream
          // of fresh racers.
          s.attempt.reset();
          bool settled = false;
          while (!settled && --s.budget > 0) {
            auto a = cl.begin_attempt(cid, jobs[s.job].payload);
            a.node_index = s.node_offset;
            cl.request_leg(a);
            auto retry_out = cl.claim_leg(a);
            if (retry_out) {
              record_output(s, *retry_out);
              settled = true;
            }
          }
          if (!settled && s.budget <= 0) fail_session(s);
          break;
        }
        case Session::Phase::wait_batch:
          try_commit_batches(false);
          break;
        default:
          break;
      }
    } catch (const Error& e) {
      if (e.code() == Error::Code::crypto_auth) throw;  // never paper over bad replies
      s.node_offset++;
      if (s.attempt && s.attempt->have_reply) {
        s.attempt->node_index = s.node_offset;  // keep the claim; re-present elsewhere
      } else {
        s.attempt.reset();
        s.phase = Session::Phase::need_request;
      }
      if (--s.budget <= 0) fail_session(s);
    }

    // flush partial batches only when no session can still add to them
    if (batching) try_commit_batches(backlog.empty() && all_waiting());

    active.erase(std::remove_if(active.begin(), active.end(),
                                [](const Session& sess) {
                                  return sess.phase == Session::Phase::done ||
                                         sess.phase == Session::Phase::failed;
                                }),
                 active.end());
  }

  report.requests = jobs.size();

  // digest of all delivered outputs keyed by request index, so two runs of
  // the same workload can be compared independently of scheduling order
  wire::Encoder acc;
  acc.tag("ekiden.outputs");
  for (const auto& [job, outp] : delivered) {
    acc.u64(job);
    acc.bytes(outp);
  }
  report.outputs_digest = crypto::hash_bytes(view(acc.out)).hex();
  report.outputs_by_request = std::move(delivered);
}

RunReport Simulation::run() {
  RunReport report;
  setup_contracts();

  uint64_t writes_before = ledger_->accepted_writes();
  uint64_t rejects_before = ledger_->rejected_writes();
  drive_workload(report);
  report.ledger_writes = ledger_->accepted_writes() - writes_before;
  report.ledger_rejects = ledger_->rejected_writes() - rejects_before;
  report.faults_fired = adversary_->faults_fired();

  for (const auto& cid : cids_) {
    report.chain_bytes[cid.hex()] = ledger_->entry_bytes(cid);
    auto entry = ledger_->read(cid);
    report.chain_items[cid.hex()] = entry ? entry->items.size() : 0;
  }

  report.audits = run_audits();
  if (scenario_.record_transcript) {
    std::ostringstream dump;
    dump << "ekiden-transcript v1\n";
    dump << "platform_pk=" << platform_->attestation_pk().hex() << "\n";
    dump << "[events]\n";
    for (const auto& ev : adversary_->releases())
      dump << "output_released cid=" << ev.cid.hex() << " h_outp=" << ev.h_outp.hex()
           << " read_only=" << (ev.read_only ? 1 : 0) << "\n";
    dump << "[ledger]\n";
    ledger_->dump(dump);
    dump << "[messages]\n" << adversary_->transcript();
    report.transcript = dump.str();
  }
  return report;
}

RunReport Simulation::bench(const Scenario& scenario, const std::vector<uint64_t>& batch_sizes) {
  RunReport report;
  for (uint64_t b : batch_sizes) {
    Scenario s = scenario;
    s.wal = true;
    s.batch_size = b;
    s.workload.read_ratio = 0.0;  // writes only, so the arithmetic is exact
    if (b == 0 || s.workload.requests % b != 0)
      fail(Error::Code::config, "bench request count must be a multiple of every batch size");
    Simulation sim(s);
    RunReport r = sim.run();
    for (const auto& row : r.audits)
      if (!row.pass) report.audits.push_back(row);
    BenchRow row;
    row.batch = b;
    row.requests = r.requests;
    row.writes = r.ledger_writes;
    row.writes_per_request = r.requests ? double(r.ledger_writes) / double(r.requests) : 0.0;
    report.bench_rows.push_back(row);
    report.requests += r.requests;
    report.outputs_delivered += r.outputs_delivered;
  }

  // cached read-only workload: zero ledger writes
  {
    Scenario s = scenario;
    s.wal = true;
    s.workload.read_ratio = 1.0;
    Simulation sim(s);
    RunReport r = sim.run();
    BenchRow row;
    row.batch = s.batch_size;
    row.requests = r.requests;
    row.writes = r.ledger_writes;
    row.writes_per_request = r.requests ? double(r.ledger_writes) / double(r.requests) : 0.0;
    report.bench_rows.push_back(row);
    report.audits.push_back({"bench-read-only-zero-writes", r.ledger_writes == 0,
                             std::to_string(r.ledger_writes) + " writes"});
    report.requests += r.requests;
  }
  if (report.audits.size() == 1) report.audits.insert(report.audits.begin(), {"bench", true, ""});
  return report;
}

Simulation::StorageComparison Simulation::storage_comparison(Scenario scenario) {
  StorageComparison out;
  {
    Scenario s = scenario;
    s.wal = false;
    s.batch_size = 1;
    Simulation sim(s);
    RunReport r = sim.run();
    if (!r.ok()) fail(Error::Code::corrupt_log, "baseline run failed its audits");
    out.baseline_bytes = r.chain_bytes.at(sim.contract_ids().at(0).hex());
  }
  {
    Scenario s = scenario;
    s.wal = true;
    Simulation sim(s);
    RunReport r = sim.run();
    if (!r.ok()) fail(Error::Code::corrupt_log, "wal run failed its audits");
    out.wal_bytes = r.chain_bytes.at(sim.contract_ids().at(0).hex());
  }
  out.ratio = out.wal_bytes ? double(out.baseline_bytes) / double(out.wal_bytes) : 0.0;
  return out;
}

RunReport Simulation::pop_sweep() {
  RunReport report;
  const PopSweep& cfg = scenario_.pop;
  for (double p : cfg.p) {
    for (double eps : cfg.epsilon) {
      pop::PopParams params{cfg.n_c, cfg.tau, eps, cfg.difficulty};
      Rng rng(scenario_.seed);  // common random numbers across the grid
      auto est = pop::estimate_rates(params, p, cfg.trials, rng, cfg.t1_delay);
      PopRow row;
      row.p = p;
      row.epsilon = eps;
      row.n_c = cfg.n_c;
      row.false_reject_rate = est.false_reject_rate;
      row.forgery_success_rate = est.forgery_success_rate;
      row.trials = est.trials;
      report.pop_rows.push_back(row);
    }
  }
  bool no_forgeries = std::all_of(report.pop_rows.begin(), report.pop_rows.end(),
                                  [](const PopRow& r) { return r.forgery_success_rate == 0.0; });
  report.audits.push_back(
      {"pop-no-forged-acceptance", no_forgeries, std::to_string(report.pop_rows.size()) + " rows"});
  return report;
}

// ---------------------------------------------------------------------------

ScheduleAuditResult atomic_delivery_schedule_audit(uint64_t seed) {
  // every boundary of one request's lifecycle, client send to output return
  const std::vector<std::string> steps = {
      "request.client_send",   "request.ledger_read", "request.enclave_exec",
      "request.enclave_reply", "claim.client_send",   "claim.ledger_write",
      "claim.enclave_release", "claim.enclave_reply",
  };
  const std::vector<std::string> faults = {"drop_message", "crash_node", "terminate_enclave"};

  ScheduleAuditResult result;
  Bytes victim_sink = to_bytes("victim");
  crypto::Digest victim = crypto::sha256(view(victim_sink));

  for (uint32_t topology_nodes : {2u, 1u}) {
    for (const auto& step : steps) {
      for (const auto& fault : faults) {
        result.schedules++;
        std::string label = std::to_string(topology_nodes) + "n/" + step + "/" + fault;

        Scenario s;
        s.seed = seed + result.schedules;
        s.nodes = topology_nodes;
        s.clients = 1;
        s.workload.type = "none";
        // setup (create + mint) crosses each step once; the victim request
        // is the second occurrence
        FaultSpec f;
        f.fault = fault;
        f.step = step;
        f.when = 2;
        s.adversary = {f};

        Simulation sim(s);
        sim.setup_contracts();
        crypto::Digest cid = sim.contract_ids()[0];
        client::Client& cl = sim.client_at(0);
        uint64_t released_before = cl.outputs_accepted();
        uint64_t items_before = sim.ledger().read(cid)->items.size();

        // drive the victim request manually so the in-flight reply survives
        // for the recovery check
        Bytes payload = contracts::token_transfer(victim, 5, 999);
        std::vector<client::Client::Attempt> tried;
        std::optional<client::Client::Attempt> live;
        bool delivered = false;
        for (int attempt = 0; attempt < 4 && !delivered; attempt++) {
          try {
            if (!live) {
              auto a = cl.begin_attempt(cid, payload);
              a.node_index = attempt;
              cl.request_leg(a);
              live = a;
            }
            auto out = cl.claim_leg(*live);
            if (out) {
              delivered = true;
              tried.push_back(*live);
            } else {
              tried.push_back(*live);
              live.reset();  // rejected: stale; retry fresh
            }
          } catch (const Error&) {
            if (live) {
              tried.push_back(*live);
              live->node_index = attempt + 1;  // keep claim, move node
            }
          }
        }
        if (live && !delivered) tried.push_back(*live);

        // how many distinct on-chain transitions carry any of our inputs?
        std::set<crypto::Digest> victim_inputs;
        for (const auto& a : tried) victim_inputs.insert(crypto::sha256(view(a.inp_ct)));
        auto entry = sim.ledger().read(cid);
        uint64_t victim_transitions = 0;
        for (size_t i = items_before; i < entry->items.size(); i++) {
          auto t = records::TransitionItem::from_bytes(view(entry->items[i].payload));
          bool ours = std::any_of(t.sigma.h_inp.begin(), t.sigma.h_inp.end(),
                                  [&](const crypto::Digest& h) { return victim_inputs.count(h) > 0; });
          if (ours) victim_transitions++;
        }

        uint64_t released = cl.outputs_accepted() - released_before;
        bool violated = false;
        std::string why;

        if (victim_transitions > 1) {
          violated = true;
          why = "request applied more than once";
        } else if (delivered) {
          if (victim_transitions != 1) {
            violated = true;
            why = "output delivered without an on-chain transition";
          }
        } else {
          if (released != 0) {
            violated = true;
            why = "output plaintext released without delivery";
          } else if (victim_transitions == 1) {
            // (a) with a lost reply: the output must be recoverable through
            // another (or restarted) node driving claim-output again
            for (uint32_t n = 0; n < topology_nodes; n++) sim.node_at(n).restart();
            bool recovered = false;
            for (auto& a : tried) {
              if (!a.have_reply) continue;
              for (uint32_t n = 0; n < topology_nodes && !recovered; n++) {
                try {
                  a.node_index = n;
                  auto out = cl.claim_leg(a);
                  if (out) recovered = true;
                } catch (const Error&) {
                }
              }
            }
            if (!recovered) {
              violated = true;
              why = "transition on chain but output unrecoverable";
            }
          }
          // victim_transitions == 0 and released == 0: case (b), nothing
          // written, nothing revealed
        }

        // ledger stays linear and the token stays conserved in every case
        for (uint32_t n = 0; n < topology_nodes; n++) sim.node_at(n).restart();
        for (const auto& row : sim.run_audits()) {
          if (!row.pass) {
            violated = true;
            why = "audit " + row.name + ": " + row.detail;
          }
        }

        if (violated) {
          result.violations++;
          result.failures.push_back(label + ": " + why);
        }
      }
    }
  }
  return result;
}

RewindAuditResult rewind_attack_audit(uint64_t seed, uint64_t budget, uint64_t schedules) {
  RewindAuditResult result;
  result.schedules = schedules;
  uint64_t max_answered = 0;
  bool all_contained = true;

  for (uint64_t sched = 0; sched < schedules; sched++) {
    Scenario s;
    s.seed = seed + sched;
    s.nodes = 2;
    s.clients = 1;
    s.contract_list = {{"counter", budget}};
    s.workload.type = "none";
    Simulation sim(s);
    sim.setup_contracts();
    crypto::Digest cid = sim.contract_ids()[0];
    client::Client& cl = sim.client_at(0);

    // interleave honest queries with replay attempts; the schedule varies
    // which pre-query snapshot is replayed after which query
    uint64_t answered = 0;
    uint64_t queries = budget + 2;  // more queries than the budget allows
    for (uint64_t q = 0; q < queries; q++) {
      Bytes out = cl.execute(cid, contracts::counter_query(q));
      auto o = contracts::Output::from_bytes(view(out));
      if (o.ok) answered++;

      // replay a strictly pre-head snapshot: rewinding, not re-querying
      uint64_t entry_count = sim.ledger().read(cid)->items.size();
      uint64_t snapshot = (sched + q) % std::max<uint64_t>(entry_count - 1, 1);
      if (!sim.replay_stale_state(cid, snapshot)) all_contained = false;
    }

    // the on-chain counter equals the number of answered queries
    contracts::State st = sim.final_state(cid);
    if (contracts::counter_value(st) != answered) all_contained = false;
    if (answered != budget) all_contained = false;
    max_answered = std::max(max_answered, answered);
  }

  result.answered = max_answered;
  result.budget_respected = all_contained && max_answered == budget;
  return result;
}

}  // namespace ekiden::harness
