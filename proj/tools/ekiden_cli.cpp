// Scenario driver CLI. Talks to the simulation library exclusively through
// its C interface.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ekiden/ekiden.h"

namespace {

int write_file(const std::string& path, const char* content) {
  std::ofstream out(path);
  if (!out.good()) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    return 2;
  }
  out << content;
  return 0;
}

// Prints the report; optional copies of summary/table/transcript to files.
// Exit code 3 when any audit failed.
int emit(ekd_report* report, const std::string& report_path, const std::string& table_path,
         const std::string& transcript_path) {
  std::fputs(ekd_report_text(report), stdout);
  int rc = 0;
  if (!report_path.empty()) rc = write_file(report_path, ekd_report_text(report));
  if (rc == 0 && !table_path.empty()) rc = write_file(table_path, ekd_report_table(report));
  if (rc == 0 && !transcript_path.empty())
    rc = write_file(transcript_path, ekd_report_transcript(report));
  if (rc == 0 && !ekd_report_ok(report)) {
    std::fprintf(stderr, "error: audit failure (see report)\n");
    rc = 3;
  }
  ekd_report_destroy(report);
  return rc;
}

int die(ekd_status status) {
  std::fprintf(stderr, "error: %s\n", ekd_last_error());
  return status == EKD_ERR_CONFIG ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ekiden: TEE-backed confidential smart contract simulator"};
  app.require_subcommand(1);

  std::string config, report_path, table_path, transcript_path;
  std::vector<uint64_t> batches = {1, 10, 100};

  auto add_common = [&](CLI::App* cmd, bool with_config = true) {
    if (with_config) cmd->add_option("config", config, "scenario config file (JSON)")->required();
    cmd->add_option("--report", report_path, "write the summary to a file");
    cmd->add_option("--table", table_path, "write delimited result rows to a file");
  };

  CLI::App* run = app.add_subcommand("run", "execute a scenario and its audits");
  add_common(run);
  run->add_option("--transcript", transcript_path,
                  "write the bit-exact message transcript (requires \"transcript\": true)");

  CLI::App* bench = app.add_subcommand("bench", "ledger writes per request across batch sizes");
  add_common(bench);
  bench->add_option("--batch", batches, "batch sizes to sweep");

  CLI::App* sweep = app.add_subcommand("pop-sweep", "proof-of-publication Monte Carlo sweep");
  add_common(sweep);

  CLI::App* audit = app.add_subcommand("audit", "re-run invariant audits over a saved transcript");
  std::string transcript_in;
  audit->add_option("transcript", transcript_in, "transcript file from a previous run")->required();
  audit->add_option("--report", report_path, "write the summary to a file");

  CLI11_PARSE(app, argc, argv);

  if (audit->parsed()) {
    ekd_report* report = nullptr;
    ekd_status st = ekd_audit_transcript_file(transcript_in.c_str(), &report);
    if (st != EKD_OK) return die(st);
    return emit(report, report_path, "", "");
  }

  ekd_sim* sim = nullptr;
  ekd_status st = ekd_sim_create_from_file(config.c_str(), &sim);
  if (st != EKD_OK) return die(st);

  ekd_report* report = nullptr;
  if (run->parsed()) {
    st = ekd_sim_run(sim, &report);
  } else if (bench->parsed()) {
    st = ekd_sim_bench(sim, batches.data(), batches.size(), &report);
  } else {
    st = ekd_sim_pop_sweep(sim, &report);
  }
  ekd_sim_destroy(sim);
  if (st != EKD_OK) return die(st);
  return emit(report, report_path, table_path, transcript_path);
}
