#include "ekiden/ekiden.h"

#include <fstream>
#include <sstream>
#include <string>

#include "ekiden/harness.hpp"

using ekiden::Error;

struct ekd_sim {
  ekiden::harness::Scenario scenario;
};

struct ekd_report {
  ekiden::harness::RunReport report;
  std::string text;
  std::string table;
};

namespace {

thread_local std::string g_last_error;

ekd_status status_of(const Error& e) {
  g_last_error = e.what();
  switch (e.code()) {
    case Error::Code::config:
    case Error::Code::decode:
      return EKD_ERR_CONFIG;
    case Error::Code::io:
      return EKD_ERR_IO;
    case Error::Code::bad_argument:
      return EKD_ERR_ARG;
    default:
      return EKD_ERR_RUNTIME;
  }
}

ekd_report* wrap(ekiden::harness::RunReport report) {
  auto* r = new ekd_report{std::move(report), {}, {}};
  r->text = r->report.text();
  r->table = r->report.table();
  return r;
}

template <typename Fn>
ekd_status guarded(Fn&& fn) {
  try {
    fn();
    return EKD_OK;
  } catch (const Error& e) {
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EKD_ERR_RUNTIME;
  }
}

}  // namespace

extern "C" {

const char* ekd_version(void) { return "ekiden-sim 1.0.0"; }

const char* ekd_last_error(void) { return g_last_error.c_str(); }

ekd_status ekd_sim_create(const char* scenario_json, ekd_sim** out) {
  if (!scenario_json || !out) {
    g_last_error = "null argument";
    return EKD_ERR_ARG;
  }
  *out = nullptr;
  return guarded([&] {
    auto scenario = ekiden::harness::parse_scenario(scenario_json);
    *out = new ekd_sim{std::move(scenario)};
  });
}

ekd_status ekd_sim_create_from_file(const char* path, ekd_sim** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return EKD_ERR_ARG;
  }
  std::ifstream in(path);
  if (!in.good()) {
    g_last_error = std::string("cannot open ") + path;
    return EKD_ERR_IO;
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ekd_sim_create(text.c_str(), out);
}

void ekd_sim_destroy(ekd_sim* sim) { delete sim; }

ekd_status ekd_sim_run(const ekd_sim* sim, ekd_report** out) {
  if (!sim || !out) {
    g_last_error = "null argument";
    return EKD_ERR_ARG;
  }
  *out = nullptr;
  return guarded([&] {
    ekiden::harness::Simulation simulation(sim->scenario);
    *out = wrap(simulation.run());
  });
}

ekd_status ekd_sim_bench(const ekd_sim* sim, const uint64_t* batch_sizes, size_t n_batch_sizes,
                         ekd_report** out) {
  if (!sim || !out || (!batch_sizes && n_batch_sizes > 0)) {
    g_last_error = "null argument";
    return EKD_ERR_ARG;
  }
  *out = nullptr;
  return guarded([&] {
    std::vector<uint64_t> sizes(batch_sizes, batch_sizes + n_batch_sizes);
    if (sizes.empty()) sizes = {1, 10, 100};
    *out = wrap(ekiden::harness::Simulation::bench(sim->scenario, sizes));
  });
}

ekd_status ekd_sim_pop_sweep(const ekd_sim* sim, ekd_report** out) {
  if (!sim || !out) {
    g_last_error = "null argument";
    return EKD_ERR_ARG;
  }
  *out = nullptr;
  return guarded([&] {
    ekiden::harness::Simulation simulation(sim->scenario);
    *out = wrap(simulation.pop_sweep());
  });
}

ekd_status ekd_audit_transcript_file(const char* path, ekd_report** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return EKD_ERR_ARG;
  }
  *out = nullptr;
  std::ifstream in(path);
  if (!in.good()) {
    g_last_error = std::string("cannot open ") + path;
    return EKD_ERR_IO;
  }
  return guarded([&] { *out = wrap(ekiden::harness::audit_transcript(in)); });
}

int ekd_report_ok(const ekd_report* report) { return report && report->report.ok() ? 1 : 0; }

const char* ekd_report_text(const ekd_report* report) {
  return report ? report->text.c_str() : "";
}

const char* ekd_report_table(const ekd_report* report) {
  return report ? report->table.c_str() : "";
}

const char* ekd_report_transcript(const ekd_report* report) {
  return report ? report->report.transcript.c_str() : "";
}

void ekd_report_destroy(ekd_report* report) { delete report; }

}  // extern "C"
