#include "gesbl/gesbl.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "gesbl/errors.hpp"
#include "gesbl/experiment.hpp"
#include "gesbl/io.hpp"

struct gesbl_config {
  gesbl::ExperimentConfig cfg;
};

struct gesbl_report {
  gesbl::CampaignReport report;
  std::string json;
  std::string table;
};

namespace {

thread_local std::string last_error;

gesbl_status to_status(gesbl::ErrorCode code) {
  using gesbl::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return GESBL_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return GESBL_ERR_DIMENSION_MISMATCH;
    case ErrorCode::GenerationBudgetExceeded: return GESBL_ERR_GENERATION_BUDGET;
    case ErrorCode::InsufficientData: return GESBL_ERR_INSUFFICIENT_DATA;
    case ErrorCode::EmptyDictionary: return GESBL_ERR_EMPTY_DICTIONARY;
    case ErrorCode::SingularSystem: return GESBL_ERR_SINGULAR_SYSTEM;
    case ErrorCode::DegenerateTruth: return GESBL_ERR_DEGENERATE_TRUTH;
    case ErrorCode::Io: return GESBL_ERR_IO;
    case ErrorCode::Parse: return GESBL_ERR_PARSE;
    case ErrorCode::MismatchedManifest: return GESBL_ERR_MISMATCHED_MANIFEST;
  }
  return GESBL_ERR_INTERNAL;
}

template <class F>
gesbl_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return GESBL_OK;
  } catch (const gesbl::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return GESBL_ERR_INTERNAL;
}

void require_ptr(const void* p, const char* name) {
  gesbl::require(p != nullptr, gesbl::ErrorCode::InvalidArgument, std::string(name) + " is null");
}

template <class F>
gesbl_status update(gesbl_config* cfg, F&& change) {
  return guarded([&] {
    require_ptr(cfg, "config");
    gesbl::ExperimentConfig next = cfg->cfg;
    change(next);
    next.validate();
    cfg->cfg = std::move(next);
  });
}

gesbl_status make_report(gesbl::CampaignReport rep, gesbl_report** out) {
  auto* r = new gesbl_report{std::move(rep), {}, {}};
  r->json = gesbl::format_report_json(r->report);
  r->table = gesbl::format_report_table(r->report);
  *out = r;
  return GESBL_OK;
}

}  // namespace

extern "C" {

const char* gesbl_status_name(gesbl_status status) {
  switch (status) {
    case GESBL_OK: return "Ok";
    case GESBL_ERR_INTERNAL: return "Internal";
    default: break;
  }
  if (status >= GESBL_ERR_INVALID_ARGUMENT && status <= GESBL_ERR_MISMATCHED_MANIFEST)
    return gesbl::to_string(static_cast<gesbl::ErrorCode>(status));
  return "Unknown";
}

const char* gesbl_last_error(void) { return last_error.c_str(); }

const char* gesbl_version(void) { return "1.0.0"; }

gesbl_status gesbl_config_default(gesbl_config** out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = new gesbl_config{};
  });
}

gesbl_status gesbl_config_from_json(const char* text, gesbl_config** out) {
  return guarded([&] {
    require_ptr(text, "text");
    require_ptr(out, "out");
    *out = new gesbl_config{gesbl::parse_config_json(text)};
  });
}

gesbl_status gesbl_config_from_file(const char* path, gesbl_config** out) {
  return guarded([&] {
    require_ptr(path, "path");
    require_ptr(out, "out");
    *out = new gesbl_config{gesbl::parse_config_json(gesbl::read_text(path))};
  });
}

void gesbl_config_free(gesbl_config* cfg) { delete cfg; }

gesbl_status gesbl_config_set_seed(gesbl_config* cfg, uint64_t seed) {
  return update(cfg, [&](gesbl::ExperimentConfig& c) { c.master_seed = seed; });
}

gesbl_status gesbl_config_set_runs(gesbl_config* cfg, int runs) {
  return update(cfg, [&](gesbl::ExperimentConfig& c) { c.runs = runs; });
}

gesbl_status gesbl_config_set_solver(gesbl_config* cfg, const char* solver) {
  return update(cfg, [&](gesbl::ExperimentConfig& c) {
    require_ptr(solver, "solver");
    c.solver = gesbl::parse_solver(solver);
  });
}

gesbl_status gesbl_config_set_modes(gesbl_config* cfg, const char* modes) {
  return update(cfg, [&](gesbl::ExperimentConfig& c) {
    require_ptr(modes, "modes");
    c.modes.clear();
    std::stringstream ss(modes);
    std::string item;
    while (std::getline(ss, item, ',')) c.modes.push_back(gesbl::parse_mode(item));
  });
}

gesbl_status gesbl_config_set_jobs(gesbl_config* cfg, int jobs) {
  return update(cfg, [&](gesbl::ExperimentConfig& c) { c.jobs = jobs; });
}

gesbl_status gesbl_config_set_fix_lambda(gesbl_config* cfg, int fix) {
  return update(cfg, [&](gesbl::ExperimentConfig& c) { c.fix_lambda = fix != 0; });
}

gesbl_status gesbl_config_set_emit_curves(gesbl_config* cfg, int emit) {
  return update(cfg, [&](gesbl::ExperimentConfig& c) { c.emit_curves = emit != 0; });
}

gesbl_status gesbl_config_to_json(const gesbl_config* cfg, char** out) {
  return guarded([&] {
    require_ptr(cfg, "config");
    require_ptr(out, "out");
    const std::string text = gesbl::format_config_json(cfg->cfg);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void gesbl_string_free(char* s) { delete[] s; }

gesbl_status gesbl_simulate(const gesbl_config* cfg, const char* out_dir) {
  return guarded([&] {
    require_ptr(cfg, "config");
    require_ptr(out_dir, "out_dir");
    gesbl::cmd_simulate(cfg->cfg, out_dir);
  });
}

gesbl_status gesbl_infer(const gesbl_config* cfg, const char* dir) {
  return guarded([&] {
    require_ptr(cfg, "config");
    require_ptr(dir, "dir");
    gesbl::cmd_infer(cfg->cfg, dir);
  });
}

gesbl_status gesbl_evaluate(const gesbl_config* cfg, const char* dir, gesbl_report** out) {
  return guarded([&] {
    require_ptr(cfg, "config");
    require_ptr(dir, "dir");
    require_ptr(out, "out");
    make_report(gesbl::cmd_evaluate(cfg->cfg, dir), out);
  });
}

gesbl_status gesbl_montecarlo(const gesbl_config* cfg, const char* out_dir, gesbl_report** out) {
  return guarded([&] {
    require_ptr(cfg, "config");
    require_ptr(out_dir, "out_dir");
    require_ptr(out, "out");
    make_report(gesbl::cmd_montecarlo(cfg->cfg, out_dir), out);
  });
}

const char* gesbl_report_json(const gesbl_report* report) {
  return report ? report->json.c_str() : "";
}

const char* gesbl_report_table(const gesbl_report* report) {
  return report ? report->table.c_str() : "";
}

int gesbl_report_failed_runs(const gesbl_report* report) {
  if (!report) return 0;
  int failed = 0;
  for (const auto& m : report->report.summary) failed += m.failed;
  return failed;
}

void gesbl_report_free(gesbl_report* report) { delete report; }

}  // extern "C"
