#include "htlab/htlab.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include <json.hpp>

#include "core/error.hpp"
#include "core/measure.hpp"
#include "session.hpp"
#include "version.hpp"

namespace {

using htlab::Errc;

htlab_status status_of(Errc code) {
  switch (code) {
    case Errc::Ok:
      return HTLAB_OK;
    case Errc::InvalidArgument:
    case Errc::WrongDimension:
    case Errc::DimensionMismatch:
    case Errc::SAboveChi:
    case Errc::TooFewExceedances:
      return HTLAB_INVALID_ARGUMENT;
    case Errc::ParseError:
      return HTLAB_PARSE_ERROR;
    case Errc::NonPositiveWeight:
    case Errc::WeightsNotNormalized:
    case Errc::SingularMatrix:
    case Errc::DegenerateFixedPoint:
      return HTLAB_VALIDATION_ERROR;
    case Errc::NoRootBelowCap:
    case Errc::AlphaNotNegative:
    case Errc::PreconditionFailed:
      return HTLAB_PRECONDITION_FAILED;
    case Errc::IoError:
      return HTLAB_IO_ERROR;
    case Errc::Internal:
      return HTLAB_INTERNAL_ERROR;
    default:
      return HTLAB_CHECK_FAILED;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) return nullptr;
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::string error_document(const char* code, const std::string& message) {
  nlohmann::json doc;
  doc["code"] = code;
  doc["message"] = message;
  return doc.dump(2) + "\n";
}

void put_error(char** slot, const char* code, const std::string& message) {
  if (slot != nullptr) *slot = dup_string(error_document(code, message));
}

// Runs fn under the exception barrier; every failure is reported through
// *error_json (when provided) plus the returned status.
template <typename Fn>
htlab_status guarded(char** error_json, Fn&& fn) {
  if (error_json != nullptr) *error_json = nullptr;
  try {
    return fn();
  } catch (const htlab::Error& e) {
    put_error(error_json, htlab::errc_name(e.code()), e.what());
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    put_error(error_json, "Internal", "out of memory");
    return HTLAB_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    put_error(error_json, "Internal", e.what());
    return HTLAB_INTERNAL_ERROR;
  }
}

}  // namespace

struct htlab_session {
  htlab::Session impl;
};

extern "C" {

const char* htlab_version(void) { return htlab::kVersion; }

void htlab_string_free(char* s) { std::free(s); }

htlab_status htlab_validate_measure(const char* measure_json, char** report_json) {
  if (report_json != nullptr) *report_json = nullptr;
  if (measure_json == nullptr) {
    put_error(report_json, "InvalidArgument", "measure_json is NULL");
    return HTLAB_INVALID_ARGUMENT;
  }
  return guarded(report_json, [&]() -> htlab_status {
    const htlab::AffineMeasure eta = htlab::measure_from_json(measure_json);
    const htlab::ValidationResult result = htlab::validate(eta);
    if (report_json != nullptr) {
      *report_json = dup_string(htlab::validation_document(result));
    }
    if (!result.structurally_valid()) return status_of(result.issues.front().code);
    if (result.degenerate()) return HTLAB_VALIDATION_ERROR;
    return HTLAB_OK;
  });
}

htlab_status htlab_session_create(const char* measure_json, const char* config_json,
                                  htlab_session** out_session, char** error_json) {
  if (error_json != nullptr) *error_json = nullptr;
  if (out_session == nullptr) return HTLAB_INVALID_ARGUMENT;
  *out_session = nullptr;
  if (measure_json == nullptr || config_json == nullptr) {
    put_error(error_json, "InvalidArgument", "measure_json and config_json are required");
    return HTLAB_INVALID_ARGUMENT;
  }
  return guarded(error_json, [&]() -> htlab_status {
    *out_session = new htlab_session{htlab::Session(measure_json, config_json)};
    return HTLAB_OK;
  });
}

void htlab_session_destroy(htlab_session* session) { delete session; }

htlab_status htlab_session_run(htlab_session* session, const char* stage,
                               char** error_json) {
  if (error_json != nullptr) *error_json = nullptr;
  if (session == nullptr || stage == nullptr) {
    put_error(error_json, "InvalidArgument", "session and stage are required");
    return HTLAB_INVALID_ARGUMENT;
  }
  return guarded(error_json, [&]() -> htlab_status {
    session->impl.run(stage);
    return HTLAB_OK;
  });
}

htlab_status htlab_session_artifact_list(htlab_session* session, char** names_json) {
  if (names_json == nullptr) return HTLAB_INVALID_ARGUMENT;
  *names_json = nullptr;
  if (session == nullptr) return HTLAB_INVALID_ARGUMENT;
  return guarded(nullptr, [&]() -> htlab_status {
    nlohmann::json names = nlohmann::json::array();
    for (const auto& [name, content] : session->impl.artifacts()) names.push_back(name);
    *names_json = dup_string(names.dump() + "\n");
    return HTLAB_OK;
  });
}

htlab_status htlab_session_artifact(htlab_session* session, const char* name,
                                    char** content) {
  if (content == nullptr) return HTLAB_INVALID_ARGUMENT;
  *content = nullptr;
  if (session == nullptr || name == nullptr) return HTLAB_INVALID_ARGUMENT;
  const auto& artifacts = session->impl.artifacts();
  const auto it = artifacts.find(name);
  if (it == artifacts.end()) return HTLAB_INVALID_ARGUMENT;
  *content = dup_string(it->second);
  if (*content == nullptr) return HTLAB_INTERNAL_ERROR;
  return HTLAB_OK;
}

}  // extern "C"
