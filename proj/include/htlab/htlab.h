#ifndef HTLAB_H
#define HTLAB_H

/* C interface to the affine-recursion laboratory.
 *
 * All functions are thread-compatible: distinct sessions may be used from
 * distinct threads, a single session must not be shared without external
 * locking. Every char* returned through an out-parameter is heap-allocated
 * and must be released with htlab_string_free. Out-parameters are written
 * only as documented; on failure they are set to NULL unless stated
 * otherwise.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum htlab_status {
  HTLAB_OK = 0,
  HTLAB_INVALID_ARGUMENT = 1,  /* bad call, bad stage name, bad parameter   */
  HTLAB_PARSE_ERROR = 2,       /* measure or config document is not valid   */
  HTLAB_VALIDATION_ERROR = 3,  /* measure rejected (weights, shape, ...)    */
  HTLAB_PRECONDITION_FAILED = 4, /* quantity undefined for this measure     */
  HTLAB_CHECK_FAILED = 5,      /* a numerical invariant check failed        */
  HTLAB_IO_ERROR = 6,
  HTLAB_INTERNAL_ERROR = 7
} htlab_status;

/* Opaque session handle: one measure + one config + cached stage results. */
typedef struct htlab_session htlab_session;

/* Library version string, e.g. "0.1.0". Static storage, do not free. */
const char* htlab_version(void);

/* Releases a string returned by this library. NULL is accepted. */
void htlab_string_free(char* s);

/* Validates a measure document without creating a session. *report_json
 * receives the validation report when the measure could be parsed, or an
 * error document {"code", "message"} when it could not. Returns HTLAB_OK
 * only when the measure is accepted (structurally valid, not degenerate). */
htlab_status htlab_validate_measure(const char* measure_json, char** report_json);

/* Creates a session from a measure document and a config document. On
 * failure *out_session is NULL and *error_json (if non-NULL) receives an
 * error document. */
htlab_status htlab_session_create(const char* measure_json, const char* config_json,
                                  htlab_session** out_session, char** error_json);

void htlab_session_destroy(htlab_session* session);

/* Runs one pipeline stage: "validate", "spectral", "sample", "tails",
 * "structure" or "report". Stages cache results inside the session, so
 * running "report" after "spectral" reuses the spectral work. Artifacts
 * produced before a failure remain available, which is how partial output
 * (for example the spectral profile of a measure with no tail exponent)
 * is delivered. On failure *error_json (if non-NULL) receives an error
 * document {"code", "message"}. */
htlab_status htlab_session_run(htlab_session* session, const char* stage,
                               char** error_json);

/* JSON array of the artifact names currently available on the session. */
htlab_status htlab_session_artifact_list(htlab_session* session, char** names_json);

/* Content of one artifact by name, e.g. "profile.json" or "kcurve.csv". */
htlab_status htlab_session_artifact(htlab_session* session, const char* name,
                                    char** content);

#ifdef __cplusplus
}
#endif

#endif /* HTLAB_H */
