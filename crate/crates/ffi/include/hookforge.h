#ifndef HOOKFORGE_H
#define HOOKFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>

typedef enum HfStatus {
  HF_OK = 0,
  HF_ERR_NULL_POINTER = 1,
  HF_ERR_INVALID_UTF8 = 2,
  // The input document or scenario did not parse.
  HF_ERR_PARSE = 3,
  // An address, trigger or amount argument is invalid.
  HF_ERR_INVALID_ARGUMENT = 4,
  // The program failed validation or the guard check.
  HF_ERR_NOT_CLEAN = 5,
  HF_ERR_UNKNOWN_ACCOUNT = 6,
  HF_ERR_ACCOUNT_EXISTS = 7,
  // A Rust panic was caught at the boundary.
  HF_ERR_INTERNAL = 99,
} HfStatus;

// A simulated ledger. Not thread-safe; callers serialize access.
typedef struct HfLedger HfLedger;

// A parsed block program.
typedef struct HfProgram HfProgram;

// Rule code of the last failure on this thread, or NULL. Valid until the
// next hookforge call on the same thread.
const char *hf_last_error_code(void);

// Message of the last failure on this thread, or NULL.
const char *hf_last_error_message(void);

// Library version, a static string.
const char *hf_version(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void hf_string_free(char *s);

// Parses a workspace document into a new program handle.
//
// # Safety
// `workspace_json` must be a NUL-terminated string; `out` must be writable.
enum HfStatus hf_program_parse(const char *workspace_json, struct HfProgram **out);

// # Safety
// `program` must be NULL or a handle from [`hf_program_parse`], not yet freed.
void hf_program_free(struct HfProgram *program);

// Validation and guard reports as one JSON document
// `{"ok", "validation", "guard"}`. `*ok` is set even when reports list errors.
//
// # Safety
// `program` must be a live handle; `ok` and `report_json` must be writable.
enum HfStatus hf_program_check(const struct HfProgram *program, bool *ok, char **report_json);

// Generates Hooks C for a clean program.
//
// # Safety
// `program` must be a live handle; `c_source` must be writable.
enum HfStatus hf_program_generate_c(const struct HfProgram *program, char **c_source);

// An empty ledger.
struct HfLedger *hf_ledger_new(void);

// # Safety
// `ledger` must be NULL or a handle from [`hf_ledger_new`], not yet freed.
void hf_ledger_free(struct HfLedger *ledger);

// Opens a new account with `drops`.
//
// # Safety
// `ledger` must be a live handle; `address` a NUL-terminated string.
enum HfStatus hf_ledger_add_account(struct HfLedger *ledger, const char *address, uint64_t drops);

// # Safety
// `ledger` must be a live handle; `address` a NUL-terminated string; `drops` writable.
enum HfStatus hf_ledger_balance(const struct HfLedger *ledger,
                                const char *address,
                                uint64_t *drops);

// Installs a copy of `program` on `address`. `trigger` is "outgoing",
// "incoming" or "both".
//
// # Safety
// Handles must be live; strings NUL-terminated.
enum HfStatus hf_ledger_install(struct HfLedger *ledger,
                                const char *address,
                                const struct HfProgram *program,
                                const char *trigger);

// Applies a payment. A payment the ledger rejects is still `HF_OK`; the
// outcome is in the report. `report_json` may be NULL when not wanted.
//
// # Safety
// `ledger` must be live; strings NUL-terminated; `applied` writable;
// `report_json` NULL or writable.
enum HfStatus hf_ledger_pay(struct HfLedger *ledger,
                            const char *from,
                            const char *to,
                            uint64_t amount_drops,
                            bool *applied,
                            char **report_json);

// Total drops held by all accounts plus burned fees.
//
// # Safety
// `ledger` must be live; `total` writable.
enum HfStatus hf_ledger_total_drops(const struct HfLedger *ledger, uint64_t *total);

// The ledger as JSON.
//
// # Safety
// `ledger` must be live; `json_out` writable.
enum HfStatus hf_ledger_to_json(const struct HfLedger *ledger, char **json_out);

// Runs a scenario document (bundled examples only, no file references)
// and returns the machine report.
//
// # Safety
// `scenario_json` must be NUL-terminated; `report_json` writable.
enum HfStatus hf_simulate(const char *scenario_json, char **report_json);

#endif  /* HOOKFORGE_H */
