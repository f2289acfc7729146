/* Generated by cbindgen from crates/ffi. Do not edit. */

#ifndef SPECVAR_H
#define SPECVAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpecvarStatus {
  SPECVAR_STATUS_OK = 0,
  SPECVAR_STATUS_NULL_POINTER = 1,
  // Bad parameter or configuration.
  SPECVAR_STATUS_INVALID_ARGUMENT = 2,
  // Malformed or unsuitable bit data.
  SPECVAR_STATUS_INVALID_DATA = 3,
  SPECVAR_STATUS_IO = 4,
  // A Rust panic was caught at the boundary.
  SPECVAR_STATUS_INTERNAL = 5,
} SpecvarStatus;

typedef enum SpecvarTest {
  SPECVAR_TEST_ORIGINAL = 0,
  SPECVAR_TEST_KIM = 1,
  SPECVAR_TEST_PARESCHI = 2,
  SPECVAR_TEST_PROPOSED = 3,
} SpecvarTest;

typedef enum SpecvarReportFormat {
  SPECVAR_REPORT_FORMAT_CSV = 0,
  SPECVAR_REPORT_FORMAT_JSON = 1,
} SpecvarReportFormat;

// Packed bit sequence.
typedef struct SpecvarBits SpecvarBits;

// Result of an experiment run.
typedef struct SpecvarReport SpecvarReport;

typedef struct SpecvarOutcome {
  double statistic;
  double pvalue;
  size_t n;
} SpecvarOutcome;

typedef struct SpecvarSecondLevel {
  size_t m;
  size_t r;
  bool proportion_pass;
  double chi2;
  double p_uniform;
  bool uniformity_pass;
} SpecvarSecondLevel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the next
// failing call on the same thread.
const char *specvar_last_error(void);

// Library version as a static string.
const char *specvar_version(void);

// Parses ASCII '0'/'1' text; whitespace is ignored.
//
// # Safety
// `text` must be a valid NUL-terminated string and `out` writable.
enum SpecvarStatus specvar_bits_from_ascii(const char *text, struct SpecvarBits **out);

// First `n_bits` bits of `data`, MSB first within each byte.
//
// # Safety
// `data` must point to at least `len` readable bytes and `out` be writable.
enum SpecvarStatus specvar_bits_from_bytes(const uint8_t *data,
                                           size_t len,
                                           size_t n_bits,
                                           struct SpecvarBits **out);

// `n` bits of MT19937 output for `seed`, MSB first per 32-bit word.
//
// # Safety
// `out` must be writable.
enum SpecvarStatus specvar_generate_mt(uint32_t seed, size_t n, struct SpecvarBits **out);

// `n` bits of AES-128 counter-mode keystream. `counter` is the first
// 128-bit block, big-endian.
//
// # Safety
// `key` and `counter` must each point to 16 readable bytes; `out` must be writable.
enum SpecvarStatus specvar_generate_aes(const uint8_t *key,
                                        const uint8_t *counter,
                                        size_t n,
                                        struct SpecvarBits **out);

// Number of bits, or 0 for NULL.
//
// # Safety
// `bits` must be NULL or a live handle.
size_t specvar_bits_len(const struct SpecvarBits *bits);

// Copies the packed MSB-first bytes of `bits` into `buf`. The padding bits
// of the last byte are zero. `written` receives the byte count, which is
// `ceil(len / 8)`; `buf_len` smaller than that fails with
// `SPECVAR_STATUS_INVALID_ARGUMENT`.
//
// # Safety
// `bits` must be a live handle, `buf` must have `buf_len` writable bytes and
// `written` be writable.
enum SpecvarStatus specvar_bits_to_bytes(const struct SpecvarBits *bits,
                                         uint8_t *buf,
                                         size_t buf_len,
                                         size_t *written);

// Copy of `bits` with the period-`period` defect applied.
//
// # Safety
// `bits` must be a live handle and `out` writable.
enum SpecvarStatus specvar_bits_inject_periodic(const struct SpecvarBits *bits,
                                                size_t period,
                                                struct SpecvarBits **out);

// # Safety
// `bits` must be NULL or a handle not yet freed.
void specvar_bits_free(struct SpecvarBits *bits);

// Runs one first-level test on `bits`.
//
// # Safety
// `bits` must be a live handle and `out` writable.
enum SpecvarStatus specvar_test(const struct SpecvarBits *bits,
                                enum SpecvarTest test,
                                struct SpecvarOutcome *out);

// Proportion and uniformity tests over `len` p-values.
//
// # Safety
// `pvalues` must point to `len` readable doubles and `out` be writable.
enum SpecvarStatus specvar_second_level(const double *pvalues,
                                        size_t len,
                                        struct SpecvarSecondLevel *out);

// # Safety
// `out` must be writable.
enum SpecvarStatus specvar_erfc(double z, double *out);

// Upper tail of the chi-square distribution with `dof` degrees of freedom.
//
// # Safety
// `out` must be writable.
enum SpecvarStatus specvar_chi2_sf(double stat, uint32_t dof, double *out);

// Runs an experiment described by TOML text whose keys are the CLI flag
// names. `sweep` non-zero selects the defect sweep (exp2), zero the batch
// run (exp1). Output paths in the config are ignored.
//
// # Safety
// `config` must be a valid NUL-terminated UTF-8 string and `out` writable.
enum SpecvarStatus specvar_experiment_run(const char *config,
                                          int sweep,
                                          struct SpecvarReport **out);

// Serializes a report. The string is released with [`specvar_string_free`].
//
// # Safety
// `report` must be a live handle and `out` writable.
enum SpecvarStatus specvar_report_to_string(const struct SpecvarReport *report,
                                            enum SpecvarReportFormat format,
                                            char **out);

// Number of sets (in the sweep: sets per period) rejected by at least one
// criterion for `test`, or `SIZE_MAX` if the report has no such entry.
//
// # Safety
// `report` must be NULL or a live handle.
size_t specvar_report_total_rejections(const struct SpecvarReport *report,
                                       enum SpecvarTest test,
                                       size_t period);

// # Safety
// `report` must be NULL or a handle not yet freed.
void specvar_report_free(struct SpecvarReport *report);

// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void specvar_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECVAR_H */
