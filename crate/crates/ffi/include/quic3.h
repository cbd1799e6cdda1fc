#ifndef QUIC3_H
#define QUIC3_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum Quic3Error {
  QUIC3_ERROR_OK = 0,
  QUIC3_ERROR_NULL_ARGUMENT = 1,
  QUIC3_ERROR_INVALID_UTF8 = 2,
  QUIC3_ERROR_PARSE = 3,
  QUIC3_ERROR_CONFIG = 4,
  QUIC3_ERROR_SOLVER = 5,
  QUIC3_ERROR_ENGINE = 6,
  QUIC3_ERROR_PANIC = 7,
} Quic3Error;

/**
 * Quantifier generalization mode.
 */
typedef enum Quic3Qgen {
  QUIC3_QGEN_OFF = 0,
  QUIC3_QGEN_SIMPLE = 1,
  QUIC3_QGEN_ARITH = 2,
  QUIC3_QGEN_BOTH = 3,
} Quic3Qgen;

/**
 * Outcome of a run; the values match the command-line exit codes.
 */
typedef enum Quic3Verdict {
  QUIC3_VERDICT_SAFE = 0,
  QUIC3_VERDICT_UNSAFE = 1,
  QUIC3_VERDICT_UNKNOWN = 2,
} Quic3Verdict;

/**
 * A parsed safety problem.
 */
typedef struct Quic3Problem Quic3Problem;

/**
 * The verdict of a run together with its statistics.
 */
typedef struct Quic3Result Quic3Result;

/**
 * Run options. Obtain defaults from [`quic3_options_default`].
 */
typedef struct Quic3Options {
  uint32_t max_depth;
  enum Quic3Qgen qgen;
  /**
   * Per-query solver timeout in milliseconds.
   */
  uint64_t query_timeout_ms;
  /**
   * Overall budget in milliseconds; 0 means none.
   */
  uint64_t timeout_ms;
  uint32_t max_instances;
  bool push_pobs;
  /**
   * Path of an SMT-LIB2 solver binary, or NULL to discover one.
   */
  const char *solver_path;
} Quic3Options;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *quic3_last_error_message(void);

struct Quic3Options quic3_options_default(void);

/**
 * Parse a problem in the native transition-system format.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum Quic3Error quic3_problem_parse(const char *src, struct Quic3Problem **out);

/**
 * Parse linear Horn clauses over a single predicate (SMT-LIB2).
 *
 * # Safety
 * As [`quic3_problem_parse`].
 */
enum Quic3Error quic3_problem_parse_chc(const char *src, struct Quic3Problem **out);

/**
 * Number of state variables, or 0 for NULL.
 *
 * # Safety
 * `p` must be NULL or a live problem handle.
 */
size_t quic3_problem_num_vars(const struct Quic3Problem *p);

/**
 * # Safety
 * `p` must be NULL or a handle from a parse call, not yet freed.
 */
void quic3_problem_free(struct Quic3Problem *p);

/**
 * Check the problem. `opts` may be NULL for defaults.
 *
 * # Safety
 * `p` must be a live problem handle, `opts` NULL or valid, `out` valid.
 */
enum Quic3Error quic3_solve(const struct Quic3Problem *p,
                            const struct Quic3Options *opts,
                            struct Quic3Result **out);

/**
 * # Safety
 * `r` must be a live result handle.
 */
enum Quic3Verdict quic3_result_verdict(const struct Quic3Result *r);

/**
 * Number of frames explored.
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
size_t quic3_result_depth(const struct Quic3Result *r);

/**
 * Total number of lemmas learned.
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
size_t quic3_result_lemmas(const struct Quic3Result *r);

/**
 * Number of transitions of the counterexample, or -1 if there is none.
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
int64_t quic3_result_cex_length(const struct Quic3Result *r);

/**
 * The invariant as SMT-LIB2 declarations and assertions, or NULL when the
 * verdict is not safe. Free with [`quic3_string_free`].
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
char *quic3_result_invariant_smt2(const struct Quic3Result *r);

/**
 * The result as a JSON object. Free with [`quic3_string_free`].
 *
 * # Safety
 * `r` must be NULL or a live result handle.
 */
char *quic3_result_json(const struct Quic3Result *r);

/**
 * # Safety
 * `r` must be NULL or a handle from [`quic3_solve`], not yet freed.
 */
void quic3_result_free(struct Quic3Result *r);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void quic3_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUIC3_H */
