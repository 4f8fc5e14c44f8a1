#ifndef SCHOOL_CHOICE_H
#define SCHOOL_CHOICE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SchStatus {
  SCH_STATUS_OK = 0,
  SCH_STATUS_NULL_POINTER = 1,
  SCH_STATUS_INVALID_UTF8 = 2,
  SCH_STATUS_PARSE = 3,
  SCH_STATUS_VALIDATION = 4,
  SCH_STATUS_IO = 5,
  SCH_STATUS_INVALID_ARGUMENT = 6,
  SCH_STATUS_MECHANISM = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  SCH_STATUS_INTERNAL = 8,
} SchStatus;

typedef enum SchMechanism {
  SCH_MECHANISM_GALE_SHAPLEY = 0,
  SCH_MECHANISM_BOSTON = 1,
  SCH_MECHANISM_FIRST_PREFERENCE_FIRST = 2,
  SCH_MECHANISM_SERIAL_DICTATORSHIP = 3,
  SCH_MECHANISM_CHINESE_PARALLEL = 4,
} SchMechanism;

/**
 * A validated instance with its student and school names.
 */
typedef struct SchInstance SchInstance;

/**
 * A matching produced for a particular instance.
 */
typedef struct SchMatching SchMatching;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *sch_last_error_message(void);

/**
 * Parses an instance document from a NUL-terminated JSON string.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum SchStatus sch_instance_from_json(const char *json, struct SchInstance **out);

/**
 * Loads an instance document from a file.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum SchStatus sch_instance_load(const char *path, struct SchInstance **out);

/**
 * # Safety
 * `instance` must come from this library and not be freed twice. NULL is
 * ignored.
 */
void sch_instance_free(struct SchInstance *instance);

/**
 * Number of students, or 0 for NULL.
 *
 * # Safety
 * `instance` must be NULL or a live instance.
 */
size_t sch_instance_n_students(const struct SchInstance *instance);

/**
 * Number of schools, or 0 for NULL.
 *
 * # Safety
 * `instance` must be NULL or a live instance.
 */
size_t sch_instance_n_schools(const struct SchInstance *instance);

/**
 * Runs a mechanism. `k` = 0 leaves lists unconstrained; `e` is the round
 * length and is read only for `ChineseParallel`.
 *
 * # Safety
 * `instance` must be a live instance and `out` a valid pointer.
 */
enum SchStatus sch_run(const struct SchInstance *instance,
                       enum SchMechanism mechanism,
                       size_t k,
                       size_t e,
                       struct SchMatching **out);

/**
 * # Safety
 * `matching` must come from this library and not be freed twice. NULL is
 * ignored.
 */
void sch_matching_free(struct SchMatching *matching);

/**
 * School of `student`, or -1 when unmatched.
 *
 * # Safety
 * `matching` must be a live matching and `out_school` a valid pointer.
 */
enum SchStatus sch_matching_school_of(const struct SchMatching *matching,
                                      size_t student,
                                      int64_t *out_school);

/**
 * Whether the matching is stable for the instance's true preferences.
 *
 * # Safety
 * All pointers must be valid.
 */
enum SchStatus sch_is_stable(const struct SchInstance *instance,
                             const struct SchMatching *matching,
                             bool *out);

/**
 * Number of students in at least one blocking pair.
 *
 * # Safety
 * All pointers must be valid.
 */
enum SchStatus sch_blocking_student_count(const struct SchInstance *instance,
                                          const struct SchMatching *matching,
                                          size_t *out);

/**
 * The matching as `{student: school|null}` JSON using the instance's
 * names. Release the string with `sch_string_free`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum SchStatus sch_matching_to_json(const struct SchInstance *instance,
                                    const struct SchMatching *matching,
                                    char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. NULL is ignored.
 */
void sch_string_free(char *s);

/**
 * Recomputes a worked example by name (e.g. "EX1") and reports whether
 * every value matched.
 *
 * # Safety
 * `fixture` must be a valid C string and `out_passed` a valid pointer.
 */
enum SchStatus sch_reproduce(const char *fixture, bool *out_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHOOL_CHOICE_H */
