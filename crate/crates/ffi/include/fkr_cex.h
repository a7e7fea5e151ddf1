#ifndef FKR_CEX_H
#define FKR_CEX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FkrStatus {
  FKR_STATUS_OK = 0,
  FKR_STATUS_NULL_POINTER = 1,
  FKR_STATUS_INVALID_UTF8 = 2,
  FKR_STATUS_INVALID_INPUT = 3,
  FKR_STATUS_PARSE_ERROR = 4,
  FKR_STATUS_CONSTRUCTION_ERROR = 5,
  FKR_STATUS_IO_ERROR = 6,
  FKR_STATUS_PANIC = 7,
} FkrStatus;

/**
 * A digraph parsed from the line format (`v label`, `e from to`, `p label tag`).
 */
typedef struct FkrDigraph FkrDigraph;

/**
 * A built example with its consistency closure, family and solutions.
 */
typedef struct FkrExample FkrExample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, or returns null if there
 * is none. Free the result with [`fkr_string_free`].
 */
char *fkr_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void fkr_string_free(char *s);

/**
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum FkrStatus fkr_digraph_parse(const char *text, struct FkrDigraph **out);

/**
 * # Safety
 * `g` must be null or a handle from [`fkr_digraph_parse`], freed once.
 */
void fkr_digraph_free(struct FkrDigraph *g);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t fkr_digraph_vertex_count(const struct FkrDigraph *g);

/**
 * Counts homomorphisms `g -> h`, stopping at `limit` when it is nonzero.
 *
 * # Safety
 * `g` and `h` must be live handles; `out` must be writable.
 */
enum FkrStatus fkr_count_homomorphisms(const struct FkrDigraph *g,
                                       const struct FkrDigraph *h,
                                       uint64_t limit,
                                       uint64_t *out);

/**
 * Builds an example (`"1"`, `"2"`, `"2x"` or `"exampleN"`) and runs the
 * consistency closure on it.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum FkrStatus fkr_example_build(const char *name, struct FkrExample **out);

/**
 * # Safety
 * `ex` must be null or a handle from [`fkr_example_build`], freed once.
 */
void fkr_example_free(struct FkrExample *ex);

/**
 * Number of homomorphisms `G -> H` of the example.
 *
 * # Safety
 * `ex` must be a live handle; `out` must be writable.
 */
enum FkrStatus fkr_example_hom_count(const struct FkrExample *ex, uint64_t *out);

/**
 * Runs every check. Writes the report (text, or JSON lines when `json` is
 * true) to `report` and whether all checks passed to `passed`.
 *
 * # Safety
 * `ex` must be a live handle; `report` and `passed` must be writable.
 */
enum FkrStatus fkr_example_report(const struct FkrExample *ex,
                                  bool json,
                                  char **report,
                                  bool *passed);

/**
 * Deletes `value` from the list of `vertex` (both by label), re-closes and
 * writes the surviving homomorphism count to `solutions_after`.
 *
 * # Safety
 * `ex` must be a live handle; the strings NUL-terminated; `solutions_after`
 * writable.
 */
enum FkrStatus fkr_example_delete(const struct FkrExample *ex,
                                  const char *vertex,
                                  const char *value,
                                  uint64_t *solutions_after);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FKR_CEX_H */
