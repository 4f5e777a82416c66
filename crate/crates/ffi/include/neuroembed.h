#ifndef NEUROEMBED_H
#define NEUROEMBED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NeStatus {
  NE_STATUS_OK = 0,
  NE_STATUS_NULL_ARGUMENT = 1,
  NE_STATUS_INVALID_UTF8 = 2,
  NE_STATUS_INVALID_INPUT = 3,
  NE_STATUS_IO = 4,
  NE_STATUS_PARSE = 5,
  NE_STATUS_FORMAT = 6,
  NE_STATUS_CORRUPT = 7,
  NE_STATUS_SHAPE = 8,
  NE_STATUS_INTEGRITY = 9,
  NE_STATUS_PANIC = 10,
} NeStatus;

// A vector index loaded from its binary file.
typedef struct NeIndex NeIndex;

// A loaded snapshot directory.
typedef struct NeSnapshot NeSnapshot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library from the same thread.
const char *ne_last_error(void);

// Library version as a static string.
const char *ne_version(void);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void ne_string_free(char *s);

// Loads a snapshot directory into `*out`.
//
// # Safety
// `dir` must be a NUL-terminated string and `out` a valid pointer.
enum NeStatus ne_snapshot_open(const char *dir, struct NeSnapshot **out);

// # Safety
// `snap` must be null or a handle from `ne_snapshot_open`, freed once.
void ne_snapshot_free(struct NeSnapshot *snap);

// Number of cohorts in the snapshot catalog; 0 for a null handle.
//
// # Safety
// `snap` must be null or a live handle.
size_t ne_snapshot_len(const struct NeSnapshot *snap);

// Top-`k` cohorts for a free-text query, as the JSON body the HTTP query
// endpoint returns.
//
// # Safety
// `snap` must be a live handle, `query_text` a NUL-terminated string and
// `out_json` a valid pointer.
enum NeStatus ne_snapshot_query(const struct NeSnapshot *snap,
                                const char *query_text,
                                size_t k,
                                char **out_json);

// Catalog, index, model and augmentation summary as JSON.
//
// # Safety
// `snap` must be a live handle and `out_json` a valid pointer.
enum NeStatus ne_snapshot_stats(const struct NeSnapshot *snap, char **out_json);

// Loads a binary index file into `*out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum NeStatus ne_index_open(const char *path, struct NeIndex **out);

// # Safety
// `index` must be null or a handle from `ne_index_open`, freed once.
void ne_index_free(struct NeIndex *index);

// # Safety
// `index` must be null or a live handle.
size_t ne_index_len(const struct NeIndex *index);

// # Safety
// `index` must be null or a live handle.
size_t ne_index_dim(const struct NeIndex *index);

// Cosine top-`k` for a raw query vector of length `dim`, as a JSON array
// of `{accession, similarity, rank}`.
//
// # Safety
// `index` must be a live handle, `query_vec` must point to `dim` doubles
// and `out_json` must be a valid pointer.
enum NeStatus ne_index_search(const struct NeIndex *index,
                              const double *query_vec,
                              size_t dim,
                              size_t k,
                              char **out_json);

// Character-level edit distance between two UTF-8 strings.
//
// # Safety
// `a` and `b` must be NUL-terminated strings and `out` a valid pointer.
enum NeStatus ne_levenshtein(const char *a, const char *b, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEUROEMBED_H */
