#ifndef XTL_H
#define XTL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum XtlStatus {
  XTL_STATUS_OK = 0,
  XTL_STATUS_NULL_ARGUMENT = 1,
  XTL_STATUS_MALFORMED_XML = 2,
  XTL_STATUS_BAD_TEMPLATE = 3,
  XTL_STATUS_BAD_QUERY = 4,
  XTL_STATUS_UNSATISFIED = 5,
  XTL_STATUS_RECURSION_LIMIT = 6,
  XTL_STATUS_NOT_SERIALIZABLE = 7,
  XTL_STATUS_INTERIOR_NUL = 8,
  XTL_STATUS_PANIC = 9,
} XtlStatus;

// A parsed XML document.
typedef struct XtlDocument XtlDocument;

// A repository snapshot built from a document.
typedef struct XtlRepository XtlRepository;

// A parsed template, usable both for expansion and as a schema.
typedef struct XtlSchema XtlSchema;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *xtl_last_error(void);

// Library version as a static NUL-terminated string.
const char *xtl_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void xtl_string_free(char *s);

// Parses XTL source of `len` bytes into a schema handle.
//
// # Safety
// `src` must point to `len` readable bytes; `out` must be writable.
enum XtlStatus xtl_schema_parse(const uint8_t *src, size_t len, struct XtlSchema **out);

// # Safety
// `schema` must come from `xtl_schema_parse` and not have been freed.
void xtl_schema_free(struct XtlSchema *schema);

// Writes the canonical XTL serialization of `schema` to `*out`.
//
// # Safety
// `schema` must be a live handle; `out` must be writable.
enum XtlStatus xtl_schema_normalized(const struct XtlSchema *schema, char **out);

// Parses an XML document of `len` bytes.
//
// # Safety
// `src` must point to `len` readable bytes; `out` must be writable.
enum XtlStatus xtl_document_parse(const uint8_t *src,
                                  size_t len,
                                  bool preserve_space,
                                  struct XtlDocument **out);

// # Safety
// `doc` must come from `xtl_document_parse` and not have been freed.
void xtl_document_free(struct XtlDocument *doc);

// Builds a repository from a document. The document handle stays owned by
// the caller.
//
// # Safety
// `doc` must be a live handle; `out` must be writable.
enum XtlStatus xtl_repository_from_document(const struct XtlDocument *doc,
                                            struct XtlRepository **out);

// # Safety
// `repo` must come from `xtl_repository_from_document` and not have been
// freed.
void xtl_repository_free(struct XtlRepository *repo);

// Sets `*valid` to whether `doc` belongs to the language of `schema`.
//
// # Safety
// Handles must be live; `valid` must be writable.
enum XtlStatus xtl_validate(const struct XtlSchema *schema,
                            const struct XtlDocument *doc,
                            bool *valid);

// Like `xtl_validate`, and also writes the human-readable report.
//
// # Safety
// Handles must be live; `valid` and `report` must be writable.
enum XtlStatus xtl_validate_report(const struct XtlSchema *schema,
                                   const struct XtlDocument *doc,
                                   bool *valid,
                                   char **report);

// Expands `schema` against `repo` and writes the serialized result. With
// `strict`, a slot whose query selects nothing fails the call instead of
// being staged. `staged` may be NULL; otherwise it receives the number of
// staged slots.
//
// # Safety
// Handles must be live; `out` must be writable.
enum XtlStatus xtl_expand(const struct XtlSchema *schema,
                          const struct XtlRepository *repo,
                          bool strict,
                          char **out,
                          size_t *staged);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XTL_H */
