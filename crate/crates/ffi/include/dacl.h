#ifndef DACL_H
#define DACL_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DaclMode {
  DACL_MODE_STANDARD = 0,
  DACL_MODE_REVERSE = 1,
  DACL_MODE_SCRAMBLED = 2,
  DACL_MODE_NO_SHUFFLE = 3,
} DaclMode;

typedef enum DaclStatus {
  DACL_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  DACL_STATUS_NULL_ARGUMENT = 1,
  /**
   * A parameter was out of range or a string was not UTF-8.
   */
  DACL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A file could not be read or written.
   */
  DACL_STATUS_IO = 3,
  /**
   * Input data was malformed.
   */
  DACL_STATUS_DATA = 4,
  /**
   * An iterator has no further items.
   */
  DACL_STATUS_END = 5,
  DACL_STATUS_PANIC = 6,
} DaclStatus;

/**
 * Cursor over the batches of a schedule. Keeps the schedule alive.
 */
typedef struct DaclBatchIter DaclBatchIter;

/**
 * A loaded corpus.
 */
typedef struct DaclCorpus DaclCorpus;

/**
 * A trained or imported n-gram language model.
 */
typedef struct DaclModel DaclModel;

/**
 * A ranking of pool sentences, most in-domain first.
 */
typedef struct DaclRanking DaclRanking;

/**
 * A curriculum schedule.
 */
typedef struct DaclSchedule DaclSchedule;

/**
 * One batch. `indices` points into memory owned by the iterator that
 * produced it and stays valid until that iterator is freed.
 */
typedef struct DaclBatch {
  /**
   * 1-based phase.
   */
  size_t phase;
  /**
   * Shard 0 indexes the in-domain corpus, other shards the pool.
   */
  size_t shard;
  size_t bucket;
  const size_t *indices;
  size_t len;
} DaclBatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *dacl_last_error(void);

/**
 * Library version as a static string.
 */
const char *dacl_version(void);

/**
 * Loads a whitespace-tokenized corpus, one sentence per line, dropping
 * sentences longer than `max_len` tokens.
 *
 * # Safety
 * `path` is a NUL-terminated string and `out` is valid for writes.
 */
enum DaclStatus dacl_corpus_load(const char *path, size_t max_len, struct DaclCorpus **out);

/**
 * Builds a corpus from newline-separated text.
 *
 * # Safety
 * `text` is a NUL-terminated string and `out` is valid for writes.
 */
enum DaclStatus dacl_corpus_from_text(const char *text, struct DaclCorpus **out);

/**
 * Number of sentences, or 0 for NULL.
 *
 * # Safety
 * `corpus` is NULL or a live corpus handle.
 */
size_t dacl_corpus_len(const struct DaclCorpus *corpus);

/**
 * # Safety
 * `corpus` is NULL or a handle not yet freed.
 */
void dacl_corpus_free(struct DaclCorpus *corpus);

/**
 * Trains an interpolated modified Kneser-Ney model of the given order.
 *
 * # Safety
 * `corpus` is a live corpus handle and `out` is valid for writes.
 */
enum DaclStatus dacl_model_train(const struct DaclCorpus *corpus,
                                 size_t order,
                                 struct DaclModel **out);

/**
 * # Safety
 * `path` is a NUL-terminated string and `out` is valid for writes.
 */
enum DaclStatus dacl_model_load_arpa(const char *path, struct DaclModel **out);

/**
 * # Safety
 * `model` is a live model handle and `path` a NUL-terminated string.
 */
enum DaclStatus dacl_model_save_arpa(const struct DaclModel *model, const char *path);

/**
 * Cross-entropy of one whitespace-tokenized sentence in bits per word,
 * end of sentence included.
 *
 * # Safety
 * `model` is a live model handle, `sentence` a NUL-terminated string and
 * `bits` valid for writes.
 */
enum DaclStatus dacl_model_cross_entropy(const struct DaclModel *model,
                                         const char *sentence,
                                         double *bits);

/**
 * In-domain perplexity of a whole corpus.
 *
 * # Safety
 * Handles are live and `out` is valid for writes.
 */
enum DaclStatus dacl_model_perplexity(const struct DaclModel *model,
                                      const struct DaclCorpus *corpus,
                                      double *out);

/**
 * # Safety
 * `model` is NULL or a handle not yet freed.
 */
void dacl_model_free(struct DaclModel *model);

/**
 * Ranks `pool` by `H_in(s) - H_gen(s)`. `workers` = 0 uses all cores.
 *
 * # Safety
 * Handles are live and `out` is valid for writes.
 */
enum DaclStatus dacl_moore_lewis(const struct DaclModel *lm_in,
                                 const struct DaclModel *lm_gen,
                                 const struct DaclCorpus *pool,
                                 size_t workers,
                                 struct DaclRanking **out);

/**
 * Greedy cynical selection of `budget` pool sentences with add-`alpha`
 * smoothing.
 *
 * # Safety
 * Handles are live and `out` is valid for writes.
 */
enum DaclStatus dacl_cynical(const struct DaclCorpus *in_domain,
                             const struct DaclCorpus *pool,
                             size_t budget,
                             double alpha,
                             size_t workers,
                             struct DaclRanking **out);

/**
 * # Safety
 * `ranking` is NULL or a live ranking handle.
 */
size_t dacl_ranking_len(const struct DaclRanking *ranking);

/**
 * Sentence index and score at `rank` (0-based).
 *
 * # Safety
 * `ranking` is a live handle; `index` and `score` are valid for writes.
 */
enum DaclStatus dacl_ranking_get(const struct DaclRanking *ranking,
                                 size_t rank,
                                 size_t *index,
                                 double *score);

/**
 * # Safety
 * `ranking` is NULL or a handle not yet freed.
 */
void dacl_ranking_free(struct DaclRanking *ranking);

/**
 * Hellinger distance between the unigram distributions of two corpora over
 * their joint vocabulary.
 *
 * # Safety
 * Handles are live and `out` is valid for writes.
 */
enum DaclStatus dacl_hellinger(const struct DaclCorpus *a, const struct DaclCorpus *b, double *out);

/**
 * Shards the in-domain corpus and the top `cut` of `ranking`, then draws a
 * schedule. `num_phases` = 0 means shards + 20.
 *
 * # Safety
 * Handles are live and `out` is valid for writes.
 */
enum DaclStatus dacl_schedule_new(const struct DaclCorpus *in_domain,
                                  const struct DaclCorpus *pool,
                                  const struct DaclRanking *ranking,
                                  size_t cut,
                                  size_t num_shards,
                                  enum DaclMode mode,
                                  size_t phase_len,
                                  size_t batch_words,
                                  size_t num_phases,
                                  uint64_t seed,
                                  struct DaclSchedule **out);

/**
 * Reads a schedule file, verifying its checksum.
 *
 * # Safety
 * `path` is a NUL-terminated string and `out` is valid for writes.
 */
enum DaclStatus dacl_schedule_load(const char *path, struct DaclSchedule **out);

/**
 * # Safety
 * `schedule` is a live handle and `path` a NUL-terminated string.
 */
enum DaclStatus dacl_schedule_save(const struct DaclSchedule *schedule, const char *path);

/**
 * # Safety
 * `schedule` is NULL or a live handle.
 */
size_t dacl_schedule_num_batches(const struct DaclSchedule *schedule);

/**
 * # Safety
 * `schedule` is NULL or a live handle.
 */
size_t dacl_schedule_num_phases(const struct DaclSchedule *schedule);

/**
 * # Safety
 * `schedule` is NULL or a handle not yet freed.
 */
void dacl_schedule_free(struct DaclSchedule *schedule);

/**
 * Starts iterating from the first batch. The iterator may outlive the
 * schedule handle.
 *
 * # Safety
 * `schedule` is a live handle and `out` is valid for writes.
 */
enum DaclStatus dacl_batch_iter_new(const struct DaclSchedule *schedule,
                                    struct DaclBatchIter **out);

/**
 * Writes the next batch to `batch`, or returns `DACL_STATUS_END`.
 *
 * # Safety
 * `iter` is a live handle and `batch` is valid for writes.
 */
enum DaclStatus dacl_batch_iter_next(struct DaclBatchIter *iter, struct DaclBatch *batch);

/**
 * # Safety
 * `iter` is NULL or a handle not yet freed.
 */
void dacl_batch_iter_free(struct DaclBatchIter *iter);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DACL_H */
