/*
 * ladiar: local/global attractor speaker diarization toolkit, C interface.
 *
 * All objects are opaque handles created by ladiar_*_create / _read / _load
 * functions and released with the matching _destroy. Every fallible call
 * returns a ladiar_status; on failure ladiar_last_error() describes the
 * problem (thread-local, valid until the next failing call on that thread).
 * Strings returned through char** are owned by the caller and released with
 * ladiar_string_free.
 */
#ifndef LADIAR_H_
#define LADIAR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LADIAR_BUILDING_LIBRARY)
#    define LADIAR_API __declspec(dllexport)
#  else
#    define LADIAR_API __declspec(dllimport)
#  endif
#else
#  define LADIAR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ladiar_status {
  LADIAR_OK = 0,
  LADIAR_ERR_INVALID_ARGUMENT = 1,
  LADIAR_ERR_DIMENSION = 2,
  LADIAR_ERR_IO = 3,
  LADIAR_ERR_PARSE = 4,
  LADIAR_ERR_INFEASIBLE = 5,
  LADIAR_ERR_INTERNAL = 6
} ladiar_status;

LADIAR_API const char* ladiar_version(void);
LADIAR_API const char* ladiar_last_error(void);
LADIAR_API const char* ladiar_status_name(ladiar_status status);
LADIAR_API void ladiar_string_free(char* s);

/* ---- matrices --------------------------------------------------------- */

typedef struct ladiar_matrix ladiar_matrix;

/* `data` is row-major rows*cols; may be NULL for a zero matrix. */
LADIAR_API ladiar_status ladiar_matrix_create(size_t rows, size_t cols, const double* data,
                                              ladiar_matrix** out);
/* Text ("EMB v1") or binary ("EMB1") matrix file, detected automatically. */
LADIAR_API ladiar_status ladiar_matrix_read(const char* path, ladiar_matrix** out);
LADIAR_API ladiar_status ladiar_matrix_write(const ladiar_matrix* m, const char* path,
                                             int binary);
LADIAR_API size_t ladiar_matrix_rows(const ladiar_matrix* m);
LADIAR_API size_t ladiar_matrix_cols(const ladiar_matrix* m);
LADIAR_API double ladiar_matrix_get(const ladiar_matrix* m, size_t row, size_t col);
LADIAR_API void ladiar_matrix_destroy(ladiar_matrix* m);

/* ---- attractor provider (file bundle) --------------------------------- */

typedef struct ladiar_provider ladiar_provider;

LADIAR_API ladiar_status ladiar_provider_load(const char* manifest_path, ladiar_provider** out);
LADIAR_API double ladiar_provider_frame_duration(const ladiar_provider* p);
LADIAR_API size_t ladiar_provider_subsequence_frames(const ladiar_provider* p);
/* Embedding path named by the manifest, or NULL. Owned by the provider. */
LADIAR_API const char* ladiar_provider_embeddings_path(const ladiar_provider* p);
LADIAR_API size_t ladiar_provider_global_count(const ladiar_provider* p);
LADIAR_API void ladiar_provider_destroy(ladiar_provider* p);

/* ---- inference -------------------------------------------------------- */

typedef enum ladiar_mode {
  LADIAR_MODE_GLOBAL = 0,
  LADIAR_MODE_LOCAL = 1,
  LADIAR_MODE_SWITCH = 2
} ladiar_mode;

typedef enum ladiar_branch { LADIAR_BRANCH_GLOBAL = 0, LADIAR_BRANCH_LOCAL = 1 } ladiar_branch;

typedef struct ladiar_pipeline_options {
  ladiar_mode mode;
  /* Subsequence length in seconds; <= 0 uses the provider's partition. */
  double subseq_sec;
  double margin;
  int switch_threshold;
  double activity_threshold;
  uint64_t seed;
} ladiar_pipeline_options;

LADIAR_API void ladiar_pipeline_options_default(ladiar_pipeline_options* opts);

typedef struct ladiar_result ladiar_result;

/* `frame_duration` <= 0 takes the provider's value. */
LADIAR_API ladiar_status ladiar_diarize(const ladiar_matrix* embeddings, double frame_duration,
                                        const ladiar_provider* provider,
                                        const ladiar_pipeline_options* opts, ladiar_result** out);
LADIAR_API int ladiar_result_speaker_count(const ladiar_result* r);
LADIAR_API ladiar_branch ladiar_result_branch(const ladiar_result* r);
LADIAR_API size_t ladiar_result_segment_count(const ladiar_result* r);
LADIAR_API ladiar_status ladiar_result_segment(const ladiar_result* r, size_t index,
                                               int* speaker, double* onset, double* offset);
/* Posterior matrix (T x speakers); returns a new handle. */
LADIAR_API ladiar_status ladiar_result_posteriors(const ladiar_result* r, ladiar_matrix** out);
LADIAR_API ladiar_status ladiar_result_write_rttm(const ladiar_result* r, const char* file_id,
                                                  const char* path);
LADIAR_API void ladiar_result_destroy(ladiar_result* r);

/* ---- simulation ------------------------------------------------------- */

typedef struct ladiar_simulation_options {
  int speakers;
  double duration_sec;
  double frame_duration;
  /* Mean silence in seconds; <= 0 picks the default for the speaker count. */
  double beta;
  double utt_min;
  double utt_max;
  double sigma;
  double sigma_attr;
  size_t dim;
  double kappa;
  uint64_t seed;
  /* Maximum attractors per subsequence and globally; <= 0 means no cap. */
  int cap;
  double subseq_sec;
  int binary;
  const char* file_id;
} ladiar_simulation_options;

LADIAR_API void ladiar_simulation_options_default(ladiar_simulation_options* opts);

/* Writes ref.rttm, embeddings, provider.json (+ matrices) into out_dir and,
 * if summary_json is non-NULL, a JSON summary of the run. */
LADIAR_API ladiar_status ladiar_simulate(const ladiar_simulation_options* opts,
                                         const char* out_dir, char** summary_json);

/* ---- verification and scoring ---------------------------------------- */

/* Speaker counting over a pool (rows = converted vectors). `groups` gives
 * the subsequence of every row and may be NULL (all rows independent).
 * Result: raw/modified spectra and counts as JSON. */
LADIAR_API ladiar_status ladiar_count_json(const ladiar_matrix* pool, const int* groups,
                                           size_t n_groups, double margin, char** json);
/* Same, over the converted vectors of a provider's subsequences. */
LADIAR_API ladiar_status ladiar_provider_count_json(const ladiar_provider* provider,
                                                    double margin, char** json);

typedef struct ladiar_loss_inputs {
  const ladiar_matrix* posteriors;  /* T x S, required */
  const ladiar_matrix* labels;      /* T x S binary, required */
  const double* existence;          /* S+1 probabilities, or NULL */
  size_t n_existence;
  const ladiar_matrix* pool;        /* rows = converted vectors, or NULL */
  const int* pool_labels;           /* speaker per pool row */
  size_t n_pool_labels;
  double margin;
  double alpha;
  double gamma;
  size_t subseq_frames;             /* 0 = single subsequence */
  int exhaustive;                   /* permutation search mode for L_diar */
} ladiar_loss_inputs;

LADIAR_API void ladiar_loss_inputs_default(ladiar_loss_inputs* in);
LADIAR_API ladiar_status ladiar_losses_json(const ladiar_loss_inputs* in, char** json);

LADIAR_API ladiar_status ladiar_score_json(const char* ref_rttm, const char* hyp_rttm,
                                           double collar, int exclude_overlap, char** json);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif  /* LADIAR_H_ */
