/*
 * deinterleave.h - C interface to the resolver-queue deinterleaving toolkit.
 *
 * All objects are opaque handles created by *_create/_generate/_load calls
 * and released with the matching *_free. Every fallible call returns a
 * dil_status; on failure dil_last_error() describes the problem (the message
 * is thread-local and valid until the next failing call on that thread).
 */
#ifndef DEINTERLEAVE_H
#define DEINTERLEAVE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define DIL_API __declspec(dllexport)
#else
#  define DIL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dil_status {
  DIL_OK = 0,
  DIL_ERR_INVALID_ARGUMENT = 1,
  DIL_ERR_MALFORMED_MODEL = 2,
  DIL_ERR_STATE_OVERFLOW = 3,
  DIL_ERR_ZERO_PROBABILITY = 4,
  DIL_ERR_DIVERGENCE = 5,
  DIL_ERR_PARSE = 6,
  DIL_ERR_IO = 7,
  DIL_ERR_INTERNAL = 8
} dil_status;

typedef enum dil_turn_mode { DIL_TURN_SHARES = 0, DIL_TURN_MATRIX = 1 } dil_turn_mode;
typedef enum dil_scale { DIL_SCALE_DESK = 0, DIL_SCALE_FULL = 1 } dil_scale;
typedef enum dil_cell { DIL_CELL_SIMPLE = 0, DIL_CELL_LSTM = 1 } dil_cell;

typedef struct dil_scenario dil_scenario; /* users' HsMMs + turn scheduler */
typedef struct dil_dataset dil_dataset;   /* labeled interleaved sequence */
typedef struct dil_rnn dil_rnn;           /* trained sequence labeler */

typedef struct dil_rnn_config {
  dil_cell cell;
  uint32_t hidden_size;
  uint32_t bptt_window;
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  uint32_t max_epochs;
  uint32_t patience;
  double init_scale;
  double forget_bias;
} dil_rnn_config;

typedef struct dil_experiment_options {
  uint32_t realizations;   /* 0 selects the default (5) */
  uint32_t max_epochs;     /* 0 keeps the rnn default */
  uint32_t threads;        /* 0: hardware concurrency */
  uint32_t case_mask;      /* bit c-1 selects case c; 0 selects all seven */
  int record_timing;       /* nonzero: write wall-clock into report.json */
  int verbose;             /* nonzero: progress lines on stderr */
} dil_experiment_options;

DIL_API const char* dil_version(void);
DIL_API const char* dil_last_error(void);
DIL_API const char* dil_status_string(dil_status status);

/* Child seed for job (tag, index) of a master seed (splitmix64 mixing). */
DIL_API uint64_t dil_derive_seed(uint64_t master, uint64_t tag, uint64_t index);

/* Scenarios */
DIL_API dil_status dil_scenario_generate_case(int case_id, dil_turn_mode mode, uint32_t n, uint32_t a,
                                              uint32_t q, uint64_t seed, dil_scenario** out);
DIL_API dil_status dil_scenario_generate_toy(uint64_t seed, dil_scenario** out);
DIL_API dil_status dil_scenario_load(const char* path, dil_scenario** out);
DIL_API dil_status dil_scenario_save(const dil_scenario* scenario, const char* path);
DIL_API dil_status dil_scenario_dims(const dil_scenario* scenario, uint32_t* m, uint32_t* n, uint32_t* q);
DIL_API void dil_scenario_free(dil_scenario* scenario);

/* Datasets */
DIL_API dil_status dil_dataset_generate(const dil_scenario* scenario, uint64_t length, uint64_t seed,
                                        dil_dataset** out);
DIL_API dil_status dil_dataset_load(const char* path, dil_dataset** out);
DIL_API dil_status dil_dataset_save(const dil_dataset* dataset, const char* path);
DIL_API size_t dil_dataset_length(const dil_dataset* dataset);
/* Copies up to `capacity` entries; returns DIL_ERR_INVALID_ARGUMENT if too small. */
DIL_API dil_status dil_dataset_users(const dil_dataset* dataset, uint32_t* users, size_t capacity);
DIL_API dil_status dil_dataset_requests(const dil_dataset* dataset, uint32_t* requests, size_t capacity);
/* Replaces page/duration columns with '-' on save. */
DIL_API dil_status dil_dataset_withhold_hidden(dil_dataset* dataset);
DIL_API void dil_dataset_free(dil_dataset* dataset);

DIL_API dil_status dil_accuracy(const uint32_t* truth, const uint32_t* pred, size_t length, double* out);

/* Exact decoding on the augmented HMM. `state_limit` 0 selects 100000.
 * `decoded` receives the dataset with users/pages/durations from the path. */
DIL_API dil_status dil_viterbi_decode(const dil_scenario* scenario, const dil_dataset* observed,
                                      uint64_t state_limit, dil_dataset** decoded, double* log_prob);
DIL_API dil_status dil_forward_loglik(const dil_scenario* scenario, const dil_dataset* observed,
                                      uint64_t state_limit, double* log_prob);
DIL_API dil_status dil_ahmm_state_count(const dil_scenario* scenario, uint64_t* count);

/* Recurrent labeler */
DIL_API void dil_rnn_config_default(dil_rnn_config* config);
DIL_API dil_status dil_rnn_train(const dil_dataset* train, const dil_dataset* valid, const dil_rnn_config* config,
                                 uint64_t seed, dil_rnn** out, double* best_valid_accuracy);
/* `predicted` carries the predicted users; hidden columns are withheld. */
DIL_API dil_status dil_rnn_predict(const dil_rnn* model, const dil_dataset* observed, dil_dataset** predicted);
DIL_API dil_status dil_rnn_save(const dil_rnn* model, const char* path);
DIL_API dil_status dil_rnn_load(const char* path, dil_rnn** out);
DIL_API void dil_rnn_free(dil_rnn* model);

/* Table reproduction; writes report.json and report.txt into out_dir. */
DIL_API void dil_experiment_options_default(dil_experiment_options* options);
DIL_API dil_status dil_reproduce_toy(uint64_t seed, const dil_experiment_options* options, const char* out_dir);
DIL_API dil_status dil_reproduce_cases(dil_turn_mode mode, dil_scale scale, uint64_t seed,
                                       const dil_experiment_options* options, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* DEINTERLEAVE_H */
