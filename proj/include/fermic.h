/* C interface to the Fermi-curve analysis library.
 *
 * A model is created from a JSON configuration file and driven through the
 * per-command run functions, which write CSV (and per-handle JSON documents)
 * into an output directory. All functions return a fermi_status; on any
 * non-OK status fermi_last_error() returns a human-readable message for the
 * calling thread.
 */
#ifndef FERMIC_H
#define FERMIC_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct fermi_model fermi_model;

typedef enum fermi_status {
    FERMI_OK = 0,
    FERMI_ERR_CONFIG = 1,       /* malformed or constraint-violating config */
    FERMI_ERR_REGION = 2,       /* evaluation outside the valid region */
    FERMI_ERR_CERTIFICATE = 3,  /* a norm certificate failed */
    FERMI_ERR_NUMERIC = 4,      /* singular solve / diverging iteration */
    FERMI_ERR_HYPOTHESIS = 5,   /* quantitative-lemma hypotheses out of range */
    FERMI_ERR_ORACLE = 6,       /* independent cross-checks disagree */
    FERMI_ERR_SMALLNESS = 7,    /* magnetic smallness check failed */
    FERMI_ERR_VERIFY_FAILED = 8,/* command ran but an invariant did not hold */
    FERMI_ERR_IO = 9,           /* file system failure */
    FERMI_ERR_INTERNAL = 10     /* unexpected error */
} fermi_status;

/* Parse and validate a configuration file; on success *out_model owns the
 * model and must be released with fermi_model_destroy. */
fermi_status fermi_model_create(const char* config_path, fermi_model** out_model);
void fermi_model_destroy(fermi_model* model);

/* Message for the last non-OK status on this thread ("" when none). */
const char* fermi_last_error(void);

/* Override the worker count / RNG seed from the configuration file. */
fermi_status fermi_set_threads(fermi_model* model, int threads);
fermi_status fermi_set_seed(fermi_model* model, unsigned long long seed);

/* Commands. Each writes its output files into out_dir (created if absent).
 * FERMI_ERR_VERIFY_FAILED means the command completed but some checked
 * invariant did not hold (details in the emitted files). */
fermi_status fermi_run_freecurve(fermi_model* model, const char* out_dir);
fermi_status fermi_run_trace(fermi_model* model, const char* out_dir);
fermi_status fermi_run_handles(fermi_model* model, const char* out_dir);
fermi_status fermi_run_verify(fermi_model* model, const char* out_dir);
fermi_status fermi_run_spectrum(fermi_model* model, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FERMIC_H */
