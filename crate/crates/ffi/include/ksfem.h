#ifndef KSFEM_H
#define KSFEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum KsFieldKind {
  KS_FIELD_KIND_CONSTANT = 0,
  KS_FIELD_KIND_GAUSSIAN = 1,
  KS_FIELD_KIND_COSINE = 2,
} KsFieldKind;

typedef enum KsInvariantMode {
  KS_INVARIANT_MODE_OFF = 0,
  KS_INVARIANT_MODE_WARN = 1,
  KS_INVARIANT_MODE_FAIL = 2,
} KsInvariantMode;

typedef enum KsMotilityKind {
  KS_MOTILITY_KIND_POWER = 0,
  KS_MOTILITY_KIND_POWER_PLUS_FLOOR = 1,
  KS_MOTILITY_KIND_BOUNDED_RATIONAL = 2,
} KsMotilityKind;

// Result code of every fallible call. `KS_STATUS_OK` is zero.
typedef enum KsStatus {
  KS_STATUS_OK = 0,
  KS_STATUS_NULL_POINTER = 1,
  KS_STATUS_INVALID_ARGUMENT = 2,
  KS_STATUS_INVALID_MESH = 3,
  KS_STATUS_PARSE = 4,
  KS_STATUS_IO = 5,
  KS_STATUS_NOT_WEAKLY_ACUTE = 6,
  KS_STATUS_TIMESTEP_CONDITION = 7,
  KS_STATUS_SOLVER = 8,
  KS_STATUS_INVARIANT = 9,
  KS_STATUS_BUFFER_TOO_SMALL = 10,
  KS_STATUS_FINISHED = 11,
  KS_STATUS_PANIC = 12,
  KS_STATUS_INTERNAL = 13,
} KsStatus;

// Opaque triangulation handle.
typedef struct KsMesh KsMesh;

// Opaque simulation handle.
typedef struct KsSimulation KsSimulation;

typedef struct KsAcutenessReport {
  bool is_weakly_acute;
  size_t worst_edge;
  size_t worst_edge_a;
  size_t worst_edge_b;
  double worst_angle_sum;
  double worst_angle_limit;
  double offdiag_max;
  double tol_mat;
} KsAcutenessReport;

// `Φ(s) = scale·s^alpha (+ floor)` or `scale·s^alpha / (1 + s^alpha)`.
typedef struct KsMotility {
  enum KsMotilityKind kind;
  double alpha;
  double scale;
  // Must be zero unless `kind` is `PowerPlusFloor`.
  double floor;
} KsMotility;

// Initial field centred at `(x0, y0)`; constant fields only read `c`.
typedef struct KsField {
  enum KsFieldKind kind;
  double c;
  double a;
  double x0;
  double y0;
  double w;
} KsField;

typedef struct KsSimParams {
  double t_final;
  size_t steps;
  // Relative residual tolerance of the linear solves; 0 selects the default.
  double solver_tol;
  enum KsInvariantMode invariant_mode;
  bool enforce_k_condition;
  bool skip_mesh_check;
  // Target lumped mass of `u_{0h}`; NaN keeps the projected mass.
  double u0_mass;
} KsSimParams;

// One row of diagnostics; fields without a previous step are zero.
typedef struct KsDiagnostics {
  size_t n;
  double t;
  double mass_u;
  double mass_v;
  double min_u;
  double max_u;
  double min_v;
  double max_v;
  double energy_v_residual;
  double psi_h1h_sq;
  double dual_ineq_slack;
  double entropy;
  double entropy_ineq_slack;
  double grad_log_v_sq;
  double weighted_mass_flux;
} KsDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *ks_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ks_version(void);

// Uniform `nx × ny` diagonal-split mesh of `[0, lx] × [0, ly]`.
//
// # Safety
// `out` must be valid for writing one pointer.
enum KsStatus ks_mesh_generate(size_t nx, size_t ny, double lx, double ly, struct KsMesh **out);

// # Safety
// `path` must be a NUL-terminated string and `out` valid for writing one pointer.
enum KsStatus ks_mesh_load(const char *path, struct KsMesh **out);

// # Safety
// `mesh` must come from this library; `path` must be a NUL-terminated string.
enum KsStatus ks_mesh_save(const struct KsMesh *mesh, const char *path);

// # Safety
// `mesh` is null or a live handle from this library, freed at most once.
void ks_mesh_free(struct KsMesh *mesh);

// # Safety
// `mesh` must come from this library; the outputs must be writable.
enum KsStatus ks_mesh_counts(const struct KsMesh *mesh,
                             size_t *num_vertices,
                             size_t *num_triangles);

// Copies interleaved coordinates `x0, y0, x1, y1, …` into `xy`, which
// must hold `2·num_vertices` doubles.
//
// # Safety
// `mesh` must come from this library and `xy` be writable for `len` doubles.
enum KsStatus ks_mesh_vertices(const struct KsMesh *mesh, double *xy, size_t len);

// Copies counter-clockwise vertex triples into `tri`, which must hold
// `3·num_triangles` entries.
//
// # Safety
// `mesh` must come from this library and `tri` be writable for `len` entries.
enum KsStatus ks_mesh_triangles(const struct KsMesh *mesh, size_t *tri, size_t len);

// Weak-acuteness certificate. A mesh that is not weakly acute still
// returns `KS_STATUS_OK`; inspect `is_weakly_acute`.
//
// # Safety
// `mesh` must come from this library and `out` be writable.
enum KsStatus ks_mesh_check_acuteness(const struct KsMesh *mesh, struct KsAcutenessReport *out);

// Projects the initial data onto `mesh` and prepares a simulation. The
// mesh is only read; the simulation keeps its own copy of the operators.
//
// # Safety
// Every pointer must be valid; `mesh` must come from this library.
enum KsStatus ks_simulation_create(const struct KsMesh *mesh,
                                   const struct KsMotility *motility_params,
                                   const struct KsField *u0,
                                   const struct KsField *v0,
                                   const struct KsSimParams *params,
                                   struct KsSimulation **out);

// Advances one step and writes its diagnostics. Returns `KS_STATUS_FINISHED`
// without stepping once `N` steps have been taken.
//
// # Safety
// `sim` must come from this library; `out` is null or writable.
enum KsStatus ks_simulation_step(struct KsSimulation *sim, struct KsDiagnostics *out);

// Diagnostics of the most recent state (step 0 before any step).
//
// # Safety
// `sim` must come from this library and `out` be writable.
enum KsStatus ks_simulation_diagnostics(const struct KsSimulation *sim, struct KsDiagnostics *out);

// Current step index and time.
//
// # Safety
// `sim` must come from this library; the outputs must be writable.
enum KsStatus ks_simulation_time(const struct KsSimulation *sim, size_t *n, double *t);

// Value `2k·max Φ` of the timestep condition and whether it holds.
//
// # Safety
// `sim` must come from this library; the outputs must be writable.
enum KsStatus ks_simulation_k_condition(const struct KsSimulation *sim, double *value, bool *pass);

// Copies the nodal values of `u` into `buf` (`len ≥ num_vertices`).
//
// # Safety
// `sim` must come from this library and `buf` be writable for `len` doubles.
enum KsStatus ks_simulation_get_u(const struct KsSimulation *sim, double *buf, size_t len);

// Copies the nodal values of `v` into `buf` (`len ≥ num_vertices`).
//
// # Safety
// `sim` must come from this library and `buf` be writable for `len` doubles.
enum KsStatus ks_simulation_get_v(const struct KsSimulation *sim, double *buf, size_t len);

// # Safety
// `sim` is null or a live handle from this library, freed at most once.
void ks_simulation_free(struct KsSimulation *sim);

// Runs a config file exactly as `ksfem run` does and stores the process
// exit code (0 ok, 1 invariant or solver failure, 2 config or I/O error,
// 3 timestep condition) in `exit_code`. `outdir` may be null to use the
// directory named in the config.
//
// # Safety
// `config` must be a NUL-terminated string, `outdir` null or one, and
// `exit_code` writable.
enum KsStatus ks_run_config(const char *config, const char *outdir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KSFEM_H */
