#ifndef PSMILU_H
#define PSMILU_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum {
  PSMILU_STATUS_OK = 0,
  PSMILU_STATUS_NULL_POINTER = 1,
  PSMILU_STATUS_INVALID_ARGUMENT = 2,
  PSMILU_STATUS_DIMENSION_MISMATCH = 3,
  PSMILU_STATUS_FACTORIZATION_FAILED = 4,
  PSMILU_STATUS_NOT_CONVERGED = 5,
  PSMILU_STATUS_IO = 6,
  PSMILU_STATUS_PARSE = 7,
  PSMILU_STATUS_PANIC = 8,
} PsmiluStatus;

/**
 * Opaque sparse matrix handle.
 */
typedef struct PsmiluMatrix PsmiluMatrix;

/**
 * Opaque preconditioner handle.
 */
typedef struct PsmiluPrec PsmiluPrec;

/**
 * Factorization parameters. Obtain defaults with [`psmilu_options_default`].
 */
typedef struct {
  double tau_l;
  double tau_u;
  double tau_d;
  double tau_kappa;
  double alpha_l;
  double alpha_u;
  double rho;
  double c_d;
  double c_h;
  /**
   * Reference size for the dense switch; 0 means the matrix size.
   */
  size_t n_ref;
  /**
   * Nonzero selects the H-version correction as printed in the driver
   * pseudocode instead of the modified formula.
   */
  int h_algorithm1;
} PsmiluOptions;

/**
 * Output of [`psmilu_gmres`].
 */
typedef struct {
  size_t iterations;
  size_t restarts;
  double final_relres;
  int converged;
} PsmiluSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next `psmilu_*` call on the same thread.
 */
const char *psmilu_last_error(void);

/**
 * Fills `out` with the default options.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `PsmiluOptions`.
 */
PsmiluStatus psmilu_options_default(PsmiluOptions *out);

/**
 * Builds a matrix from 0-based compressed sparse row arrays, which are
 * copied. `row_start` has `n_rows + 1` entries; `col_ind` and `values`
 * have `row_start[n_rows]` entries.
 *
 * # Safety
 * The arrays must be readable for the stated lengths and `out` writable.
 */
PsmiluStatus psmilu_matrix_from_csr(size_t n_rows,
                                    size_t n_cols,
                                    const size_t *row_start,
                                    const size_t *col_ind,
                                    const double *values,
                                    PsmiluMatrix **out);

/**
 * Reads a Matrix Market coordinate file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` writable.
 */
PsmiluStatus psmilu_matrix_read_mm(const char *path, PsmiluMatrix **out);

/**
 * Releases a matrix. Null is ignored.
 *
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void psmilu_matrix_free(PsmiluMatrix *m);

/**
 * Reports the shape and number of stored entries. Any output may be null.
 *
 * # Safety
 * `m` must be a valid handle; non-null outputs must be writable.
 */
PsmiluStatus psmilu_matrix_shape(const PsmiluMatrix *m,
                                 size_t *n_rows,
                                 size_t *n_cols,
                                 size_t *nnz);

/**
 * `y = A x`; `x` has `n_cols` entries and `y` has `n_rows`.
 *
 * # Safety
 * `x` and `y` must be valid for the matrix dimensions.
 */
PsmiluStatus psmilu_matvec(const PsmiluMatrix *m, const double *x, double *y);

/**
 * Computes the multilevel preconditioner. `sym_block` is the size of the
 * leading symmetric block (0 for none). `opts` may be null for defaults.
 *
 * # Safety
 * `m` must be a valid handle, `opts` null or valid, `out` writable.
 */
PsmiluStatus psmilu_factor(const PsmiluMatrix *m,
                           size_t sym_block,
                           const PsmiluOptions *opts,
                           PsmiluPrec **out);

/**
 * Releases a preconditioner. Null is ignored.
 *
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void psmilu_prec_free(PsmiluPrec *p);

/**
 * Reports the size, level count, final dense block size and fill ratio.
 * Any output may be null.
 *
 * # Safety
 * `p` must be a valid handle; non-null outputs must be writable.
 */
PsmiluStatus psmilu_prec_info(const PsmiluPrec *p,
                              size_t *n,
                              size_t *levels,
                              size_t *dense_size,
                              double *fill_ratio);

/**
 * `x = M^{-1} b` for vectors of length `n`, which must match the
 * preconditioner size.
 *
 * # Safety
 * `b` and `x` must be valid for `n` entries.
 */
PsmiluStatus psmilu_prec_apply(const PsmiluPrec *p, size_t n, const double *b, double *x);

/**
 * Writes the preconditioner to a binary file.
 *
 * # Safety
 * `p` must be a valid handle and `path` a nul-terminated string.
 */
PsmiluStatus psmilu_prec_save(const PsmiluPrec *p, const char *path);

/**
 * Reads a preconditioner written by [`psmilu_prec_save`].
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` writable.
 */
PsmiluStatus psmilu_prec_load(const char *path, PsmiluPrec **out);

/**
 * Solves `A x = b` with restarted GMRES, right-preconditioned by `p`
 * (null for none). `x` receives the final iterate even when the solve
 * does not converge, in which case `PSMILU_STATUS_NOT_CONVERGED` is
 * returned. `info` may be null.
 *
 * # Safety
 * Handles must be valid or null as documented; `b` and `x` must hold
 * `n_rows` entries; `info` must be null or writable.
 */
PsmiluStatus psmilu_gmres(const PsmiluMatrix *m,
                          const PsmiluPrec *p,
                          const double *b,
                          double *x,
                          size_t restart,
                          double rtol,
                          size_t maxit,
                          PsmiluSolveInfo *info);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSMILU_H */
