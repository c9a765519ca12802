/* HLS-style C for kernel 'matvec'. */
/* config: replication=2 packing=4 double_buffered=1 tile_elements=1024 */
#include <math.h>

/* Returns 0, or 1 when a gather index is non-integral or out of range. */
int matvec(const double *A, const double *B, double *y) {
  int err = 0;

  /* y: free [i], reduce [j] */
  {
    /* pragma: unroll factor=2 */
    for (long ix_i = 0; ix_i < 2; ++ix_i) {
      double acc = 0.0;
      /* pragma: pipeline II=1 */
      for (long ix_j = 0; ix_j < 2; ++ix_j) {
        acc = acc + (A[(ix_i) * 2 + ix_j] * B[ix_j]);
      }
      y[ix_i] = acc;
    }
  }
  return err;
}
