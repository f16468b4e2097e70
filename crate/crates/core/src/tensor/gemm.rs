use rayon::prelude::*;

use super::Real;

/// Rows of `C` handled per parallel task.
const ROW_BLOCK: usize = 256;
/// Below this many multiply-adds the product runs on the calling thread.
const PARALLEL_WORK: usize = 1 << 22;

/// `C[m×n] = op(A)[m×k] · op(B)[k×n] + beta · C`, all row-major.
///
/// `A` is stored `[m×k]`, or `[k×m]` when `trans_a`; likewise `B` is `[k×n]`
/// or `[n×k]` when `trans_b`. Transposition is expressed through strides,
/// never materialized.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Real>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    trans_a: bool,
    b: &[T],
    trans_b: bool,
    beta: T,
    c: &mut [T],
) {
    assert_eq!(a.len(), m * k, "gemm: A has wrong length");
    assert_eq!(b.len(), k * n, "gemm: B has wrong length");
    assert_eq!(c.len(), m * n, "gemm: C has wrong length");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|x| *x = *x * beta);
        return;
    }
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };

    let serial = rayon::current_num_threads() <= 1 || m * k * n < PARALLEL_WORK || m < 2 * ROW_BLOCK;
    if serial {
        // SAFETY: lengths were checked above and the strides describe the
        // declared layouts.
        unsafe {
            T::gemm_raw(
                m, k, n, T::one(), a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta,
                c.as_mut_ptr(), n as isize, 1,
            );
        }
        return;
    }
    c.par_chunks_mut(ROW_BLOCK * n)
        .enumerate()
        .for_each(|(blk, chunk)| {
            let r0 = blk * ROW_BLOCK;
            let rows = chunk.len() / n;
            // SAFETY: the A sub-block starts at row r0 of op(A) and spans
            // `rows` rows, which stays within `a`; chunks of C are disjoint.
            unsafe {
                T::gemm_raw(
                    rows, k, n, T::one(),
                    a.as_ptr().offset(r0 as isize * rsa), rsa, csa,
                    b.as_ptr(), rsb, csb, beta,
                    chunk.as_mut_ptr(), n as isize, 1,
                );
            }
        });
}
