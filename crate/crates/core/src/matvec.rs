//! Matrix-vector products over every coupling storage.
//!
//! Dense rows are split into contiguous ranges, CSR rows into ranges of
//! roughly equal nonzero count, and procedural matrices are swept tile by
//! tile following a [`BlockPlan`]. Every output entry is produced by exactly
//! one worker with a fixed summation order, so results are bitwise identical
//! for any worker count.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CouplingMatrix, Storage};

/// Execution knobs for products. `workers` threads are spawned per call when
/// greater than one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatvecConfig {
    pub workers: usize,
    pub block_size: usize,
}

impl Default for MatvecConfig {
    fn default() -> Self {
        MatvecConfig {
            workers: 1,
            block_size: 1024,
        }
    }
}

impl MatvecConfig {
    pub fn new(workers: usize, block_size: usize) -> Result<Self> {
        if workers == 0 || block_size == 0 {
            return Err(Error::InvalidParameter(
                "workers and block_size must be at least 1".into(),
            ));
        }
        Ok(MatvecConfig { workers, block_size })
    }
}

/// One `b x b` (or smaller, at the edges) tile of the matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tile {
    pub row_block: usize,
    pub col_block: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

/// Assignment of matrix tiles to workers.
///
/// Whole row blocks go to one worker, so each worker can accumulate the
/// partial products of a row block in column-block order without any
/// cross-worker reduction.
#[derive(Clone, Debug)]
pub struct BlockPlan {
    n: usize,
    block: usize,
    workers: usize,
    // row-block range per worker
    ranges: Vec<Range<usize>>,
}

impl BlockPlan {
    pub fn new(n: usize, block: usize, workers: usize) -> Result<Self> {
        if block == 0 || workers == 0 {
            return Err(Error::InvalidParameter(
                "block size and worker count must be at least 1".into(),
            ));
        }
        let row_blocks = n.div_ceil(block);
        let ranges = (0..workers)
            .map(|w| (w * row_blocks / workers)..((w + 1) * row_blocks / workers))
            .collect();
        Ok(BlockPlan {
            n,
            block,
            workers,
            ranges,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn num_blocks(&self) -> usize {
        self.n.div_ceil(self.block)
    }

    fn span(&self, b: usize) -> Range<usize> {
        (b * self.block)..((b + 1) * self.block).min(self.n)
    }

    /// Rows owned by `worker`.
    pub fn rows_of(&self, worker: usize) -> Range<usize> {
        let r = &self.ranges[worker];
        (r.start * self.block).min(self.n)..(r.end * self.block).min(self.n)
    }

    /// Tiles of `worker`, sorted by `(row_block, col_block)`.
    pub fn tiles(&self, worker: usize) -> Vec<Tile> {
        let nb = self.num_blocks();
        self.ranges[worker]
            .clone()
            .flat_map(|rb| (0..nb).map(move |cb| (rb, cb)))
            .map(|(rb, cb)| Tile {
                row_block: rb,
                col_block: cb,
                rows: self.span(rb),
                cols: self.span(cb),
            })
            .collect()
    }
}

#[inline(always)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `(row . a, row . b)` in one pass over `row`; each result is bitwise
/// equal to [`dot`].
#[inline(always)]
fn dot2(row: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
    debug_assert!(row.len() == a.len() && row.len() == b.len());
    let mut acc_a = [0.0f64; 8];
    let mut acc_b = [0.0f64; 8];
    let cr = row.chunks_exact(8);
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (rr, ra, rb) = (cr.remainder(), ca.remainder(), cb.remainder());
    for ((r, x), y) in cr.zip(ca).zip(cb) {
        for l in 0..8 {
            acc_a[l] += r[l] * x[l];
            acc_b[l] += r[l] * y[l];
        }
    }
    let fold = |acc: &[f64; 8]| ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    let (mut sa, mut sb) = (fold(&acc_a), fold(&acc_b));
    for ((r, x), y) in rr.iter().zip(ra).zip(rb) {
        sa += r * x;
        sb += r * y;
    }
    (sa, sb)
}

/// `J v` with the default configuration.
pub fn matvec(j: &CouplingMatrix, v: &[f64]) -> Result<Vec<f64>> {
    matvec_with(j, v, &MatvecConfig::default())
}

pub fn matvec_with(j: &CouplingMatrix, v: &[f64], cfg: &MatvecConfig) -> Result<Vec<f64>> {
    let mut y = vec![0.0; j.n()];
    apply_into(j, &[v], &mut [&mut y], cfg)?;
    Ok(y)
}

/// `(J a, J b)` in a single sweep over the matrix.
pub fn matvec_pair_with(j: &CouplingMatrix, a: &[f64], b: &[f64], cfg: &MatvecConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ya = vec![0.0; j.n()];
    let mut yb = vec![0.0; j.n()];
    apply_into(j, &[a, b], &mut [&mut ya, &mut yb], cfg)?;
    Ok((ya, yb))
}

/// `(J x, -1/2 x^T J x)` from one product.
pub fn operator_energy(j: &CouplingMatrix, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    operator_energy_with(j, x, &MatvecConfig::default())
}

pub fn operator_energy_with(j: &CouplingMatrix, x: &[f64], cfg: &MatvecConfig) -> Result<(Vec<f64>, f64)> {
    let jx = matvec_with(j, x, cfg)?;
    let e = -0.5 * dot(x, &jx);
    Ok((jx, e))
}

/// Computes `outputs[k] = J inputs[k]` for every `k` in one sweep over the
/// matrix, using the storage-native kernel.
pub fn apply_into(j: &CouplingMatrix, inputs: &[&[f64]], outputs: &mut [&mut [f64]], cfg: &MatvecConfig) -> Result<()> {
    check_shapes(j.n(), inputs, outputs)?;
    if cfg.workers == 0 || cfg.block_size == 0 {
        return Err(Error::InvalidParameter(
            "workers and block_size must be at least 1".into(),
        ));
    }
    apply_native(j, inputs, outputs, cfg);
    Ok(())
}

/// `J v` following `plan`: each worker materializes its tiles one at a
/// time, multiplies, and discards them.
pub fn blocked_matvec(j: &CouplingMatrix, v: &[f64], plan: &BlockPlan) -> Result<Vec<f64>> {
    let mut y = vec![0.0; j.n()];
    blocked_apply_into(j, &[v], &mut [&mut y], plan)?;
    Ok(y)
}

pub fn blocked_apply_into(
    j: &CouplingMatrix,
    inputs: &[&[f64]],
    outputs: &mut [&mut [f64]],
    plan: &BlockPlan,
) -> Result<()> {
    check_shapes(j.n(), inputs, outputs)?;
    if plan.n != j.n() {
        return Err(Error::DimensionMismatch {
            expected: j.n(),
            actual: plan.n,
        });
    }
    run_blocked(j, inputs, outputs, plan);
    Ok(())
}

fn check_shapes(n: usize, inputs: &[&[f64]], outputs: &[&mut [f64]]) -> Result<()> {
    if inputs.len() != outputs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} inputs but {} outputs",
            inputs.len(),
            outputs.len()
        )));
    }
    for v in inputs {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
    }
    for y in outputs.iter() {
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: y.len(),
            });
        }
    }
    Ok(())
}

fn apply_native(j: &CouplingMatrix, inputs: &[&[f64]], outputs: &mut [&mut [f64]], cfg: &MatvecConfig) {
    let n = j.n();
    match j.storage() {
        Storage::Dense(d) => {
            let ranges = even_ranges(n, cfg.workers);
            run_ranges(outputs, &ranges, |rows, outs| dense_rows(d, n, rows, inputs, outs));
        }
        Storage::Csr(c) => {
            let ranges = weighted_ranges(c.row_offsets(), cfg.workers);
            run_ranges(outputs, &ranges, |rows, outs| {
                for (v, out) in inputs.iter().zip(outs.iter_mut()) {
                    for (k, i) in rows.clone().enumerate() {
                        let (cols, vals) = c.row(i);
                        let mut s = 0.0;
                        for (&col, &val) in cols.iter().zip(vals) {
                            s += val * v[col];
                        }
                        out[k] = s;
                    }
                }
            });
        }
        Storage::Procedural(_) => {
            let plan = BlockPlan::new(n, cfg.block_size, cfg.workers).expect("validated config");
            run_blocked(j, inputs, outputs, &plan);
        }
        Storage::Bordered(b) => {
            let m = n - 1;
            let inner_in: Vec<&[f64]> = inputs.iter().map(|v| &v[..m]).collect();
            {
                let mut inner_out: Vec<&mut [f64]> = outputs.iter_mut().map(|y| &mut y[..m]).collect();
                apply_native(b.inner(), &inner_in, &mut inner_out, cfg);
            }
            let h = b.border();
            for (v, y) in inputs.iter().zip(outputs.iter_mut()) {
                let t = v[m];
                for i in 0..m {
                    y[i] += h[i] * t;
                }
                y[m] = dot(h, &v[..m]);
            }
        }
    }
}

fn dense_rows(d: &[f64], n: usize, rows: Range<usize>, inputs: &[&[f64]], outs: &mut [&mut [f64]]) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: avx2 support was checked at runtime
        unsafe { dense_rows_avx2(d, n, rows, inputs, outs) };
        return;
    }
    dense_rows_generic(d, n, rows, inputs, outs)
}

// Same operations in the same order as the generic path, so results are
// bitwise identical; only the vector width changes.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dense_rows_avx2(d: &[f64], n: usize, rows: Range<usize>, inputs: &[&[f64]], outs: &mut [&mut [f64]]) {
    dense_rows_generic(d, n, rows, inputs, outs)
}

#[inline(always)]
fn dense_rows_generic(d: &[f64], n: usize, rows: Range<usize>, inputs: &[&[f64]], outs: &mut [&mut [f64]]) {
    for (k, i) in rows.enumerate() {
        let row = &d[i * n..(i + 1) * n];
        if let ([a, b], [ya, yb]) = (inputs, &mut *outs) {
            (ya[k], yb[k]) = dot2(row, a, b);
            continue;
        }
        for (v, out) in inputs.iter().zip(outs.iter_mut()) {
            out[k] = dot(row, v);
        }
    }
}

fn run_blocked(j: &CouplingMatrix, inputs: &[&[f64]], outputs: &mut [&mut [f64]], plan: &BlockPlan) {
    let ranges: Vec<Range<usize>> = (0..plan.workers).map(|w| plan.rows_of(w)).collect();
    // Worker w owns ranges[w]; its tiles are exactly the row blocks inside.
    run_ranges(outputs, &ranges, |rows, outs| {
        if rows.is_empty() {
            return;
        }
        let b = plan.block;
        let nb = plan.num_blocks();
        let mut tile = vec![0.0; b * b];
        for out in outs.iter_mut() {
            out.fill(0.0);
        }
        let mut rb_start = rows.start;
        while rb_start < rows.end {
            let rb_end = (rb_start + b).min(rows.end);
            for cb in 0..nb {
                let cols = plan.span(cb);
                let width = cols.len();
                fill_tile(
                    j,
                    rb_start..rb_end,
                    cols.clone(),
                    &mut tile[..(rb_end - rb_start) * width],
                );
                for (v, out) in inputs.iter().zip(outs.iter_mut()) {
                    let vs = &v[cols.clone()];
                    for r in 0..(rb_end - rb_start) {
                        let partial = dot(&tile[r * width..(r + 1) * width], vs);
                        out[rb_start - rows.start + r] += partial;
                    }
                }
            }
            rb_start = rb_end;
        }
    });
}

/// Writes `J[rows, cols]` row-major into `buf`.
fn fill_tile(j: &CouplingMatrix, rows: Range<usize>, cols: Range<usize>, buf: &mut [f64]) {
    let width = cols.len();
    match j.storage() {
        Storage::Dense(d) => {
            let n = j.n();
            for (r, i) in rows.enumerate() {
                buf[r * width..(r + 1) * width].copy_from_slice(&d[i * n + cols.start..i * n + cols.end]);
            }
        }
        Storage::Csr(c) => {
            buf.fill(0.0);
            for (r, i) in rows.enumerate() {
                let (rc, rv) = c.row(i);
                let lo = rc.partition_point(|&x| x < cols.start);
                for (&col, &val) in rc[lo..].iter().zip(&rv[lo..]) {
                    if col >= cols.end {
                        break;
                    }
                    buf[r * width + (col - cols.start)] = val;
                }
            }
        }
        Storage::Procedural(p) => {
            for (r, i) in rows.enumerate() {
                let dst = &mut buf[r * width..(r + 1) * width];
                for (slot, jj) in dst.iter_mut().zip(cols.clone()) {
                    *slot = p.entry(i, jj);
                }
            }
        }
        Storage::Bordered(_) => {
            for (r, i) in rows.enumerate() {
                for (c, jj) in cols.clone().enumerate() {
                    buf[r * width + c] = j.entry(i, jj);
                }
            }
        }
    }
}

fn even_ranges(n: usize, workers: usize) -> Vec<Range<usize>> {
    let w = workers.max(1).min(n.max(1));
    (0..w).map(|k| (k * n / w)..((k + 1) * n / w)).collect()
}

/// Contiguous row ranges with roughly equal nonzero counts.
fn weighted_ranges(offsets: &[usize], workers: usize) -> Vec<Range<usize>> {
    let n = offsets.len() - 1;
    let w = workers.max(1).min(n.max(1));
    let total = offsets[n];
    let mut ranges = Vec::with_capacity(w);
    let mut start = 0;
    for k in 1..=w {
        let end = if k == w {
            n
        } else {
            let target = total * k / w;
            offsets.partition_point(|&o| o < target).clamp(start, n)
        };
        ranges.push(start..end);
        start = end;
    }
    ranges
}

/// Runs `f(rows, outputs[rows])` for every range, one thread per range when
/// there is more than one. Ranges must be sorted and disjoint.
fn run_ranges<F>(outputs: &mut [&mut [f64]], ranges: &[Range<usize>], f: F)
where
    F: Fn(Range<usize>, &mut [&mut [f64]]) + Sync,
{
    if ranges.len() <= 1 {
        let rows = ranges.first().cloned().unwrap_or(0..0);
        let mut outs: Vec<&mut [f64]> = outputs.iter_mut().map(|y| &mut y[rows.clone()]).collect();
        f(rows, &mut outs);
        return;
    }
    // split every output into per-range pieces
    let mut pieces: Vec<Vec<&mut [f64]>> = (0..ranges.len()).map(|_| Vec::new()).collect();
    for y in outputs.iter_mut() {
        let mut rest: &mut [f64] = y;
        let mut offset = 0;
        for (w, r) in ranges.iter().enumerate() {
            let tail = std::mem::take(&mut rest);
            let (_, tail) = tail.split_at_mut(r.start - offset);
            let (head, tail) = tail.split_at_mut(r.len());
            pieces[w].push(head);
            rest = tail;
            offset = r.end;
        }
    }
    std::thread::scope(|scope| {
        for (r, mut outs) in ranges.iter().cloned().zip(pieces) {
            let f = &f;
            scope.spawn(move || f(r, &mut outs));
        }
    });
}
