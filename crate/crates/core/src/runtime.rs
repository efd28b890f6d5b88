//! Chunked map-reduce with halos and phase timing.
//!
//! A job runs in three timed phases: *load* (parse inputs into memory),
//! *map* (one pure function call per chunk, concurrently), and *reduce*
//! (a per-chunk combine step, concurrently, followed by an ordered merge on
//! the calling thread after a full barrier). Chunks are statically assigned,
//! one per worker, and partial results are always merged in chunk order, so
//! output never depends on the worker count or on scheduling.

use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{io, Error, Result};

/// Wall-clock seconds spent in each phase of a job.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimings {
    pub load_s: f64,
    pub map_s: f64,
    pub reduce_s: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.load_s + self.map_s + self.reduce_s
    }

    pub fn with_load(mut self, load_s: f64) -> Self {
        self.load_s = load_s;
        self
    }

    pub fn is_sane(&self) -> bool {
        [self.load_s, self.map_s, self.reduce_s]
            .iter()
            .all(|t| t.is_finite() && *t >= 0.0)
    }
}

/// Run `f` and return its output with the elapsed seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Core ranges partitioning `[0, total)` and their halo-extended ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    pub total: usize,
    pub halo: usize,
    pub workers: usize,
    pub cores: Vec<Range<usize>>,
    pub halos: Vec<Range<usize>>,
}

impl ChunkPlan {
    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }
}

/// Split `total` items into at most `workers` near-equal core ranges (sizes
/// differ by at most one) and extend each by `halo` items per side, clipped
/// to `[0, total)`. Empty chunks are dropped.
pub fn partition_with_halo(total: usize, workers: usize, halo: usize) -> ChunkPlan {
    let workers = workers.max(1);
    let chunks = workers.min(total);
    let mut cores = Vec::with_capacity(chunks);
    let mut halos = Vec::with_capacity(chunks);
    if chunks > 0 {
        let base = total / chunks;
        let extra = total % chunks;
        let mut start = 0;
        for c in 0..chunks {
            let len = base + usize::from(c < extra);
            let core = start..start + len;
            halos.push(core.start.saturating_sub(halo)..(core.end + halo).min(total));
            cores.push(core);
            start += len;
        }
    }
    ChunkPlan {
        total,
        halo,
        workers,
        cores,
        halos,
    }
}

/// What a map function sees: its halo'd slice plus where its core lies.
#[derive(Debug, Clone, Copy)]
pub struct Chunk<'a, T> {
    pub id: usize,
    /// Items of the halo range.
    pub items: &'a [T],
    /// Global range of `items`.
    pub halo: (usize, usize),
    /// Global core range owned by this chunk.
    pub core: (usize, usize),
}

impl<'a, T> Chunk<'a, T> {
    /// Core range relative to `items`.
    pub fn core_local(&self) -> Range<usize> {
        (self.core.0 - self.halo.0)..(self.core.1 - self.halo.0)
    }

    pub fn core_items(&self) -> &'a [T] {
        &self.items[self.core_local()]
    }
}

/// A fixed-size worker pool. Without the `parallel` feature, or with one
/// worker, everything runs on the calling thread.
pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("workers", &self.workers)
            .field("parallel", &self.is_parallel())
            .finish()
    }
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        #[cfg(feature = "parallel")]
        {
            let pool = if workers > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .thread_name(|i| format!("floeberg-worker-{i}"))
                        .build()
                        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?,
                )
            } else {
                None
            };
            Ok(Executor { workers, pool })
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Executor { workers })
    }

    /// Same chunking as `new(workers)` but always on the calling thread.
    pub fn sequential(workers: usize) -> Self {
        Executor {
            workers: workers.max(1),
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// Logical core count, or 1 when it cannot be queried.
    pub fn default_workers() -> usize {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        false
    }

    /// `f(0), .., f(n - 1)`, evaluated concurrently, returned in index order.
    pub fn run_indexed<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Map every item (in `workers` contiguous chunks), keeping order.
    pub fn map_items<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        let plan = partition_with_halo(items.len(), self.workers, 0);
        self.run_indexed(plan.len(), |c| items[plan.cores[c].clone()].iter().map(&f).collect::<Vec<R>>())
            .into_iter()
            .flatten()
            .collect()
    }
}

fn run_chunk<T, P>(chunk: &Chunk<'_, T>, map_fn: &(impl Fn(&Chunk<'_, T>) -> Result<P> + Sync)) -> Result<P> {
    match catch_unwind(AssertUnwindSafe(|| map_fn(chunk))) {
        Ok(Ok(p)) => Ok(p),
        Ok(Err(e)) => Err(Error::Job {
            chunk: chunk.id,
            message: e.to_string(),
        }),
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "worker panicked".into());
            Err(Error::Job {
                chunk: chunk.id,
                message,
            })
        }
    }
}

fn map_phase<T, P>(
    exec: &Executor,
    plan: &ChunkPlan,
    items: &[T],
    map_fn: impl Fn(&Chunk<'_, T>) -> Result<P> + Sync + Send,
) -> Result<Vec<P>>
where
    T: Sync,
    P: Send,
{
    if plan.total != items.len() {
        return Err(Error::invalid(format!(
            "plan covers {} items, got {}",
            plan.total,
            items.len()
        )));
    }
    exec.run_indexed(plan.len(), |id| {
        let halo = plan.halos[id].clone();
        let core = plan.cores[id].clone();
        let chunk = Chunk {
            id,
            items: &items[halo.clone()],
            halo: (halo.start, halo.end),
            core: (core.start, core.end),
        };
        run_chunk(&chunk, &map_fn)
    })
    .into_iter()
    .collect()
}

/// Map every chunk concurrently, then hand the partials (in chunk order) to
/// `reduce_fn` on the calling thread. `load_s` is left at zero.
pub fn parallel_map_reduce<T, P, R>(
    exec: &Executor,
    plan: &ChunkPlan,
    items: &[T],
    map_fn: impl Fn(&Chunk<'_, T>) -> Result<P> + Sync + Send,
    reduce_fn: impl FnOnce(Vec<P>) -> Result<R>,
) -> Result<(R, PhaseTimings)>
where
    T: Sync,
    P: Send,
{
    let (partials, map_s) = timed(|| map_phase(exec, plan, items, map_fn));
    let (result, reduce_s) = timed(|| reduce_fn(partials?));
    Ok((
        result?,
        PhaseTimings {
            load_s: 0.0,
            map_s,
            reduce_s,
        },
    ))
}

/// Like [`parallel_map_reduce`], with a per-chunk `combine_fn` applied
/// concurrently to each partial at the start of the reduce phase.
pub fn map_combine_reduce<T, P, Q, R>(
    exec: &Executor,
    plan: &ChunkPlan,
    items: &[T],
    map_fn: impl Fn(&Chunk<'_, T>) -> Result<P> + Sync + Send,
    combine_fn: impl Fn(P) -> Result<Q> + Sync + Send,
    reduce_fn: impl FnOnce(Vec<Q>) -> Result<R>,
) -> Result<(R, PhaseTimings)>
where
    T: Sync,
    P: Send,
    Q: Send,
{
    let (partials, map_s) = timed(|| map_phase(exec, plan, items, map_fn));
    let partials = partials?;
    let (result, reduce_s) = timed(|| -> Result<R> {
        let slots: Vec<std::sync::Mutex<Option<P>>> =
            partials.into_iter().map(|p| std::sync::Mutex::new(Some(p))).collect();
        let combined: Result<Vec<Q>> = exec
            .run_indexed(slots.len(), |i| {
                let p = slots[i].lock().expect("slot").take().expect("taken once");
                combine_fn(p).map_err(|e| Error::Job {
                    chunk: i,
                    message: e.to_string(),
                })
            })
            .into_iter()
            .collect();
        reduce_fn(combined?)
    });
    Ok((
        result?,
        PhaseTimings {
            load_s: 0.0,
            map_s,
            reduce_s,
        },
    ))
}

/// Parse a headed CSV body in `exec.workers()` line-aligned pieces
/// concurrently, concatenating rows in file order.
pub fn load_csv_chunked<T>(exec: &Executor, text: &[u8]) -> Result<Vec<T>>
where
    T: DeserializeOwned + Send,
{
    let body_start = text.iter().position(|&b| b == b'\n').map_or(text.len(), |i| i + 1);
    let body = &text[body_start..];
    let pieces = split_lines(body, exec.workers());
    let parsed: Result<Vec<Vec<T>>> = exec
        .run_indexed(pieces.len(), |i| io::parse_csv(&body[pieces[i].clone()], false))
        .into_iter()
        .collect();
    Ok(parsed?.into_iter().flatten().collect())
}

/// Serialize rows to CSV (header first) with each worker formatting one
/// contiguous block.
pub fn csv_chunked<T>(exec: &Executor, header: &[&str], rows: &[T]) -> Result<Vec<u8>>
where
    T: Serialize + Sync,
{
    let plan = partition_with_halo(rows.len(), exec.workers(), 0);
    let blocks: Result<Vec<Vec<u8>>> = exec
        .run_indexed(plan.len(), |c| io::csv_bytes(header, &rows[plan.cores[c].clone()], false))
        .into_iter()
        .collect();
    let mut out = io::csv_bytes::<T>(header, &[], true)?;
    for b in blocks? {
        out.extend_from_slice(&b);
    }
    Ok(out)
}

pub const BENCH_HEADER: [&str; 6] = ["workers", "load_s", "map_s", "reduce_s", "speedup_load", "speedup_reduce"];

/// One measured run of a scaling benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub workers: usize,
    pub timings: PhaseTimings,
}

/// Bench report; speedups are relative to the first row.
pub fn bench_csv(rows: &[BenchRow]) -> Result<Vec<u8>> {
    let Some(base) = rows.first() else {
        return Err(Error::invalid("bench report with no runs"));
    };
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::NAN };
    let out: Vec<(usize, f64, f64, f64, f64, f64)> = rows
        .iter()
        .map(|r| {
            let t = r.timings;
            (
                r.workers,
                t.load_s,
                t.map_s,
                t.reduce_s,
                ratio(base.timings.load_s, t.load_s),
                ratio(base.timings.reduce_s, t.reduce_s),
            )
        })
        .collect();
    io::csv_bytes(&BENCH_HEADER, &out, true)
}

fn split_lines(body: &[u8], pieces: usize) -> Vec<Range<usize>> {
    let pieces = pieces.max(1);
    let mut ranges = Vec::with_capacity(pieces);
    let mut start = 0;
    for p in 1..=pieces {
        if start >= body.len() {
            break;
        }
        let mut end = if p == pieces {
            body.len()
        } else {
            (body.len() * p / pieces).max(start + 1)
        };
        while end < body.len() && body[end - 1] != b'\n' {
            end += 1;
        }
        if end > start {
            ranges.push(start..end);
        }
        start = end;
    }
    ranges
}
