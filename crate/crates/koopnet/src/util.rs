//! Deterministic chunked parallelism.
//!
//! Work is split into fixed chunks whose boundaries depend only on the item
//! count, never on the thread count. Callers fold the returned per-chunk
//! results in chunk order, so floating-point reductions are bitwise identical
//! whether the chunks ran on one thread or many.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Apply `f` to each chunk `[i*chunk, min((i+1)*chunk, items))` and return
/// the results in chunk order. `threads <= 1` runs inline.
pub fn map_chunks<R: Send>(
    items: usize,
    chunk: usize,
    threads: usize,
    f: impl Fn(std::ops::Range<usize>) -> R + Sync,
) -> Vec<R> {
    assert!(chunk > 0);
    let n_chunks = items.div_ceil(chunk);
    let ranges: Vec<std::ops::Range<usize>> = (0..n_chunks)
        .map(|i| i * chunk..((i + 1) * chunk).min(items))
        .collect();

    if threads <= 1 || n_chunks <= 1 {
        return ranges.into_iter().map(f).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..n_chunks).map(|_| None).collect());
    let workers = threads.min(n_chunks);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_chunks {
                    break;
                }
                let r = f(ranges[i].clone());
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });

    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("worker filled every chunk"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covers_all_items_in_order() {
        let out = map_chunks(10, 3, 1, |r| r.collect::<Vec<_>>());
        assert_eq!(out.concat(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn parallel_matches_serial() {
        let work = |r: std::ops::Range<usize>| -> f64 { r.map(|i| (i as f64).sqrt()).sum() };
        let serial = map_chunks(1000, 16, 1, work);
        let parallel = map_chunks(1000, 16, 4, work);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn empty_input() {
        let out = map_chunks(0, 4, 2, |r| r.len());
        assert!(out.is_empty());
    }
}
