//! Replicate fan-out.
//!
//! Replicates are embarrassingly parallel: each owns a derived seed and no
//! state is shared. Results land in their replicate-index slot, so the output
//! is identical for any worker count.

use std::sync::Mutex;
use std::sync::atomic::{AtomicU64, Ordering};

/// Run `f(0), f(1), ..., f(n-1)` on up to `workers` threads and return the
/// results in index order.
pub fn parallel_map_indexed<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicU64::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(n as usize) {
            scope.spawn(|| {
                loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= n {
                        break;
                    }
                    let value = f(k);
                    *slots[k as usize].lock().expect("result slot poisoned") = Some(value);
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot poisoned")
                .expect("worker skipped a replicate")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::parallel_map_indexed;

    #[test]
    fn order_is_independent_of_worker_count() {
        let seq = parallel_map_indexed(100, 1, |k| k * k);
        let par = parallel_map_indexed(100, 4, |k| k * k);
        assert_eq!(seq, par);
    }
}
