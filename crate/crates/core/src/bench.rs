//! Wall-clock timing of single-threaded runs.

use std::hint::black_box;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    /// Milliseconds per run, in execution order.
    pub samples_ms: Vec<f64>,
}

impl Timing {
    pub fn mean_ms(&self) -> f64 {
        self.samples_ms.iter().sum::<f64>() / self.samples_ms.len().max(1) as f64
    }

    /// Sample standard deviation.
    pub fn std_ms(&self) -> f64 {
        let n = self.samples_ms.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean_ms();
        let ss: f64 = self.samples_ms.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }
}

fn run_once<T>(f: &mut impl FnMut() -> T) -> f64 {
    let start = Instant::now();
    black_box(f());
    start.elapsed().as_secs_f64() * 1e3
}

/// Times `f` over `repetitions` runs after `warmup` discarded runs.
pub fn time_runs<T>(warmup: usize, repetitions: usize, mut f: impl FnMut() -> T) -> Timing {
    for _ in 0..warmup {
        black_box(f());
    }
    Timing {
        samples_ms: (0..repetitions).map(|_| run_once(&mut f)).collect(),
    }
}

/// Times two closures with their runs interleaved, so slow drift in machine
/// load hits both equally.
pub fn time_pair<A, B>(
    warmup: usize,
    repetitions: usize,
    mut a: impl FnMut() -> A,
    mut b: impl FnMut() -> B,
) -> (Timing, Timing) {
    for _ in 0..warmup {
        black_box(a());
        black_box(b());
    }
    let mut ta = Vec::with_capacity(repetitions);
    let mut tb = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        ta.push(run_once(&mut a));
        tb.push(run_once(&mut b));
    }
    (Timing { samples_ms: ta }, Timing { samples_ms: tb })
}
