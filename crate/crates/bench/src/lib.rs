//! Fixtures shared by the benchmarks under `benches/`.

use delaymap::{sample_pairs, ObservableSpec, PairSet, PeriodInfo, StateVector, SystemSpec, Trajectory, TrigTerm};

pub fn henon() -> SystemSpec {
    SystemSpec::henon(1.4, 0.3)
}

pub fn trig_observable() -> ObservableSpec {
    ObservableSpec::TrigPolynomial {
        terms: vec![
            TrigTerm { freq: vec![1.0, 0.0], cos: 1.0, sin: 0.3 },
            TrigTerm { freq: vec![0.5, 2.0], cos: 0.0, sin: 0.7 },
        ],
    }
}

/// Orbit of `len` states on the Hénon attractor.
pub fn henon_trajectory(len: usize) -> Trajectory {
    let sys = henon();
    let x0 = sys.attractor_samples(1, 500, 0).expect("attractor sample");
    sys.iterate(&x0[0], len).expect("orbit stays bounded")
}

/// `count` pairs at separation `1e-2` drawn from Hénon attractor samples.
pub fn henon_pairs(count: usize, seed: u64) -> PairSet {
    let sys = henon();
    let samples = sys.attractor_samples(2000, 500, seed).expect("attractor samples");
    sample_pairs(&samples, 1e-2, count, &sys, &PeriodInfo::direct(3, 1e-9), seed).expect("pairs")
}

/// `n` uniform points of the unit square on a deterministic lattice walk.
pub fn square_points(n: usize) -> Vec<StateVector> {
    let golden = 0.618_033_988_749_894_8;
    (0..n)
        .map(|i| {
            let x = (i as f64 * golden).fract();
            let y = (i as f64 * golden * golden).fract();
            StateVector::new(vec![x, y]).expect("finite")
        })
        .collect()
}
