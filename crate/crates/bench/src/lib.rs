//! Seeded fixtures shared by the benchmarks.

use qcond_core::random::{random_channel, random_density, random_povm, Rng64};
use qcond_core::{DensityOperator, IsoPair, Povm};

/// Random pair with a full-rank state on `d_a` and a channel into `d_b`.
pub fn pair(d_a: usize, d_b: usize, seed: u64) -> IsoPair {
    let mut rng = Rng64::seed(seed);
    let rho = DensityOperator::new(random_density(d_a, d_a, &mut rng)).expect("random state is valid");
    let e = random_channel(d_a, d_b, 2, &mut rng);
    IsoPair::new(rho, e).expect("full-rank pair is valid")
}

/// Pair plus POVMs on both sides for the equivalence check.
pub fn measured_pair(d_a: usize, d_b: usize, outcomes: usize, seed: u64) -> (IsoPair, Povm, Povm) {
    let p = pair(d_a, d_b, seed);
    let mut rng = Rng64::seed(seed ^ 0x9e37_79b9);
    let m = random_povm(d_a, outcomes, &mut rng);
    let n = random_povm(d_b, outcomes, &mut rng);
    (p, m, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let a = pair(3, 2, 5);
        let b = pair(3, 2, 5);
        assert_eq!(a.rho().matrix(), b.rho().matrix());
        let (_, m, n) = measured_pair(2, 3, 4, 1);
        assert_eq!((m.len(), n.len()), (4, 4));
    }
}
