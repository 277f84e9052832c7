use proptest::prelude::*;

use std::sync::OnceLock;

use mz_core::arith::{divisor_sieve, DivisorTable};

fn table() -> &'static DivisorTable {
    static T: OnceLock<DivisorTable> = OnceLock::new();
    T.get_or_init(|| divisor_sieve(1_000_000).unwrap())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn hyperbola_identity() {
    let table = table();
    assert_eq!(table.summatory(100), 482);
    for n in [10u64, 100, 10_000, 1_000_000] {
        let floor_sum: u64 = (1..=n).map(|k| n / k).sum();
        assert_eq!(table.summatory(n as usize), floor_sum, "N = {n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn divisor_count_is_multiplicative(m in 1u64..1000, n in 1u64..1000) {
        prop_assume!(gcd(m, n) == 1);
        let table = table();
        prop_assert_eq!(table.get((m * n) as usize), table.get(m as usize) * table.get(n as usize));
    }

    #[test]
    fn divisor_count_matches_trial_division(n in 1u64..20_000) {
        let table = table();
        let brute = (1..=n).filter(|k| n % k == 0).count() as u32;
        prop_assert_eq!(table.get(n as usize), brute);
    }
}
