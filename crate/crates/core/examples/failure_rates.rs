//! Miss rates against their bounds: exact for tiny fields, Monte Carlo
//! elsewhere.

use mdsaudit::experiments::{exact_failure_small, mc_failure_rate, TrialConfig};
use mdsaudit::{make_code, make_field, ErrorModel, Matrix, RandomnessKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f3 = make_field(3, 1)?;
    let rank1 = Matrix::from_indices(2, 3, &[1, 2, 0, 2, 1, 0]).expect("2x3");
    let rank2 = Matrix::from_indices(2, 3, &[1, 0, 0, 0, 1, 0]).expect("2x3");
    println!("q=3 rank 1: {}", exact_failure_small(&f3, 3, &[rank1])?);
    println!("q=3 rank 2: {}", exact_failure_small(&f3, 3, &[rank2])?);

    let trials = 50_000;
    for q in [17u64, 101, 257] {
        for kind in [RandomnessKind::TrueRandom, RandomnessKind::Pseudorandom] {
            let code = make_code(4, 2, &make_field(q, 1)?, 4)?;
            let cfg = TrialConfig::new(code, ErrorModel::Rank1, 1, kind)?;
            let est = mc_failure_rate(&cfg, trials, 2024)?;
            println!(
                "q={q:>3} {kind:>13}: {:.5} [{:.5}, {:.5}] bound {:.5}",
                est.estimate, est.low, est.high, est.bound
            );
        }
    }
    Ok(())
}
