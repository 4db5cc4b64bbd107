//! Simulated audits of a (7,3) system in both randomness modes, with
//! honest-hashing and lying corrupted nodes.

use mdsaudit::experiments::{stream_rng, Stream};
use mdsaudit::verifier::{collect_hashes_with, NodeBehavior};
use mdsaudit::{
    accounting, draw_random_vector, make_code, prg_expand, sample_error_plan, verify, ErrorModel,
    Matrix, PrgSeed, RandomnessKind, SystemState,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = mdsaudit::field::field_of_order(257)?;
    let code = make_code(7, 3, &f, 64)?;
    let p = &code.params;

    for kind in [RandomnessKind::TrueRandom, RandomnessKind::Pseudorandom] {
        for (i, model) in [
            ErrorModel::SingleCell,
            ErrorModel::Rank1,
            ErrorModel::RandomDense,
        ]
        .into_iter()
        .enumerate()
        {
            let mut rng = stream_rng(42, Stream::Simulation, i as u64);
            let x = Matrix::random(&f, p.message_rows(), p.columns, &mut rng);
            let mut state = SystemState::new(&code, x)?;
            state.corrupt(sample_error_plan(&model, p.t1, &mut rng, p)?)?;

            let mut challenge = stream_rng(42, Stream::Challenge, i as u64);
            let r = match kind {
                RandomnessKind::TrueRandom => draw_random_vector(p.columns, &f, &mut challenge),
                RandomnessKind::Pseudorandom => {
                    prg_expand(&PrgSeed::draw(&f, p.columns, &mut challenge)?, p.columns)?
                }
            };
            for behavior in [
                NodeBehavior::HashStored,
                NodeBehavior::Arbitrary { seed: 7 },
            ] {
                let report = verify(&code, &collect_hashes_with(&state, &r, behavior)?)?;
                println!(
                    "{kind:>13} {model:>12} {behavior:?}: {} {:?} (truth {:?})",
                    report.status,
                    report.flagged,
                    state.true_error_set()?
                );
            }
        }
        let b = accounting(p, kind);
        println!(
            "{kind}: hash {} bits, seed {} bits, naive {} bits",
            b.hash_bits, b.seed_bits, b.naive_bits
        );
    }
    Ok(())
}
