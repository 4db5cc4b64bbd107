//! How big q must be for a 1/M failure bound, and what an audit then costs.

use mdsaudit::{accounting, choose_field, make_code, RandomnessKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, k) = (10, 6);
    println!("(n,k) = ({n},{k})");
    for kind in [RandomnessKind::TrueRandom, RandomnessKind::Pseudorandom] {
        for m in [1_000u64, 1_000_000, 1_000_000_000] {
            let f = choose_field(m, n, k, kind)?;
            for columns in [100, 10_000] {
                let b = accounting(&make_code(n, k, &f, columns)?.params, kind);
                println!(
                    "{kind:>13} M={m:<10} q={:<11} N={columns:<6} hash {:>4} bits  seed {:>7}  naive {:>10}",
                    f.order(),
                    b.hash_bits,
                    b.seed_bits,
                    b.naive_bits
                );
            }
        }
    }
    match choose_field(1_000, 4, 3, RandomnessKind::TrueRandom) {
        Err(e) => println!("(4,3): {e}"),
        Ok(f) => println!("(4,3): q={}", f.order()),
    }
    Ok(())
}
