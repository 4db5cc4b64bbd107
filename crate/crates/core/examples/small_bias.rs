//! Expand a seed over F_2 and measure the generator's bias exhaustively.

use mdsaudit::experiments::bias_sweep;
use mdsaudit::hashing::minimal_extension_degree;
use mdsaudit::{make_field, prg_expand, PrgSeed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f2 = make_field(2, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seed = PrgSeed::draw(&f2, 16, &mut rng)?;
    let r = prg_expand(&seed, 16)?;
    let bits: String = r.values().iter().map(|v| v.to_string()).collect();
    println!(
        "m = {}, seed {} bits -> {bits}",
        seed.degree(),
        seed.bit_count()
    );

    println!("N  m  tests  max|bias|  bound  max P[0]");
    for n in 3..=9 {
        let m = minimal_extension_degree(2, n);
        let s = bias_sweep(&f2, m, n)?;
        println!(
            "{n}  {m}  {:>5}  {:>9}  {:>5}  {}",
            s.tests, s.max_abs_bias, s.bias_bound, s.max_zero_probability
        );
    }
    Ok(())
}
