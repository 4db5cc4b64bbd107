//! A (4,2) code over F_5 with two columns, small enough to read every
//! number: encode, corrupt node 3, hash, decode the hash word.

use mdsaudit::hashing::node_hash;
use mdsaudit::storage::ErrorPlan;
use mdsaudit::{collect_hashes, make_code, make_field, verify, Matrix, RandomVector, SystemState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = make_field(5, 1)?;
    let code = make_code(4, 2, &f, 2)?;
    println!("alpha = {}, t1 = {}", code.params.alpha, code.params.t1);

    let x = Matrix::from_indices(4, 2, &[1, 2, 3, 4, 0, 1, 2, 2]).expect("4x2");
    print!("X =\n{x}");
    let coded = code.encode(&x)?;
    for i in 1..=4 {
        print!(
            "node {i} rows {:?}:\n{}",
            code.node_rows(i)?,
            coded.node_slice(2, i)
        );
    }

    let mut state = SystemState::new(&code, x)?;
    state.corrupt(ErrorPlan::single_cell(
        &f,
        &code.params,
        3,
        1,
        0,
        f.from_int(2),
    )?)?;

    // drawn after the corruption was committed
    let r = RandomVector::fixed(vec![f.from_int(1), f.from_int(3)]);
    for i in 1..=4 {
        let h: Vec<u64> = node_hash(&f, state.node(i)?, &r)?
            .iter()
            .map(|v| v.index())
            .collect();
        println!("h_{i} = {h:?}");
    }
    let hashes = collect_hashes(&state, &r)?;
    let report = verify(&code, &hashes)?;
    println!("status {}, flagged {:?}", report.status, report.flagged);
    println!("truth {:?}", state.true_error_set()?);
    Ok(())
}
