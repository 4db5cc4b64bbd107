//! Pack a byte string into X, lose two of six nodes, rebuild them.

use mdsaudit::storage::{extract, ingest};
use mdsaudit::verifier::repair_node;
use mdsaudit::{make_code, make_field, SystemState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = make_field(2, 8)?;
    let code = make_code(6, 3, &f, 16)?;
    let msg = b"every k nodes hold enough to rebuild the rest";
    let x = ingest(msg, &code.params)?;
    let state = SystemState::new(&code, x.clone())?;

    // nodes 2 and 5 are gone; any three survivors are enough
    let survivors = [1, 3, 6];
    let slices: Vec<_> = survivors
        .iter()
        .map(|&i| Ok((i, state.node(i)?.clone())))
        .collect::<Result<_, mdsaudit::storage::StorageError>>()?;
    let back = code.erasure_decode(&slices)?;
    assert_eq!(back, x);
    let text = extract(&back, &code.params);
    println!("{}", String::from_utf8_lossy(&text[..msg.len()]));

    for lost in [2, 5] {
        let rebuilt = repair_node(&state, lost, &survivors)?;
        println!("node {lost} rebuilt: {}", &rebuilt == state.node(lost)?);
    }

    // with a fourth helper a bad helper is caught
    let mut bad = state.clone();
    let mut slice = bad.node(4)?.clone();
    slice.set(0, 0, f.add(slice.get(0, 0), mdsaudit::FieldElement::ONE));
    bad.overwrite(4, slice)?;
    match repair_node(&bad, 2, &[1, 3, 4, 6]) {
        Err(e) => println!("repair refused: {e}"),
        Ok(_) => println!("repair went through"),
    }
    Ok(())
}
