use mdsaudit::format::{deserialize, serialize, Payload};
use mdsaudit::{make_code, make_field, Matrix, PrgSeed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = make_field(3, 2)?;
    let code = make_code(5, 3, &f, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let slice = Matrix::random(&f, 2, 4, &mut rng);
    let bytes = serialize(
        &code,
        &Payload::Node {
            node: 2,
            slice: slice.clone(),
        },
    )?;
    println!("node file: {} bytes", bytes.len());
    let dir = std::env::temp_dir().join("mdsaudit-containers");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("node-2.nxm");
    std::fs::write(&path, &bytes)?;

    let back = deserialize(&std::fs::read(&path)?)?;
    println!(
        "{:?} p={} s={} modulus {:?}",
        back.header.kind, back.header.p, back.header.s, back.header.modulus
    );
    assert_eq!(back.payload, Payload::Node { node: 2, slice });

    let seed = PrgSeed::draw(&f, 4, &mut rng)?;
    let seed_bytes = serialize(&code, &Payload::seed(&seed))?;
    println!(
        "seed file: {} bytes for m = {}",
        seed_bytes.len(),
        seed.degree()
    );

    println!("{}", deserialize(&bytes[..bytes.len() - 1]).unwrap_err());
    Ok(())
}
