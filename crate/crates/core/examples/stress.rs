//! Robustness probe: normalizes a few thousand random cobordisms across
//! several seeds and two slicing parameters, asserting the pipeline never
//! errors. Run with `cargo run --example stress`.
use cobstab::hn::{normalize, refine_by_base_hn};
use cobstab::lift::{cone_decomposition, validate_kappa};
use cobstab::sample::{self, Rng, SpecShape};

fn main() {
    let kappa = validate_kappa(4).unwrap();
    let kappa6 = validate_kappa(6).unwrap();
    let mut total = 0usize;
    for seed in [1u64, 7, 42, 99, 123456, 987654321, 0xdead_beef] {
        let mut rng = Rng::new(seed);
        for i in 0..300 {
            let shape = SpecShape {
                balanced: i % 2 == 0,
                with_bottom: i % 3 != 0,
                max_ends: 6,
                max_height: 8,
                brick_bound: 4,
                modulus: 4,
                max_atoms_per_end: 3,
                ..SpecShape::default()
            };
            let spec = sample::random_spec(&mut rng, &shape);
            let expr = cone_decomposition(&spec).unwrap();
            let refined = refine_by_base_hn(&expr).unwrap();
            let decorated = sample::decorate_tags(&refined, &mut rng);
            for k in [kappa, kappa6] {
                match normalize(&decorated, k) {
                    Ok((f, _)) => {
                        assert!(!f.factors.is_empty() || cobstab::cone::flatten(&decorated).entries.is_empty());
                    }
                    Err(e) => panic!("seed {} entry {} kappa {}: {}", seed, i, k.value(), e),
                }
            }
            total += 1;
        }
    }
    println!("ok: {} specs normalized under two kappas with no errors", total);
}
