use kinjump::jump::{Pipeline, PipelineSettings};

fn main() {
    let p = Pipeline::new(1.0, &PipelineSettings::default()).unwrap();
    let solved = p.solve(0.0, 1.0);
    let x = 1.0911419587378725; // from the failing rng draw
    for mu in [0.031538115089895014, 0.03, -0.03, 0.5] {
        match p.reconstruct_h(&solved, x, mu) {
            Ok(h) => println!("h({x:.3}, {mu:+.6}) = {h}"),
            Err(e) => println!("h({x:.3}, {mu:+.6}) -> error {e}"),
        }
        let a_val = p.spectral_density_at(&solved, mu.abs());
        println!("  A({:.6}) = {:?}", mu.abs(), a_val);
        let v = p.factorization().v_pv(mu.abs());
        println!("  v_pv = {v:?}");
    }
}
