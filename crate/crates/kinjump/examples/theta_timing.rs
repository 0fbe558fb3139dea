use kinjump::dispersion::{theta_table, MatrixVariant};
use kinjump::{build_grid, GasModel};
use std::time::Instant;

fn main() {
    for a in [0.1, 0.5, 1.0, 2.0] {
        let m = GasModel::new(a).unwrap();
        let g = build_grid(m.alpha(), 48, 12).unwrap();
        let t0 = Instant::now();
        let table = theta_table(&m, &g, 600, MatrixVariant::Derived).unwrap();
        let (etas, _) = table.samples();
        println!(
            "a={a}: {} samples, winding dev {:.2e}, min|lam+| {:.3e}, {:?}",
            etas.len(),
            (table.winding() - 2.0 * std::f64::consts::PI).abs(),
            table.min_abs_lambda_plus(),
            t0.elapsed()
        );
    }
}
