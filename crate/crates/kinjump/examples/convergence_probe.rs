use kinjump::oracle::{extract_jumps, solve_direct, OracleConfig};
use kinjump::GasModel;

fn main() {
    let m = GasModel::new(1.0).unwrap();
    // Spatial self-convergence at fixed ordinates.
    let mut eps = Vec::new();
    for nx in [75, 150, 300, 600] {
        let cfg = OracleConfig { nx, n_mu: 96, ..OracleConfig::default() };
        let f = solve_direct(&m, 0.0, 1.0, &cfg).unwrap();
        let e = extract_jumps(&f).unwrap();
        eps.push(e.eps_t);
        println!("nx={nx:>4}: eps_t = {:.12}", e.eps_t);
    }
    for w in eps.windows(3) {
        let e1 = (w[0] - w[1]).abs();
        let e2 = (w[1] - w[2]).abs();
        println!("order ~ {:.3}", (e1 / e2).log2());
    }
    // Ordinate-count stability.
    let mut by_mu = Vec::new();
    for n_mu in [64, 128] {
        let cfg = OracleConfig { nx: 600, n_mu, ..OracleConfig::default() };
        let f = solve_direct(&m, 0.0, 1.0, &cfg).unwrap();
        by_mu.push(extract_jumps(&f).unwrap().eps_t);
    }
    println!("n_mu 64 -> 128: rel move {:.3e}", (by_mu[0] - by_mu[1]).abs() / by_mu[1].abs());
}
