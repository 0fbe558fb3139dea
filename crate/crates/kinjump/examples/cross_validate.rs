use kinjump::jump::{Pipeline, PipelineSettings};
use kinjump::oracle::{extract_jumps, solve_direct, OracleConfig};
use kinjump::GasModel;
use std::time::Instant;

fn main() {
    for a in [0.1, 0.5, 1.0, 2.0] {
        let t0 = Instant::now();
        let p = Pipeline::new(a, &PipelineSettings::default()).unwrap();
        let s = p.solution();
        let m = GasModel::new(a).unwrap();
        let cfg = OracleConfig::default().with_auto_domain(m.alpha());
        let fu = solve_direct(&m, 1.0, 0.0, &cfg).unwrap();
        let fg = solve_direct(&m, 0.0, 1.0, &cfg).unwrap();
        let eu = extract_jumps(&fu).unwrap();
        let eg = extract_jumps(&fg).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        println!(
            "a={a}: eT/U {:+.5} vs {:+.5} ({:.2e}) | eT/gT {:+.5} vs {:+.5} ({:.2e})",
            eu.eps_t, s.eps_t_per_u, rel(eu.eps_t, s.eps_t_per_u),
            eg.eps_t, s.eps_t_per_gt, rel(eg.eps_t, s.eps_t_per_gt)
        );
        println!(
            "      eN/U {:+.5} vs {:+.5} ({:.2e}) | eN/gT {:+.5} vs {:+.5} ({:.2e})  inner={} xmax={} [{:?}]",
            eu.eps_n, s.eps_n_per_u, rel(eu.eps_n, s.eps_n_per_u),
            eg.eps_n, s.eps_n_per_gt, rel(eg.eps_n, s.eps_n_per_gt),
            fu.inner_iterations, cfg.x_max, t0.elapsed()
        );
    }
}
