use kinjump::jump::{kl_fit_check, Pipeline, PipelineSettings};

fn main() {
    for a in [0.1, 0.5, 1.0, 2.0] {
        let t0 = std::time::Instant::now();
        let p = Pipeline::new(a, &PipelineSettings::default()).unwrap();
        let s = p.solution();
        let ru = p.boundary_residual(&p.solve(1.0, 0.0), 40).unwrap();
        let rg = p.boundary_residual(&p.solve(0.0, 1.0), 40).unwrap();
        println!("a={a}: eT/U={:+.6} eT/gT={:+.6} eN/U={:+.6} eN/gT={:+.6}", s.eps_t_per_u, s.eps_t_per_gt, s.eps_n_per_u, s.eps_n_per_gt);
        println!("   V=({:+.5},{:+.5},{:+.5}) K1={:+.5} K0={:+.5} L1={:+.5} L0={:+.5}", s.v_moments.0, s.v_moments.1, s.v_moments.2, s.kl.k1, s.kl.k0, s.kl.l1, s.kl.l0);
        println!("   residuals U:{ru:.2e} gT:{rg:.2e}  kl_fit={:.2e}  printed max rel disc={:.3}  omega={:+.5}  [{:?}]",
            kl_fit_check(&p).unwrap(), s.printed.max_rel_discrepancy, s.omega, t0.elapsed());
    }
}
