use kinjump::model::{AsymptoticState, GasModel};
use kinjump::oracle::{fixed_point_map, OracleConfig};

fn main() {
    let m = GasModel::new(1.0).unwrap();
    let state = AsymptoticState::new(0.4, -0.7, 0.3, 0.9);
    for n_mu in [72, 96, 192, 384] {
        let cfg = OracleConfig { nx: 240, n_mu, x_max: 30.0, ..OracleConfig::default() };
        let h_as = |x: f64, mu: f64| m.h_asymptotic(x, mu, &state).unwrap();
        let (out, h_in, cons, _) =
            fixed_point_map(&m, &cfg, |mu| h_as(0.0, mu), |mu| h_as(cfg.x_max, mu), h_as).unwrap();
        let rel = out.iter().zip(&h_in).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())).fold(0.0f64, f64::max);
        let cmax = cons.iter().cloned().fold(0.0f64, f64::max);
        println!("n_mu={n_mu:>4}: rel drift {rel:.3e}  conservation {cmax:.3e}");
    }
}
