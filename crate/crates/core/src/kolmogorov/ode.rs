use nalgebra::DMatrix;

use crate::state_model::GeneratorFunction;

const TARGET: f64 = 1e-9;
const MAX_HALVINGS: u32 = 12;

fn rk4(g: &GeneratorFunction, s: f64, t: f64, steps: usize) -> DMatrix<f64> {
    let n = g.dim();
    let h = (t - s) / steps as f64;
    let mut p = DMatrix::<f64>::identity(n, n);
    for k in 0..steps {
        let u = s + h * k as f64;
        let l0 = g.at(u).into_matrix();
        let lm = g.at(u + 0.5 * h).into_matrix();
        let l1 = g.at(u + h).into_matrix();
        let k1 = &p * &l0;
        let k2 = (&p + &k1 * (0.5 * h)) * &lm;
        let k3 = (&p + &k2 * (0.5 * h)) * &lm;
        let k4 = (&p + &k3 * h) * &l1;
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    p
}

/// Forward equation `dP/du = P·Λ(u)` from `s` to `t` by classical RK4.
///
/// The base step is `min(1e-3, 0.05/ρ)` with `ρ` the largest exit rate on
/// `[s, t]`; the step is halved until two successive solutions agree to 1e-9.
pub fn solve_forward(g: &GeneratorFunction, s: f64, t: f64) -> DMatrix<f64> {
    let n = g.dim();
    if t <= s {
        return DMatrix::identity(n, n);
    }
    let rho = g.max_exit_rate(t);
    let h0 = if rho > 0.0 { (0.05 / rho).min(1e-3) } else { 1e-3 };
    let mut steps = ((t - s) / h0).ceil().max(1.0) as usize;
    let mut coarse = rk4(g, s, t, steps);
    for _ in 0..MAX_HALVINGS {
        steps *= 2;
        let fine = rk4(g, s, t, steps);
        let diff = (&fine - &coarse).amax();
        coarse = fine;
        if diff <= TARGET {
            break;
        }
    }
    coarse
}
