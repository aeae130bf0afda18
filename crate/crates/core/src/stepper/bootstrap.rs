//! Starting procedure: a stiffly accurate third-order IMEX Runge-Kutta scheme
//! (ARS(4,4,3)) driven through the same update as the multistep schemes.

use super::{advance, Level, Problem, SolverOptions, UpdateDiag, UpdateWeights};
use crate::error::Result;
use crate::spatial::GHOST;

/// Substep bound `LAMBDA_BOOT * dx^{max(1, s/3)}`.
pub const LAMBDA_BOOT: f64 = 0.25;

pub const STAGES: usize = 5;

/// Butcher arrays of a stage-5 IMEX pair, stage 0 being the start value.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexRk {
    pub explicit: [[f64; STAGES]; STAGES],
    pub implicit: [[f64; STAGES]; STAGES],
    pub c: [f64; STAGES],
}

pub fn ars443() -> ImexRk {
    ImexRk {
        explicit: [
            [0.0; 5],
            [0.5, 0.0, 0.0, 0.0, 0.0],
            [11.0 / 18.0, 1.0 / 18.0, 0.0, 0.0, 0.0],
            [5.0 / 6.0, -5.0 / 6.0, 0.5, 0.0, 0.0],
            [0.25, 1.75, 0.75, -1.75, 0.0],
        ],
        implicit: [
            [0.0; 5],
            [0.0, 0.5, 0.0, 0.0, 0.0],
            [0.0, 1.0 / 6.0, 0.5, 0.0, 0.0],
            [0.0, -0.5, 0.5, 0.5, 0.0],
            [0.0, 1.5, -1.5, 0.5, 0.5],
        ],
        c: [0.0, 0.5, 2.0 / 3.0, 0.5, 1.0],
    }
}

/// One Runge-Kutta step of size `h`; the result is the last stage.
pub fn rk_substep(
    pb: &Problem,
    opts: &SolverOptions,
    start: &Level,
    h: f64,
    t_end: f64,
) -> Result<(Level, UpdateDiag)> {
    let tab = ars443();
    let n = pb.grid.n;
    let mut stages: Vec<Level> = vec![start.clone()];
    let mut diag = UpdateDiag::default();
    for i in 1..STAGES {
        let mut alpha = vec![0.0; i];
        alpha[0] = 1.0;
        let w = UpdateWeights {
            alpha,
            beta: tab.explicit[i][..i].to_vec(),
            gamma: tab.implicit[i][..i].to_vec(),
            gamma_imp: tab.implicit[i][i],
        };
        let kappa: Vec<f64> = (0..n).map(|k| stages[i - 1].u[k + GHOST]).collect();
        let refs: Vec<&Level> = stages.iter().collect();
        let t_stage = if i + 1 == STAGES { t_end } else { start.t + tab.c[i] * h };
        let (lv, d) = advance(pb, opts, &refs, &w, h, &kappa, t_stage)?;
        diag.theta_max = diag.theta_max.max(d.theta_max);
        diag.cfl = diag.cfl.max(d.cfl);
        diag.subchar_violations = diag.subchar_violations.max(d.subchar_violations);
        diag.newton_iterations += d.newton_iterations;
        stages.push(lv);
    }
    Ok((stages.pop().unwrap(), diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn ars443_order_conditions() {
        let t = ars443();
        let b_e = t.explicit[4];
        let b_i = t.implicit[4];
        let c = t.c;
        for (arr, name) in [(&t.explicit, "explicit"), (&t.implicit, "implicit")] {
            for i in 0..STAGES {
                let row: f64 = arr[i].iter().sum();
                assert!((row - c[i]).abs() < 1e-14, "{name} row sum {i}");
            }
        }
        let mat_vec = |a: &[[f64; 5]; 5], x: &[f64; 5]| -> [f64; 5] {
            let mut r = [0.0; 5];
            for i in 0..5 {
                r[i] = dot(&a[i], x);
            }
            r
        };
        let c2: [f64; 5] = c.map(|x| x * x);
        for b in [b_e, b_i] {
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((dot(&b, &c) - 0.5).abs() < 1e-14);
            assert!((dot(&b, &c2) - 1.0 / 3.0).abs() < 1e-14);
            // coupled third-order conditions b^T A c = 1/6 for both A
            for a in [&t.explicit, &t.implicit] {
                assert!((dot(&b, &mat_vec(a, &c)) - 1.0 / 6.0).abs() < 1e-14);
            }
        }
    }
}
