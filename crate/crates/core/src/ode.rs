//! Dormand-Prince 5(4) integrator with step control, a maximum step, and a
//! single terminal event located on the continuous extension.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

/// Accepted nodes of an integration, with the right-hand side at each node
/// so callers can build Hermite interpolants.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
    /// Whether the integration stopped on the event rather than at `t_end`.
    pub event_hit: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[[f64; N]; 7], coef: &[f64], stages: usize) -> [f64; N] {
    let mut out = *y;
    for (s, c) in coef.iter().enumerate().take(stages) {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[s][i];
            }
        }
    }
    out
}

/// Cubic Hermite interpolation on one step.
pub fn hermite<const N: usize>(
    t0: f64,
    y0: &[f64; N],
    d0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    d1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i];
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end`, stopping early at the first
/// sign change of `event(y)` from negative to non-negative.
pub fn integrate<const N: usize, F, E>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    event: Option<E>,
    opts: OdeOptions,
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    E: Fn(&[f64; N]) -> f64,
{
    let mut t = t0;
    let mut y = y0;
    let mut dy = f(t, &y);
    let mut traj = Trajectory {
        t: vec![t],
        y: vec![y],
        dy: vec![dy],
        event_hit: false,
    };
    if let Some(ev) = &event {
        if ev(&y) >= 0.0 {
            traj.event_hit = true;
            return Ok(traj);
        }
    }
    let mut h = opts.h_init.min(opts.h_max).min(t_end - t0);
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Solver {
                message: format!("ODE step limit reached at t = {t}"),
                history: vec![h],
            });
        }
        h = h.min(t_end - t).min(opts.h_max);
        let mut k = [[0.0; N]; 7];
        k[0] = dy;
        for s in 1..7 {
            let ys = axpy(&y, h, &k, &A[s], s);
            k[s] = f(t + C[s] * h, &ys);
        }
        let y5 = axpy(&y, h, &k, &B5, 7);
        let y4 = axpy(&y, h, &k, &B4, 7);
        let mut err = 0.0f64;
        for i in 0..N {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4[i]) / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.1;
            if h < 1e-300 {
                return Err(Error::Solver {
                    message: "ODE step size underflow".into(),
                    history: vec![t],
                });
            }
            continue;
        }
        if err <= 1.0 {
            let t_new = t + h;
            let dy_new = k[6];
            if let Some(ev) = &event {
                let g_new = ev(&y5);
                if g_new >= 0.0 {
                    // Bisection on the Hermite extension of this step.
                    let (mut lo, mut hi) = (t, t_new);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        let ym = hermite(t, &y, &dy, t_new, &y5, &dy_new, mid);
                        if ev(&ym) >= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    let t_ev = hi;
                    let y_ev = hermite(t, &y, &dy, t_new, &y5, &dy_new, t_ev);
                    let d_ev = f(t_ev, &y_ev);
                    if t_ev > t {
                        traj.t.push(t_ev);
                        traj.y.push(y_ev);
                        traj.dy.push(d_ev);
                    }
                    traj.event_hit = true;
                    return Ok(traj);
                }
            }
            t = t_new;
            y = y5;
            dy = dy_new;
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(dy);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(traj)
}
