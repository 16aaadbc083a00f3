//! Adaptive Dormand–Prince 5(4) integration.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: 1e-3,
            min_step: 1e-14,
            max_step: f64::INFINITY,
        }
    }
}

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

/// One Dormand–Prince step of size `h`: the fifth-order state and the
/// embedded error estimate.
pub fn dp45_step<F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    let mut stage = vec![0.0; n];
    for s in 0..7 {
        for i in 0..n {
            let mut acc = y[i];
            for (j, kj) in k.iter().enumerate() {
                acc += h * A[s][j] * kj[i];
            }
            stage[i] = acc;
        }
        k.push(f(t + C[s] * h, &stage)?);
    }
    let mut y5 = vec![0.0; n];
    let mut err = vec![0.0; n];
    for i in 0..n {
        let mut hi = 0.0;
        let mut lo = 0.0;
        for s in 0..7 {
            hi += B5[s] * k[s][i];
            lo += B4[s] * k[s][i];
        }
        y5[i] = y[i] + h * hi;
        err[i] = h * (hi - lo);
    }
    Ok((y5, err))
}

/// Adaptive stepper holding the current time, state and proposed step.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub t: f64,
    pub y: Vec<f64>,
    pub h: f64,
    pub control: StepControl,
}

impl Stepper {
    pub fn new(t0: f64, y0: Vec<f64>, control: StepControl) -> Self {
        let h = control.initial_step.min(control.max_step);
        Stepper {
            t: t0,
            y: y0,
            h,
            control,
        }
    }

    fn error_norm(&self, y_new: &[f64], err: &[f64]) -> f64 {
        let c = &self.control;
        err.iter()
            .zip(&self.y)
            .zip(y_new)
            .map(|((e, a), b)| e.abs() / (c.atol + c.rtol * a.abs().max(b.abs())))
            .fold(0.0, f64::max)
    }

    /// Advances by one accepted step without passing `t_limit`. Right-hand
    /// side failures count as rejections and halve the step.
    pub fn step<F>(&mut self, f: &mut F, t_limit: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    {
        loop {
            let remaining = t_limit - self.t;
            let h = self.h.min(remaining).min(self.control.max_step);
            if h < self.control.min_step && h < remaining {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }
            let attempt = dp45_step(f, self.t, &self.y, h);
            let (y_new, err) = match attempt {
                Ok(v) => v,
                Err(Error::DegenerateTriangle { .. }) => {
                    self.h = h * 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let norm = self.error_norm(&y_new, &err);
            if !norm.is_finite() {
                self.h = h * 0.25;
                continue;
            }
            let factor = if norm == 0.0 {
                5.0
            } else {
                (0.9 * crate::math::powf(norm, -0.2)).clamp(0.2, 5.0)
            };
            if norm <= 1.0 {
                self.t = if h == remaining { t_limit } else { self.t + h };
                self.y = y_new;
                let clipped = h < self.h;
                // a step shortened only to land on t_limit keeps the old proposal
                self.h = if clipped {
                    self.h.max(h * factor)
                } else {
                    h * factor
                };
                return Ok(());
            }
            self.h = h * factor;
        }
    }
}

/// Integrates to `t_end`, calling `observe` after every accepted step.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    control: StepControl,
    mut observe: O,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    O: FnMut(f64, &[f64]),
{
    let mut stepper = Stepper::new(t0, y0.to_vec(), control);
    while stepper.t < t_end {
        stepper.step(&mut f, t_end)?;
        observe(stepper.t, &stepper.y);
    }
    Ok(stepper.y)
}

/// Classical fixed-step RK4, used as an independent reference.
pub fn rk4_fixed<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, steps: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = y0.len();
    let h = (t_end - t0) / steps as f64;
    let mut y = y0.to_vec();
    let mut t = t0;
    let shift =
        |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { (0..n).map(|i| y[i] + s * k[i]).collect() };
    for _ in 0..steps {
        let k1 = f(t, &y)?;
        let k2 = f(t + h / 2.0, &shift(&y, &k1, h / 2.0))?;
        let k3 = f(t + h / 2.0, &shift(&y, &k2, h / 2.0))?;
        let k4 = f(t + h, &shift(&y, &k3, h))?;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    #[test]
    fn exponential_decay() {
        let y = integrate(
            |_, y: &[f64]| Ok(vec![-y[0]]),
            0.0,
            &[1.0],
            5.0,
            StepControl::default(),
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - math::exp(-5.0)).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_and_rk4_agree() {
        let f = |_: f64, y: &[f64]| Ok(vec![y[1], -y[0]]);
        let t = 10.0;
        let a = integrate(f, 0.0, &[1.0, 0.0], t, StepControl::default(), |_, _| {}).unwrap();
        let b = rk4_fixed(f, 0.0, &[1.0, 0.0], t, 20_000).unwrap();
        assert!((a[0] - math::cos(t)).abs() < 1e-9);
        assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
    }

    #[test]
    fn observer_times_increase_and_hit_end() {
        let mut times = Vec::new();
        integrate(
            |_, y: &[f64]| Ok(vec![y[0] * y[0]]),
            0.0,
            &[0.5],
            1.0,
            StepControl {
                max_step: 0.1,
                ..StepControl::default()
            },
            |t, _| times.push(t),
        )
        .unwrap();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*times.last().unwrap(), 1.0);
        assert!(times.len() >= 10);
    }
}
