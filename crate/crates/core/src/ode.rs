//! Dormand–Prince 5(4) with PI-free classic step control.
//!
//! Only what the two-time flows and the Painlevé-II solver need: a
//! first-order system `y' = f(s, y)` integrated from `s0` to `s1` (either
//! direction) with mixed absolute/relative tolerance and a per-step hook.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b - b*, the embedded error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|; `f64::INFINITY` for none.
    pub max_step: f64,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_step: f64::INFINITY }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Scratch space for one system size.
pub struct Dopri5 {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    /// Step proposed at the end of the previous call, reused by the next one
    /// when `keep_step` is on. Saves the start-up estimate in chunked runs.
    next_step: Option<f64>,
    keep_step: bool,
    pub stats: OdeStats,
}

impl Dopri5 {
    pub fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            next_step: None,
            keep_step: false,
            stats: OdeStats::default(),
        }
    }

    /// Carry the adapted step size from one `integrate` call to the next.
    pub fn keep_step(mut self) -> Self {
        self.keep_step = true;
        self
    }

    /// Integrate `y` in place from `s0` to `s1`, calling `on_step(s, y)`
    /// after every accepted step. `on_step` returning an error aborts.
    pub fn integrate<F, G>(
        &mut self,
        mut f: F,
        y: &mut [f64],
        s0: f64,
        s1: f64,
        tol: Tolerance,
        mut on_step: G,
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        G: FnMut(f64, &[f64]) -> Result<()>,
    {
        let span = s1 - s0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let n = y.len();
        let min_step = 1e-14 * span.abs().max(s0.abs()).max(1.0);

        f(s0, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        let h0 = match self.next_step.take() {
            Some(h) if self.keep_step => h,
            _ => self.initial_step(&mut f, y, s0, dir, tol),
        };
        let mut h = h0.min(span.abs()).min(tol.max_step);
        let mut carry = h0.min(tol.max_step);
        let mut s = s0;

        loop {
            let remaining = (s1 - s) * dir;
            if remaining <= 0.0 {
                return Ok(());
            }
            let last = h >= remaining;
            let step = if last { remaining } else { h } * dir;

            let err = self.trial(&mut f, y, s, step, tol);
            if !err.is_finite() {
                // Treat a blown-up trial like a large error.
                h *= 0.2;
                self.stats.rejected += 1;
                if h < min_step {
                    return Err(Error::Integration {
                        t: s,
                        eps: f64::NAN,
                        reason: "non-finite derivative".into(),
                    });
                }
                continue;
            }
            if err <= 1.0 {
                s = if last { s1 } else { s + step };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                on_step(s, y)?;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    carry = h;
                }
                h = (h * fac).min(tol.max_step);
                if last {
                    // A truncated final step says little about the next one.
                    self.next_step = Some(h.max(carry));
                    return Ok(());
                }
            } else {
                self.stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
            if h < min_step {
                return Err(Error::Integration {
                    t: s,
                    eps: f64::NAN,
                    reason: format!("step size underflow ({h:.3e}) with {n} unknowns"),
                });
            }
        }
    }

    fn initial_step<F>(&mut self, f: &mut F, y: &[f64], s0: f64, dir: f64, tol: Tolerance) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let sc = |v: f64| tol.atol + tol.rtol * v.abs();
        let d0 = rms(y.iter().map(|v| v / sc(*v)));
        let d1 = rms(self.k[0].iter().zip(y).map(|(k, v)| k / sc(*v)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for ((t, v), k) in self.tmp.iter_mut().zip(y).zip(&self.k[0]) {
            *t = v + dir * h0 * k;
        }
        f(s0 + dir * h0, &self.tmp, &mut self.k[1]);
        self.stats.evaluations += 1;
        let d2 = rms(self.k[1].iter().zip(&self.k[0]).zip(y).map(|((a, b), v)| (a - b) / sc(*v))) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// One trial step; fills `y_new` and `k[6]`, returns the scaled error.
    fn trial<F>(&mut self, f: &mut F, y: &[f64], s: f64, h: f64, tol: Tolerance) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(s + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(s + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(s + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(s + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(s + h, tmp, k6);
        let y_new = &mut self.y_new;
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(s + h, y_new, k7);
        self.stats.evaluations += 6;

        let mut acc = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc) * (e / sc);
        }
        (acc / n as f64).sqrt()
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in it {
        s += v * v;
        n += 1;
    }
    (s / n.max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut y = [1.0];
        let mut solver = Dopri5::new(1);
        solver
            .integrate(|_, y, d| d[0] = -y[0], &mut y, 0.0, 5.0, Tolerance::new(1e-10), |_, _| Ok(()))
            .unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_backwards() {
        let mut y = [0.0, 1.0];
        let mut solver = Dopri5::new(2);
        let f = |_: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        solver.integrate(f, &mut y, 0.0, -3.0, Tolerance::new(1e-11), |_, _| Ok(())).unwrap();
        assert!((y[0] - (-3.0f64).sin()).abs() < 1e-9);
        assert!((y[1] - (-3.0f64).cos()).abs() < 1e-9);
    }

    #[test]
    fn tolerance_controls_error() {
        // Halving the tolerance by 100x must shrink the error.
        let run = |tol: f64| {
            let mut y = [0.0, 1.0];
            let f = |s: f64, y: &[f64], d: &mut [f64]| {
                d[0] = y[1];
                d[1] = -(1.0 + 0.1 * s) * y[0];
            };
            Dopri5::new(2).integrate(f, &mut y, 0.0, 20.0, Tolerance::new(tol), |_, _| Ok(())).unwrap();
            y
        };
        let reference = run(1e-13);
        let e6 = (run(1e-6)[0] - reference[0]).abs();
        let e8 = (run(1e-8)[0] - reference[0]).abs();
        assert!(e8 < e6 / 10.0, "{e6} {e8}");
    }
}
