//! Adaptive Dormand-Prince 5(4) integrator for fixed-size systems.
//!
//! The step-size controller follows Hairer, Norsett & Wanner (vol. I, II.4).
//! Output at requested points comes from the method's fourth-order
//! continuous extension inside accepted steps, so requesting samples never
//! changes the step sequence or the end state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Uniformly spaced centerline samples per rod (0 disables sampling).
    pub samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 100_000,
            samples: 50,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(Error::invalid("rtol", "must be positive"));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::invalid("atol", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be positive"));
        }
        if self.samples == 1 {
            return Err(Error::invalid("samples", "need 0 or at least 2 samples"));
        }
        Ok(())
    }

    pub fn without_samples(mut self) -> Self {
        self.samples = 0;
        self
    }
}

#[derive(Clone, Debug)]
pub struct OdeSolution<const N: usize> {
    pub t_end: f64,
    pub y_end: [f64; N],
    pub samples: Vec<(f64, [f64; N])>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

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

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn scaled_rms<const N: usize>(v: &[f64; N], y: &[f64; N], cfg: &IntegratorConfig) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = cfg.atol + cfg.rtol * y[i].abs();
            (v[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    span: f64,
    cfg: &IntegratorConfig,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let d0 = scaled_rms(y0, y0, cfg);
    let d1 = scaled_rms(f0, y0, cfg);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1 = combine(y0, h0, &[(1.0, f0)]);
    let f1 = f(t0 + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = scaled_rms(&diff, y0, cfg) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(span)
}

// continuous extension of order 4 (Hairer, Norsett & Wanner, dopri5)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// State at `t + theta h` inside an accepted step.
fn dense<const N: usize>(theta: f64, h: f64, y0: &[f64; N], y1: &[f64; N], k: &[&[f64; N]; 7]) -> [f64; N] {
    let [k1, _, k3, k4, k5, k6, k7] = k;
    let t1 = 1.0 - theta;
    let mut out = [0.0; N];
    for i in 0..N {
        let ydiff = y1[i] - y0[i];
        let bspl = h * k1[i] - ydiff;
        let r4 = ydiff - h * k7[i] - bspl;
        let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        out[i] = y0[i] + theta * (ydiff + t1 * (bspl + theta * (r4 + t1 * r5)));
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
///
/// `sample_at` must be sorted ascending inside `[t0, t1]`.
pub fn integrate<const N: usize, F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    sample_at: &[f64],
) -> Result<OdeSolution<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    cfg.validate()?;
    let span = t1 - t0;
    if !(span > 0.0) {
        return Err(Error::invalid("integration interval", "t1 must exceed t0"));
    }
    if !all_finite(&y0) {
        return Err(Error::IntegrationFailure {
            s: t0,
            reason: "non-finite initial state".into(),
        });
    }

    let mut samples = Vec::with_capacity(sample_at.len());
    let mut next_sample = 0;
    while next_sample < sample_at.len() && sample_at[next_sample] <= t0 {
        samples.push((sample_at[next_sample], y0));
        next_sample += 1;
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(&mut f, t0, &y0, &k1, span, cfg);
    let h_min = 16.0 * f64::EPSILON * span.max(t0.abs());
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut last_rejected = false;

    while t < t1 {
        if accepted + rejected >= cfg.max_steps {
            return Err(Error::IntegrationFailure {
                s: t,
                reason: format!("exceeded {} steps", cfg.max_steps),
            });
        }
        let last = t + h >= t1 || (t1 - (t + h)) < h_min;
        if last {
            h = t1 - t;
        }
        if h < h_min {
            return Err(Error::IntegrationFailure {
                s: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }

        let k2 = f(t + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = combine(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t_new = if last { t1 } else { t + h };
        let k7 = f(t_new, &y_new);

        let mut err_sum = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
            err_sum += (e / sc).powi(2);
        }
        let err = (err_sum / N as f64).sqrt();

        if !err.is_finite() || !all_finite(&y_new) {
            rejected += 1;
            last_rejected = true;
            h *= FAC_MIN;
            continue;
        }

        if err <= 1.0 {
            while next_sample < sample_at.len() && sample_at[next_sample] <= t_new {
                let ts = sample_at[next_sample];
                let theta = ((ts - t) / (t_new - t)).clamp(0.0, 1.0);
                let ys = if ts == t_new {
                    y_new
                } else {
                    dense(theta, t_new - t, &y, &y_new, &[&k1, &k2, &k3, &k4, &k5, &k6, &k7])
                };
                samples.push((ts, ys));
                next_sample += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            accepted += 1;
            let mut fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
            };
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h *= fac;
        } else {
            rejected += 1;
            last_rejected = true;
            h *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
        }
    }

    Ok(OdeSolution {
        t_end: t,
        y_end: y,
        samples,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}
