use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifferenceScheme {
    #[default]
    Forward,
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    /// Relative step; column `j` uses `h = step * max(1, |x_j|)`.
    pub step: f64,
    pub scheme: DifferenceScheme,
    pub exec: ExecMode,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            step: 1e-8,
            scheme: DifferenceScheme::Forward,
            exec: ExecMode::Sequential,
        }
    }
}

/// Step used for column `j`.
pub fn column_step(x_j: f64, step: f64) -> f64 {
    step * x_j.abs().max(1.0)
}

/// Finite-difference column `j` given a routine that evaluates `f` at `x`
/// with entry `j` replaced.
pub(crate) fn difference_column<F>(
    x_j: f64,
    j: usize,
    f0: Option<&[f64]>,
    opts: &FdOptions,
    eval_at: F,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let wrap = |e: Error| Error::JacobianColumn {
        column: j,
        source: Box::new(e),
    };
    let h = column_step(x_j, opts.step);
    match opts.scheme {
        DifferenceScheme::Forward => {
            let plus = x_j + h;
            let fp = eval_at(plus).map_err(wrap)?;
            let base;
            let f0 = match f0 {
                Some(f0) => f0,
                None => {
                    base = eval_at(x_j).map_err(wrap)?;
                    &base
                }
            };
            let dh = plus - x_j;
            Ok(fp.iter().zip(f0).map(|(a, b)| (a - b) / dh).collect())
        }
        DifferenceScheme::Central => {
            let (plus, minus) = (x_j + h, x_j - h);
            let fp = eval_at(plus).map_err(wrap)?;
            let fm = eval_at(minus).map_err(wrap)?;
            let dh = plus - minus;
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / dh).collect())
        }
    }
}

pub(crate) fn assemble_columns(columns: Vec<Vec<f64>>) -> DMatrix<f64> {
    let rows = columns.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
}

/// Finite-difference Jacobian of `f` at `x`. `f0`, when given, must equal
/// `f(x)` and saves one evaluation in forward mode.
pub fn fd_jacobian_with<F>(f: F, x: &[f64], f0: Option<&[f64]>, opts: &FdOptions) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let base;
    let f0 = match (f0, opts.scheme) {
        (Some(v), _) => Some(v),
        (None, DifferenceScheme::Forward) => {
            base = f(x)?;
            Some(base.as_slice())
        }
        (None, DifferenceScheme::Central) => None,
    };
    let columns = map_indexed(opts.exec, x.len(), |j| {
        difference_column(x[j], j, f0, opts, |xj| {
            let mut xp = x.to_vec();
            xp[j] = xj;
            f(&xp)
        })
    });
    Ok(assemble_columns(columns.into_iter().collect::<Result<_>>()?))
}

/// Forward-difference Jacobian, `col_j = (f(x + h e_j) - f(x)) / h`.
pub fn fd_jacobian<F>(f: F, x: &[f64], fd_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    fd_jacobian_with(
        f,
        x,
        None,
        &FdOptions {
            step: fd_step,
            ..Default::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![2.0 * x[0] - 3.0 * x[1] + 1.0, 0.5 * x[1], x[0] + x[1] + x[2]])
    }

    #[test]
    fn linear_function_is_exact() {
        let expected = DMatrix::from_row_slice(3, 3, &[2.0, -3.0, 0.0, 0.0, 0.5, 0.0, 1.0, 1.0, 1.0]);
        for step in [1e-8, 1e-4, 1e-1] {
            let j = fd_jacobian(linear, &[0.3, -2.0, 7.0], step).unwrap();
            // exact up to cancellation, which grows like eps |f| / h
            assert!((j - &expected).abs().max() < 1e-14 / step, "step {step}");
        }
    }

    #[test]
    fn central_is_second_order() {
        let f = |x: &[f64]| Ok(vec![x[0].sin() * x[1], x[1].exp()]);
        let x = [0.7, 0.2];
        let exact = DMatrix::from_row_slice(2, 2, &[0.7f64.cos() * 0.2, 0.7f64.sin(), 0.0, 0.2f64.exp()]);
        let err = |scheme, step| {
            let opts = FdOptions {
                step,
                scheme,
                exec: ExecMode::Sequential,
            };
            (fd_jacobian_with(f, &x, None, &opts).unwrap() - &exact).abs().max()
        };
        let (f1, f2) = (err(DifferenceScheme::Forward, 1e-3), err(DifferenceScheme::Forward, 1e-4));
        let (c1, c2) = (err(DifferenceScheme::Central, 1e-3), err(DifferenceScheme::Central, 1e-4));
        assert!((f1 / f2 - 10.0).abs() < 1.0, "forward ratio {}", f1 / f2);
        assert!((c1 / c2 - 100.0).abs() < 10.0, "central ratio {}", c1 / c2);
    }

    #[test]
    fn failing_column_is_reported() {
        let f = |x: &[f64]| {
            if x[1] > 1.0 {
                Err(Error::invalid("x", "out of domain"))
            } else {
                Ok(vec![x[0], x[1]])
            }
        };
        let err = fd_jacobian(f, &[0.0, 1.0], 1e-6).unwrap_err();
        assert!(matches!(err, Error::JacobianColumn { column: 1, .. }));
    }

    #[test]
    fn parallel_matches_sequential() {
        let f = |x: &[f64]| Ok(vec![x[0] * x[1], x[1].cos(), x[2] * x[0]]);
        let x = [1.1, -0.3, 2.0];
        let seq = fd_jacobian_with(f, &x, None, &FdOptions::default()).unwrap();
        let par = fd_jacobian_with(
            f,
            &x,
            None,
            &FdOptions {
                exec: ExecMode::Parallel,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }
}
