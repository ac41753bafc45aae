//! Embedded Dormand–Prince 5(4) integrator for complex linear systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Right-hand side of `dy/dt = f(t, y)`.
pub(crate) trait OdeSystem {
    fn len(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
    /// Projection applied after every accepted step.
    fn post_step(&mut self, _y: &mut [Complex64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
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
// fifth-order weights (also row 7 of the tableau)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) struct DormandPrince {
    control: StepControl,
    h: f64,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
    fsal_valid: bool,
    pub stats: StepStats,
}

impl DormandPrince {
    pub fn new(len: usize, initial_step: f64, control: StepControl) -> Self {
        let zeros = || vec![Complex64::new(0.0, 0.0); len];
        Self {
            control,
            h: initial_step,
            k: [zeros(), zeros(), zeros(), zeros(), zeros(), zeros(), zeros()],
            stage: zeros(),
            y_new: zeros(),
            fsal_valid: false,
            stats: StepStats::default(),
        }
    }

    /// Forget the cached derivative, e.g. after the state was changed by a gate
    /// or the system was replaced.
    pub fn invalidate(&mut self) {
        self.fsal_valid = false;
    }

    /// Integrate from `*t` to `t_end`, landing exactly on `t_end`.
    pub fn advance<S: OdeSystem>(
        &mut self,
        sys: &mut S,
        t: &mut f64,
        y: &mut Vec<Complex64>,
        t_end: f64,
    ) -> Result<()> {
        let n = y.len();
        debug_assert_eq!(n, sys.len());
        if !self.fsal_valid {
            sys.rhs(*t, y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        while *t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.control.max_steps {
                return Err(Error::Integration {
                    t: *t,
                    reason: format!("exceeded {} steps", self.control.max_steps),
                });
            }
            let remaining = t_end - *t;
            let last = self.h >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { self.h };
            if h < self.control.min_step && !last {
                return Err(Error::Integration {
                    t: *t,
                    reason: format!("step size underflow (h = {h:.3e})"),
                });
            }
            self.stages(sys, *t, h, y);

            let mut err = 0.0f64;
            for i in 0..n {
                let e = h
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                let scale = self.control.atol + self.control.rtol * y[i].norm().max(self.y_new[i].norm());
                err = err.max(e.norm() / scale);
            }
            if !err.is_finite() {
                return Err(Error::Integration {
                    t: *t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.stats.accepted += 1;
                *t = if last { t_end } else { *t + h };
                std::mem::swap(y, &mut self.y_new);
                // post_step only removes rounding-level drift, so k7 stays valid
                sys.post_step(y);
                self.k.swap(0, 6);
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }

    fn stages<S: OdeSystem>(&mut self, sys: &mut S, t: f64, h: f64, y: &[Complex64]) {
        let n = y.len();
        macro_rules! stage {
            ($dst:expr, $c:expr, [$(($a:expr, $k:expr)),*]) => {{
                for i in 0..n {
                    self.stage[i] = y[i] $(+ h * $a * self.k[$k][i])*;
                }
                let (_, rest) = self.k.split_at_mut($dst);
                sys.rhs(t + $c * h, &self.stage, &mut rest[0]);
            }};
        }
        stage!(1, C2, [(A21, 0)]);
        stage!(2, C3, [(A31, 0), (A32, 1)]);
        stage!(3, C4, [(A41, 0), (A42, 1), (A43, 2)]);
        stage!(4, C5, [(A51, 0), (A52, 1), (A53, 2), (A54, 3)]);
        stage!(5, 1.0, [(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)]);
        for i in 0..n {
            self.y_new[i] = y[i]
                + h * (B1 * self.k[0][i]
                    + B3 * self.k[2][i]
                    + B4 * self.k[3][i]
                    + B5 * self.k[4][i]
                    + B6 * self.k[5][i]);
        }
        let (_, rest) = self.k.split_at_mut(6);
        sys.rhs(t + h, &self.y_new, &mut rest[0]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation {
        rate: Complex64,
    }

    impl OdeSystem for Rotation {
        fn len(&self) -> usize {
            1
        }
        fn rhs(&mut self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = self.rate * y[0];
        }
    }

    fn control() -> StepControl {
        StepControl {
            rtol: 1e-10,
            atol: 1e-10,
            min_step: 1e-14,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn damped_rotation_matches_exponential() {
        let rate = Complex64::new(-0.3, 2.0);
        let mut sys = Rotation { rate };
        let mut dp = DormandPrince::new(1, 0.01, control());
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut t = 0.0;
        for k in 1..=10 {
            let t_end = k as f64 * 0.7;
            dp.advance(&mut sys, &mut t, &mut y, t_end).unwrap();
            assert_eq!(t, t_end);
            let exact = (rate * t_end).exp();
            assert!((y[0] - exact).norm() < 1e-8, "t = {t_end}");
        }
        assert!(dp.stats.accepted > 10);
    }

    #[test]
    fn step_budget_is_reported() {
        let mut sys = Rotation {
            rate: Complex64::new(0.0, 50.0),
        };
        let mut dp = DormandPrince::new(
            1,
            0.01,
            StepControl {
                max_steps: 5,
                ..control()
            },
        );
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut t = 0.0;
        let err = dp.advance(&mut sys, &mut t, &mut y, 10.0).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
    }
}
