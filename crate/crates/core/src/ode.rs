//! Rotationally symmetric surfaces `dt² + ρ(t)² dθ²` with
//! `ΔS + S²/3 = c`, shot from a smooth pole.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("profile radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("invalid controls: {0}")]
    Controls(String),
    #[error("invalid grid '{name}': {reason}")]
    Grid { name: &'static str, reason: String },
}

/// `(ρ, ρ′, S, S′)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileState {
    pub t: f64,
    pub rho: f64,
    pub drho: f64,
    pub s: f64,
    pub ds: f64,
}

impl ProfileState {
    fn y(&self) -> [f64; 4] {
        [self.rho, self.drho, self.s, self.ds]
    }

    fn from_y(t: f64, y: [f64; 4]) -> ProfileState {
        ProfileState {
            t,
            rho: y[0],
            drho: y[1],
            s: y[2],
            ds: y[3],
        }
    }
}

/// `ρ″ = −ρS/2`, `S″ = c − S²/3 − (ρ′/ρ)S′`.
pub fn rhs(y: &[f64; 4], c: f64) -> Result<[f64; 4], OdeError> {
    let [rho, drho, s, ds] = *y;
    if !(rho > 0.0) {
        return Err(OdeError::NonPositiveRadius(rho));
    }
    Ok([drho, -rho * s / 2.0, ds, c - s * s / 3.0 - drho / rho * ds])
}

/// Series data at `t = ε` for a smooth pole with `S(0) = S₀`.
pub fn pole_start(s0: f64, c: f64, eps: f64) -> ProfileState {
    let s2 = (c - s0 * s0 / 3.0) / 4.0;
    ProfileState {
        t: eps,
        rho: eps - s0 / 12.0 * eps.powi(3),
        drho: 1.0 - s0 / 4.0 * eps * eps,
        s: s0 + s2 * eps * eps,
        ds: 2.0 * s2 * eps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeControls {
    pub rtol: f64,
    pub atol: f64,
    pub epsilon: f64,
    /// Closure event threshold on `ρ`.
    pub delta: f64,
    pub t_max: f64,
    pub blow_up: f64,
    /// Cap smoothness tolerance on `|ρ′ + 1|` and `|S′|`.
    pub cap_tol: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for OdeControls {
    fn default() -> Self {
        OdeControls {
            rtol: 1e-10,
            atol: 1e-12,
            epsilon: 1e-6,
            delta: 1e-3,
            t_max: 50.0,
            blow_up: 1e6,
            cap_tol: 1e-4,
            max_steps: 200_000,
            min_step: 1e-13,
        }
    }
}

impl OdeControls {
    fn validate(&self) -> Result<(), OdeError> {
        let pos = [
            ("rtol", self.rtol),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
            ("t_max", self.t_max),
            ("blow_up", self.blow_up),
            ("cap_tol", self.cap_tol),
            ("min_step", self.min_step),
        ];
        for (n, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OdeError::Controls(format!("{n} must be positive and finite")));
            }
        }
        if !(self.atol >= 0.0) || self.epsilon >= self.t_max || self.max_steps == 0 {
            return Err(OdeError::Controls("need atol ≥ 0, epsilon < t_max, max_steps > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// Smooth opposite cap.
    Closed,
    /// Reached `t_max` with `ρ > 0`.
    CompleteOpen,
    /// `|S|` exceeded the blow-up bound.
    CurvatureBlowUp,
    /// `ρ` reached zero without a smooth cap.
    SingularClose,
    /// Step size underflow or step budget exhausted.
    StepFailure,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Closed => "Closed",
            Classification::CompleteOpen => "CompleteOpen",
            Classification::CurvatureBlowUp => "CurvatureBlowUp",
            Classification::SingularClose => "SingularClose",
            Classification::StepFailure => "StepFailure",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanOutcome {
    pub class: Classification,
    /// `ρ = 0` time by extrapolation from the closure event.
    pub t_close: Option<f64>,
    pub s_min: f64,
    pub s_max: f64,
    pub steps: usize,
    pub last: ProfileState,
}

impl ScanOutcome {
    pub fn s_range(&self) -> f64 {
        self.s_max - self.s_min
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<ProfileState>,
    pub outcome: ScanOutcome,
}

// Dormand–Prince 5(4); the system is autonomous so the nodes are not needed
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One trial step: the fifth-order solution and its error estimate, or
/// `None` if a stage left the domain.
fn dopri_step(y: &[f64; 4], h: f64, c: f64) -> Option<([f64; 4], [f64; 4])> {
    let mut k = [[0.0; 4]; 7];
    k[0] = rhs(y, c).ok()?;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for m in 0..4 {
                ys[m] += h * A[s - 1][j] * kj[m];
            }
        }
        k[s] = rhs(&ys, c).ok()?;
    }
    let mut y5 = *y;
    let mut err = [0.0; 4];
    for m in 0..4 {
        for j in 0..6 {
            y5[m] += h * A[5][j] * k[j][m];
        }
        for j in 0..7 {
            err[m] += h * E[j] * k[j][m];
        }
    }
    y5.iter().all(|v| v.is_finite()).then_some((y5, err))
}

/// Shoot from the smooth pole with `S(0) = s0` and classify the profile.
pub fn integrate_profile(s0: f64, c: f64, ctl: &OdeControls, keep: bool) -> Result<Trajectory, OdeError> {
    ctl.validate()?;
    let mut st = pole_start(s0, c, ctl.epsilon);
    let mut states = if keep { vec![st] } else { Vec::new() };
    let (mut s_min, mut s_max) = (st.s, st.s);
    let mut h = 1e-3_f64.min(ctl.t_max - st.t);
    let mut steps = 0;
    let finish = |class, t_close, last: ProfileState, s_min, s_max, steps, states| Trajectory {
        states,
        outcome: ScanOutcome {
            class,
            t_close,
            s_min,
            s_max,
            steps,
            last,
        },
    };
    loop {
        if st.t >= ctl.t_max {
            return Ok(finish(Classification::CompleteOpen, None, st, s_min, s_max, steps, states));
        }
        if steps >= ctl.max_steps || h < ctl.min_step {
            return Ok(finish(Classification::StepFailure, None, st, s_min, s_max, steps, states));
        }
        h = h.min(ctl.t_max - st.t);
        let y = st.y();
        let Some((yn, e)) = dopri_step(&y, h, c) else {
            h *= 0.25;
            continue;
        };
        let mut norm = 0.0_f64;
        for m in 0..4 {
            let sc = ctl.atol + ctl.rtol * y[m].abs().max(yn[m].abs());
            norm += (e[m] / sc).powi(2);
        }
        let norm = (norm / 4.0).sqrt();
        if !(norm <= 1.0) || yn[0] <= 0.0 {
            let f = if norm.is_finite() {
                (0.9 * norm.powf(-0.2)).clamp(0.1, 0.5)
            } else {
                0.1
            };
            h *= f;
            continue;
        }
        steps += 1;
        st = ProfileState::from_y(st.t + h, yn);
        s_min = s_min.min(st.s);
        s_max = s_max.max(st.s);
        if keep {
            states.push(st);
        }
        if st.s.abs() > ctl.blow_up {
            return Ok(finish(Classification::CurvatureBlowUp, None, st, s_min, s_max, steps, states));
        }
        if st.rho < ctl.delta && st.drho < 0.0 {
            let t_close = st.t + st.rho / -st.drho;
            let smooth = (st.drho + 1.0).abs() <= ctl.cap_tol && st.ds.abs() <= ctl.cap_tol;
            let class = if smooth {
                Classification::Closed
            } else {
                Classification::SingularClose
            };
            return Ok(finish(class, Some(t_close), st, s_min, s_max, steps, states));
        }
        let f = if norm > 0.0 { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        h *= f;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    fn check(&self, name: &'static str) -> Result<(), OdeError> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(OdeError::Grid {
                name,
                reason: "need finite min ≤ max".into(),
            });
        }
        Ok(())
    }
}

/// Scan configuration document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub s0: Grid,
    pub c: Grid,
    pub controls: OdeControls,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            s0: Grid {
                min: -4.0,
                max: 4.0,
                count: 41,
            },
            c: Grid {
                min: -2.0,
                max: 2.0,
                count: 41,
            },
            controls: OdeControls::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub s0: f64,
    pub c: f64,
    pub class: Classification,
    pub t_close: Option<f64>,
    pub s_min: f64,
    pub s_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// Every closed profile has constant `S` within the tolerance.
    pub closed_are_round: bool,
    pub closed: usize,
    pub max_closed_s_range: f64,
}

/// Classify every grid cell; rows are ordered by `S₀` then `c`.
pub fn scan(cfg: &ScanConfig, s_range_tol: f64) -> Result<ScanTable, OdeError> {
    cfg.s0.check("s0")?;
    cfg.c.check("c")?;
    cfg.controls.validate()?;
    let cells: Vec<(f64, f64)> = cfg
        .s0
        .values()
        .into_iter()
        .flat_map(|s| cfg.c.values().into_iter().map(move |c| (s, c)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(s0, c)| {
            let o = integrate_profile(s0, c, &cfg.controls, false)?.outcome;
            Ok(ScanRow {
                s0,
                c,
                class: o.class,
                t_close: o.t_close,
                s_min: o.s_min,
                s_max: o.s_max,
            })
        })
        .collect::<Result<Vec<_>, OdeError>>()?;
    let closed: Vec<&ScanRow> = rows.iter().filter(|r| r.class == Classification::Closed).collect();
    let max_closed_s_range = closed.iter().map(|r| r.s_max - r.s_min).fold(0.0, f64::max);
    Ok(ScanTable {
        closed_are_round: max_closed_s_range <= s_range_tol,
        closed: closed.len(),
        max_closed_s_range,
        rows,
    })
}

impl ScanTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("S0,c,class,t_close,S_min,S_max\n");
        for r in &self.rows {
            let t = r.t_close.map(|t| format!("{t:.12e}")).unwrap_or_default();
            out.push_str(&format!(
                "{:.6},{:.6},{},{},{:.12e},{:.12e}\n",
                r.s0,
                r.c,
                r.class.name(),
                t,
                r.s_min,
                r.s_max
            ));
        }
        out
    }
}

/// Sup-norm distance of a trajectory from `ρ = r sin(t/r)` on `[ε, πr − ε]`.
pub fn round_profile_error(traj: &Trajectory, r: f64, eps: f64) -> f64 {
    traj.states
        .iter()
        .filter(|s| s.t >= eps && s.t <= std::f64::consts::PI * r - eps)
        .map(|s| (s.rho - r * (s.t / r).sin()).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms_solve_rhs() {
        // flat, unit and radius-2 spheres, substituted into the system
        let t: f64 = 0.7;
        let d = rhs(&[t, 1.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(d, [1.0, 0.0, 0.0, 0.0]);
        for r in [1.0_f64, 2.0] {
            let (rho, drho) = (r * (t / r).sin(), (t / r).cos());
            let s = 2.0 / (r * r);
            let c = s * s / 3.0;
            let d = rhs(&[rho, drho, s, 0.0], c).unwrap();
            assert!((d[1] + (t / r).sin() / r).abs() < 1e-15 && d[3].abs() < 1e-15);
        }
        assert!(matches!(rhs(&[0.0, 1.0, 0.0, 0.0], 0.0), Err(OdeError::NonPositiveRadius(_))));
    }

    #[test]
    fn series_start_matches_unit_sphere() {
        let st = pole_start(2.0, 4.0 / 3.0, 1e-3);
        assert!((st.rho - (1e-3f64).sin()).abs() < 1e-16);
        assert!((st.drho - (1e-3f64).cos()).abs() < 1e-12);
        assert_eq!(st.ds, 0.0);
    }

    #[test]
    fn round_spheres_close() {
        let ctl = OdeControls::default();
        for r in [1.0, 2.0] {
            let s0 = 2.0 / (r * r);
            let tr = integrate_profile(s0, s0 * s0 / 3.0, &ctl, true).unwrap();
            let o = &tr.outcome;
            assert_eq!(o.class, Classification::Closed);
            assert!((o.t_close.unwrap() - PI * r).abs() < 1e-6, "{:?}", o.t_close);
            assert!(o.s_range() < 1e-6);
            assert!(round_profile_error(&tr, r, 1e-6) < 1e-7);
        }
    }

    #[test]
    fn flat_and_degenerate_cases() {
        let o = integrate_profile(0.0, 0.0, &OdeControls::default(), false).unwrap().outcome;
        assert_eq!(o.class, Classification::CompleteOpen);
        assert!((o.last.rho - 50.0).abs() < 1e-8);
        let empty = ScanConfig {
            s0: Grid {
                min: 0.0,
                max: 1.0,
                count: 0,
            },
            ..Default::default()
        };
        assert!(scan(&empty, 1e-5).unwrap().rows.is_empty());
        let bad = OdeControls {
            rtol: -1.0,
            ..Default::default()
        };
        assert!(integrate_profile(0.0, 0.0, &bad, false).is_err());
    }

    #[test]
    fn halving_tolerance_moves_closure_little() {
        let a = OdeControls::default();
        let b = OdeControls {
            rtol: a.rtol / 2.0,
            atol: a.atol / 2.0,
            ..a
        };
        let ta = integrate_profile(2.0, 4.0 / 3.0, &a, false).unwrap().outcome.t_close.unwrap();
        let tb = integrate_profile(2.0, 4.0 / 3.0, &b, false).unwrap().outcome.t_close.unwrap();
        assert!((ta - tb).abs() < 1e-8, "{}", (ta - tb).abs());
    }

    #[test]
    fn non_round_start_does_not_close_smoothly() {
        let o = integrate_profile(2.0, 1.0, &OdeControls::default(), false).unwrap().outcome;
        assert_ne!(o.class, Classification::Closed);
    }
}
