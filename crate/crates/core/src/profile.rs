//! Warping profiles `r(t)` on `[0, L]` for the cohomogeneity-one metrics
//! `dt² + f² θ² + r² h` with `f = 2 r r' / s`.
//!
//! Profiles use the polynomial ansatz `r'(t) = t (L − t)(γ₀ + γ₁ t)`, so
//!
//! ```text
//! r(t)   = r0 + γ₀L t²/2 + (γ₁L − γ₀) t³/3 − γ₁ t⁴/4
//! r''(t) = γ₀L + 2(γ₁L − γ₀) t − 3γ₁ t²
//! ```
//!
//! The left condition `2 r(0) r''(0) = s` fixes `γ₀ = s / (2 r0 L)`. The right
//! condition `2 r(L) r''(L) = −s` with `r(L) = r0 + γ₀L³/6 + γ₁L⁴/12` and
//! `r''(L) = −γ₀L − γ₁L²` is a quadratic in `γ₁`.

use crate::error::{QchError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub r0: f64,
    pub length: f64,
    pub s: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub k: u32,
    pub n: u32,
}

/// `(r, r', r'', f, f')` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValues {
    pub r: f64,
    pub dr: f64,
    pub d2r: f64,
    pub f: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileReport {
    pub grid: Vec<f64>,
    pub ab2_values: Vec<f64>,
    pub sign_change_points: Vec<f64>,
    /// `(2 r(0) r''(0) − s, 2 r(L) r''(L) + s)`.
    pub boundary_residuals: (f64, f64),
    /// Largest `|ab2_alternate − ab2|` over grid points inside the margin.
    pub max_form_gap: f64,
    pub margin: f64,
}

/// Real roots of `a x² + b x + c`, ascending, computed without cancellation.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> std::result::Result<Vec<f64>, f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(disc);
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, c / q] };
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// `s = 2k/n`.
pub fn curvature_scale(k: u32, n: u32) -> f64 {
    2.0 * f64::from(k) / f64::from(n)
}

pub fn solve_profile(r0: f64, length: f64, k: u32, n: u32) -> Result<Profile> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(QchError::InvalidProfileParameter(format!("r0 must be positive, got {r0}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(QchError::InvalidProfileParameter(format!("L must be positive, got {length}")));
    }
    if k < 1 {
        return Err(QchError::InvalidProfileParameter("k must be at least 1".into()));
    }
    if n < 2 {
        return Err(QchError::InvalidProfileParameter(format!("n must be at least 2, got {n}")));
    }
    let s = curvature_scale(k, n);
    let gamma0 = s / (2.0 * r0 * length);

    // (A + Bγ)(C + Dγ) = s/2 where r(L) = A + Bγ and −r''(L) = C + Dγ
    let a = r0 + gamma0 * length.powi(3) / 6.0;
    let b = length.powi(4) / 12.0;
    let c = gamma0 * length;
    let d = length * length;
    let qa = b * d;
    let qb = a * d + b * c;
    let qc = a * c - 0.5 * s;
    let roots = quadratic_roots(qa, qb, qc).map_err(|disc| QchError::NoRealRoot {
        discriminant: disc,
        r0,
        length,
    })?;

    let residual = |g: f64| (a + b * g) * (c + d * g) - 0.5 * s;
    let slope = |g: f64| b * (c + d * g) + d * (a + b * g);
    let polish = |mut g: f64| {
        for _ in 0..3 {
            let dg = slope(g);
            if dg == 0.0 {
                break;
            }
            g -= residual(g) / dg;
        }
        g
    };

    // r' > 0 on (0, L) needs γ₀ + γ₁t > 0 there; r(L) > 0 as well
    let mut admissible: Vec<f64> = roots
        .iter()
        .map(|&g| polish(g))
        .filter(|&g| gamma0 + g * length > 0.0 && gamma0 > 0.0 && a + b * g > 0.0)
        .collect();
    // gentlest profile first; ties go to the larger root
    admissible.sort_by(|x, y| x.abs().total_cmp(&y.abs()).then(y.total_cmp(x)));
    let gamma1 = *admissible.first().ok_or_else(|| QchError::NoAdmissibleRoot {
        roots: roots.clone(),
        r0,
        length,
    })?;
    Ok(Profile {
        r0,
        length,
        s,
        gamma0,
        gamma1,
        k,
        n,
    })
}

impl Profile {
    fn check_range(&self, t: f64) -> Result<()> {
        if !(0.0..=self.length).contains(&t) {
            return Err(QchError::OutOfRange {
                t,
                lo: 0.0,
                hi: self.length,
            });
        }
        Ok(())
    }

    fn values_unchecked(&self, t: f64) -> ProfileValues {
        let (l, g0, g1) = (self.length, self.gamma0, self.gamma1);
        let r = self.r0 + t * t * (g0 * l / 2.0 + t * ((g1 * l - g0) / 3.0 - g1 * t / 4.0));
        let dr = t * (l - t) * (g0 + g1 * t);
        let d2r = g0 * l + t * (2.0 * (g1 * l - g0) - 3.0 * g1 * t);
        let f = 2.0 * r * dr / self.s;
        let df = 2.0 * (dr * dr + r * d2r) / self.s;
        ProfileValues { r, dr, d2r, f, df }
    }

    pub fn eval(&self, t: f64) -> Result<ProfileValues> {
        self.check_range(t)?;
        Ok(self.values_unchecked(t))
    }

    /// `a + b/2 = −4 r''/r`.
    pub fn ab2(&self, t: f64) -> Result<f64> {
        let v = self.eval(t)?;
        Ok(-4.0 * v.d2r / v.r)
    }

    /// `4((r')²/r² − f' r' / (r f))`, defined only away from the endpoints
    /// where `f` vanishes.
    pub fn ab2_alternate(&self, t: f64, margin: f64) -> Result<f64> {
        let (lo, hi) = (margin, self.length - margin);
        if !(lo..=hi).contains(&t) {
            return Err(QchError::OutOfRange { t, lo, hi });
        }
        let v = self.values_unchecked(t);
        Ok(4.0 * (v.dr * v.dr / (v.r * v.r) - v.df * v.dr / (v.r * v.f)))
    }

    /// Default endpoint margin for [`Profile::ab2_alternate`]: `L · 1e-3`.
    pub fn default_margin(&self) -> f64 {
        self.length * 1e-3
    }

    pub fn boundary_residuals(&self) -> (f64, f64) {
        let left = self.values_unchecked(0.0);
        let right = self.values_unchecked(self.length);
        (
            2.0 * left.r * left.d2r - self.s,
            2.0 * right.r * right.d2r + self.s,
        )
    }

    /// Zeros of the quadratic `r''` lying strictly inside `(0, L)`.
    pub fn inflection_points(&self) -> Vec<f64> {
        let (l, g0, g1) = (self.length, self.gamma0, self.gamma1);
        let roots = if g1 == 0.0 {
            let slope = 2.0 * (g1 * l - g0);
            if slope == 0.0 {
                vec![]
            } else {
                vec![-g0 * l / slope]
            }
        } else {
            quadratic_roots(-3.0 * g1, 2.0 * (g1 * l - g0), g0 * l).unwrap_or_default()
        };
        roots.into_iter().filter(|t| *t > 0.0 && *t < l).collect()
    }
}

pub fn eval_profile(p: &Profile, t: f64) -> Result<ProfileValues> {
    p.eval(t)
}

pub fn ab2(p: &Profile, t: f64) -> Result<f64> {
    p.ab2(t)
}

pub fn ab2_alternate(p: &Profile, t: f64, margin: f64) -> Result<f64> {
    p.ab2_alternate(t, margin)
}

fn bisect(p: &Profile, mut lo: f64, mut hi: f64) -> f64 {
    let sign = |t: f64| p.ab2(t).expect("bracket lies in [0, L]");
    let mut f_lo = sign(lo);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = sign(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn profile_report(p: &Profile, grid_size: usize) -> Result<ProfileReport> {
    profile_report_with_margin(p, grid_size, p.default_margin())
}

/// Samples `ab2` on a uniform grid, locates sign changes by bisection to
/// `1e-12` in `t`, and records the boundary residuals.
pub fn profile_report_with_margin(p: &Profile, grid_size: usize, margin: f64) -> Result<ProfileReport> {
    if grid_size < 3 {
        return Err(QchError::InvalidProfileParameter(format!(
            "grid size must be at least 3, got {grid_size}"
        )));
    }
    let last = (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| if i + 1 == grid_size { p.length } else { p.length * i as f64 / last })
        .collect();
    let ab2_values = grid.iter().map(|&t| p.ab2(t)).collect::<Result<Vec<f64>>>()?;

    let mut sign_change_points = Vec::new();
    for i in 0..grid_size - 1 {
        let (v0, v1) = (ab2_values[i], ab2_values[i + 1]);
        if v0 == 0.0 {
            if sign_change_points.last() != Some(&grid[i]) {
                sign_change_points.push(grid[i]);
            }
        } else if v0 * v1 < 0.0 {
            sign_change_points.push(bisect(p, grid[i], grid[i + 1]));
        }
    }
    if ab2_values[grid_size - 1] == 0.0 {
        sign_change_points.push(p.length);
    }

    let mut max_form_gap = 0.0f64;
    for (&t, &v) in grid.iter().zip(&ab2_values) {
        if t >= margin && t <= p.length - margin {
            max_form_gap = max_form_gap.max((p.ab2_alternate(t, margin)? - v).abs());
        }
    }

    Ok(ProfileReport {
        grid,
        ab2_values,
        sign_change_points,
        boundary_residuals: p.boundary_residuals(),
        max_form_gap,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn reference_profile_gamma0_and_residuals() {
        let p = solve_profile(1.0, PI, 2, 4).unwrap();
        assert_eq!(p.s, 1.0);
        assert!((p.gamma0 - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let (l, r) = p.boundary_residuals();
        assert!(l.abs() <= 1e-12 && r.abs() <= 1e-12, "{l} {r}");
    }

    #[test]
    fn reference_profile_root_choice() {
        let p = solve_profile(1.0, PI, 2, 4).unwrap();
        // independent quadratic in γ₁ from the expanded boundary condition
        let (l, g0, s) = (PI, p.gamma0, 1.0);
        let a = 1.0 + g0 * l.powi(3) / 6.0;
        let (b, c, d) = (l.powi(4) / 12.0, g0 * l, l * l);
        let disc = (a * d + b * c).powi(2) - 4.0 * b * d * (a * c - s / 2.0);
        let near = (-(a * d + b * c) + disc.sqrt()) / (2.0 * b * d);
        let far = (-(a * d + b * c) - disc.sqrt()) / (2.0 * b * d);
        assert!((p.gamma1 - near).abs() < 1e-12 * near.abs().max(1.0));
        assert!(near.abs() < far.abs());
        assert!(p.gamma1 < 0.0);
        assert!(p.gamma0 + p.gamma1 * l > 0.0);
        let v = p.eval(l).unwrap();
        assert!((2.0 * v.r * v.d2r + s).abs() <= 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(solve_profile(0.0, 1.0, 1, 2), Err(QchError::InvalidProfileParameter(_))));
        assert!(matches!(solve_profile(-1.0, 1.0, 1, 2), Err(QchError::InvalidProfileParameter(_))));
        assert!(solve_profile(1.0, 0.0, 1, 2).is_err());
        assert!(solve_profile(1.0, 1.0, 0, 2).is_err());
        assert!(solve_profile(1.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn eval_endpoints_and_midpoint() {
        let p = solve_profile(1.0, PI, 2, 4).unwrap();
        let v0 = p.eval(0.0).unwrap();
        assert_eq!((v0.r, v0.dr, v0.f), (1.0, 0.0, 0.0));
        let vl = p.eval(PI).unwrap();
        assert!(vl.dr.abs() < 1e-15 && vl.f.abs() < 1e-14);
        assert!(p.eval(PI / 2.0).unwrap().dr > 0.0);
        assert!(p.eval(-1e-9).is_err());
        assert!(p.eval(PI + 1e-9).is_err());
    }

    #[test]
    fn ab2_endpoint_values() {
        let p = solve_profile(0.5, 10.0, 1, 2).unwrap();
        let rl = p.eval(10.0).unwrap().r;
        assert!((p.ab2(0.0).unwrap() + 2.0 * p.s / 0.25).abs() < 1e-10);
        assert!((p.ab2(10.0).unwrap() - 2.0 * p.s / (rl * rl)).abs() < 1e-10);
        let roots = p.inflection_points();
        assert_eq!(roots.len(), 1);
        assert!(p.ab2(roots[0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn alternate_form_margin() {
        let p = solve_profile(1.0, PI, 2, 4).unwrap();
        let m = p.default_margin();
        assert!(p.ab2_alternate(0.0, m).is_err());
        assert!(p.ab2_alternate(PI, m).is_err());
        let mid = PI / 2.0;
        assert!((p.ab2_alternate(mid, m).unwrap() - p.ab2(mid).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn report_finds_sign_change() {
        let p = solve_profile(1.0, PI, 2, 4).unwrap();
        let rep = profile_report(&p, 1000).unwrap();
        assert_eq!(rep.sign_change_points.len(), 1);
        let t = rep.sign_change_points[0];
        assert!((t - p.inflection_points()[0]).abs() < 1e-11);
        assert!(rep.max_form_gap < 1e-10);

        let coarse = profile_report(&p, 3).unwrap();
        assert_eq!(coarse.sign_change_points.len(), 1);
        assert!(profile_report(&p, 2).is_err());
    }

    #[test]
    fn quadratic_roots_are_stable() {
        assert_eq!(quadratic_roots(1.0, -3.0, 2.0).unwrap(), vec![1.0, 2.0]);
        let r = quadratic_roots(1.0, 1e8, 1.0).unwrap();
        assert!((r[1] + 1e-8).abs() < 1e-20);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_err());
    }
}
