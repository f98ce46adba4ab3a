//! Biot–Savart field of idealized (infinitely narrow) coil systems and the
//! size of the region over which the field stays homogeneous.

use serde::{Deserialize, Serialize};

use crate::error::{QvnError, Result};

const MU0: f64 = 1.256_637_061_27e-6;

pub type Vec3 = [f64; 3];

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Any vector perpendicular to `axis` (unit length).
fn perpendicular(axis: Vec3) -> Vec3 {
    let trial = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let p = cross(axis, trial);
    scale(p, 1.0 / norm(p))
}

/// One infinitely narrow circular current loop.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Loop {
    pub center: Vec3,
    /// Unit normal of the loop plane; current circulates right-handed
    /// around it.
    pub axis: Vec3,
    pub radius_m: f64,
    pub ampere_turns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoilKind {
    Helmholtz,
    Maxwell,
}

impl std::str::FromStr for CoilKind {
    type Err = QvnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "helmholtz" => Ok(CoilKind::Helmholtz),
            "maxwell" => Ok(CoilKind::Maxwell),
            other => Err(QvnError::Parse(format!("unknown coil kind: {other}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoilSystem {
    pub loops: Vec<Loop>,
    pub main_radius_m: f64,
}

impl CoilSystem {
    pub fn single_loop(radius_m: f64, ampere_turns: f64) -> Self {
        CoilSystem {
            loops: vec![Loop {
                center: [0.0; 3],
                axis: [0.0, 0.0, 1.0],
                radius_m,
                ampere_turns,
            }],
            main_radius_m: radius_m,
        }
    }

    /// Two loops of radius R spaced by R.
    pub fn helmholtz(radius_m: f64, ampere_turns: f64) -> Self {
        let z = [0.0, 0.0, 1.0];
        CoilSystem {
            loops: vec![
                Loop { center: [0.0, 0.0, -radius_m / 2.0], axis: z, radius_m, ampere_turns },
                Loop { center: [0.0, 0.0, radius_m / 2.0], axis: z, radius_m, ampere_turns },
            ],
            main_radius_m: radius_m,
        }
    }

    /// Three coaxial loops: a central loop of radius R and two outer loops of
    /// radius sqrt(4/7) R at z = +-sqrt(3/7) R, carrying 49:64 of the central
    /// ampere-turns. This nulls field derivatives up to fourth order.
    pub fn maxwell(radius_m: f64, center_ampere_turns: f64) -> Self {
        let z = [0.0, 0.0, 1.0];
        let r_out = (4.0f64 / 7.0).sqrt() * radius_m;
        let z_out = (3.0f64 / 7.0).sqrt() * radius_m;
        let i_out = center_ampere_turns * 49.0 / 64.0;
        CoilSystem {
            loops: vec![
                Loop { center: [0.0, 0.0, -z_out], axis: z, radius_m: r_out, ampere_turns: i_out },
                Loop { center: [0.0; 3], axis: z, radius_m, ampere_turns: center_ampere_turns },
                Loop { center: [0.0, 0.0, z_out], axis: z, radius_m: r_out, ampere_turns: i_out },
            ],
            main_radius_m: radius_m,
        }
    }

    pub fn of_kind(kind: CoilKind, radius_m: f64, ampere_turns: f64) -> Self {
        match kind {
            CoilKind::Helmholtz => CoilSystem::helmholtz(radius_m, ampere_turns),
            CoilKind::Maxwell => CoilSystem::maxwell(radius_m, ampere_turns),
        }
    }

    /// Rigidly rotate the whole system about the origin (Rodrigues formula).
    pub fn rotated(&self, axis: Vec3, angle_rad: f64) -> Self {
        let k = scale(axis, 1.0 / norm(axis));
        let (s, c) = angle_rad.sin_cos();
        let rot = |v: Vec3| -> Vec3 {
            add(
                add(scale(v, c), scale(cross(k, v), s)),
                scale(k, dot(k, v) * (1.0 - c)),
            )
        };
        CoilSystem {
            loops: self
                .loops
                .iter()
                .map(|l| Loop {
                    center: rot(l.center),
                    axis: rot(l.axis),
                    radius_m: l.radius_m,
                    ampere_turns: l.ampere_turns,
                })
                .collect(),
            main_radius_m: self.main_radius_m,
        }
    }
}

/// Field of one loop by the midpoint rule with M segments.
fn loop_field(l: &Loop, point: Vec3, m: usize) -> Vec3 {
    let u = perpendicular(l.axis);
    let v = cross(l.axis, u);
    let pref = MU0 * l.ampere_turns / (4.0 * std::f64::consts::PI);
    let dtheta = 2.0 * std::f64::consts::PI / m as f64;
    let mut b = [0.0; 3];
    for k in 0..m {
        let theta = (k as f64 + 0.5) * dtheta;
        let (s, c) = theta.sin_cos();
        let pos = add(l.center, scale(add(scale(u, c), scale(v, s)), l.radius_m));
        // Tangent direction times arc length of this segment.
        let dl = scale(add(scale(u, -s), scale(v, c)), l.radius_m * dtheta);
        let r = sub(point, pos);
        let r3 = norm(r).powi(3);
        b = add(b, scale(cross(dl, r), pref / r3));
    }
    b
}

/// Distance from a point to the loop's wire circle.
fn wire_distance(l: &Loop, point: Vec3) -> f64 {
    let rel = sub(point, l.center);
    let h = dot(rel, l.axis);
    let radial = sub(rel, scale(l.axis, h));
    let rho = norm(radial);
    ((rho - l.radius_m).powi(2) + h * h).sqrt()
}

/// Magnetic field at a point, with segment-count doubling until two
/// successive refinements agree to 1e-9 relative.
pub fn field_at(coils: &CoilSystem, point: Vec3) -> Result<Vec3> {
    for l in &coils.loops {
        if wire_distance(l, point) < 1e-9 * l.radius_m {
            return Err(QvnError::SingularPoint);
        }
    }
    let eval = |m: usize| -> Vec3 {
        let mut b = [0.0; 3];
        for l in &coils.loops {
            b = add(b, loop_field(l, point, m));
        }
        b
    };
    let mut m = 16;
    let mut prev = eval(m);
    loop {
        m *= 2;
        let cur = eval(m);
        let diff = norm(sub(cur, prev));
        if diff <= 1e-9 * norm(cur).max(f64::MIN_POSITIVE) || m >= 1 << 22 {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// Deterministic near-uniform points on the unit sphere (Fibonacci lattice).
fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

const SPHERE_SAMPLES: usize = 240;

/// Largest r/R such that the field on the sphere of radius r around the
/// center stays within `rel_tolerance` of the central field, found by
/// bisection over deterministic sphere samples.
pub fn homogeneous_sphere_radius(coils: &CoilSystem, rel_tolerance: f64) -> Result<f64> {
    if !(rel_tolerance > 0.0 && rel_tolerance <= 1e-2) {
        return Err(QvnError::Validation(format!(
            "relative tolerance {rel_tolerance} outside (0, 1e-2]"
        )));
    }
    let b0 = field_at(coils, [0.0; 3])?;
    let b0_mag = norm(b0);
    let samples = fibonacci_sphere(SPHERE_SAMPLES);
    let r_main = coils.main_radius_m;
    let uniform_within = |r: f64| -> Result<bool> {
        for s in &samples {
            let b = field_at(coils, scale(*s, r))?;
            if norm(sub(b, b0)) / b0_mag > rel_tolerance {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let (mut lo, mut hi) = (0.0, 0.5 * r_main);
    if uniform_within(hi)? {
        return Ok(hi / r_main);
    }
    while hi - lo > 1e-4 * r_main {
        let mid = 0.5 * (lo + hi);
        if uniform_within(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / r_main)
}

/// Coil radius needed so the homogeneous sphere covers half the trap
/// diagonal.
pub fn required_coil_radius(kind: CoilKind, trap_diagonal_m: f64, rel_tolerance: f64) -> Result<f64> {
    let coils = CoilSystem::of_kind(kind, 1.0, 1.0);
    let ratio = homogeneous_sphere_radius(&coils, rel_tolerance)?;
    Ok(trap_diagonal_m / 2.0 / ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Textbook on-axis field of a single loop.
    fn on_axis_oracle(radius: f64, ampere_turns: f64, z: f64) -> f64 {
        MU0 * ampere_turns * radius * radius / (2.0 * (radius * radius + z * z).powf(1.5))
    }

    #[test]
    fn single_loop_matches_on_axis_formula() {
        let coils = CoilSystem::single_loop(0.07, 3.0);
        for z in [-0.2, -0.03, 0.0, 0.001, 0.05, 0.5] {
            let b = field_at(&coils, [0.0, 0.0, z]).unwrap();
            assert!(b[0].abs() < 1e-18 && b[1].abs() < 1e-18);
            assert_relative_eq!(b[2], on_axis_oracle(0.07, 3.0, z), max_relative = 1e-8);
        }
    }

    #[test]
    fn helmholtz_center_field() {
        // Center field of a Helmholtz pair: (4/5)^{3/2} mu0 I / R.
        let (r, i) = (0.11, 2.5);
        let b = field_at(&CoilSystem::helmholtz(r, i), [0.0; 3]).unwrap();
        let oracle = (0.8f64).powf(1.5) * MU0 * i / r;
        assert_relative_eq!(b[2], oracle, max_relative = 1e-8);
    }

    #[test]
    fn mirror_symmetry() {
        let coils = CoilSystem::helmholtz(1.0, 1.0);
        let a = field_at(&coils, [0.013, 0.007, 0.021]).unwrap();
        let b = field_at(&coils, [-0.013, 0.007, 0.021]).unwrap();
        assert_relative_eq!(norm(a), norm(b), max_relative = 1e-12);
    }

    #[test]
    fn helmholtz_is_flat_near_center() {
        let coils = CoilSystem::helmholtz(1.0, 1.0);
        let b0 = field_at(&coils, [0.0; 3]).unwrap();
        let b = field_at(&coils, [0.0, 0.0, 0.01]).unwrap();
        assert!(norm(sub(b, b0)) / norm(b0) < 1e-7);
    }

    #[test]
    fn singular_point_rejected() {
        let coils = CoilSystem::single_loop(1.0, 1.0);
        assert!(matches!(
            field_at(&coils, [1.0, 0.0, 0.0]),
            Err(QvnError::SingularPoint)
        ));
    }

    #[test]
    fn homogeneous_spheres() {
        let helm = homogeneous_sphere_radius(&CoilSystem::helmholtz(1.0, 1.0), 1e-6).unwrap();
        assert!((helm - 0.03).abs() < 0.005, "helmholtz ratio {helm}");
        let maxw = homogeneous_sphere_radius(&CoilSystem::maxwell(1.0, 1.0), 1e-6).unwrap();
        assert!((maxw - 0.09).abs() < 0.01, "maxwell ratio {maxw}");
    }

    #[test]
    fn sphere_radius_monotone_in_tolerance() {
        let coils = CoilSystem::helmholtz(1.0, 1.0);
        let tight = homogeneous_sphere_radius(&coils, 1e-7).unwrap();
        let mid = homogeneous_sphere_radius(&coils, 1e-6).unwrap();
        let loose = homogeneous_sphere_radius(&coils, 1e-5).unwrap();
        assert!(tight < mid && mid < loose);
    }

    #[test]
    fn sphere_radius_rotation_invariant() {
        let coils = CoilSystem::maxwell(1.0, 1.0);
        let base = homogeneous_sphere_radius(&coils, 1e-6).unwrap();
        let rot = coils.rotated([1.0, 2.0, 0.5], 0.7);
        let rotated = homogeneous_sphere_radius(&rot, 1e-6).unwrap();
        assert!((base - rotated).abs() < 2e-3, "{base} vs {rotated}");
    }

    #[test]
    fn required_radii() {
        // 486 x 534 trap cells of 80 um: diagonal about 58 mm.
        let diagonal = f64::hypot(486.0, 534.0) * 80e-6;
        let helm = required_coil_radius(CoilKind::Helmholtz, diagonal, 1e-6).unwrap();
        assert!((helm - 1.0).abs() < 0.15, "helmholtz radius {helm}");
        let maxw = required_coil_radius(CoilKind::Maxwell, diagonal, 1e-6).unwrap();
        assert!((maxw - 0.33).abs() < 0.05, "maxwell radius {maxw}");
        assert!((helm / maxw - 3.0).abs() < 0.5);
        // Relaxing the tolerance tenfold roughly halves the setup.
        let relaxed = required_coil_radius(CoilKind::Helmholtz, diagonal, 1e-5).unwrap();
        assert!((relaxed / helm - 0.5).abs() < 0.12, "ratio {}", relaxed / helm);
    }
}
