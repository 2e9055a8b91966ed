//! Dimension-generic similarity maps and hyperplane frames.
//!
//! A similarity is `x -> scale * R * x + t` with `scale > 0` and `R`
//! orthogonal. Composition chains re-orthonormalize `R` periodically so long
//! products stay on the orthogonal group. Fixed points come from a direct
//! linear solve of `(I - scale * R) x = t` with partial pivoting, guarded by
//! a singular-value check.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Absolute tolerance for geometric predicates unless a caller overrides it.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Stored hyperplane and halfspace normals are unit within this bound.
pub const UNIT_NORMAL_TOL: f64 = 1e-12;
/// Rotation blocks satisfy `max|R^T R - I| <=` this bound.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Compositions between re-orthonormalization passes.
const REORTHONORMALIZE_EVERY: u32 = 64;

#[derive(Debug, Clone, thiserror::Error)]
pub enum GeomError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("rotation block is not orthogonal (deviation {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },
    #[error("normal must be nonzero with finite entries")]
    InvalidNormal,
    #[error("coordinates must be finite")]
    NonFiniteCoordinates,
    #[error("no unique fixed point (condition {condition:.3e})")]
    NoUniqueFixedPoint { condition: f64 },
    #[error(
        "no power of the rotation is within {delta} of the identity for exponents up to {k_max}"
    )]
    PowerNotFoundWithinBudget { delta: f64, k_max: usize },
}

pub fn vector(coords: &[f64]) -> Vector {
    Vector::from_row_slice(coords)
}

pub(crate) fn check_finite(v: &Vector) -> Result<(), GeomError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(GeomError::NonFiniteCoordinates)
    }
}

fn orthogonality_deviation(m: &Matrix) -> f64 {
    let n = m.nrows();
    (m.transpose() * m - Matrix::identity(n, n)).amax()
}

/// Nearest orthogonal matrix, via the polar factor `U V^T` of the SVD.
pub fn orthonormalize(m: &Matrix) -> Matrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    u * v_t
}

/// An oriented hyperplane `{ x : normal . x = offset }` with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    normal: Vector,
    offset: f64,
}

impl Hyperplane {
    /// Scales `normal` (and `offset` with it) to unit length.
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeomError> {
        check_finite(&normal)?;
        if !offset.is_finite() {
            return Err(GeomError::NonFiniteCoordinates);
        }
        let len = normal.norm();
        if len < 1e-300 {
            return Err(GeomError::InvalidNormal);
        }
        Ok(Hyperplane {
            normal: normal / len,
            offset: offset / len,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

/// The closed halfspace `{ x : normal . x <= offset }` with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Vector,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeomError> {
        let h = Hyperplane::new(normal, offset)?;
        Ok(Halfspace {
            normal: h.normal,
            offset: h.offset,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Positive inside, zero on the boundary hyperplane, negative outside.
    pub fn slack(&self, x: &Vector) -> f64 {
        self.offset - self.normal.dot(x)
    }

    pub fn boundary(&self) -> Hyperplane {
        Hyperplane {
            normal: self.normal.clone(),
            offset: self.offset,
        }
    }
}

/// `x -> scale * R * x + translation` with `R` orthogonal and `scale > 0`.
#[derive(Debug, Clone)]
pub struct Similarity {
    scale: f64,
    rotation: Matrix,
    translation: Vector,
    // Compositions since the rotation was last re-orthonormalized.
    chain: u32,
}

impl Similarity {
    pub fn new(scale: f64, rotation: Matrix, translation: Vector) -> Result<Self, GeomError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeomError::InvalidScale(scale));
        }
        if rotation.nrows() != rotation.ncols() {
            return Err(GeomError::DimensionMismatch {
                left: rotation.nrows(),
                right: rotation.ncols(),
            });
        }
        if rotation.nrows() != translation.len() {
            return Err(GeomError::DimensionMismatch {
                left: rotation.nrows(),
                right: translation.len(),
            });
        }
        check_finite(&translation)?;
        if rotation.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::NonFiniteCoordinates);
        }
        let deviation = orthogonality_deviation(&rotation);
        if deviation > ORTHONORMAL_TOL {
            return Err(GeomError::NotOrthogonal { deviation });
        }
        Ok(Similarity {
            scale,
            rotation,
            translation,
            chain: 0,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Similarity {
            scale: 1.0,
            rotation: Matrix::identity(dim, dim),
            translation: Vector::zeros(dim),
            chain: 0,
        }
    }

    /// Pure homothety of given ratio about `center`.
    pub fn homothety(scale: f64, center: &Vector) -> Result<Self, GeomError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeomError::InvalidScale(scale));
        }
        check_finite(center)?;
        let dim = center.len();
        Ok(Similarity {
            scale,
            rotation: Matrix::identity(dim, dim),
            translation: center * (1.0 - scale),
            chain: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector {
        &self.translation
    }

    pub fn is_homothety(&self) -> bool {
        let n = self.dim();
        (&self.rotation - Matrix::identity(n, n)).amax() <= ORTHONORMAL_TOL
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.rotation * x * self.scale + &self.translation
    }

    /// Applies the inverse map without materializing it.
    pub fn apply_inverse(&self, x: &Vector) -> Vector {
        self.rotation.tr_mul(&(x - &self.translation)) / self.scale
    }

    /// `self` after `inner`: the map `x -> self(inner(x))`.
    pub fn compose(&self, inner: &Similarity) -> Result<Similarity, GeomError> {
        if self.dim() != inner.dim() {
            return Err(GeomError::DimensionMismatch {
                left: self.dim(),
                right: inner.dim(),
            });
        }
        let mut out = Similarity {
            scale: self.scale * inner.scale,
            rotation: &self.rotation * &inner.rotation,
            translation: &self.rotation * &inner.translation * self.scale + &self.translation,
            chain: self.chain + inner.chain + 1,
        };
        if out.chain >= REORTHONORMALIZE_EVERY {
            out.rotation = orthonormalize(&out.rotation);
            out.chain = 0;
        }
        Ok(out)
    }

    pub fn invert(&self) -> Similarity {
        let rt = self.rotation.transpose();
        let translation = &rt * &self.translation * (-1.0 / self.scale);
        Similarity {
            scale: 1.0 / self.scale,
            rotation: rt,
            translation,
            chain: self.chain,
        }
    }

    /// The unique `x` with `f(x) = x`, when `I - scale * R` is nonsingular.
    pub fn fixed_point(&self) -> Result<Vector, GeomError> {
        self.fixed_point_with_condition().map(|(x, _)| x)
    }

    /// Fixed point together with the condition number of `I - scale * R`.
    pub fn fixed_point_with_condition(&self) -> Result<(Vector, f64), GeomError> {
        let n = self.dim();
        let a = Matrix::identity(n, n) - &self.rotation * self.scale;
        let sv = a.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if smin <= 1e-12 * smax.max(1.0) {
            return Err(GeomError::NoUniqueFixedPoint {
                condition: if smin > 0.0 {
                    smax / smin
                } else {
                    f64::INFINITY
                },
            });
        }
        let condition = smax / smin;
        let x = a
            .lu()
            .solve(&self.translation)
            .ok_or(GeomError::NoUniqueFixedPoint { condition })?;
        let residual = (self.apply(&x) - &x).norm();
        if residual > DEFAULT_TOL * (1.0 + x.norm()) {
            return Err(GeomError::NoUniqueFixedPoint { condition });
        }
        Ok((x, condition))
    }
}

/// Smallest `k >= 1` with `max|M^k - I| < delta`.
pub fn power_near_identity(m: &Matrix, delta: f64, k_max: usize) -> Result<usize, GeomError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(GeomError::DimensionMismatch {
            left: n,
            right: m.ncols(),
        });
    }
    let deviation = orthogonality_deviation(m);
    if deviation > ORTHONORMAL_TOL {
        return Err(GeomError::NotOrthogonal { deviation });
    }
    let id = Matrix::identity(n, n);
    let mut p = m.clone();
    for k in 1..=k_max {
        if (&p - &id).amax() < delta {
            return Ok(k);
        }
        p = &p * m;
        if k % 1024 == 0 {
            p = orthonormalize(&p);
        }
    }
    Err(GeomError::PowerNotFoundWithinBudget { delta, k_max })
}

/// Isometric coordinates on a hyperplane: `origin` on the plane plus an
/// orthonormal frame of the plane's tangent directions.
#[derive(Debug, Clone)]
pub struct SliceChart {
    hyperplane: Hyperplane,
    origin: Vector,
    frame: Matrix,
}

impl SliceChart {
    /// Chart with origin at the projection of `origin_hint` onto the plane.
    pub fn new(hyperplane: Hyperplane, origin_hint: &Vector) -> Result<Self, GeomError> {
        let n = hyperplane.dim();
        if origin_hint.len() != n {
            return Err(GeomError::DimensionMismatch {
                left: n,
                right: origin_hint.len(),
            });
        }
        check_finite(origin_hint)?;
        let origin = origin_hint - hyperplane.normal() * hyperplane.signed_distance(origin_hint);
        let frame = tangent_frame(hyperplane.normal());
        Ok(SliceChart {
            hyperplane,
            origin,
            frame,
        })
    }

    pub(crate) fn from_parts(
        hyperplane: Hyperplane,
        origin: Vector,
        frame: Matrix,
    ) -> Result<Self, GeomError> {
        let n = hyperplane.dim();
        if origin.len() != n || frame.nrows() != n || frame.ncols() != n - 1 {
            return Err(GeomError::DimensionMismatch {
                left: n,
                right: origin.len(),
            });
        }
        check_finite(&origin)?;
        let gram = frame.tr_mul(&frame);
        let dev = (gram - Matrix::identity(n - 1, n - 1)).amax();
        let tangency = frame.tr_mul(hyperplane.normal()).amax();
        if dev > ORTHONORMAL_TOL || tangency > ORTHONORMAL_TOL {
            return Err(GeomError::NotOrthogonal {
                deviation: dev.max(tangency),
            });
        }
        if hyperplane.signed_distance(&origin).abs() > DEFAULT_TOL * (1.0 + origin.norm()) {
            return Err(GeomError::InvalidNormal);
        }
        Ok(SliceChart {
            hyperplane,
            origin,
            frame,
        })
    }

    pub fn hyperplane(&self) -> &Hyperplane {
        &self.hyperplane
    }

    pub fn origin(&self) -> &Vector {
        &self.origin
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    pub fn chart_dim(&self) -> usize {
        self.origin.len() - 1
    }

    pub fn to_chart(&self, x: &Vector) -> Vector {
        self.frame.tr_mul(&(x - &self.origin))
    }

    pub fn from_chart(&self, u: &Vector) -> Vector {
        &self.origin + &self.frame * u
    }
}

/// Orthonormal basis of the orthogonal complement of a unit vector, as the
/// trailing columns of a Householder reflector. Deterministic in the input.
fn tangent_frame(normal: &Vector) -> Matrix {
    let n = normal.len();
    let sign = if normal[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = normal.clone();
    v[0] += sign;
    let v = &v / v.norm();
    let mut frame = Matrix::zeros(n, n - 1);
    for col in 1..n {
        let mut e = Vector::zeros(n);
        e[col] = 1.0;
        let reflected = &e - &v * (2.0 * v.dot(&e));
        frame.set_column(col - 1, &reflected);
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner_homothety(scale: f64, corner: &[f64]) -> Similarity {
        Similarity::homothety(scale, &vector(corner)).unwrap()
    }

    fn converge(f: &Similarity, start: Vector, iters: usize) -> Vector {
        let mut x = start;
        for _ in 0..iters {
            x = f.apply(&x);
        }
        x
    }

    #[test]
    fn compose_with_identity_is_identity_on_points() {
        let f = corner_homothety(0.5, &[0.0, 0.0, 1.0]);
        let id = Similarity::identity(3);
        let g = f.compose(&id).unwrap();
        let h = id.compose(&f).unwrap();
        let x = vector(&[0.3, -1.2, 0.7]);
        assert!((g.apply(&x) - f.apply(&x)).norm() < 1e-15);
        assert!((h.apply(&x) - f.apply(&x)).norm() < 1e-15);
    }

    #[test]
    fn composed_corner_homotheties_fix_the_one_third_point() {
        let f1 = corner_homothety(0.5, &[0.0, 0.0]);
        let f2 = corner_homothety(0.5, &[1.0, 1.0]);
        let g = f1.compose(&f2).unwrap();
        assert!((g.scale() - 0.25).abs() < 1e-15);

        // Oracle: iterate the contraction from an arbitrary start.
        let by_iteration = converge(&g, vector(&[7.0, -3.0]), 200);
        let solved = g.fixed_point().unwrap();
        assert!((&solved - &by_iteration).norm() < 1e-12);
        assert!((&solved - vector(&[1.0 / 3.0, 1.0 / 3.0])).norm() < 1e-12);
    }

    #[test]
    fn repeated_corner_homothety_keeps_its_center() {
        let f = corner_homothety(0.5, &[0.0, 0.0, 1.0, 0.0]);
        let g = f.compose(&f).unwrap();
        assert!((g.scale() - 0.25).abs() < 1e-15);
        let p = g.fixed_point().unwrap();
        assert!((p - vector(&[0.0, 0.0, 1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn fixed_point_of_contraction_toward_apex() {
        // x -> x/2 + (0, 0, 1/2) fixes (0, 0, 1).
        let f = Similarity::new(0.5, Matrix::identity(3, 3), vector(&[0.0, 0.0, 0.5])).unwrap();
        let p = f.fixed_point().unwrap();
        assert!((p - vector(&[0.0, 0.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn identity_has_no_unique_fixed_point() {
        let id = Similarity::identity(4);
        assert!(matches!(
            id.fixed_point(),
            Err(GeomError::NoUniqueFixedPoint { .. })
        ));
    }

    #[test]
    fn screw_motion_has_no_unique_fixed_point() {
        // Rotation about the z axis plus translation along it.
        let mut r = Matrix::identity(3, 3);
        r[(0, 0)] = 0.0;
        r[(0, 1)] = -1.0;
        r[(1, 0)] = 1.0;
        r[(1, 1)] = 0.0;
        let f = Similarity::new(1.0, r, vector(&[0.0, 0.0, 1.0])).unwrap();
        assert!(matches!(
            f.fixed_point(),
            Err(GeomError::NoUniqueFixedPoint { .. })
        ));
    }

    #[test]
    fn invert_round_trips_points_and_centers() {
        let f = corner_homothety(0.5, &[0.0, 0.0, 1.0]);
        let inv = f.invert();
        assert!((inv.scale() - 2.0).abs() < 1e-15);
        let center = inv.fixed_point().unwrap();
        assert!((center - vector(&[0.0, 0.0, 1.0])).norm() < 1e-12);
        let x = vector(&[0.1, 0.9, -0.4]);
        assert!((inv.apply(&f.apply(&x)) - &x).norm() < 1e-12);
        assert!((f.apply_inverse(&f.apply(&x)) - &x).norm() < 1e-12);
    }

    #[test]
    fn power_of_identity_is_one() {
        let m = Matrix::identity(3, 3);
        assert_eq!(power_near_identity(&m, 0.1, 10).unwrap(), 1);
    }

    #[test]
    fn power_of_fifth_turn_is_five() {
        let theta = std::f64::consts::TAU / 5.0;
        let mut m = Matrix::identity(2, 2);
        m[(0, 0)] = theta.cos();
        m[(0, 1)] = -theta.sin();
        m[(1, 0)] = theta.sin();
        m[(1, 1)] = theta.cos();
        assert_eq!(power_near_identity(&m, 1e-6, 100).unwrap(), 5);
    }

    #[test]
    fn power_reports_budget_exhaustion() {
        let theta = 1.0_f64; // irrational multiple of tau, no small-k return
        let mut m = Matrix::identity(2, 2);
        m[(0, 0)] = theta.cos();
        m[(0, 1)] = -theta.sin();
        m[(1, 0)] = theta.sin();
        m[(1, 1)] = theta.cos();
        assert!(matches!(
            power_near_identity(&m, 1e-9, 50),
            Err(GeomError::PowerNotFoundWithinBudget { .. })
        ));
        // With a budget that can reach it, the returned power satisfies the bound.
        let k = power_near_identity(&m, 0.05, 1_000_000).unwrap();
        let mut p = Matrix::identity(2, 2);
        for _ in 0..k {
            p = &p * &m;
        }
        assert!((p - Matrix::identity(2, 2)).amax() < 0.05);
    }

    #[test]
    fn long_composition_chains_stay_orthogonal() {
        let mut s = crate::rng::SampleStream::at(99, 0);
        let mut acc = Similarity::identity(3);
        for _ in 0..1000 {
            let theta = s.next_f64() * std::f64::consts::TAU;
            let axis = s.unit_direction(3);
            let r = rotation_about_axis(&axis, theta);
            let f = Similarity::new(1.0, r, Vector::zeros(3)).unwrap();
            acc = acc.compose(&f).unwrap();
        }
        let dev = (acc.rotation().transpose() * acc.rotation() - Matrix::identity(3, 3)).amax();
        assert!(dev <= ORTHONORMAL_TOL, "deviation {dev}");
    }

    fn rotation_about_axis(axis: &Vector, theta: f64) -> Matrix {
        // Rodrigues formula.
        let (x, y, z) = (axis[0], axis[1], axis[2]);
        let k = Matrix::from_row_slice(3, 3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0]);
        Matrix::identity(3, 3) + &k * theta.sin() + &k * &k * (1.0 - theta.cos())
    }

    #[test]
    fn hyperplane_normalizes_input() {
        let h = Hyperplane::new(vector(&[0.0, 3.0]), 6.0).unwrap();
        assert!((h.normal() - vector(&[0.0, 1.0])).norm() < 1e-15);
        assert!((h.offset() - 2.0).abs() < 1e-15);
        assert!(Hyperplane::new(vector(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn chart_is_isometric_and_inverts() {
        let h = Hyperplane::new(vector(&[1.0, 2.0, -2.0]), 3.0).unwrap();
        let chart = SliceChart::new(h, &vector(&[5.0, 5.0, 5.0])).unwrap();
        assert!(
            chart
                .hyperplane()
                .signed_distance(chart.origin())
                .abs()
                .max(0.0)
                < 1e-12
        );
        let mut s = crate::rng::SampleStream::at(4, 2);
        for _ in 0..50 {
            let u = vector(&[s.next_f64() * 4.0 - 2.0, s.next_f64() * 4.0 - 2.0]);
            let v = vector(&[s.next_f64() * 4.0 - 2.0, s.next_f64() * 4.0 - 2.0]);
            let x = chart.from_chart(&u);
            let y = chart.from_chart(&v);
            assert!(chart.hyperplane().signed_distance(&x).abs() < 1e-12);
            assert!(((x.clone() - &y).norm() - (u.clone() - &v).norm()).abs() < 1e-12);
            assert!((chart.to_chart(&x) - &u).norm() < 1e-12);
        }
    }
}
