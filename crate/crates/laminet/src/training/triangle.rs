//! Discretizations of the fiber-orientation triangle.
//!
//! The triangle is split into four self-similar triangles per subdivision
//! level; sampling points are the grid vertices plus every subtriangle
//! center. Levels 0, 1 and 2 give the 4-, 10- and 31-point sets.

use crate::error::{Error, Result};
use crate::mech::{Bary, OrientationPoint};

#[derive(Clone, Debug)]
pub struct TriangleDiscretization {
    name: String,
    points: Vec<OrientationPoint<f64>>,
}

impl TriangleDiscretization {
    /// Corners plus centroid (4 points).
    pub fn d4() -> Self {
        Self::subdivided("d4", 0)
    }

    /// One subdivision (10 points).
    pub fn d10() -> Self {
        Self::subdivided("d10", 1)
    }

    /// Two subdivisions (31 points).
    pub fn d31() -> Self {
        Self::subdivided("d31", 2)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "d4" => Ok(Self::d4()),
            "d10" => Ok(Self::d10()),
            "d31" => Ok(Self::d31()),
            other => Err(Error::invalid(format!(
                "unknown discretization '{other}' (expected d4, d10 or d31)"
            ))),
        }
    }

    pub fn custom(name: impl Into<String>, points: Vec<OrientationPoint<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("discretization needs at least one point"));
        }
        Ok(Self { name: name.into(), points })
    }

    fn subdivided(name: &str, levels: u32) -> Self {
        let n = 1usize << levels; // grid rows per edge
        let to_point = |a: usize, b: usize, c: usize, scale: f64| -> OrientationPoint<f64> {
            let bary = Bary::new([
                a as f64 / scale,
                b as f64 / scale,
                c as f64 / scale,
            ])
            .expect("grid coordinates sum to the scale");
            bary.to_point().expect("subdivision stays inside the triangle")
        };

        // Vertices with barycentric coordinates i/n, j/n, (n-i-j)/n,
        // lexicographic in (i, j).
        let mut points = Vec::new();
        for i in 0..=n {
            for j in 0..=(n - i) {
                points.push(to_point(i, j, n - i - j, n as f64));
            }
        }
        // Centers of the 4^levels subtriangles: upward triangles with
        // corners (i, j), (i+1, j), (i, j+1) and downward triangles with
        // corners (i+1, j), (i, j+1), (i+1, j+1), scaled by 3n.
        for i in 0..n {
            for j in 0..(n - i) {
                points.push(to_point(3 * i + 1, 3 * j + 1, 3 * (n - 1 - i - j) + 1, (3 * n) as f64));
                if i + j < n - 1 {
                    points.push(to_point(
                        3 * i + 2,
                        3 * j + 2,
                        3 * (n - 1 - i - j) - 1,
                        (3 * n) as f64,
                    ));
                }
            }
        }
        Self { name: name.to_string(), points }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[OrientationPoint<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cyclic assignment of sample `index` to a discretization point.
    pub fn assign(&self, index: usize) -> OrientationPoint<f64> {
        self.points[index % self.points.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_counts_match_subdivision_levels() {
        assert_eq!(TriangleDiscretization::d4().len(), 4);
        assert_eq!(TriangleDiscretization::d10().len(), 10);
        assert_eq!(TriangleDiscretization::d31().len(), 31);
    }

    #[test]
    fn d4_holds_corners_and_centroid() {
        let d4 = TriangleDiscretization::d4();
        let has = |l1: f64, l2: f64| {
            d4.points()
                .iter()
                .any(|p| (p.lambda_1() - l1).abs() < 1e-12 && (p.lambda_2() - l2).abs() < 1e-12)
        };
        assert!(has(0.5, 0.5)); // planar isotropic corner
        assert!(has(1.0 / 3.0, 1.0 / 3.0)); // isotropic corner
        assert!(has(1.0, 0.0)); // unidirectional corner
        // Centroid: mean of the three corners.
        assert!(has((1.0 + 1.0 / 3.0 + 0.5) / 3.0, (1.0 / 3.0 + 0.5) / 3.0));
    }

    #[test]
    fn all_points_satisfy_triangle_inequalities() {
        for disc in [
            TriangleDiscretization::d4(),
            TriangleDiscretization::d10(),
            TriangleDiscretization::d31(),
        ] {
            for p in disc.points() {
                assert!(p.lambda_1() >= 1.0 / 3.0 - 1e-12 && p.lambda_1() <= 1.0 + 1e-12);
                assert!(p.lambda_2() >= 1.0 - 2.0 * p.lambda_1() - 1e-12);
                assert!(p.lambda_2() <= p.lambda_1() + 1e-12);
            }
        }
    }

    #[test]
    fn cyclic_assignment_wraps() {
        let d4 = TriangleDiscretization::d4();
        assert_eq!(d4.assign(0).lambda_1(), d4.assign(4).lambda_1());
        assert_eq!(d4.assign(1).lambda_1(), d4.assign(5).lambda_1());
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(TriangleDiscretization::by_name("d7").is_err());
    }
}
