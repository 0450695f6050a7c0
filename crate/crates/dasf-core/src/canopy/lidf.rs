//! Two-parameter leaf inclination distribution on the 13 standard
//! inclination classes (8 classes of 10 degrees, 5 classes of 2 degrees).

use super::CanopyError;

/// Class centers in degrees.
pub const LIDF_CLASS_CENTERS: [f64; 13] =
    [5.0, 15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0, 81.0, 83.0, 85.0, 87.0, 89.0];

const CLASS_BOUNDS: [f64; 13] =
    [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 82.0, 84.0, 86.0, 88.0, 90.0];

/// Cumulative inclination fraction below `theta_deg` for the (a, b)
/// characteristic-function family.
fn cumulative(a: f64, b: f64, theta_deg: f64) -> f64 {
    if a > 1.0 {
        return 1.0 - theta_deg.to_radians().cos();
    }
    let p = 2.0 * theta_deg.to_radians();
    let mut x = p;
    let mut y = 0.0;
    for _ in 0..200 {
        y = a * x.sin() + 0.5 * b * (2.0 * x).sin();
        let dx = 0.5 * (y - x + p);
        x += dx;
        if dx.abs() < 1e-12 {
            break;
        }
    }
    (2.0 * y + p) / std::f64::consts::PI
}

/// Leaf inclination density over the 13 classes; sums to 1.
pub fn lidf_density(a: f64, b: f64) -> Result<[f64; 13], CanopyError> {
    if a.abs() + b.abs() > 1.0 + 1e-9 {
        return Err(CanopyError::InadmissibleLidf { a, b });
    }
    let mut freq = [0.0; 13];
    let mut prev = 0.0;
    for (i, &bound) in CLASS_BOUNDS.iter().enumerate() {
        let c = if i == 12 { 1.0 } else { cumulative(a, b, bound) };
        freq[i] = c - prev;
        prev = c;
    }
    for f in freq.iter_mut() {
        if *f < -1e-9 {
            return Err(CanopyError::InadmissibleLidf { a, b });
        }
        *f = f.max(0.0);
    }
    Ok(freq)
}
