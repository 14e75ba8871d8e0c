//! Closed-form objectives with known optima, used to check the optimizer.

/// `F(h) = -|h - center|^2`, maximized at `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sphere {
    pub center: Vec<f64>,
}

impl Sphere {
    pub fn new(center: Vec<f64>) -> Self {
        Sphere { center }
    }

    pub fn value(&self, h: &[f64]) -> f64 {
        -self.distance_sq(h)
    }

    pub fn distance_sq(&self, h: &[f64]) -> f64 {
        h.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, h: &[f64]) -> f64 {
        self.distance_sq(h).sqrt()
    }

    pub fn gradient(&self, h: &[f64]) -> Vec<f64> {
        h.iter().zip(&self.center).map(|(a, b)| -2.0 * (a - b)).collect()
    }
}

/// `F(h) = g . h`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub g: Vec<f64>,
}

impl Linear {
    pub fn value(&self, h: &[f64]) -> f64 {
        self.g.iter().zip(h).map(|(a, b)| a * b).sum()
    }
}
