//! Gauss–Legendre quadrature of arbitrary order, computed by Newton
//! iteration on the Legendre recurrence.

/// Nodes and weights on `[0, len]`.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule with `n` points on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, then Newton
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

impl Quadrature {
    /// Rule with `n` points mapped onto `[0, len]`.
    pub fn on_interval(n: usize, len: f64) -> Self {
        let (xs, ws) = gauss_legendre(n);
        let half = 0.5 * len;
        Quadrature {
            nodes: xs.iter().map(|x| half * (x + 1.0)).collect(),
            weights: ws.iter().map(|w| w * half).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // n-point rule is exact through degree 2n-1
        let (xs, ws) = gauss_legendre(5);
        for deg in 0..10 {
            let got: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(x, w)| w * x.powi(deg))
                .sum();
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            assert!((got - exact).abs() < 1e-13, "degree {deg}: {got} vs {exact}");
        }
    }

    #[test]
    fn mapped_rule_integrates_trig_to_machine_precision() {
        let q = Quadrature::on_interval(24, 2.0);
        let got: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| w * (5.0 * x).cos())
            .sum();
        let exact = (10.0f64).sin() / 5.0;
        assert!((got - exact).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 7, 33] {
            let q = Quadrature::on_interval(n, 0.7);
            let s: f64 = q.weights.iter().sum();
            assert!((s - 0.7).abs() < 1e-13);
        }
    }
}
