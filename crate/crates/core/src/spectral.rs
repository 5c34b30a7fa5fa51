//! Dirichlet sine basis on `[0, π]`, the collocation transform and the heat kernel.

use crate::scalar::Real;

/// `φ_k(x) = √(2/π) sin(kx)`.
#[inline]
pub fn phi<T: Real>(k: usize, x: T) -> T {
    (T::lit(2.0) / T::PI()).sqrt() * (T::from_usize_lossy(k) * x).sin()
}

/// Fills `out[k-1] = φ_k(x)` for `k = 1..=out.len()` by the Chebyshev recurrence.
pub fn phi_all<T: Real>(x: T, out: &mut [T]) {
    let norm = (T::lit(2.0) / T::PI()).sqrt();
    let c2 = T::lit(2.0) * x.cos();
    let mut prev = T::zero();
    let mut cur = x.sin();
    for o in out.iter_mut() {
        *o = norm * cur;
        let next = c2 * cur - prev;
        prev = cur;
        cur = next;
    }
}

/// Midpoint collocation grid `x_m = (m - ½)π/M` and the sine transform between
/// `K` mode coefficients and `M` grid values.
#[derive(Debug, Clone)]
pub struct SineBasis<T> {
    modes: usize,
    points: usize,
    grid: Vec<T>,
    /// `table[k * points + m] = φ_{k+1}(x_m)`
    table: Vec<T>,
    dx: T,
}

impl<T: Real> SineBasis<T> {
    pub fn new(modes: usize, points: usize) -> Self {
        assert!(modes >= 1 && modes <= points, "need 1 ≤ K ≤ M");
        let dx = T::PI() / T::from_usize_lossy(points);
        let grid: Vec<T> = (0..points)
            .map(|m| (T::from_usize_lossy(m) + T::lit(0.5)) * dx)
            .collect();
        let mut table = vec![T::zero(); modes * points];
        for k in 0..modes {
            for m in 0..points {
                table[k * points + m] = phi(k + 1, grid[m]);
            }
        }
        Self { modes, points, grid, table, dx }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    #[inline]
    pub fn phi_at(&self, k: usize, m: usize) -> T {
        self.table[(k - 1) * self.points + m]
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.table[(k - 1) * self.points..k * self.points]
    }

    /// Grid values `Σ_k a_k φ_k(x_m)`.
    pub fn synthesize(&self, coeffs: &[T], out: &mut [T]) {
        debug_assert!(coeffs.len() <= self.modes && out.len() == self.points);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (k, &a) in coeffs.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            let row = &self.table[k * self.points..(k + 1) * self.points];
            for (o, &p) in out.iter_mut().zip(row) {
                *o = *o + a * p;
            }
        }
    }

    /// Discrete projections `Δx Σ_m v_m φ_k(x_m)`, halved at the Nyquist mode `k = M`.
    pub fn project(&self, values: &[T], out: &mut [T]) {
        debug_assert!(values.len() == self.points && out.len() <= self.modes);
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.table[k * self.points..(k + 1) * self.points];
            let s = row.iter().zip(values).fold(T::zero(), |acc, (&p, &v)| acc + p * v);
            let w = if k + 1 == self.points { T::lit(0.5) } else { T::one() };
            *o = s * self.dx * w;
        }
    }
}

/// Truncated Dirichlet heat kernel `(2/π) Σ_{k≤K} sin(kx) sin(ky) e^{-k²t}`.
pub fn green_kernel<T: Real>(t: T, x: T, y: T, modes: usize) -> T {
    let mut s = T::zero();
    for k in 1..=modes {
        let kf = T::from_usize_lossy(k);
        s = s + (kf * x).sin() * (kf * y).sin() * (-(kf * kf) * t).exp();
    }
    s * T::lit(2.0) / T::PI()
}

/// `|∫_0^π G_t(x,y) G_s(y,z) dy − G_{t+s}(x,z)|` with an `nodes`-point midpoint rule in `y`.
pub fn semigroup_residual<T: Real>(t: T, s: T, x: T, z: T, modes: usize, nodes: usize) -> T {
    let h = T::PI() / T::from_usize_lossy(nodes);
    let mut integral = T::zero();
    for m in 0..nodes {
        let y = (T::from_usize_lossy(m) + T::lit(0.5)) * h;
        integral = integral + green_kernel(t, x, y, modes) * green_kernel(s, y, z, modes);
    }
    (integral * h - green_kernel(t + s, x, z, modes)).abs()
}
