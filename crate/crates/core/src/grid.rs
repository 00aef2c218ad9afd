//! Hopf-coordinate grid on S³.
//!
//! z₁ = cos η e^{iξ₁}, z₂ = sin η e^{iξ₂}, dV = sin η cos η dη dξ₁ dξ₂.
//!
//! Nodes are cell-centred in η ∈ (0, π/2) and uniform in ξ₁, ξ₂. The map
//! (η, ξ₁, ξ₂) ↦ (z₁, z₂) is smooth and 2π-periodic on the whole torus, and
//!
//! * f(π − η, ξ₁, ξ₂) = f(η, ξ₁ + π, ξ₂)
//! * f(−η, ξ₁, ξ₂)    = f(η, ξ₁, ξ₂ + π)
//!
//! so a field sampled on the fundamental domain extends to a smooth periodic
//! function of η with period 2π. Derivatives are taken with FFTs in all three
//! directions on that extension. Integration uses a Fejér-type rule in η that
//! is exact for the cosine modes resolved by the grid.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::par;

pub struct GridPlan {
    pub n_eta: usize,
    pub n1: usize,
    pub n2: usize,
    pub eta: Vec<f64>,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    /// η-quadrature weights for ∫₀^{π/2} g(η) sin η cos η dη.
    pub w_eta: Vec<f64>,
    fft1: Arc<dyn Fft<f64>>,
    ifft1: Arc<dyn Fft<f64>>,
    fft2: Arc<dyn Fft<f64>>,
    ifft2: Arc<dyn Fft<f64>>,
    fft_ext: Arc<dyn Fft<f64>>,
    ifft_ext: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GridPlan({}x{}x{})", self.n_eta, self.n1, self.n2)
    }
}

/// Signed wavenumber of FFT index k on a grid of n points; Nyquist is `None`.
fn wavenumber(k: usize, n: usize) -> Option<i64> {
    if 2 * k == n {
        None
    } else if 2 * k < n {
        Some(k as i64)
    } else {
        Some(k as i64 - n as i64)
    }
}

/// Relative size below which ξ-modes near the poles are treated as noise.
///
/// A smooth field's (m₁, m₂) mode is bounded by cos^|m₁|η · sin^|m₂|η times
/// its overall scale. Anything larger there is roundoff, which the tan/cot
/// factors of the frame would otherwise amplify by O(n²) per derivative.
const POLAR_TAU: f64 = 1e-12;

fn parity(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

static PLANS: OnceLock<Mutex<HashMap<(usize, usize, usize), Arc<GridPlan>>>> = OnceLock::new();

impl GridPlan {
    /// Shared plan for a resolution.
    pub fn get(n_eta: usize, n1: usize, n2: usize) -> Arc<GridPlan> {
        let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("grid plan cache poisoned");
        map.entry((n_eta, n1, n2))
            .or_insert_with(|| Arc::new(GridPlan::new(n_eta, n1, n2)))
            .clone()
    }

    fn new(n_eta: usize, n1: usize, n2: usize) -> GridPlan {
        let h = PI / (2.0 * n_eta as f64);
        let eta = (0..n_eta).map(|j| (j as f64 + 0.5) * h).collect();
        let xi1 = (0..n1).map(|k| 2.0 * PI * k as f64 / n1 as f64).collect();
        let xi2 = (0..n2).map(|k| 2.0 * PI * k as f64 / n2 as f64).collect();
        // g(η) = Σ_k a_k cos(2kη) from a DCT-II of the cell-centred samples;
        // ∫₀^{π/2} cos(2kη) sin η cos η dη = (1 + (−1)^k) / (4 (1 − k²)), k ≠ 1.
        let moment = |k: usize| -> f64 {
            if k == 1 {
                0.0
            } else {
                let kk = k as f64;
                (1.0 + parity(k as i64)) / (4.0 * (1.0 - kk * kk))
            }
        };
        let n = n_eta as f64;
        let w_eta = (0..n_eta)
            .map(|j| {
                let mut w = moment(0) / n;
                for k in 1..n_eta {
                    w += 2.0 / n * (k as f64 * PI * (j as f64 + 0.5) / n).cos() * moment(k);
                }
                w
            })
            .collect();
        let mut planner = FftPlanner::new();
        GridPlan {
            n_eta,
            n1,
            n2,
            eta,
            xi1,
            xi2,
            w_eta,
            fft1: planner.plan_fft_forward(n1),
            ifft1: planner.plan_fft_inverse(n1),
            fft2: planner.plan_fft_forward(n2),
            ifft2: planner.plan_fft_inverse(n2),
            fft_ext: planner.plan_fft_forward(4 * n_eta),
            ifft_ext: planner.plan_fft_inverse(4 * n_eta),
        }
    }

    pub fn len(&self) -> usize {
        self.n_eta * self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index, η-major, then ξ₁, then ξ₂.
    #[inline]
    pub fn index(&self, j: usize, k: usize, l: usize) -> usize {
        (j * self.n1 + k) * self.n2 + l
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let l = idx % self.n2;
        let k = (idx / self.n2) % self.n1;
        let j = idx / (self.n1 * self.n2);
        (j, k, l)
    }

    /// Point (z₁, z₂) of a node.
    pub fn point(&self, idx: usize) -> (C64, C64) {
        let (j, k, l) = self.coords(idx);
        let (s, c) = self.eta[j].sin_cos();
        (C64::from_polar(c, self.xi1[k]), C64::from_polar(s, self.xi2[l]))
    }

    /// Forward 2D FFT over (ξ₁, ξ₂) for every η row (unnormalised).
    fn fft_xi(&self, data: &[C64], inverse: bool) -> Vec<C64> {
        let mut out = data.to_vec();
        let (f1, f2) = if inverse { (&self.ifft1, &self.ifft2) } else { (&self.fft1, &self.fft2) };
        let row = self.n1 * self.n2;
        let (n1, n2) = (self.n1, self.n2);
        par::for_each_chunk(&mut out, row, |_, slab| {
            f2.process(slab);
            let mut col = vec![C64::new(0.0, 0.0); n1];
            for l in 0..n2 {
                for k in 0..n1 {
                    col[k] = slab[k * n2 + l];
                }
                f1.process(&mut col);
                for k in 0..n1 {
                    slab[k * n2 + l] = col[k];
                }
            }
        });
        if inverse {
            let s = 1.0 / (n1 * n2) as f64;
            out.iter_mut().for_each(|x| *x *= s);
        }
        out
    }

    /// Parity-extend one ξ-mode column to the full η period [0, 2π).
    fn extend(&self, col: &[C64], m1: f64, m2: f64) -> Vec<C64> {
        let n = self.n_eta;
        let mut ext = vec![C64::new(0.0, 0.0); 4 * n];
        for j in 0..n {
            ext[j] = col[j];
            ext[2 * n - 1 - j] = col[j] * m1;
            ext[2 * n + j] = col[j] * (m1 * m2);
            ext[4 * n - 1 - j] = col[j] * m2;
        }
        ext
    }

    fn mode_signs(&self, k: usize, l: usize) -> (f64, f64) {
        let s1 = parity(wavenumber(k, self.n1).unwrap_or(self.n1 as i64 / 2));
        let s2 = parity(wavenumber(l, self.n2).unwrap_or(self.n2 as i64 / 2));
        (s1, s2)
    }

    /// Zero the ξ-modes whose pole-regularity bound is below roundoff.
    fn polar_filter(&self, spec: &mut [C64]) {
        let scale = spec.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return;
        }
        let log_tau = POLAR_TAU.ln();
        let (n1, n2) = (self.n1, self.n2);
        par::for_each_indexed(spec, |idx, x| {
            let (j, k, l) = self.coords(idx);
            let m1 = wavenumber(k, n1).unwrap_or(n1 as i64 / 2).unsigned_abs() as f64;
            let m2 = wavenumber(l, n2).unwrap_or(n2 as i64 / 2).unsigned_abs() as f64;
            let (sn, cs) = self.eta[j].sin_cos();
            if m1 * cs.ln() + m2 * sn.ln() < log_tau {
                *x = C64::new(0.0, 0.0);
            }
        });
    }

    /// Spectral partial derivatives (∂_η f, ∂_ξ₁ f, ∂_ξ₂ f).
    pub fn partials(&self, f: &[C64]) -> [Vec<C64>; 3] {
        let (n, n1, n2) = (self.n_eta, self.n1, self.n2);
        let mut spec = self.fft_xi(f, false);
        self.polar_filter(&mut spec);

        let mut d1 = spec.clone();
        let mut d2 = spec.clone();
        par::for_each_indexed(&mut d1, |idx, x| {
            let (_, k, _) = self.coords(idx);
            *x *= match wavenumber(k, n1) {
                Some(m) => C64::new(0.0, m as f64),
                None => C64::new(0.0, 0.0),
            };
        });
        par::for_each_indexed(&mut d2, |idx, x| {
            let (_, _, l) = self.coords(idx);
            *x *= match wavenumber(l, n2) {
                Some(m) => C64::new(0.0, m as f64),
                None => C64::new(0.0, 0.0),
            };
        });

        let ext_len = 4 * n;
        let cols: Vec<Vec<C64>> = par::collect(n1 * n2, |mode| {
            let (k, l) = (mode / n2, mode % n2);
            let col: Vec<C64> = (0..n).map(|j| spec[self.index(j, k, l)]).collect();
            let (s1, s2) = self.mode_signs(k, l);
            let mut ext = self.extend(&col, s1, s2);
            self.fft_ext.process(&mut ext);
            for (q, x) in ext.iter_mut().enumerate() {
                *x *= match wavenumber(q, ext_len) {
                    Some(m) => C64::new(0.0, m as f64 / ext_len as f64),
                    None => C64::new(0.0, 0.0),
                };
            }
            self.ifft_ext.process(&mut ext);
            ext.truncate(n);
            ext
        });
        let mut de = vec![C64::new(0.0, 0.0); f.len()];
        for (mode, col) in cols.iter().enumerate() {
            let (k, l) = (mode / n2, mode % n2);
            for j in 0..n {
                de[self.index(j, k, l)] = col[j];
            }
        }
        [self.fft_xi(&de, true), self.fft_xi(&d1, true), self.fft_xi(&d2, true)]
    }

    /// Frame derivatives (T f, Z₁ f, Z̄₁ f) of the standard frame.
    ///
    /// Z₁ = ½ e^{−i(ξ₁+ξ₂)} (−∂_η − i tan η ∂_ξ₁ + i cot η ∂_ξ₂), T = ∂_ξ₁ + ∂_ξ₂.
    pub fn frame_derivatives(&self, f: &[C64]) -> [Vec<C64>; 3] {
        let [de, d1, d2] = self.partials(f);
        let n = f.len();
        let mut t = vec![C64::new(0.0, 0.0); n];
        let mut z = vec![C64::new(0.0, 0.0); n];
        let mut zb = vec![C64::new(0.0, 0.0); n];
        par::for_each_indexed(&mut t, |i, x| *x = d1[i] + d2[i]);
        par::for_each_indexed(&mut z, |i, x| {
            let (j, k, l) = self.coords(i);
            let (tn, ct) = (self.eta[j].tan(), 1.0 / self.eta[j].tan());
            let ph = C64::from_polar(0.5, -(self.xi1[k] + self.xi2[l]));
            *x = ph * (-de[i] - C64::new(0.0, tn) * d1[i] + C64::new(0.0, ct) * d2[i]);
        });
        par::for_each_indexed(&mut zb, |i, x| {
            let (j, k, l) = self.coords(i);
            let (tn, ct) = (self.eta[j].tan(), 1.0 / self.eta[j].tan());
            let ph = C64::from_polar(0.5, self.xi1[k] + self.xi2[l]);
            *x = ph * (-de[i] + C64::new(0.0, tn) * d1[i] - C64::new(0.0, ct) * d2[i]);
        });
        [t, z, zb]
    }

    /// ∫_{S³} f dV. Row sums are formed independently and combined in η order.
    pub fn integrate(&self, f: &[C64]) -> C64 {
        let row = self.n1 * self.n2;
        let sums: Vec<C64> = par::collect(self.n_eta, |j| f[j * row..(j + 1) * row].iter().sum());
        let mut total = C64::new(0.0, 0.0);
        for (j, s) in sums.iter().enumerate() {
            total += s * self.w_eta[j];
        }
        total * (4.0 * PI * PI / row as f64)
    }

    /// Like [`integrate`](Self::integrate) but only over ξ₁-nodes with k < n1 / p:
    /// a fundamental domain of the lens action generated by ξ₁ ↦ ξ₁ + 2π/p.
    pub fn integrate_restricted(&self, f: &[C64], p: usize) -> C64 {
        let row = self.n1 * self.n2;
        let kmax = self.n1 / p;
        let mut total = C64::new(0.0, 0.0);
        for j in 0..self.n_eta {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..kmax {
                for l in 0..self.n2 {
                    s += f[self.index(j, k, l)];
                }
            }
            total += s * self.w_eta[j];
        }
        total * (4.0 * PI * PI / row as f64)
    }

    /// Full spectral coefficients on the extended torus, normalised so that
    /// f(η, ξ₁, ξ₂) = Σ c[q,k,l] e^{i(m_q (η − h/2) + m_k ξ₁ + m_l ξ₂)}.
    fn coefficients(&self) -> impl Fn(&[C64]) -> Vec<C64> + '_ {
        move |f: &[C64]| {
            let (n, n1, n2) = (self.n_eta, self.n1, self.n2);
            let spec = self.fft_xi(f, false);
            let ext_len = 4 * n;
            let norm = 1.0 / (ext_len * n1 * n2) as f64;
            let cols: Vec<Vec<C64>> = par::collect(n1 * n2, |mode| {
                let (k, l) = (mode / n2, mode % n2);
                let col: Vec<C64> = (0..n).map(|j| spec[self.index(j, k, l)]).collect();
                let (s1, s2) = self.mode_signs(k, l);
                let mut ext = self.extend(&col, s1, s2);
                self.fft_ext.process(&mut ext);
                ext.iter_mut().for_each(|x| *x *= norm);
                ext
            });
            let mut out = vec![C64::new(0.0, 0.0); ext_len * n1 * n2];
            for (mode, col) in cols.into_iter().enumerate() {
                for (q, v) in col.into_iter().enumerate() {
                    out[q * n1 * n2 + mode] = v;
                }
            }
            out
        }
    }

    /// Trigonometric interpolation of grid data at arbitrary points of S³.
    pub fn interpolate(&self, f: &[C64], points: &[(C64, C64)]) -> Vec<C64> {
        let coef = (self.coefficients())(f);
        let (n, n1, n2) = (self.n_eta, self.n1, self.n2);
        let ext_len = 4 * n;
        let h = PI / (2.0 * n as f64);
        par::collect(points.len(), |pi| {
            let (z1, z2) = points[pi];
            let eta = z2.norm().atan2(z1.norm());
            let (x1, x2) = (z1.arg(), z2.arg());
            let eq: Vec<C64> = (0..ext_len)
                .map(|q| match wavenumber(q, ext_len) {
                    Some(m) => C64::from_polar(1.0, m as f64 * (eta - 0.5 * h)),
                    None => C64::new(0.0, 0.0),
                })
                .collect();
            let e1: Vec<C64> = (0..n1)
                .map(|k| wavenumber(k, n1).map_or(C64::new(0.0, 0.0), |m| C64::from_polar(1.0, m as f64 * x1)))
                .collect();
            let e2: Vec<C64> = (0..n2)
                .map(|l| wavenumber(l, n2).map_or(C64::new(0.0, 0.0), |m| C64::from_polar(1.0, m as f64 * x2)))
                .collect();
            let mut acc = C64::new(0.0, 0.0);
            for (q, eqv) in eq.iter().enumerate() {
                if eqv.norm() == 0.0 {
                    continue;
                }
                let base = q * n1 * n2;
                let mut inner = C64::new(0.0, 0.0);
                for k in 0..n1 {
                    let mut row = C64::new(0.0, 0.0);
                    for l in 0..n2 {
                        row += coef[base + k * n2 + l] * e2[l];
                    }
                    inner += row * e1[k];
                }
                acc += inner * eqv;
            }
            acc
        })
    }

    /// Index shift of the lens generator (ξ₁ + 2π/p, ξ₂ + 2πq/p) applied `times` times.
    pub fn lens_shift(&self, p: u32, q: i64, times: i64) -> (usize, usize) {
        let p = p as i64;
        let s1 = (times * self.n1 as i64 / p).rem_euclid(self.n1 as i64) as usize;
        let s2 = ((times * q).rem_euclid(p) * self.n2 as i64 / p).rem_euclid(self.n2 as i64) as usize;
        (s1, s2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(plan: &GridPlan, f: impl Fn(C64, C64) -> C64) -> Vec<C64> {
        (0..plan.len()).map(|i| {
            let (a, b) = plan.point(i);
            f(a, b)
        }).collect()
    }

    #[test]
    fn volume_is_two_pi_squared() {
        let plan = GridPlan::get(8, 8, 8);
        let one = vec![C64::new(1.0, 0.0); plan.len()];
        assert!((plan.integrate(&one).re - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn frame_derivative_of_coordinates() {
        let plan = GridPlan::get(12, 12, 12);
        let f = sample(&plan, |z1, _| z1);
        let [t, z, zb] = plan.frame_derivatives(&f);
        for i in 0..plan.len() {
            let (z1, z2) = plan.point(i);
            assert!((t[i] - C64::new(0.0, 1.0) * z1).norm() < 1e-12);
            assert!((z[i] - z2.conj()).norm() < 1e-12);
            assert!(zb[i].norm() < 1e-12);
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let plan = GridPlan::get(10, 10, 10);
        let f = sample(&plan, |z1, z2| z1 * z1 * z2.conj() + z2 * 0.3);
        let pts = [(C64::from_polar(0.6, 0.3), C64::from_polar(0.8, -1.2))];
        let v = plan.interpolate(&f, &pts);
        let (a, b) = pts[0];
        let exact = a * a * b.conj() + b * 0.3;
        assert!((v[0] - exact).norm() < 1e-12, "{} vs {}", v[0], exact);
    }
}
