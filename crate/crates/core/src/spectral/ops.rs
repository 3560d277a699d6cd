use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::field::{project_in_place, SpectralField};
use super::grid::{sym_index, GridSpec};
use super::tensor::SymTensorField;
use super::transform::Transform;

thread_local! {
    static TRANSFORMS: RefCell<HashMap<(usize, usize, u64, u64), Transform>> = RefCell::new(HashMap::new());
}

/// Runs `f` with a cached transform for `grid` on the current thread.
pub fn with_transform<R>(grid: &GridSpec, f: impl FnOnce(&mut Transform) -> R) -> R {
    let key = (
        grid.dimension(),
        grid.resolution(),
        grid.period().to_bits(),
        grid.dealias_fraction().to_bits(),
    );
    TRANSFORMS.with(|cache| {
        let mut cache = cache.borrow_mut();
        f(cache.entry(key).or_insert_with(|| Transform::new(grid)))
    })
}

/// Everything computed while evaluating the nonlinear term, kept so that
/// averaging can reuse the physical velocity and the products `v_i v_j`.
#[derive(Clone, Debug)]
pub struct NonlinearEval {
    pub term: SpectralField,
    pub velocity: Vec<Vec<f64>>,
    pub products: Vec<Vec<f64>>,
}

/// Pointwise products `v_i v_j` in packed symmetric order.
pub fn outer_products(velocity: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = velocity.len();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            out.push(velocity[i].iter().zip(&velocity[j]).map(|(a, b)| a * b).collect());
        }
    }
    out
}

/// Leray-projected, dealiased divergence of a symmetric tensor given by its
/// packed physical components: `P [∇·T]` restricted to the retained modes.
pub fn projected_divergence(tr: &mut Transform, grid: &GridSpec, comps: &[Vec<f64>]) -> SpectralField {
    let modes = grid.modes();
    let n = modes.len();
    let d = grid.dimension();
    let mut hats = vec![vec![Complex64::new(0.0, 0.0); n]; comps.len()];
    let mut c = 0;
    while c < comps.len() {
        if c + 1 < comps.len() {
            let (lo, hi) = hats.split_at_mut(c + 1);
            tr.forward_pair(&comps[c], Some(&comps[c + 1]), &mut lo[c], Some(&mut hi[0]));
            c += 2;
        } else {
            tr.forward_pair(&comps[c], None, &mut hats[c], None);
            c += 1;
        }
    }
    let mut data = vec![Complex64::new(0.0, 0.0); n * d];
    for m in 0..n {
        let k = modes.k[m];
        for i in 0..d {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate().take(d) {
                s += hats[sym_index(i, j, d)][m] * *kj;
            }
            // i k_j T_ij
            data[i * n + m] = Complex64::new(-s.im, s.re);
        }
    }
    project_in_place(&modes, &mut data);
    SpectralField::from_projected(Arc::clone(&modes), data)
}

/// `P ∇·(v ⊗ v)`, computed pseudo-spectrally with the products formed on
/// the grid; exact within the retained set under the 2/3 rule.
pub fn nonlinear_eval(tr: &mut Transform, v: &SpectralField) -> NonlinearEval {
    let velocity = v.to_physical(tr);
    let products = outer_products(&velocity);
    let term = projected_divergence(tr, v.grid(), &products);
    NonlinearEval { term, velocity, products }
}

pub fn nonlinear_term(v: &SpectralField) -> SpectralField {
    with_transform(v.grid(), |tr| nonlinear_eval(tr, v).term)
}

/// Projected divergence of a symmetric tensor field.
pub fn div_tensor(r: &SymTensorField) -> SpectralField {
    with_transform(r.grid(), |tr| projected_divergence(tr, r.grid(), r.components()))
}

/// Physical velocity gradient `g[i][j] = ∂_j w_i`.
pub fn gradient_physical(tr: &mut Transform, w: &SpectralField) -> Vec<Vec<Vec<f64>>> {
    let d = w.dimension();
    let modes = w.modes();
    let n = modes.len();
    let p = tr.points();
    let mut derivs: Vec<Vec<Complex64>> = Vec::with_capacity(d * d);
    for i in 0..d {
        let wi = w.component(i);
        for j in 0..d {
            derivs.push((0..n).map(|m| Complex64::new(0.0, modes.k[m][j]) * wi[m]).collect());
        }
    }
    let mut flat = vec![vec![0.0; p]; d * d];
    let mut c = 0;
    while c < d * d {
        if c + 1 < d * d {
            let (lo, hi) = flat.split_at_mut(c + 1);
            tr.inverse_pair(&derivs[c], Some(&derivs[c + 1]), &mut lo[c], Some(&mut hi[0]));
            c += 2;
        } else {
            tr.inverse_pair(&derivs[c], None, &mut flat[c], None);
            c += 1;
        }
    }
    let mut out = Vec::with_capacity(d);
    let mut it = flat.into_iter();
    for _ in 0..d {
        out.push((0..d).map(|_| it.next().unwrap()).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::ModeTable;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Brute-force truncated convolution oracle for `P[i k_j (v_i v_j)^_k]`.
    fn convolution_oracle(v: &SpectralField) -> Vec<Complex64> {
        let modes: &ModeTable = v.modes();
        let n = modes.len();
        let d = v.dimension();
        let mut out = vec![Complex64::new(0.0, 0.0); n * d];
        let nonzero: Vec<usize> = (0..n)
            .filter(|&m| (0..d).any(|c| v.component(c)[m].norm() > 0.0))
            .collect();
        for &p in &nonzero {
            for &q in &nonzero {
                let wp = modes.wavevectors[p];
                let wq = modes.wavevectors[q];
                let sum: Vec<i64> = (0..d).map(|a| wp[a] + wq[a]).collect();
                let Some(m) = modes.index_of(&sum) else { continue };
                let k = modes.k[m];
                for i in 0..d {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (j, kj) in k.iter().enumerate().take(d) {
                        s += v.component(i)[p] * v.component(j)[q] * kj;
                    }
                    out[i * n + m] += Complex64::new(0.0, 1.0) * s;
                }
            }
        }
        project_in_place(modes, &mut out);
        out
    }

    #[test]
    fn single_mode_has_no_nonlinearity() {
        let g = GridSpec::new(3, 16, 2.0 * PI).unwrap();
        let v = SpectralField::from_modes(&g, &[(vec![1, 2, -1], vec![c(1.0), c(0.0), c(1.0)])]).unwrap();
        let nl = nonlinear_term(&v);
        let max = nl.coefficients().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max < 1e-14, "{max}");
    }

    #[test]
    fn taylor_green_advection_is_a_gradient() {
        let g = GridSpec::new(2, 32, 2.0 * PI).unwrap();
        // (sin x cos y, -cos x sin y)
        let q = Complex64::new(0.0, -0.25);
        let v = SpectralField::from_modes(
            &g,
            &[(vec![1, 1], vec![q, -q]), (vec![1, -1], vec![q, q])],
        )
        .unwrap();
        let nl = nonlinear_term(&v);
        let max = nl.coefficients().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max < 1e-15, "{max}");
    }

    #[test]
    fn two_mode_field_matches_convolution() {
        let g = GridSpec::new(3, 16, 2.0 * PI).unwrap();
        let v = SpectralField::from_modes(
            &g,
            &[
                (vec![1, 0, 0], vec![c(0.0), c(1.0), Complex64::new(0.0, 0.5)]),
                (vec![0, 1, 0], vec![c(0.7), c(0.0), c(-0.2)]),
            ],
        )
        .unwrap();
        let nl = nonlinear_term(&v);
        let oracle = convolution_oracle(&v);
        let scale = oracle.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(scale > 0.1);
        for (a, b) in nl.coefficients().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-14 * scale);
        }
    }

    #[test]
    fn random_field_matches_convolution_in_2d() {
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        let v = SpectralField::random(&g, 5, 5.0, 2.0).unwrap();
        let nl = nonlinear_term(&v);
        let oracle = convolution_oracle(&v);
        let scale = oracle.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in nl.coefficients().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn div_tensor_of_constant_vanishes() {
        let g = GridSpec::new(3, 8, 2.0 * PI).unwrap();
        let p = g.points();
        let r = SymTensorField::from_components(&g, (0..6).map(|i| vec![i as f64 + 0.5; p]).collect()).unwrap();
        assert!(div_tensor(&r).coefficients().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn div_tensor_of_mean_outer_product_is_nonlinear_term() {
        let g = GridSpec::new(2, 16, 2.0 * PI).unwrap();
        let v = SpectralField::random(&g, 9, 4.0, 1.0).unwrap();
        let phys = with_transform(&g, |tr| v.to_physical(tr));
        let r = SymTensorField::from_components(&g, outer_products(&phys)).unwrap();
        assert_eq!(div_tensor(&r), nonlinear_term(&v));
    }

    #[test]
    fn div_tensor_integrates_by_parts() {
        let g = GridSpec::new(2, 16, 2.0 * PI).unwrap();
        let p = g.points();
        let mut state = 1u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let r = SymTensorField::from_components(&g, (0..3).map(|_| (0..p).map(|_| next()).collect()).collect())
            .unwrap();
        let w = SpectralField::random(&g, 2, 6.0, 1.0).unwrap();
        let lhs = div_tensor(&r).inner(&w);
        let rhs = with_transform(&g, |tr| r.pair_gradient(tr, &w));
        let scale = lhs.abs().max(rhs.abs());
        assert!((lhs + rhs).abs() <= 1e-10 * scale, "{lhs} {rhs}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn nonlinearity_is_energy_neutral(seed in 0u64..10_000, dim in 2usize..4, shell in 1.5f64..6.0) {
            let g = GridSpec::new(dim, 16, 2.0 * PI).unwrap();
            let v = SpectralField::random(&g, seed, shell, 1.0).unwrap();
            let nl = nonlinear_term(&v);
            let pairing = nl.inner(&v);
            prop_assert!(pairing.abs() <= 1e-12 * nl.l2_sq().sqrt() * v.l2_sq().sqrt() + 1e-300);
            let d = nl.defects();
            prop_assert!(d.mean == 0.0 && d.divergence < 1e-13);
        }

        #[test]
        fn projection_is_idempotent(seed in 0u64..10_000) {
            let g = GridSpec::new(3, 8, 2.0 * PI).unwrap();
            let v = SpectralField::random(&g, seed, 3.0, 1.0).unwrap();
            let again = crate::spectral::leray_project(v.coefficients().to_vec(), &g).unwrap();
            prop_assert_eq!(again, v);
        }

        #[test]
        fn parseval_matches_quadrature(seed in 0u64..10_000) {
            let g = GridSpec::new(2, 16, 1.7).unwrap();
            let v = SpectralField::random(&g, seed, 5.0, 2.0).unwrap();
            let phys = with_transform(&g, |tr| v.to_physical(tr));
            let grad = with_transform(&g, |tr| gradient_physical(tr, &v));
            let cell = g.volume() / g.points() as f64;
            let l2: f64 = phys.iter().flat_map(|c| c.iter()).map(|x| x * x).sum::<f64>() * cell;
            let gr: f64 = grad.iter().flatten().flat_map(|c| c.iter()).map(|x| x * x).sum::<f64>() * cell;
            let n = v.norms();
            prop_assert!((l2 - n.l2_sq).abs() <= 1e-12 * n.l2_sq);
            prop_assert!((gr - n.grad_sq).abs() <= 1e-12 * n.grad_sq);
        }

        #[test]
        fn dual_norm_bounds_pairing(seed in 0u64..10_000) {
            let g = GridSpec::new(2, 16, 2.0 * PI).unwrap();
            let f = SpectralField::random(&g, seed, 6.0, 1.0).unwrap();
            let v = SpectralField::random(&g, seed + 1, 6.0, 1.0).unwrap();
            prop_assert!(f.inner(&v).abs() <= f.dual_sq().sqrt() * v.grad_sq().sqrt() * (1.0 + 1e-12));
            // equality for f = -Δv
            let mut lap = v.clone();
            lap.map_diagonal(|k2| k2);
            let lhs = lap.inner(&v);
            prop_assert!((lhs - lap.dual_sq().sqrt() * v.grad_sq().sqrt()).abs() <= 1e-12 * lhs);
        }
    }
}
