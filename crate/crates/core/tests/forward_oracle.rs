use approx::assert_relative_eq;
use eitsdp_core::forward::{layer_coefficients, ntd_eigenvalue, ntd_gradient};
use eitsdp_core::Geometry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed form for two inner layers inside a unit-conductivity outer ring:
/// `s1` on `[r2, r1)`, `s2` on `[0, r2)`.
fn three_layer_closed_form(r1: f64, r2: f64, s1: f64, s2: f64, j: u32) -> f64 {
    let j2 = 2 * j as i32;
    let a = 1.0 + s2 / s1;
    let b = (1.0 - s2 / s1) * r2.powi(j2);
    let c = a + b * r1.powi(-j2) + s1 * (a - b * r1.powi(-j2));
    let d = a * r1.powi(j2) + b - s1 * (a * r1.powi(j2) - b);
    // expanded forms must agree with the elimination above
    let c2 = (1.0 / s1 + 1.0) * (s1 + s2) + (1.0 / s1 - 1.0) * (s1 - s2) * (r2 / r1).powi(j2);
    let d2 = (1.0 / s1 - 1.0) * (s1 + s2) * r1.powi(j2) + (1.0 / s1 + 1.0) * (s1 - s2) * r2.powi(j2);
    assert_relative_eq!(c, c2, max_relative = 1e-13);
    assert_relative_eq!(d, d2, max_relative = 1e-12, epsilon = 1e-300);
    (c + d) / (j as f64 * (c - d))
}

/// Solves the interface system for `u = α_k r^j + β_k r^{-j}` in layer `k`
/// (β = 0 in the core, α = 1 there) by dense elimination and returns
/// `u(1)/(σ_0 ∂_r u(1))`.
fn dense_system(radii: &[f64], sigma: &[f64], j: u32) -> f64 {
    let n = sigma.len();
    let jf = j as f64;
    // unknowns: (α_0, β_0, …, α_{n-2}, β_{n-2}), core α_{n-1} = 1
    let dim = 2 * (n - 1);
    let mut m = vec![vec![0.0; dim + 1]; dim];
    for (row, &rho) in radii.iter().enumerate() {
        let outer = row;
        let inner = row + 1;
        let (p, q) = (rho.powf(jf), rho.powf(-jf));
        let eq_u = 2 * row;
        let eq_f = 2 * row + 1;
        m[eq_u][2 * outer] += p;
        m[eq_u][2 * outer + 1] += q;
        m[eq_f][2 * outer] += sigma[outer] * p;
        m[eq_f][2 * outer + 1] -= sigma[outer] * q;
        if inner == n - 1 {
            m[eq_u][dim] += p;
            m[eq_f][dim] += sigma[inner] * p;
        } else {
            m[eq_u][2 * inner] -= p;
            m[eq_u][2 * inner + 1] -= q;
            m[eq_f][2 * inner] -= sigma[inner] * p;
            m[eq_f][2 * inner + 1] += sigma[inner] * q;
        }
    }
    for col in 0..dim {
        let piv = (col..dim)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for r in 0..dim {
            if r != col {
                let f = m[r][col] / m[col][col];
                let pivot_row = m[col].clone();
                for (x, v) in m[r].iter_mut().zip(&pivot_row).skip(col) {
                    *x -= f * v;
                }
            }
        }
    }
    let alpha = m[0][dim] / m[0][0];
    let beta = m[1][dim] / m[1][1];
    (alpha + beta) / (sigma[0] * jf * (alpha - beta))
}

#[test]
fn homogeneous_eigenvalues_any_split() {
    let splits: [&[f64]; 4] = [&[], &[0.5], &[0.5, 0.25], &[0.9, 0.6, 0.3, 0.05]];
    for radii in splits {
        let g = Geometry::new(radii.to_vec()).unwrap();
        for s in [0.5, 1.0, 2.0] {
            let sigma = vec![s; g.layers()];
            for j in 1..=50 {
                let l = ntd_eigenvalue(&g, &sigma, j).unwrap();
                assert!((l - 1.0 / (j as f64 * s)).abs() <= 1e-12, "{radii:?} {s} {j}");
            }
        }
    }
}

#[test]
fn matches_three_layer_closed_form() {
    let g = Geometry::new(vec![0.5, 0.25]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let s1 = rng.random_range(0.5..2.0);
        let s2 = rng.random_range(0.5..2.0);
        for j in 1..=10 {
            let ours = ntd_eigenvalue(&g, &[1.0, s1, s2], j).unwrap();
            let oracle = three_layer_closed_form(0.5, 0.25, s1, s2, j);
            assert!((ours - oracle).abs() <= 1e-12, "{s1} {s2} {j}: {ours} vs {oracle}");
        }
    }
}

#[test]
fn closed_form_coefficients_match_layer_coefficients() {
    let g = Geometry::new(vec![0.5, 0.25]).unwrap();
    let (s1, s2) = (1.7, 0.6);
    for j in 1..=6 {
        let coeffs = layer_coefficients(&g, &[1.0, s1, s2], j).unwrap();
        let jf = j as f64;
        let (a1, b1) = coeffs.alpha_beta(&g, 0);
        let (a2, b2) = coeffs.alpha_beta(&g, 1);
        let (a3, b3) = coeffs.alpha_beta(&g, 2);
        let a = 1.0 + s2 / s1;
        let b = (1.0 - s2 / s1) * 0.25f64.powf(2.0 * jf);
        let c = (1.0 / s1 + 1.0) * (s1 + s2) + (1.0 / s1 - 1.0) * (s1 - s2) * 0.5f64.powf(2.0 * jf);
        let d = (1.0 / s1 - 1.0) * (s1 + s2) * 0.5f64.powf(2.0 * jf)
            + (1.0 / s1 + 1.0) * (s1 - s2) * 0.25f64.powf(2.0 * jf);
        // ratios to the core coefficient α_3 (= 1 in the closed form)
        assert_eq!(b3, 0.0);
        assert_relative_eq!(a2 / a3, a / 2.0, max_relative = 1e-12);
        assert_relative_eq!(b2 / a3, b / 2.0, max_relative = 1e-12);
        assert_relative_eq!(a1 / a3, c / 4.0, max_relative = 1e-12);
        assert_relative_eq!(b1 / a3, d / 4.0, max_relative = 1e-12, epsilon = 1e-14);
    }
}

#[test]
fn matches_dense_interface_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let n = rng.random_range(2..=4);
        let mut radii: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.2..0.95)).collect();
        radii.sort_by(|a, b| b.total_cmp(a));
        radii.dedup();
        if radii.windows(2).any(|w| w[0] - w[1] < 0.05) {
            continue;
        }
        let sigma: Vec<f64> = (0..radii.len() + 1).map(|_| rng.random_range(0.2..5.0)).collect();
        let g = Geometry::new(radii.clone()).unwrap();
        for j in 1..=6 {
            let ours = ntd_eigenvalue(&g, &sigma, j).unwrap();
            let oracle = dense_system(&radii, &sigma, j);
            assert_relative_eq!(ours, oracle, max_relative = 1e-10);
        }
    }
}

#[test]
fn gradient_sums_to_scale_law() {
    // λ(kσ) = λ(σ)/k  ⇒  σ·∇λ = −λ
    let g = Geometry::new(vec![0.8, 0.4, 0.2]).unwrap();
    let sigma = [0.7, 2.5, 1.1, 0.3];
    for j in 1..=20 {
        let l = ntd_eigenvalue(&g, &sigma, j).unwrap();
        let grad = ntd_gradient(&g, &sigma, j).unwrap();
        let euler: f64 = grad.iter().zip(&sigma).map(|(d, s)| d * s).sum();
        assert_relative_eq!(euler, -l, max_relative = 1e-12);
    }
}
