//! Fourier-domain results checked against straight-line dense computations.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcacf_core::dsp::{
    forward_spectrum, gaussian_label, hann_window, inverse_spectrum, preprocess_patch, RealGrid, Spectrum,
};
use rcacf_core::filter::{filter_response, learn_base_filter, learn_ca_filter};

/// Rows are every circular shift of `p`: `C[s, u] = p[u + s]`, so `C·w` is the
/// cross-correlation of `p` with `w`.
fn circulant(p: &RealGrid) -> DMatrix<f64> {
    let (w, h) = p.dims();
    let n = w * h;
    DMatrix::from_fn(n, n, |s, u| {
        let (sx, sy) = (s % w, s / w);
        let (ux, uy) = (u % w, u / w);
        *p.get((ux + sx) % w, (uy + sy) % h)
    })
}

/// Solve `(C0ᵀC0 + λ1·I + λ2·Σ CᵢᵀCᵢ) w = C0ᵀ y` densely.
fn dense_ridge(p0: &RealGrid, context: &[RealGrid], y: &RealGrid, lambda1: f64, lambda2: f64) -> RealGrid {
    let n = p0.len();
    let c0 = circulant(p0);
    let mut lhs = c0.transpose() * &c0 + DMatrix::identity(n, n) * lambda1;
    for c in context {
        let ci = circulant(c);
        lhs += ci.transpose() * &ci * lambda2;
    }
    let rhs = c0.transpose() * DVector::from_column_slice(y.data());
    let w = lhs.lu().solve(&rhs).expect("system is regular");
    RealGrid::from_vec(p0.width(), p0.height(), w.as_slice().to_vec()).unwrap()
}

fn rel_err(a: &Spectrum, b: &Spectrum) -> f64 {
    let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.data().iter().map(|x| x.norm_sqr()).sum();
    (num / den).sqrt()
}

fn random_patch(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RealGrid {
    RealGrid::from_fn(w, h, |_, _| rng.random_range(0.0..1.0))
}

fn origin_label(w: usize, h: usize) -> RealGrid {
    gaussian_label(w, h, 0.1 * ((w * h) as f64).sqrt())
        .unwrap()
        .centered_at_origin()
}

#[test]
fn base_filter_matches_dense_ridge() {
    for (w, h) in [(4, 4), (8, 8), (6, 5)] {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_patch(&mut rng, w, h);
            let y = origin_label(w, h);
            let parts =
                learn_base_filter(&forward_spectrum(&p).unwrap(), &forward_spectrum(&y).unwrap(), 0.05).unwrap();
            let dense = forward_spectrum(&dense_ridge(&p, &[], &y, 0.05, 0.0)).unwrap();
            assert!(rel_err(&parts.filter(), &dense) < 1e-6, "{w}x{h} seed {seed}");
        }
    }
}

#[test]
fn ca_filter_matches_stacked_least_squares() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let p = random_patch(&mut rng, 8, 8);
        let c = random_patch(&mut rng, 8, 8);
        let y = origin_label(8, 8);
        let parts = learn_ca_filter(
            &forward_spectrum(&p).unwrap(),
            &[forward_spectrum(&c).unwrap()],
            &forward_spectrum(&y).unwrap(),
            0.05,
            20.0,
        )
        .unwrap();

        // [C(p); sqrt(λ2)·C(c)] w ≈ [y; 0] with ridge λ1, through a QR-free normal-equation-free path:
        // augment with sqrt(λ1)·I and solve the full least-squares problem by SVD.
        let n = 64;
        let mut a = DMatrix::zeros(3 * n, n);
        a.view_mut((0, 0), (n, n)).copy_from(&circulant(&p));
        a.view_mut((n, 0), (n, n)).copy_from(&(circulant(&c) * 20f64.sqrt()));
        a.view_mut((2 * n, 0), (n, n))
            .copy_from(&(DMatrix::<f64>::identity(n, n) * 0.05f64.sqrt()));
        let mut b = DVector::zeros(3 * n);
        b.rows_mut(0, n).copy_from(&DVector::from_column_slice(y.data()));
        let w = a.svd(true, true).solve(&b, 1e-14).unwrap();
        let dense = forward_spectrum(&RealGrid::from_vec(8, 8, w.as_slice().to_vec()).unwrap()).unwrap();
        assert!(rel_err(&parts.filter(), &dense) < 1e-6, "seed {seed}");
    }
}

fn ncc(a: &RealGrid, b: &RealGrid) -> f64 {
    let ma = a.data().iter().sum::<f64>() / a.len() as f64;
    let mb = b.data().iter().sum::<f64>() / b.len() as f64;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in a.data().iter().zip(b.data()) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da * db).sqrt()
}

/// Patches are log-scaled, zero-mean and unit-norm but not tapered: the
/// taper removes enough spectral energy that λ1 = 1e-2 no longer counts as small.
#[test]
fn training_response_reproduces_label() {
    for lambda1 in [1e-2, 1e-3, 1e-4] {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let win = RealGrid::filled(32, 24, 1.0);
            let p = preprocess_patch(&random_patch(&mut rng, 32, 24), &win).unwrap();
            let y = origin_label(32, 24);
            let ps = forward_spectrum(&p).unwrap();
            let parts = learn_base_filter(&ps, &forward_spectrum(&y).unwrap(), lambda1).unwrap();
            let r = filter_response(&parts, &ps).unwrap();
            assert_eq!(r.peak, (0, 0));
            let score = ncc(&r.data, &y);
            assert!(score >= 0.95, "λ1={lambda1} seed {seed}: ncc {score}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dft_round_trip_and_parseval(w in 1usize..=32, h in 1usize..=32, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = RealGrid::from_fn(w, h, |_, _| rng.random_range(-5.0..5.0));
        let s = forward_spectrum(&m).unwrap();
        let back = inverse_spectrum(&s).unwrap();
        let err = back.data().iter().zip(m.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9 * m.max_abs().max(f64::MIN_POSITIVE));
        let spectral: f64 = s.data().iter().map(|c| c.norm_sqr()).sum::<f64>() / (w * h) as f64;
        prop_assert!((spectral - m.energy()).abs() <= 1e-6 * m.energy());
    }

    #[test]
    fn shifted_patch_moves_the_peak(dx in 0isize..16, dy in 0isize..12, seed in 0u64..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let win = hann_window(16, 12).unwrap();
        let p = preprocess_patch(&random_patch(&mut rng, 16, 12), &win).unwrap();
        let y = origin_label(16, 12);
        let parts = learn_base_filter(&forward_spectrum(&p).unwrap(), &forward_spectrum(&y).unwrap(), 1e-4).unwrap();
        let z = forward_spectrum(&p.circshift(dx, dy)).unwrap();
        let r = filter_response(&parts, &z).unwrap();
        prop_assert_eq!(r.peak, (dx as usize, dy as usize));
    }

    #[test]
    fn window_and_label_symmetry(w in 2usize..40, h in 2usize..40, sigma in 0.5..8.0f64) {
        let win = hann_window(w, h).unwrap();
        let label = gaussian_label(w, h, sigma).unwrap();
        let (cx, cy) = (w / 2, h / 2);
        for y in 0..h {
            for x in 0..w {
                let v = *win.get(x, y);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!((v - win.get(w - 1 - x, y)).abs() < 1e-12);
                prop_assert!((v - win.get(x, h - 1 - y)).abs() < 1e-12);
                let l = *label.grid.get(x, y);
                // tails underflow to exactly 0 for small sigma
                prop_assert!((0.0..=1.0).contains(&l));
                // mirror about the center where the mirrored cell exists
                let mx = 2 * cx as isize - x as isize;
                let my = 2 * cy as isize - y as isize;
                if (0..w as isize).contains(&mx) && (0..h as isize).contains(&my) {
                    prop_assert_eq!(l, *label.grid.get(mx as usize, my as usize));
                }
            }
        }
        prop_assert_eq!(*label.grid.get(cx, cy), 1.0);
    }
}
