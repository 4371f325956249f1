//! Cross-checks against an independent dense library and the file system.

use nalgebra::{DMatrix, SymmetricEigen};
use psdid::analysis::{compute_tau, dense_oracle, Tau};
use psdid::linalg::{sym_eig, DenseBlock, Pencil, SparseMatrix, DEFAULT_DENSE_LIMIT};
use psdid::problems::{build_slit_laplacian, mm_read, mm_write, SlitRectangleSpec};
use psdid::solver::random_block;

fn to_nalgebra(a: &DenseBlock) -> DMatrix<f64> {
    DMatrix::from_column_slice(a.nrows(), a.ncols(), a.as_slice())
}

#[test]
fn jacobi_agrees_with_nalgebra() {
    let raw = random_block(30, 30, 5);
    let mut a = raw.t_mul(&raw);
    for d in 0..30 {
        a[(d, d)] -= 10.0;
    }
    let ours = sym_eig(&a, DEFAULT_DENSE_LIMIT).unwrap();
    let mut theirs: Vec<f64> = SymmetricEigen::new(to_nalgebra(&a))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    theirs.sort_by(f64::total_cmp);
    let scale = theirs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (x, y) in ours.values.iter().zip(&theirs) {
        assert!((x - y).abs() < 1e-12 * scale, "{x} vs {y}");
    }
}

#[test]
fn laplacian_oracle_agrees_with_nalgebra() {
    let (p, _) = build_slit_laplacian(&SlitRectangleSpec::two_short_slits(1.0 / 8.0)).unwrap();
    let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
    let mut theirs: Vec<f64> = SymmetricEigen::new(to_nalgebra(&p.h().to_dense()))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    theirs.sort_by(f64::total_cmp);
    for (x, y) in o.values().iter().zip(&theirs) {
        assert!((x - y).abs() < 1e-10 * o.lambda_max());
    }
}

/// τ from a full SVD of the orthonormalized transformed block.
fn tau_by_svd(c: &DenseBlock, shifted: &[f64], kt: usize) -> f64 {
    let mut e = to_nalgebra(c);
    for (r, s) in shifted.iter().enumerate() {
        e.row_mut(r).scale_mut(s.sqrt());
    }
    let q = e.qr().q();
    let top = q.rows(0, kt).into_owned();
    let cos_min = top.svd(false, false).singular_values.min();
    (1.0 - cos_min * cos_min) / (cos_min * cos_min)
}

#[test]
fn tau_matches_principal_angles_from_svd() {
    let d: Vec<f64> = (1..=12).map(|j| f64::from(j) + 0.05 * f64::from(j * j)).collect();
    let p = Pencil::standard(SparseMatrix::diagonal(&d)).unwrap();
    let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
    let sigma = 0.5;
    for seed in 0..5 {
        let z0 = random_block(12, 3, seed);
        let Tau::Finite(ours) = compute_tau(&p, &z0, &o, 1, sigma).unwrap() else {
            panic!("random start must have finite τ");
        };
        let c = o.coefficients(&p, 1, &z0);
        let shifted: Vec<f64> = o.values().iter().map(|l| l - sigma).collect();
        let theirs = tau_by_svd(&c, &shifted, 3);
        assert!((ours - theirs).abs() <= 1e-10 * theirs.max(1.0), "{ours} vs {theirs}");
    }
}

#[test]
fn tau_edge_cases() {
    let d: Vec<f64> = (1..=6).map(f64::from).collect();
    let p = Pencil::standard(SparseMatrix::diagonal(&d)).unwrap();
    let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
    let invariant = o.vectors().cols(0..2);
    assert!(compute_tau(&p, &invariant, &o, 1, 0.0).unwrap().value() < 1e-24);
    let orthogonal = o.vectors().cols(2..4);
    assert_eq!(compute_tau(&p, &orthogonal, &o, 1, 0.0).unwrap(), Tau::Infinite);
}

#[test]
fn laplacian_survives_matrix_market_round_trip() {
    let (p, _) = build_slit_laplacian(&SlitRectangleSpec::two_short_slits(1.0 / 80.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("H.mtx");
    mm_write(p.h(), &path).unwrap();
    let back = mm_read(&path).unwrap();
    assert_eq!(&back, p.h());
    assert!(back
        .values()
        .iter()
        .zip(p.h().values())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(Pencil::standard(back).unwrap().fingerprint(), p.fingerprint());
}
