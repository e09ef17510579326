use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use proptest::prelude::*;
use thicklab::symbols::{catalog, hamilton_map, singular_space, QuadraticForm};

type Mat = Vec<Vec<BigRational>>;

fn exact(m: &DMatrix<f64>) -> Mat {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| BigRational::from_f64(m[(i, j)]).unwrap()).collect()).collect()
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n).map(|i| (0..m).map(|j| (0..k).fold(BigRational::zero(), |s, l| s + &a[i][l] * &b[l][j])).collect()).collect()
}

fn rank(mut a: Mat) -> usize {
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let row = a[r].clone();
        for (i, ai) in a.iter_mut().enumerate() {
            if i != r && !ai[c].is_zero() {
                let f = &ai[c] / &row[c];
                for (x, y) in ai[c..].iter_mut().zip(&row[c..]) {
                    *x -= &f * y;
                }
            }
        }
        r += 1;
    }
    r
}

/// `dim ∩_{j≤k} Ker Re F (Im F)^j` for `k = 0, …, 2n−1`, in exact arithmetic.
fn exact_truncated_dims(q: &QuadraticForm) -> Vec<usize> {
    let f = hamilton_map(q).unwrap();
    let (re, im) = (exact(&f.real_part()), exact(&f.imag_part()));
    let m = re.len();
    let mut power: Mat = (0..m).map(|i| (0..m).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect()).collect();
    let mut stacked: Mat = Vec::new();
    let mut dims = Vec::new();
    for _ in 0..m {
        stacked.extend(mul(&re, &power));
        dims.push(m - rank(stacked.clone()));
        power = mul(&im, &power);
    }
    dims
}

fn check(q: &QuadraticForm) {
    let s = singular_space(&hamilton_map(q).unwrap(), 1e-10).unwrap();
    let dims = exact_truncated_dims(q);
    assert_eq!(s.truncated_dims, dims);
    assert_eq!(s.dim_s, *dims.last().unwrap());
    assert_eq!(s.k0, dims.iter().position(|&d| d == 0));
}

#[test]
fn catalog_matches_exact_oracle() {
    for q in [catalog::harmonic(1), catalog::harmonic(2), catalog::free_laplacian(), catalog::mixed(), catalog::kramers_fokker_planck()] {
        check(&q);
    }
    let want = [(catalog::harmonic(1), 0, Some(0)), (catalog::free_laplacian(), 1, None), (catalog::kramers_fokker_planck(), 0, Some(1))];
    for (q, dim_s, k0) in want {
        let s = singular_space(&hamilton_map(&q).unwrap(), 1e-10).unwrap();
        assert_eq!((s.dim_s, s.k0), (dim_s, k0));
    }
}

fn small_symmetric(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2i32..=2, m * m).prop_map(move |v| {
        let a = DMatrix::from_fn(m, m, |i, j| v[i * m + j] as f64);
        let s = &a + a.transpose();
        s.map(|x| x * 0.5)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_integer_forms_match_oracle(
        (n, re, im) in (1usize..=2).prop_flat_map(|n| (Just(n), small_symmetric(2 * n), small_symmetric(2 * n)))
    ) {
        let q = QuadraticForm::from_parts(n, &re, &im).unwrap();
        let s = singular_space(&hamilton_map(&q).unwrap(), 1e-10).unwrap();
        prop_assume!(!s.ambiguous);
        let dims = exact_truncated_dims(&q);
        prop_assert_eq!(&s.truncated_dims, &dims);
        prop_assert_eq!(s.k0, dims.iter().position(|&d| d == 0));
    }
}

#[test]
fn hamilton_map_of_diagonal_form() {
    // q = a x² + b ξ²: F = [[0, b], [−a, 0]]
    let q = QuadraticForm::from_parts(1, &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]), &DMatrix::zeros(2, 2)).unwrap();
    let f = hamilton_map(&q).unwrap();
    let want = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -2.0, 0.0]).map(|v| Complex64::new(v, 0.0));
    assert_eq!(f.matrix(), &want);
}
