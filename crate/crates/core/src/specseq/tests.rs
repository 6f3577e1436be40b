use super::*;
use crate::random;
use num_bigint::BigInt;
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

fn v(xs: &[i64]) -> Vector {
    xs.iter().map(|&x| q(x)).collect()
}

fn span(n: usize, vs: &[&[i64]]) -> Subspace {
    Subspace::span(n, vs.iter().map(|x| v(x)).collect())
}

// Fraction-free (Bareiss) rank over the integers after clearing
// denominators; shares no code with the rational elimination.
fn bareiss_rank(m: &Matrix) -> usize {
    let mut a: Vec<Vec<BigInt>> = m
        .data()
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::from(1), |acc, x| acc * x.denom());
            row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();
    let (rows, cols) = (m.rows(), m.cols());
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, piv);
        for r in rank + 1..rows {
            for k in c + 1..cols {
                let t = &a[rank][c] * &a[r][k] - &a[r][c] * &a[rank][k];
                a[r][k] = t / &prev;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[rank][c].abs();
        rank += 1;
    }
    rank
}

fn total_cohomology_oracle(k: &FilteredComplex, n: i64) -> usize {
    k.dim(n) - bareiss_rank(&k.diff(n)) - bareiss_rank(&k.diff(n - 1))
}

/// `C^0 = ⟨e⟩ → C^1 = ⟨a, b⟩`, `de = a`, `F_1 C^0 = 0`, `F_1 C^1 = ⟨a⟩`.
fn two_step() -> FilteredComplex {
    FilteredComplex::new(
        0,
        vec![1, 2],
        None,
        vec![Matrix::from_ints(2, 1, &[&[1], &[0]])],
        0,
        1,
        vec![vec![Subspace::full(1), Subspace::zero(1)], vec![Subspace::full(2), span(2, &[&[1, 0]])]],
    )
    .unwrap()
}

#[test]
fn two_step_example_by_hand() {
    let k = two_step();
    assert_eq!(k.z_space(0, 0, 1).dim(), 1);
    assert_eq!(k.z_space(0, 0, 2).dim(), 0);
    for r in [-2, -1, 0] {
        assert_eq!(k.e_page(0, 0, r).dim(), 1);
        assert_eq!(k.e_page(1, -1, r).dim(), 0);
        assert_eq!(k.e_page(0, 1, r).dim(), 1);
        assert_eq!(k.e_page(1, 0, r).dim(), 1);
    }
    assert_eq!(k.e_page(1, 0, 1).dim(), 1);
    assert_eq!(k.d_r_map(0, 0, 1).unwrap().rank(), 1);
    assert_eq!(k.e_page(0, 0, 2).dim(), 0);
    assert_eq!(k.e_page(1, 0, 2).dim(), 0);
    assert_eq!(k.e_page(0, 1, 2).dim(), 1);
    assert_eq!(k.e_infinity(0, 1).dim(), 1);
    assert_eq!(k.cohomology_dim(1), 1);
    let t = PageTable::compute(&k, 1).unwrap();
    assert_eq!(t.radius, 2);
}

#[test]
fn low_pages_are_the_associated_graded() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let k = random::bicomplex(&mut rng, 3, 3, 2, false).total();
    for n in k.degrees() {
        for p in k.p_range() {
            let graded = k.f(n, p).dim() - k.f(n, p + 1).dim();
            for r in [-1, 0] {
                assert_eq!(k.e_page(p, n - p, r).dim(), graded);
            }
        }
    }
}

#[test]
fn zero_differential_keeps_every_page() {
    let k = FilteredComplex::new(
        0,
        vec![2, 2],
        None,
        vec![Matrix::zero(2, 2)],
        0,
        1,
        vec![vec![Subspace::full(2), span(2, &[&[1, 1]])], vec![Subspace::full(2), span(2, &[&[0, 1]])]],
    )
    .unwrap();
    for n in 0..2 {
        for p in 0..2 {
            let e0 = k.e_page(p, n - p, 0).dim();
            for r in 1..4 {
                assert_eq!(k.z_space(p, n - p, r), k.f(n, p));
                assert_eq!(k.e_page(p, n - p, r).dim(), e0);
                assert!(k.d_r_map(p, n - p, r).unwrap().is_zero());
            }
        }
    }
}

#[test]
fn identity_differential_kills_everything() {
    let k = FilteredComplex::new(0, vec![1, 1], None, vec![Matrix::identity(1)], 0, 0, vec![vec![Subspace::full(1)], vec![Subspace::full(1)]])
        .unwrap();
    for r in 1..4 {
        assert_eq!(k.e_page(0, 0, r).dim(), 0);
        assert_eq!(k.e_page(0, 1, r).dim(), 0);
    }
    assert_eq!(k.e_page(0, 0, 0).dim(), 1);
    assert_eq!(k.e_infinity(0, 0).dim(), 0);
}

#[test]
fn invalid_inputs_are_rejected() {
    let bad_d = FilteredComplex::new(
        0,
        vec![1, 1, 1],
        None,
        vec![Matrix::identity(1), Matrix::identity(1)],
        0,
        0,
        vec![vec![Subspace::full(1)]; 3],
    );
    assert_eq!(bad_d, Err(SpecError::NotAComplex(0)));
    // d moves F_1 C^0 = C^0 outside F_1 C^1 = 0.
    let incompatible = FilteredComplex::new(
        0,
        vec![1, 1],
        None,
        vec![Matrix::identity(1)],
        0,
        1,
        vec![vec![Subspace::full(1), Subspace::full(1)], vec![Subspace::full(1), Subspace::zero(1)]],
    );
    assert!(matches!(incompatible, Err(SpecError::Filtration(_))));
    let not_anticommuting = Bicomplex::new(
        vec![vec![1, 1], vec![1, 1]],
        vec![vec![Matrix::identity(1), Matrix::identity(1)]],
        vec![vec![Matrix::identity(1)], vec![Matrix::identity(1)]],
    );
    assert!(matches!(not_anticommuting, Err(SpecError::Bicomplex(_))));
}

/// `x(0,1) → y(1,1) ← z(1,0) → w(2,0)`.
fn staircase() -> Bicomplex {
    let one = || Matrix::identity(1);
    let zero = |r, c| Matrix::zero(r, c);
    Bicomplex::new(
        vec![vec![0, 1], vec![1, 1], vec![1, 0]],
        vec![vec![zero(1, 0), one()], vec![one(), zero(0, 1)]],
        vec![vec![zero(1, 0)], vec![one()], vec![zero(0, 1)]],
    )
    .unwrap()
}

#[test]
fn staircase_has_one_nonzero_d2() {
    let k = staircase().total();
    let t = PageTable::compute(&k, 1).unwrap();
    assert_eq!(t.dim(0, 1, Some(1)), 1);
    assert_eq!(t.dim(2, -1, Some(1)), 0);
    assert_eq!(t.dim(2, 0, Some(1)), 1);
    assert!(k.d_r_map(0, 1, 1).unwrap().is_zero());
    assert_eq!(k.d_r_map(0, 1, 2).unwrap().rank(), 1);
    assert_eq!(t.dim(0, 1, Some(3)), 0);
    assert_eq!(t.dim(2, 0, Some(3)), 0);
    assert_eq!(t.radius, 3);
    for n in k.degrees() {
        assert_eq!(k.cohomology_dim(n), 0);
    }
}

#[test]
fn small_bicomplex_examples() {
    let single = Bicomplex::new(vec![vec![2]], vec![], vec![vec![]]).unwrap().total();
    assert_eq!(single.degrees(), 0..=0);
    assert_eq!(single.dim(0), 2);
    assert_eq!(single.e_infinity(0, 0).dim(), 2);

    let surj = Matrix::from_ints(1, 2, &[&[1, 0]]);
    let exact_rows = Bicomplex::new(
        vec![vec![2, 1], vec![2, 1]],
        vec![vec![Matrix::zero(2, 2), Matrix::zero(1, 1)]],
        vec![vec![surj.clone()], vec![surj]],
    )
    .unwrap()
    .total();
    for p in 0..2 {
        assert_eq!(exact_rows.e_page(p, 0, 1).dim(), 1);
        assert_eq!(exact_rows.e_page(p, 1, 1).dim(), 0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let b = random::bicomplex(&mut rng, 3, 3, 3, false);
    let k = b.total();
    for n in k.degrees() {
        assert!(k.diff(n + 1).mul(&k.diff(n)).is_zero());
    }
}

fn check_table(k: &FilteredComplex, t: &PageTable) {
    let top = k.stable_from();
    for n in k.degrees() {
        for p in k.p_range() {
            let q = n - p;
            for r in 0..top {
                let out_rank = k.d_r_map(p, q, r).unwrap().rank();
                let in_rank = k.d_r_map(p - r, q + r - 1, r).unwrap().rank();
                let ker = t.dim(p, q, Some(r)) - out_rank;
                assert_eq!(t.dim(p, q, Some(r + 1)), ker - in_rank, "E^{{{p},{q}}}_{}", r + 1);
                // d_r ∘ d_r = 0.
                let next = k.d_r_map(p + r, q - r + 1, r).unwrap();
                assert!(next.mul(&k.d_r_map(p, q, r).unwrap()).is_zero());
            }
            if q < 0 {
                assert_eq!(t.dim(p, q, Some(0)), 0);
            }
        }
        let graded: usize = k.p_range().map(|p| t.dim(p, n - p, None)).sum();
        assert_eq!(graded, total_cohomology_oracle(k, n));
    }
    let chi = |r: i64| -> i64 {
        t.pages.iter().filter(|e| e.r == Some(r)).map(|e| if (e.p + e.q) % 2 == 0 { e.dim as i64 } else { -(e.dim as i64) }).sum()
    };
    for r in 0..=top {
        assert_eq!(chi(r), chi(0));
    }
}

#[test]
fn random_bicomplexes_satisfy_the_page_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for n in 0..12 {
        let regular = n % 2 == 0;
        let b = random::bicomplex(&mut rng, 2 + n % 3, 2 + (n / 3) % 3, 3, regular);
        let k = b.total();
        let t = PageTable::compute(&k, 1).unwrap();
        check_table(&k, &t);
        if regular {
            assert!(t.radius <= 2);
        }
    }
}

/// Row cohomology of `d_H` and the map induced by `d_V`, computed directly
/// on the bicomplex.
fn induced_vertical_rank(b: &Bicomplex, p: usize, q: usize) -> (usize, usize) {
    let ker = |p: usize, q: usize| -> Subspace {
        let n = b.dim(p, q);
        if q + 1 < b.cols() {
            Subspace::span(n, b.dh(p, q).kernel())
        } else {
            Subspace::full(n)
        }
    };
    let im = |p: usize, q: usize| -> Subspace {
        if q == 0 {
            Subspace::zero(b.dim(p, q))
        } else {
            Subspace::full(b.dim(p, q - 1)).image(b.dh(p, q - 1))
        }
    };
    let (z, bd) = (ker(p, q), im(p, q));
    let h = z.dim() - bd.dim();
    if p + 1 >= b.rows() {
        return (h, 0);
    }
    let image = z.image(b.dv(p, q)).sum(&im(p + 1, q));
    (h, image.dim() - im(p + 1, q).dim())
}

#[test]
fn first_differential_is_the_induced_vertical_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..5 {
        let b = random::bicomplex(&mut rng, 3, 3, 2, false);
        let k = b.total();
        for p in 0..b.rows() {
            for q in 0..b.cols() {
                let (h, rank) = induced_vertical_rank(&b, p, q);
                let (pi, qi) = (p as i64, q as i64);
                assert_eq!(k.e_page(pi, qi, 1).dim(), h);
                assert_eq!(k.d_r_map(pi, qi, 1).unwrap().rank(), rank);
            }
        }
    }
}

#[test]
fn parallel_table_matches_serial() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let k = random::bicomplex(&mut rng, 4, 3, 2, false).total();
    assert_eq!(PageTable::compute(&k, 1).unwrap(), PageTable::compute(&k, 4).unwrap());
    assert!(PageTable::compute(&k, 1).unwrap().render().contains("E_inf"));
}

#[test]
fn json_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let b = random::bicomplex(&mut rng, 3, 2, 2, false);
    let text = serde_json::to_string(&b.to_json()).unwrap();
    assert_eq!(Bicomplex::from_json(&serde_json::from_str(&text).unwrap()).unwrap(), b);
    let k = b.total();
    let text = serde_json::to_string(&k.to_json()).unwrap();
    assert_eq!(FilteredComplex::from_json(&serde_json::from_str(&text).unwrap()).unwrap(), k);
    let hand: ComplexJson = serde_json::from_str(
        r#"{"degrees":[0,1],"dims":[1,2],"differentials":[[[1],["0"]]],
            "filtration":{"p_min":0,"p_max":1,"levels":[[[[1]],[]],[[[1,0],[0,1]],[["2/3",0]]]]}}"#,
    )
    .unwrap();
    assert_eq!(FilteredComplex::from_json(&hand).unwrap().e_page(0, 1, 2).dim(), 1);
    assert!(Entry::Text("1/0x".into()).value().is_err());
}
