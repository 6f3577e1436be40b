//! Seeded generators of random instances for property checks.

use rand::Rng;

use crate::evofield::{Family, VerticalField};
use crate::expr::{Context, DiffExpr, Rational};
use crate::forms::{BiForm, Gen};
use crate::linalg::{Matrix, Q};
use crate::specseq::Bicomplex;
use crate::multiindex::{enumerate_upto, MultiIndex};

fn small_rational<R: Rng>(rng: &mut R) -> Rational {
    let num: i64 = rng.gen_range(-5..=5);
    let den: i64 = rng.gen_range(1..=3);
    Rational::new(num.into(), den.into())
}

/// A random polynomial with at most `terms` monomials of degree at most
/// `degree`, jet variables drawn from `|i| ≤ max_order`.
pub fn polynomial<R: Rng>(ctx: &Context, rng: &mut R, degree: u32, max_order: u32, terms: usize) -> DiffExpr {
    let jets: Vec<MultiIndex> = enumerate_upto(max_order, ctx.m());
    let mut out = DiffExpr::zero();
    for _ in 0..rng.gen_range(1..=terms) {
        let mut t = DiffExpr::constant(small_rational(rng));
        for _ in 0..rng.gen_range(0..=degree) {
            let factor = if rng.gen_bool(0.3) {
                DiffExpr::x(rng.gen_range(0..ctx.m()))
            } else {
                let a = rng.gen_range(0..ctx.deps().len());
                DiffExpr::u(a, jets[rng.gen_range(0..jets.len())].clone())
            };
            t = t * factor;
        }
        out = out + t;
    }
    out
}

/// A random polynomial in the independent variables only.
pub fn x_polynomial<R: Rng>(ctx: &Context, rng: &mut R, degree: u32, terms: usize) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for _ in 0..rng.gen_range(1..=terms) {
        let mut t = DiffExpr::constant(small_rational(rng));
        for _ in 0..rng.gen_range(0..=degree) {
            t = t * DiffExpr::x(rng.gen_range(0..ctx.m()));
        }
        out = out + t;
    }
    out
}

/// A random field with finite support on `|i| ≤ max_index`.
pub fn vertical_field<R: Rng>(ctx: &Context, rng: &mut R, max_index: u32, comps: usize, degree: u32) -> VerticalField {
    let idx = enumerate_upto(max_index, ctx.m());
    let mut out = Vec::new();
    for _ in 0..comps {
        let a = rng.gen_range(0..ctx.deps().len());
        let i = idx[rng.gen_range(0..idx.len())].clone();
        out.push(((a, i), polynomial(ctx, rng, degree, max_index.min(2), 3)));
    }
    VerticalField::exact(out)
}

/// A random coefficient family, one polynomial per dependent variable.
pub fn family<R: Rng>(ctx: &Context, rng: &mut R, degree: u32, max_order: u32) -> Family {
    Family::new((0..ctx.deps().len()).map(|a| (a, polynomial(ctx, rng, degree, max_order, 2))))
}

/// A random form of bidegree `(p, q)` with up to `terms` terms, contact
/// generators `ρ^α_i` drawn from `|i| ≤ max_index`.
pub fn form<R: Rng>(ctx: &Context, rng: &mut R, p: usize, q: usize, terms: usize, degree: u32, max_index: u32) -> BiForm {
    let idx = enumerate_upto(max_index, ctx.m());
    let mut out = BiForm::zero();
    if q > ctx.m() {
        return out;
    }
    for _ in 0..rng.gen_range(1..=terms) {
        let mut word = Vec::new();
        for _ in 0..p {
            word.push(Gen::Rho(rng.gen_range(0..ctx.deps().len()), idx[rng.gen_range(0..idx.len())].clone()));
        }
        let mut dirs: Vec<usize> = (0..ctx.m()).collect();
        for _ in 0..q {
            word.push(Gen::Theta(dirs.swap_remove(rng.gen_range(0..dirs.len()))));
        }
        out = out + BiForm::term(polynomial(ctx, rng, degree, max_index, 2), word);
    }
    out
}

/// Building blocks of a random bicomplex, as positions plus `±1` maps
/// between their generators.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Dot,
    HArrow,
    VArrow,
    Square,
    /// `a(p,q−1) → b(p,q) ← c(p−1,q)`.
    Zigzag,
    /// `x(p,q) → y(p+1,q) ← z(p+1,q−1) → w(p+2,q−1)`; carries a `d_2`.
    Staircase,
}

/// A random first-quadrant bicomplex with `rows × cols` positions of
/// dimension at most `max_dim`, assembled from small indecomposable pieces
/// and then conjugated by random invertible matrices at every position.
///
/// With `regular` set, every row is exact away from the last column (as
/// for the variation bicomplex), so the spectral sequence of the column
/// filtration degenerates at `E_2`. Otherwise pieces that produce
/// arbitrary row cohomology and nonzero higher differentials are mixed in.
pub fn bicomplex<R: Rng>(rng: &mut R, rows: usize, cols: usize, max_dim: usize, regular: bool) -> Bicomplex {
    let last = cols - 1;
    let mut dims = vec![vec![0usize; cols]; rows];
    // Maps as (from position, from slot, to position, to slot, sign).
    type Pos = (usize, usize);
    let mut vmaps: Vec<(Pos, usize, Pos, usize, i64)> = Vec::new();
    let mut hmaps: Vec<(Pos, usize, Pos, usize, i64)> = Vec::new();
    let kinds: &[Piece] = if regular {
        &[Piece::Dot, Piece::HArrow, Piece::VArrow, Piece::Square, Piece::Zigzag]
    } else {
        &[Piece::Dot, Piece::HArrow, Piece::VArrow, Piece::Square, Piece::Zigzag, Piece::Staircase]
    };
    for _ in 0..rows * cols * max_dim {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let p = rng.gen_range(0..rows);
        let q = if regular && matches!(kind, Piece::Dot | Piece::VArrow | Piece::Zigzag) {
            last
        } else {
            rng.gen_range(0..cols)
        };
        let cells: Vec<Pos> = match kind {
            Piece::Dot => vec![(p, q)],
            Piece::HArrow if q < last => vec![(p, q), (p, q + 1)],
            Piece::VArrow if p + 1 < rows => vec![(p, q), (p + 1, q)],
            Piece::Square if q < last && p + 1 < rows => vec![(p, q), (p, q + 1), (p + 1, q), (p + 1, q + 1)],
            Piece::Zigzag if q >= 1 && p >= 1 => vec![(p, q - 1), (p, q), (p - 1, q)],
            Piece::Staircase if q >= 1 && p + 2 < rows => vec![(p, q), (p + 1, q), (p + 1, q - 1), (p + 2, q - 1)],
            _ => continue,
        };
        if cells.iter().any(|&(a, b)| dims[a][b] >= max_dim) {
            continue;
        }
        let slots: Vec<usize> = cells
            .iter()
            .map(|&(a, b)| {
                dims[a][b] += 1;
                dims[a][b] - 1
            })
            .collect();
        let g = |k: usize| (cells[k], slots[k]);
        let mut v = |from: usize, to: usize, s: i64| vmaps.push((g(from).0, g(from).1, g(to).0, g(to).1, s));
        match kind {
            Piece::Dot | Piece::HArrow | Piece::Zigzag => {}
            Piece::VArrow => v(0, 1, 1),
            Piece::Square => {
                v(0, 2, 1);
                v(1, 3, 1);
            }
            Piece::Staircase => {
                v(0, 1, 1);
                v(2, 3, 1);
            }
        }
        let mut h = |from: usize, to: usize, s: i64| hmaps.push((g(from).0, g(from).1, g(to).0, g(to).1, s));
        match kind {
            Piece::Dot | Piece::VArrow => {}
            Piece::HArrow => h(0, 1, 1),
            Piece::Square => {
                h(0, 1, 1);
                h(2, 3, -1);
            }
            Piece::Zigzag => h(0, 1, 1),
            Piece::Staircase => h(2, 1, 1),
        }
        if let Piece::Zigzag = kind {
            vmaps.push((cells[2], slots[2], cells[1], slots[1], 1));
        }
    }
    let mut dv: Vec<Vec<Matrix>> = (0..rows.saturating_sub(1))
        .map(|p| (0..cols).map(|q| Matrix::zero(dims[p + 1][q], dims[p][q])).collect())
        .collect();
    let mut dh: Vec<Vec<Matrix>> = (0..rows)
        .map(|p| (0..cols - 1).map(|q| Matrix::zero(dims[p][q + 1], dims[p][q])).collect())
        .collect();
    for ((p, q), s, _, t, sign) in vmaps {
        dv[p][q].set(t, s, Q::from_integer(sign.into()));
    }
    for ((p, q), s, _, t, sign) in hmaps {
        dh[p][q].set(t, s, Q::from_integer(sign.into()));
    }
    let g: Vec<Vec<Matrix>> = dims.iter().map(|r| r.iter().map(|&n| invertible(rng, n)).collect()).collect();
    let ginv: Vec<Vec<Matrix>> = g.iter().map(|r| r.iter().map(|m| m.inverse().expect("invertible")).collect()).collect();
    for p in 0..rows {
        for q in 0..cols {
            if p + 1 < rows {
                dv[p][q] = g[p + 1][q].mul(&dv[p][q]).mul(&ginv[p][q]);
            }
            if q + 1 < cols {
                dh[p][q] = g[p][q + 1].mul(&dh[p][q]).mul(&ginv[p][q]);
            }
        }
    }
    Bicomplex::new(dims, dv, dh).expect("assembled from valid pieces")
}

fn invertible<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    loop {
        let data = (0..n).map(|_| (0..n).map(|_| Q::from_integer(rng.gen_range(-2i64..=2).into())).collect()).collect();
        let m = Matrix::from_rows(n, n, data).expect("square");
        if m.inverse().is_some() {
            return m;
        }
    }
}
