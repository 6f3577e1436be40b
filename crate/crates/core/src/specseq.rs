//! The spectral sequence of a finite filtered cochain complex over `Q`.
//!
//! With a descending filtration `F_p` compatible with `d`,
//!
//! * `Z^{pq}_r = {ω ∈ F_p C^n : dω ∈ F_{p+r} C^{n+1}}`,
//! * `B^{pq}_r = F_p C^n ∩ d(F_{p−r} C^{n−1})`,
//! * `E^{pq}_r = Z^{pq}_r / (B^{pq}_{r−1} + Z^{p+1,q−1}_{r−1})`, `n = p + q`,
//!
//! and `E_∞` uses `Z_∞ = F_p ∩ ker d`, `B_∞ = F_p ∩ im d`. Filtration
//! levels below `p_min` are the whole space and above `p_max` are zero, so
//! the sequence is constant from `r = p_max − p_min + 1` on.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve, Matrix, Subspace, Vector, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("d∘d ≠ 0 from degree {0}")]
    NotAComplex(i64),
    #[error("filtration error: {0}")]
    Filtration(String),
    #[error("bicomplex error: {0}")]
    Bicomplex(String),
    #[error("bad rational entry {0:?}")]
    Entry(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    n_min: i64,
    dims: Vec<usize>,
    bases: Vec<Vec<String>>,
    /// `d[k] : C^{n_min+k} → C^{n_min+k+1}`; one fewer than `dims`.
    d: Vec<Matrix>,
    p_min: i64,
    p_max: i64,
    /// `levels[k][p − p_min] = F_p C^{n_min+k}`.
    levels: Vec<Vec<Subspace>>,
}

impl FilteredComplex {
    /// Validates shapes, `d∘d = 0`, that the filtration descends from the
    /// whole space, and that `d(F_p) ⊆ F_p`.
    pub fn new(
        n_min: i64,
        dims: Vec<usize>,
        bases: Option<Vec<Vec<String>>>,
        d: Vec<Matrix>,
        p_min: i64,
        p_max: i64,
        levels: Vec<Vec<Subspace>>,
    ) -> Result<Self, SpecError> {
        if dims.is_empty() {
            return Err(SpecError::Shape("no degrees".into()));
        }
        if d.len() + 1 != dims.len() {
            return Err(SpecError::Shape(format!("{} degrees need {} differentials, got {}", dims.len(), dims.len() - 1, d.len())));
        }
        for (k, m) in d.iter().enumerate() {
            if m.cols() != dims[k] || m.rows() != dims[k + 1] {
                return Err(SpecError::Shape(format!(
                    "differential from degree {} is {}x{}, expected {}x{}",
                    n_min + k as i64,
                    m.rows(),
                    m.cols(),
                    dims[k + 1],
                    dims[k]
                )));
            }
        }
        for k in 1..d.len() {
            if !d[k].mul(&d[k - 1]).is_zero() {
                return Err(SpecError::NotAComplex(n_min + k as i64 - 1));
            }
        }
        let bases = match bases {
            Some(b) => {
                if b.len() != dims.len() || b.iter().zip(&dims).any(|(names, &n)| names.len() != n) {
                    return Err(SpecError::Shape("basis names do not match dimensions".into()));
                }
                b
            }
            None => dims
                .iter()
                .enumerate()
                .map(|(k, &n)| (0..n).map(|j| format!("e{}_{}", n_min + k as i64, j + 1)).collect())
                .collect(),
        };
        if p_max < p_min {
            return Err(SpecError::Filtration(format!("p_max {p_max} < p_min {p_min}")));
        }
        let width = (p_max - p_min + 1) as usize;
        if levels.len() != dims.len() || levels.iter().any(|l| l.len() != width) {
            return Err(SpecError::Filtration(format!("need {} degrees × {width} levels", dims.len())));
        }
        for (k, ls) in levels.iter().enumerate() {
            let n = n_min + k as i64;
            if ls.iter().any(|s| s.ambient() != dims[k]) {
                return Err(SpecError::Filtration(format!("level in degree {n} has wrong ambient dimension")));
            }
            if ls[0].dim() != dims[k] {
                return Err(SpecError::Filtration(format!("F_{p_min} C^{n} is not the whole space")));
            }
            for w in ls.windows(2) {
                if !w[1].is_subspace_of(&w[0]) {
                    return Err(SpecError::Filtration(format!("levels in degree {n} do not descend")));
                }
            }
        }
        let out = FilteredComplex { n_min, dims, bases, d, p_min, p_max, levels };
        for n in out.degrees() {
            for p in p_min..=p_max {
                if !out.f(n, p).image(&out.diff(n)).is_subspace_of(&out.f(n + 1, p)) {
                    return Err(SpecError::Filtration(format!("d(F_{p} C^{n}) is not contained in F_{p} C^{}", n + 1)));
                }
            }
        }
        Ok(out)
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i64> {
        self.n_min..=self.n_min + self.dims.len() as i64 - 1
    }

    pub fn p_range(&self) -> std::ops::RangeInclusive<i64> {
        self.p_min..=self.p_max
    }

    pub fn basis_names(&self, n: i64) -> &[String] {
        self.slot(n).map_or(&[], |k| &self.bases[k])
    }

    fn slot(&self, n: i64) -> Option<usize> {
        self.degrees().contains(&n).then(|| (n - self.n_min) as usize)
    }

    pub fn dim(&self, n: i64) -> usize {
        self.slot(n).map_or(0, |k| self.dims[k])
    }

    /// `d : C^n → C^{n+1}`, zero outside the stored range.
    pub fn diff(&self, n: i64) -> Matrix {
        match self.slot(n) {
            Some(k) if k < self.d.len() => self.d[k].clone(),
            _ => Matrix::zero(self.dim(n + 1), self.dim(n)),
        }
    }

    /// `F_p C^n` with the clamping conventions.
    pub fn f(&self, n: i64, p: i64) -> Subspace {
        let dim = self.dim(n);
        match self.slot(n) {
            None => Subspace::zero(0),
            Some(_) if p < self.p_min => Subspace::full(dim),
            Some(_) if p > self.p_max => Subspace::zero(dim),
            Some(k) => self.levels[k][(p - self.p_min) as usize].clone(),
        }
    }

    pub fn z_space(&self, p: i64, q: i64, r: i64) -> Subspace {
        let n = p + q;
        self.f(n, p).intersect(&Subspace::preimage(&self.diff(n), &self.f(n + 1, p + r)))
    }

    pub fn b_space(&self, p: i64, q: i64, r: i64) -> Subspace {
        let n = p + q;
        self.f(n - 1, p - r).image(&self.diff(n - 1)).intersect(&self.f(n, p))
    }

    pub fn z_infinity(&self, p: i64, q: i64) -> Subspace {
        let n = p + q;
        self.f(n, p).intersect(&Subspace::span(self.dim(n), self.diff(n).kernel()))
    }

    pub fn b_infinity(&self, p: i64, q: i64) -> Subspace {
        let n = p + q;
        self.f(n, p).intersect(&Subspace::full(self.dim(n - 1)).image(&self.diff(n - 1)))
    }

    pub fn e_page(&self, p: i64, q: i64, r: i64) -> Page {
        let z = self.z_space(p, q, r);
        let denom = self.b_space(p, q, r - 1).sum(&self.z_space(p + 1, q - 1, r - 1));
        Page::new(p, q, Some(r), z, denom)
    }

    pub fn e_infinity(&self, p: i64, q: i64) -> Page {
        let z = self.z_infinity(p, q);
        let denom = self.b_infinity(p, q).sum(&self.z_infinity(p + 1, q - 1));
        Page::new(p, q, None, z, denom)
    }

    /// The page from which every `E_r` equals `E_∞`.
    pub fn stable_from(&self) -> i64 {
        self.p_max - self.p_min + 1
    }

    /// `d_r : E^{pq}_r → E^{p+r,q−r+1}_r` in the representative bases,
    /// checked to be independent of the choice of representatives.
    pub fn d_r_map(&self, p: i64, q: i64, r: i64) -> Result<Matrix, SpecError> {
        let source = self.e_page(p, q, r);
        let target = self.e_page(p + r, q - r + 1, r);
        let d = self.diff(p + q);
        let mut m = Matrix::zero(target.dim(), source.dim());
        for (c, rep) in source.representatives().iter().enumerate() {
            let image = d.apply(rep);
            let coords = target.coordinates(&image).ok_or_else(|| {
                SpecError::Invariant(format!("d of a representative of E^{{{p},{q}}}_{r} leaves Z_{r}"))
            })?;
            for (row, x) in coords.into_iter().enumerate() {
                m.set(row, c, x);
            }
        }
        for b in source.denominator().basis() {
            let image = d.apply(b);
            let coords = target.coordinates(&image);
            if !coords.is_some_and(|c| c.iter().all(Zero::is_zero)) {
                return Err(SpecError::Invariant(format!(
                    "d_{r} on E^{{{p},{q}}} depends on the representative; the filtration is not compatible with d"
                )));
            }
        }
        Ok(m)
    }

    /// `dim H^n` of the underlying complex.
    pub fn cohomology_dim(&self, n: i64) -> usize {
        self.dim(n) - self.diff(n).rank() - self.diff(n - 1).rank()
    }
}

/// One term `E^{pq}_r` (`r = None` for `E_∞`): the numerator space, the
/// denominator it is divided by, and representatives of a basis of the
/// quotient.
#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub p: i64,
    pub q: i64,
    pub r: Option<i64>,
    numerator: Subspace,
    denominator: Subspace,
    reps: Vec<Vector>,
}

impl Page {
    fn new(p: i64, q: i64, r: Option<i64>, numerator: Subspace, denominator: Subspace) -> Page {
        let denominator = denominator.intersect(&numerator);
        let reps = numerator.complement_of(&denominator);
        Page { p, q, r, numerator, denominator, reps }
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn numerator(&self) -> &Subspace {
        &self.numerator
    }

    pub fn denominator(&self) -> &Subspace {
        &self.denominator
    }

    pub fn representatives(&self) -> &[Vector] {
        &self.reps
    }

    /// Coordinates of the class of `v` in the representative basis, or
    /// `None` if `v` is not in the numerator.
    pub fn coordinates(&self, v: &[Q]) -> Option<Vector> {
        let mut cols = self.reps.clone();
        cols.extend(self.denominator.basis().iter().cloned());
        let mut x = solve(&cols, v)?;
        x.truncate(self.reps.len());
        Some(x)
    }
}

/// Page dimensions for every `(p, q)` and `r = 0 ..= stable_from`, plus
/// `E_∞` and the ranks of every `d_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageTable {
    pub pages: Vec<PageEntry>,
    pub infinity: Vec<PageEntry>,
    /// Least `r` with `E_r = E_∞` at every position.
    pub radius: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PageEntry {
    pub r: Option<i64>,
    pub p: i64,
    pub q: i64,
    pub dim: usize,
    /// Rank of the outgoing `d_r`; absent for `E_∞`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_rank: Option<usize>,
}

impl PageTable {
    /// Computes every page, spreading positions over `jobs` threads.
    pub fn compute(k: &FilteredComplex, jobs: usize) -> Result<PageTable, SpecError> {
        let top = k.stable_from();
        let mut tasks: Vec<(i64, i64, Option<i64>)> = Vec::new();
        for n in k.degrees() {
            for p in k.p_range() {
                for r in 0..=top {
                    tasks.push((p, n - p, Some(r)));
                }
                tasks.push((p, n - p, None));
            }
        }
        let run = |&(p, q, r): &(i64, i64, Option<i64>)| -> Result<PageEntry, SpecError> {
            Ok(match r {
                Some(r) => PageEntry {
                    r: Some(r),
                    p,
                    q,
                    dim: k.e_page(p, q, r).dim(),
                    d_rank: Some(k.d_r_map(p, q, r)?.rank()),
                },
                None => PageEntry { r: None, p, q, dim: k.e_infinity(p, q).dim(), d_rank: None },
            })
        };
        let jobs = jobs.max(1).min(tasks.len().max(1));
        let mut results: Vec<PageEntry> = if jobs == 1 {
            tasks.iter().map(run).collect::<Result<_, _>>()?
        } else {
            let chunk = tasks.len().div_ceil(jobs);
            std::thread::scope(|s| {
                let handles: Vec<_> = tasks
                    .chunks(chunk)
                    .map(|part| s.spawn(move || part.iter().map(run).collect::<Result<Vec<_>, _>>()))
                    .collect();
                let mut all = Vec::new();
                for h in handles {
                    all.extend(h.join().expect("page worker panicked")?);
                }
                Ok::<_, SpecError>(all)
            })?
        };
        results.sort();
        let (infinity, pages): (Vec<_>, Vec<_>) = results.into_iter().partition(|e| e.r.is_none());
        let inf: BTreeMap<(i64, i64), usize> = infinity.iter().map(|e| ((e.p, e.q), e.dim)).collect();
        let mut radius = top;
        for r in (0..=top).rev() {
            if pages.iter().filter(|e| e.r == Some(r)).all(|e| inf[&(e.p, e.q)] == e.dim) {
                radius = r;
            } else {
                break;
            }
        }
        if pages.iter().filter(|e| e.r == Some(top)).any(|e| inf[&(e.p, e.q)] != e.dim) {
            return Err(SpecError::Invariant(format!("E_{top} differs from E_∞")));
        }
        Ok(PageTable { pages, infinity, radius })
    }

    pub fn dim(&self, p: i64, q: i64, r: Option<i64>) -> usize {
        let list = if r.is_none() { &self.infinity } else { &self.pages };
        list.iter().find(|e| e.p == p && e.q == q && e.r == r).map_or(0, |e| e.dim)
    }

    /// Plain-text table: one block per page, rows `p`, columns `q`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let ps: Vec<i64> = self.infinity.iter().map(|e| e.p).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        // Columns that are zero on every page are left out.
        let mut qs: Vec<i64> = self.pages.iter().filter(|e| e.dim > 0).map(|e| e.q).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        if qs.is_empty() {
            qs = self.infinity.iter().map(|e| e.q).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        }
        let rs: Vec<Option<i64>> = self
            .pages
            .iter()
            .map(|e| e.r)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .chain([None])
            .collect();
        for r in rs {
            match r {
                Some(r) => out.push_str(&format!("E_{r}\n")),
                None => out.push_str("E_inf\n"),
            }
            out.push_str("  p\\q");
            for q in &qs {
                out.push_str(&format!(" {q:>3}"));
            }
            out.push('\n');
            for p in &ps {
                out.push_str(&format!("  {p:>3}"));
                for q in &qs {
                    out.push_str(&format!(" {:>3}", self.dim(*p, *q, r)));
                }
                out.push('\n');
            }
        }
        out.push_str(&format!("stabilizes at r = {}\n", self.radius));
        out
    }
}

/// A finite first-quadrant bicomplex `K^{pq}`, `0 ≤ p < rows`,
/// `0 ≤ q < cols`, with `d_V : K^{pq} → K^{p+1,q}` and
/// `d_H : K^{pq} → K^{p,q+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bicomplex {
    dims: Vec<Vec<usize>>,
    dv: Vec<Vec<Matrix>>,
    dh: Vec<Vec<Matrix>>,
}

impl Bicomplex {
    /// `dv[p][q]` for `p + 1 < rows`, `dh[p][q]` for `q + 1 < cols`.
    /// Validates `d_V² = d_H² = d_V d_H + d_H d_V = 0`.
    pub fn new(dims: Vec<Vec<usize>>, dv: Vec<Vec<Matrix>>, dh: Vec<Vec<Matrix>>) -> Result<Self, SpecError> {
        let rows = dims.len();
        let cols = dims.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || dims.iter().any(|r| r.len() != cols) {
            return Err(SpecError::Bicomplex("dims must be a nonempty rectangular table".into()));
        }
        let bad = |what: &str, p: usize, q: usize| SpecError::Bicomplex(format!("{what} at ({p},{q}) has the wrong shape"));
        if dv.len() != rows - 1 || dv.iter().any(|r| r.len() != cols) {
            return Err(SpecError::Bicomplex(format!("need {} x {cols} vertical maps", rows - 1)));
        }
        if dh.len() != rows || dh.iter().any(|r| r.len() != cols - 1) {
            return Err(SpecError::Bicomplex(format!("need {rows} x {} horizontal maps", cols - 1)));
        }
        for p in 0..rows {
            for q in 0..cols {
                if p + 1 < rows && (dv[p][q].rows() != dims[p + 1][q] || dv[p][q].cols() != dims[p][q]) {
                    return Err(bad("d_V", p, q));
                }
                if q + 1 < cols && (dh[p][q].rows() != dims[p][q + 1] || dh[p][q].cols() != dims[p][q]) {
                    return Err(bad("d_H", p, q));
                }
            }
        }
        let b = Bicomplex { dims, dv, dh };
        for p in 0..rows {
            for q in 0..cols {
                if p + 2 < rows && !b.dv[p + 1][q].mul(&b.dv[p][q]).is_zero() {
                    return Err(SpecError::Bicomplex(format!("d_V∘d_V ≠ 0 at ({p},{q})")));
                }
                if q + 2 < cols && !b.dh[p][q + 1].mul(&b.dh[p][q]).is_zero() {
                    return Err(SpecError::Bicomplex(format!("d_H∘d_H ≠ 0 at ({p},{q})")));
                }
                if p + 1 < rows && q + 1 < cols {
                    let s = b.dv[p][q + 1].mul(&b.dh[p][q]).add(&b.dh[p + 1][q].mul(&b.dv[p][q]));
                    if !s.is_zero() {
                        return Err(SpecError::Bicomplex(format!("d_V d_H + d_H d_V ≠ 0 at ({p},{q})")));
                    }
                }
            }
        }
        Ok(b)
    }

    pub fn rows(&self) -> usize {
        self.dims.len()
    }

    pub fn cols(&self) -> usize {
        self.dims[0].len()
    }

    pub fn dim(&self, p: usize, q: usize) -> usize {
        self.dims[p][q]
    }

    pub fn dv(&self, p: usize, q: usize) -> &Matrix {
        &self.dv[p][q]
    }

    pub fn dh(&self, p: usize, q: usize) -> &Matrix {
        &self.dh[p][q]
    }

    /// Offsets of the blocks `K^{p,n−p}` inside `C^n`, by increasing `p`.
    fn layout(&self, n: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        let mut offset = 0;
        for p in 0..self.rows() {
            if n >= p && n - p < self.cols() {
                out.push((p, n - p, offset));
                offset += self.dims[p][n - p];
            }
        }
        out
    }

    /// The total complex `C^n = ⊕_{p+q=n} K^{pq}`, `d = d_V + d_H`, filtered
    /// by `F_s C^n = ⊕_{p ≥ s} K^{p,n−p}`.
    pub fn total(&self) -> FilteredComplex {
        let top = self.rows() + self.cols() - 2;
        let layouts: Vec<_> = (0..=top).map(|n| self.layout(n)).collect();
        let dims: Vec<usize> = layouts.iter().map(|l| l.iter().map(|&(p, q, _)| self.dims[p][q]).sum()).collect();
        let bases = layouts
            .iter()
            .map(|l| {
                l.iter()
                    .flat_map(|&(p, q, _)| (0..self.dims[p][q]).map(move |k| format!("K{p}{q}_{}", k + 1)))
                    .collect()
            })
            .collect();
        let mut d = Vec::new();
        for n in 0..top {
            let mut m = Matrix::zero(dims[n + 1], dims[n]);
            let target: BTreeMap<(usize, usize), usize> = layouts[n + 1].iter().map(|&(p, q, o)| ((p, q), o)).collect();
            for &(p, q, off) in &layouts[n] {
                let mut place = |block: &Matrix, tp: usize, tq: usize| {
                    let to = target[&(tp, tq)];
                    for r in 0..block.rows() {
                        for c in 0..block.cols() {
                            m.set(to + r, off + c, block.get(r, c).clone());
                        }
                    }
                };
                if p + 1 < self.rows() {
                    place(&self.dv[p][q], p + 1, q);
                }
                if q + 1 < self.cols() {
                    place(&self.dh[p][q], p, q + 1);
                }
            }
            d.push(m);
        }
        let levels = layouts
            .iter()
            .zip(&dims)
            .map(|(l, &dim)| {
                (0..self.rows())
                    .map(|s| {
                        let mut vecs = Vec::new();
                        for &(p, q, off) in l {
                            if p >= s {
                                for k in 0..self.dims[p][q] {
                                    let mut v = vec![Q::zero(); dim];
                                    v[off + k] = Q::from_integer(1.into());
                                    vecs.push(v);
                                }
                            }
                        }
                        Subspace::span(dim, vecs)
                    })
                    .collect()
            })
            .collect();
        FilteredComplex::new(0, dims, Some(bases), d, 0, self.rows() as i64 - 1, levels)
            .expect("totalization of a validated bicomplex is a filtered complex")
    }
}

/// A rational entry written either as a JSON integer or as text `"a/b"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Int(i64),
    Text(String),
}

impl Entry {
    fn value(&self) -> Result<Q, SpecError> {
        match self {
            Entry::Int(n) => Ok(Q::from_integer((*n).into())),
            Entry::Text(s) => Q::from_str(s.trim()).map_err(|_| SpecError::Entry(s.clone())),
        }
    }

    fn of(q: &Q) -> Entry {
        Entry::Text(q.to_string())
    }
}

/// Rows of entries; `[]` stands for the zero matrix of whatever shape is
/// expected.
pub type MatrixJson = Vec<Vec<Entry>>;

fn matrix_from_json(m: &MatrixJson, rows: usize, cols: usize, what: &str) -> Result<Matrix, SpecError> {
    if m.is_empty() {
        return Ok(Matrix::zero(rows, cols));
    }
    let data = m.iter().map(|r| r.iter().map(Entry::value).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()?;
    Matrix::from_rows(rows, cols, data).ok_or_else(|| SpecError::Shape(format!("{what} must be {rows}x{cols}")))
}

fn matrix_to_json(m: &Matrix) -> MatrixJson {
    m.data().iter().map(|r| r.iter().map(Entry::of).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationJson {
    pub p_min: i64,
    pub p_max: i64,
    /// `levels[n][p − p_min]`: a spanning set of `F_p C^n`.
    pub levels: Vec<Vec<Vec<Vec<Entry>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    /// First and last degree.
    pub degrees: [i64; 2],
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bases: Option<Vec<Vec<String>>>,
    /// `differentials[k]` maps degree `degrees[0] + k` to the next one.
    pub differentials: Vec<MatrixJson>,
    pub filtration: FiltrationJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicomplexJson {
    pub dims: Vec<Vec<usize>>,
    pub dv: Vec<Vec<MatrixJson>>,
    pub dh: Vec<Vec<MatrixJson>>,
}

impl FilteredComplex {
    pub fn from_json(j: &ComplexJson) -> Result<FilteredComplex, SpecError> {
        let count = j.degrees[1] - j.degrees[0] + 1;
        if count < 1 || count as usize != j.dims.len() {
            return Err(SpecError::Shape(format!("degrees {:?} do not match {} dims", j.degrees, j.dims.len())));
        }
        if j.differentials.len() + 1 != j.dims.len() {
            return Err(SpecError::Shape(format!("expected {} differentials", j.dims.len() - 1)));
        }
        let mut d = Vec::new();
        for (k, m) in j.differentials.iter().enumerate() {
            d.push(matrix_from_json(m, j.dims[k + 1], j.dims[k], &format!("differential {k}"))?);
        }
        if j.filtration.levels.len() != j.dims.len() {
            return Err(SpecError::Filtration("one list of levels per degree required".into()));
        }
        let mut levels = Vec::new();
        for (k, ls) in j.filtration.levels.iter().enumerate() {
            let mut row = Vec::new();
            for span in ls {
                let mut vecs = Vec::new();
                for v in span {
                    if v.len() != j.dims[k] {
                        return Err(SpecError::Filtration(format!("spanning vector of length {} in degree {}", v.len(), j.degrees[0] + k as i64)));
                    }
                    vecs.push(v.iter().map(Entry::value).collect::<Result<Vec<_>, _>>()?);
                }
                row.push(Subspace::span(j.dims[k], vecs));
            }
            levels.push(row);
        }
        FilteredComplex::new(j.degrees[0], j.dims.clone(), j.bases.clone(), d, j.filtration.p_min, j.filtration.p_max, levels)
    }

    pub fn to_json(&self) -> ComplexJson {
        ComplexJson {
            degrees: [*self.degrees().start(), *self.degrees().end()],
            dims: self.dims.clone(),
            bases: Some(self.bases.clone()),
            differentials: self.d.iter().map(matrix_to_json).collect(),
            filtration: FiltrationJson {
                p_min: self.p_min,
                p_max: self.p_max,
                levels: self
                    .levels
                    .iter()
                    .map(|ls| ls.iter().map(|s| s.basis().iter().map(|v| v.iter().map(Entry::of).collect()).collect()).collect())
                    .collect(),
            },
        }
    }
}

impl Bicomplex {
    pub fn from_json(j: &BicomplexJson) -> Result<Bicomplex, SpecError> {
        let rows = j.dims.len();
        let cols = j.dims.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || j.dims.iter().any(|r| r.len() != cols) {
            return Err(SpecError::Bicomplex("dims must be a nonempty rectangular table".into()));
        }
        if j.dv.len() != rows - 1 || j.dv.iter().any(|r| r.len() != cols) {
            return Err(SpecError::Bicomplex(format!("dv must be {} x {cols}", rows - 1)));
        }
        if j.dh.len() != rows || j.dh.iter().any(|r| r.len() != cols - 1) {
            return Err(SpecError::Bicomplex(format!("dh must be {rows} x {}", cols - 1)));
        }
        let mut dv = Vec::new();
        for p in 0..rows - 1 {
            let mut row = Vec::new();
            for q in 0..cols {
                row.push(matrix_from_json(&j.dv[p][q], j.dims[p + 1][q], j.dims[p][q], &format!("dv[{p}][{q}]"))?);
            }
            dv.push(row);
        }
        let mut dh = Vec::new();
        for p in 0..rows {
            let mut row = Vec::new();
            for q in 0..cols - 1 {
                row.push(matrix_from_json(&j.dh[p][q], j.dims[p][q + 1], j.dims[p][q], &format!("dh[{p}][{q}]"))?);
            }
            dh.push(row);
        }
        Bicomplex::new(j.dims.clone(), dv, dh)
    }

    pub fn to_json(&self) -> BicomplexJson {
        BicomplexJson {
            dims: self.dims.clone(),
            dv: self.dv.iter().map(|r| r.iter().map(matrix_to_json).collect()).collect(),
            dh: self.dh.iter().map(|r| r.iter().map(matrix_to_json).collect()).collect(),
        }
    }
}

#[cfg(test)]
mod tests;
