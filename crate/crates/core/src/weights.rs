//! Partial-area quadrature weights `w_ij`.
//!
//! Built-in schemes are translation invariant on a uniform lattice, so they
//! are stored once as a stencil of integer offsets. Custom tables are stored
//! row-compressed.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec2};
use crate::kernels::Kernel;
use crate::lattice::Lattice;

pub use crate::geometry::circle_box_area;

/// Tolerance for the range and symmetry checks of [`validate_weights`].
pub const VALIDATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightScheme {
    /// Full-area: the plain horizon indicator.
    #[serde(rename = "FA")]
    Fa,
    /// Exact area of the horizon disc intersected with the cell.
    #[serde(rename = "PAAC")]
    Paac,
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightScheme::Fa => "FA",
            WeightScheme::Paac => "PAAC",
            WeightScheme::Custom => "custom",
        })
    }
}

impl FromStr for WeightScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FA" => Ok(WeightScheme::Fa),
            "PAAC" => Ok(WeightScheme::Paac),
            "CUSTOM" => Ok(WeightScheme::Custom),
            _ => Err(Error::Config(format!("unknown weight scheme `{s}`"))),
        }
    }
}

/// `1` if `|x_j - x_i| < delta`, else `0`.
pub fn weight_fa(x_i: Vec2, x_j: Vec2, delta: f64) -> f64 {
    if (x_j - x_i).norm() < delta {
        1.0
    } else {
        0.0
    }
}

/// `area(B_delta(x_i) ∩ cell) / area(cell)` with the exact 0/1 values forced
/// when the cell lies fully outside or inside the disc.
pub fn weight_paac(x_i: Vec2, cell: &Rect, delta: f64) -> f64 {
    if cell.distance_to(x_i) >= delta {
        return 0.0;
    }
    if cell.farthest_distance(x_i) <= delta {
        return 1.0;
    }
    (circle_box_area(x_i, delta, cell) / cell.area()).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilEntry {
    pub dp: i32,
    pub dq: i32,
    pub weight: f64,
}

#[derive(Clone, Debug)]
enum Storage {
    Stencil {
        entries: Vec<StencilEntry>,
        reach: i32,
        // dense (2 reach + 1)² lookup of weights by offset
        lookup: Vec<f64>,
    },
    Sparse {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct WeightTable {
    scheme: WeightScheme,
    delta: f64,
    nx: usize,
    ny: usize,
    storage: Storage,
}

/// Build the built-in FA or PAAC table for `lattice`.
pub fn build_weights(
    lattice: &Lattice,
    kernel: &Kernel,
    scheme: WeightScheme,
) -> Result<WeightTable> {
    let delta = kernel.delta();
    let kappa = lattice.kappa();
    let limit = delta / SQRT_2;
    if kappa >= limit {
        return Err(Error::KappaTooLarge { kappa, limit });
    }
    let cutoff = lattice.candidate_radius(delta);
    let reach = (cutoff / kappa).ceil() as i32;
    let side = (2 * reach + 1) as usize;
    let mut lookup = vec![0.0; side * side];

    // weight by canonical offset (0 <= a <= b), mirrored to all eight octants
    let canonical = |a: i32, b: i32| -> f64 {
        let bond = Vec2::new(kappa * a as f64, kappa * b as f64);
        if bond.norm() >= cutoff {
            return 0.0;
        }
        match scheme {
            WeightScheme::Fa => weight_fa(Vec2::ZERO, bond, delta),
            WeightScheme::Paac => {
                let h = 0.5 * kappa;
                let cell = Rect {
                    min: bond - Vec2::new(h, h),
                    max: bond + Vec2::new(h, h),
                };
                weight_paac(Vec2::ZERO, &cell, delta)
            }
            WeightScheme::Custom => unreachable!("custom tables are not built from a scheme"),
        }
    };
    if scheme == WeightScheme::Custom {
        return Err(Error::Config(
            "custom weight tables must be loaded, not built".into(),
        ));
    }

    let mut entries = Vec::new();
    for dq in -reach..=reach {
        for dp in -reach..=reach {
            if dp == 0 && dq == 0 {
                continue;
            }
            let (a, b) = (dp.abs().min(dq.abs()), dp.abs().max(dq.abs()));
            let w = canonical(a, b);
            if w > 0.0 {
                entries.push(StencilEntry { dp, dq, weight: w });
                lookup[((dq + reach) as usize) * side + (dp + reach) as usize] = w;
            }
        }
    }
    let (nx, ny) = lattice.counts();
    Ok(WeightTable {
        scheme,
        delta,
        nx,
        ny,
        storage: Storage::Stencil {
            entries,
            reach,
            lookup,
        },
    })
}

impl WeightTable {
    /// Custom table from explicit `(i, j, w)` entries; unspecified pairs are 0.
    pub fn custom(
        lattice: &Lattice,
        delta: f64,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = lattice.len();
        let mut triples: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        for &(i, j, w) in &triples {
            if i >= n || j >= n {
                return Err(Error::Config(format!(
                    "weight entry ({i}, {j}) outside lattice of {n} cells"
                )));
            }
            if i == j {
                return Err(Error::Config(format!(
                    "weight entry ({i}, {i}) on the diagonal"
                )));
            }
            if !w.is_finite() {
                return Err(Error::Config(format!(
                    "weight entry ({i}, {j}) is not finite"
                )));
            }
        }
        triples.sort_by_key(|&(i, j, _)| (i, j));
        triples.dedup_by_key(|&mut (i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &triples {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let (nx, ny) = lattice.counts();
        Ok(WeightTable {
            scheme: WeightScheme::Custom,
            delta,
            nx,
            ny,
            storage: Storage::Sparse {
                row_ptr,
                cols: triples.iter().map(|t| t.1).collect(),
                vals: triples.iter().map(|t| t.2).collect(),
            },
        })
    }

    /// Read a custom table from CSV with header `i,j,w` (extra columns ignored).
    pub fn read_csv(lattice: &Lattice, delta: f64, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h.map_err(|e| Error::io(path, e))?,
            None => {
                return Err(Error::Config(format!(
                    "{}: empty weight file",
                    path.display()
                )))
            }
        };
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let find = |name: &str| {
            cols.iter().position(|c| *c == name).ok_or_else(|| {
                Error::Config(format!("{}: missing column `{name}`", path.display()))
            })
        };
        let (ci, cj, cw) = (find("i")?, find("j")?, find("w")?);
        let mut entries = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || {
                Error::Config(format!(
                    "{}:{}: malformed row `{line}`",
                    path.display(),
                    lineno + 2
                ))
            };
            let get = |c: usize| fields.get(c).copied().ok_or_else(bad);
            let i = get(ci)?.parse::<usize>().map_err(|_| bad())?;
            let j = get(cj)?.parse::<usize>().map_err(|_| bad())?;
            let w = get(cw)?.parse::<f64>().map_err(|_| bad())?;
            entries.push((i, j, w));
        }
        WeightTable::custom(lattice, delta, entries)
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Stencil entries for translation-invariant tables.
    pub fn stencil(&self) -> Option<&[StencilEntry]> {
        match &self.storage {
            Storage::Stencil { entries, .. } => Some(entries),
            Storage::Sparse { .. } => None,
        }
    }

    fn coords(&self, i: usize) -> (i64, i64) {
        ((i % self.nx) as i64, (i / self.nx) as i64)
    }

    /// `w_ij`, zero when not stored.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Stencil { reach, lookup, .. } => {
                let (pi, qi) = self.coords(i);
                let (pj, qj) = self.coords(j);
                let (dp, dq) = (pj - pi, qj - qi);
                let r = *reach as i64;
                if dp.abs() > r || dq.abs() > r || (dp == 0 && dq == 0) {
                    return 0.0;
                }
                let side = (2 * r + 1) as usize;
                lookup[((dq + r) as usize) * side + (dp + r) as usize]
            }
            Storage::Sparse {
                row_ptr,
                cols,
                vals,
            } => {
                let row = row_ptr[i]..row_ptr[i + 1];
                match cols[row.clone()].binary_search(&j) {
                    Ok(k) => vals[row.start + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Stored neighbors `(j, w_ij)` of node `i` in increasing `j`.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_in_row(i, |j, _, w| out.push((j, w)));
        out
    }

    /// Visit stored neighbors of `i` as `(j, entry, w_ij)` in increasing `j`.
    ///
    /// `entry` indexes the stencil for built-in tables and the compressed
    /// row storage for custom ones; callers use it to look up data
    /// precomputed per entry.
    #[inline]
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, usize, f64)) {
        match &self.storage {
            Storage::Stencil { entries, .. } => {
                let (p, q) = self.coords(i);
                let (nx, ny) = (self.nx as i64, self.ny as i64);
                for (e, s) in entries.iter().enumerate() {
                    let pj = p + s.dp as i64;
                    let qj = q + s.dq as i64;
                    if pj >= 0 && pj < nx && qj >= 0 && qj < ny {
                        f((qj * nx + pj) as usize, e, s.weight);
                    }
                }
            }
            Storage::Sparse {
                row_ptr,
                cols,
                vals,
            } => {
                for k in row_ptr[i]..row_ptr[i + 1] {
                    f(cols[k], k, vals[k]);
                }
            }
        }
    }

    /// Number of per-entry slots addressed by `for_each_in_row`.
    pub fn entry_count(&self) -> usize {
        match &self.storage {
            Storage::Stencil { entries, .. } => entries.len(),
            Storage::Sparse { cols, .. } => cols.len(),
        }
    }

    /// Integer offset `(dp, dq)` of an entry relative to node `i`.
    pub fn entry_offset(&self, i: usize, entry: usize) -> (i64, i64) {
        match &self.storage {
            Storage::Stencil { entries, .. } => {
                (entries[entry].dp as i64, entries[entry].dq as i64)
            }
            Storage::Sparse { cols, .. } => {
                let (pi, qi) = self.coords(i);
                let (pj, qj) = self.coords(cols[entry]);
                (pj - pi, qj - qi)
            }
        }
    }

    /// Whether the table was built for a lattice with these counts.
    pub fn matches(&self, lattice: &Lattice) -> bool {
        (self.nx, self.ny) == lattice.counts()
    }

    /// Dump as CSV with columns `i,j,dx,dy,w`.
    pub fn write_csv(&self, lattice: &Lattice, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "i,j,dx,dy,w")?;
        for i in 0..lattice.len() {
            for (j, w) in self.row(i) {
                let b = lattice.bond(i, j);
                writeln!(out, "{i},{j},{:.17e},{:.17e},{:.17e}", b.x, b.y, w)?;
            }
        }
        Ok(())
    }
}

/// The four consistency rules on partial-area weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightRule {
    /// Zero beyond `delta + sqrt(2) kappa / 2`.
    ZeroOutside,
    /// One within `delta - sqrt(2) kappa / 2`.
    OneInside,
    /// Inside `[0, 1]`.
    Range,
    /// `w_ij = w_ji`.
    Symmetric,
}

impl fmt::Display for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightRule::ZeroOutside => "A4(a)",
            WeightRule::OneInside => "A4(b)",
            WeightRule::Range => "A4(c)",
            WeightRule::Symmetric => "A4(d)",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub rule: WeightRule,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated at ({}, {}): w = {}",
            self.rule, self.i, self.j, self.value
        )
    }
}

/// Check the weight rules; an empty list means the table is admissible.
///
/// Each unordered pair is reported at most once per rule, as `(i, j)` with
/// `i < j` and the offending value.
pub fn validate_weights(table: &WeightTable, lattice: &Lattice) -> Vec<Violation> {
    let mut out = Vec::new();
    if !table.matches(lattice) {
        out.push(Violation {
            i: 0,
            j: 0,
            rule: WeightRule::Range,
            value: f64::NAN,
        });
        return out;
    }
    let delta = table.delta();
    let half_diag = SQRT_2 * lattice.kappa() / 2.0;
    let outer = delta + half_diag;
    let inner = delta - half_diag;
    let in_range = |w: f64| (-VALIDATION_TOL..=1.0 + VALIDATION_TOL).contains(&w);

    let mut check_pair = |i: usize, j: usize| {
        let wij = table.weight(i, j);
        let wji = table.weight(j, i);
        let d = lattice.bond(i, j).norm();
        let pick = |bad: &dyn Fn(f64) -> bool| {
            if bad(wij) {
                Some(wij)
            } else if bad(wji) {
                Some(wji)
            } else {
                None
            }
        };
        if let Some(value) = pick(&|w| !in_range(w)) {
            out.push(Violation {
                i,
                j,
                rule: WeightRule::Range,
                value,
            });
        }
        if d >= outer {
            if let Some(value) = pick(&|w| w.abs() > VALIDATION_TOL) {
                out.push(Violation {
                    i,
                    j,
                    rule: WeightRule::ZeroOutside,
                    value,
                });
            }
        }
        if d <= inner {
            if let Some(value) = pick(&|w| (w - 1.0).abs() > VALIDATION_TOL) {
                out.push(Violation {
                    i,
                    j,
                    rule: WeightRule::OneInside,
                    value,
                });
            }
        }
        if (wij - wji).abs() > VALIDATION_TOL {
            out.push(Violation {
                i,
                j,
                rule: WeightRule::Symmetric,
                value: wij,
            });
        }
    };

    // stored pairs outside the candidate relation (custom tables only)
    let mut far_pairs = Vec::new();
    if table.stencil().is_none() {
        for i in 0..lattice.len() {
            for (j, _) in table.row(i) {
                if lattice.bond(i, j).norm() >= outer {
                    far_pairs.push((i.min(j), i.max(j)));
                }
            }
        }
        far_pairs.sort_unstable();
        far_pairs.dedup();
    }
    let mut far = far_pairs.into_iter().peekable();
    for i in 0..lattice.len() {
        let mut js: Vec<usize> = lattice
            .neighbors(i, delta)
            .into_iter()
            .filter(|&j| j > i)
            .collect();
        while let Some(&(a, b)) = far.peek() {
            if a != i {
                break;
            }
            js.push(b);
            far.next();
        }
        js.sort_unstable();
        for j in js {
            check_pair(i, j);
        }
    }
    out
}

/// Fail with `InvalidWeights` unless the table passes [`validate_weights`].
pub fn ensure_valid(table: &WeightTable, lattice: &Lattice) -> Result<()> {
    let violations = validate_weights(table, lattice);
    match violations.first() {
        None => Ok(()),
        Some(first) => Err(Error::InvalidWeights {
            count: violations.len(),
            first: first.to_string(),
        }),
    }
}

/// Like [`ensure_valid`] but tolerates violations of the range and
/// inside/outside rules, which only warn. Asymmetry is still an error
/// because the operator relies on `w_ij = w_ji`.
pub fn ensure_symmetric(table: &WeightTable, lattice: &Lattice) -> Result<()> {
    let violations = validate_weights(table, lattice);
    let asymmetric: Vec<_> = violations
        .iter()
        .filter(|v| v.rule == WeightRule::Symmetric)
        .collect();
    if let Some(first) = asymmetric.first() {
        return Err(Error::InvalidWeights {
            count: asymmetric.len(),
            first: first.to_string(),
        });
    }
    if let Some(first) = violations.first() {
        log::warn!(
            "using a weight table with {} violations, first {first}",
            violations.len()
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxDomain;

    fn lattice(nx: usize, ny: usize, kappa: f64) -> Lattice {
        let d =
            BoxDomain::new(Vec2::ZERO, Vec2::new(nx as f64 * kappa, ny as f64 * kappa)).unwrap();
        Lattice::new(d, kappa).unwrap()
    }

    #[test]
    fn fa_indicator() {
        let d = 0.1;
        assert_eq!(weight_fa(Vec2::ZERO, Vec2::new(0.09, 0.0), d), 1.0);
        assert_eq!(weight_fa(Vec2::ZERO, Vec2::new(0.11, 0.0), d), 0.0);
        assert_eq!(weight_fa(Vec2::ZERO, Vec2::new(0.0, 0.1), d), 0.0);
    }

    #[test]
    fn kappa_too_large() {
        let l = lattice(4, 4, 0.04);
        let k = Kernel::inverse_distance(0.05).unwrap();
        assert!(matches!(
            build_weights(&l, &k, WeightScheme::Paac),
            Err(Error::KappaTooLarge { .. })
        ));
    }

    #[test]
    fn builtin_tables_are_valid() {
        let l = lattice(16, 12, 1.0 / 40.0);
        let k = Kernel::inverse_distance(0.05).unwrap();
        for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
            let t = build_weights(&l, &k, scheme).unwrap();
            assert!(validate_weights(&t, &l).is_empty(), "{scheme}");
        }
    }

    #[test]
    fn fa_entries_are_indicator() {
        let l = lattice(16, 12, 1.0 / 40.0);
        let k = Kernel::inverse_distance(0.05).unwrap();
        let t = build_weights(&l, &k, WeightScheme::Fa).unwrap();
        let i = l.index(8, 6);
        for j in 0..l.len() {
            if j == i {
                continue;
            }
            let expect = if l.bond(i, j).norm() < 0.05 { 1.0 } else { 0.0 };
            assert_eq!(t.weight(i, j), expect);
        }
    }

    #[test]
    fn paac_interior_and_annulus() {
        let kappa = 1.0 / 40.0;
        let delta = 0.05;
        let l = lattice(16, 12, kappa);
        let k = Kernel::inverse_distance(delta).unwrap();
        let t = build_weights(&l, &k, WeightScheme::Paac).unwrap();
        let i = l.index(8, 6);
        let half = SQRT_2 * kappa / 2.0;
        let mut fractional = 0;
        for j in l.neighbors(i, delta) {
            let d = l.bond(i, j).norm();
            let w = t.weight(i, j);
            if d <= delta - half {
                assert_eq!(w, 1.0);
            } else if w > 0.0 && w < 1.0 {
                fractional += 1;
            }
            // symmetric
            assert_eq!(w, t.weight(j, i));
            // matches FA outside the annulus
            if d <= delta - half || d >= delta + half {
                assert_eq!(w, weight_fa(l.midpoint(i), l.midpoint(j), delta));
            }
        }
        assert!(fractional > 0);
    }

    #[test]
    fn custom_asymmetry_is_reported_once() {
        // kappa between 0.586 delta and 0.707 delta: no pair is forced to 1
        let delta = 0.05;
        let kappa = 0.65 * delta;
        let l = lattice(3, 3, kappa);
        let t = WeightTable::custom(&l, delta, [(0, 1, 0.5), (1, 0, 0.4)]).unwrap();
        let v = validate_weights(&t, &l);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, WeightRule::Symmetric);
        assert_eq!(v[0].rule.to_string(), "A4(d)");
    }

    #[test]
    fn custom_far_weight_is_reported() {
        let delta = 0.05;
        let kappa = 0.65 * delta;
        // distance between cells 0 and 3 along x is 3 kappa = 0.0975 > delta + kappa
        let l = lattice(4, 1, kappa);
        let t = WeightTable::custom(&l, delta, [(0, 3, 1.0), (3, 0, 1.0)]).unwrap();
        let v = validate_weights(&t, &l);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, WeightRule::ZeroOutside);
        assert_eq!((v[0].i, v[0].j), (0, 3));
    }

    #[test]
    fn custom_one_sided_entry_is_asymmetric() {
        let delta = 0.05;
        let kappa = 0.65 * delta;
        let l = lattice(4, 1, kappa);
        let t = WeightTable::custom(&l, delta, [(3, 0, 1.0)]).unwrap();
        let v = validate_weights(&t, &l);
        assert!(v.iter().any(|v| v.rule == WeightRule::Symmetric), "{v:?}");
    }

    #[test]
    fn csv_round_trip_through_custom() {
        let l = lattice(6, 5, 1.0 / 40.0);
        let k = Kernel::inverse_distance(0.05).unwrap();
        let t = build_weights(&l, &k, WeightScheme::Paac).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        t.write_csv(&l, &mut f).unwrap();
        drop(f);
        let c = WeightTable::read_csv(&l, 0.05, &path).unwrap();
        for i in 0..l.len() {
            for j in 0..l.len() {
                assert_eq!(t.weight(i, j), c.weight(i, j));
            }
        }
        assert!(validate_weights(&c, &l).is_empty());
    }
}
