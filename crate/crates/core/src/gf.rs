//! Arithmetic in GF(2^m) for m in {8, 16} and the small dense linear algebra
//! the simulator needs: rank, kernel vectors and square solves.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};

/// x^8 + x^4 + x^3 + x + 1
pub const POLY_GF256: u32 = 0x11B;
/// x^16 + x^12 + x^3 + x + 1
pub const POLY_GF65536: u32 = 0x1100B;

/// A field symbol. Its meaning depends on the [`Field`] it is used with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#06x}", self.0)
    }
}

pub type FieldVector = Vec<FieldElement>;

struct Tables {
    bits: u32,
    poly: u32,
    // exp is doubled so that exp[log a + log b] needs no reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// Carry-less multiply followed by reduction modulo `poly`.
fn slow_mul(a: u32, b: u32, bits: u32, poly: u32) -> u32 {
    let mut acc = 0u32;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & (1 << bits) != 0 {
            a ^= poly;
        }
    }
    acc
}

impl Tables {
    fn build(bits: u32, poly: u32) -> Tables {
        let order = (1u32 << bits) - 1;
        let generator = (2..=order)
            .find(|&g| {
                let mut x = 1u32;
                for i in 1..=order {
                    x = slow_mul(x, g, bits, poly);
                    if x == 1 {
                        return i == order;
                    }
                }
                false
            })
            .expect("reduction polynomial must be primitive-capable");

        let mut exp = vec![0u16; 2 * order as usize];
        let mut log = vec![0u16; order as usize + 1];
        let mut x = 1u32;
        for i in 0..order as usize {
            exp[i] = x as u16;
            exp[i + order as usize] = x as u16;
            log[x as usize] = i as u16;
            x = slow_mul(x, generator, bits, poly);
        }
        Tables {
            bits,
            poly,
            exp,
            log,
        }
    }
}

static GF256: OnceLock<Tables> = OnceLock::new();
static GF65536: OnceLock<Tables> = OnceLock::new();

/// Handle to one of the supported binary extension fields. Cheap to copy;
/// the log/antilog tables are built once per process.
#[derive(Clone, Copy)]
pub struct Field {
    tables: &'static Tables,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})", self.tables.bits)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.tables.bits == other.tables.bits
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(bits: u32) -> Result<Field> {
        let tables = match bits {
            8 => GF256.get_or_init(|| Tables::build(8, POLY_GF256)),
            16 => GF65536.get_or_init(|| Tables::build(16, POLY_GF65536)),
            other => return Err(Error::UnsupportedFieldBits(other)),
        };
        Ok(Field { tables })
    }

    pub fn bits(&self) -> u32 {
        self.tables.bits
    }

    pub fn order(&self) -> u32 {
        1 << self.tables.bits
    }

    pub fn polynomial(&self) -> u32 {
        self.tables.poly
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let t = self.tables;
        let i = t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize;
        FieldElement(t.exp[i])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::InverseOfZero);
        }
        let t = self.tables;
        let order = (self.order() - 1) as usize;
        let l = t.log[a.0 as usize] as usize;
        Ok(FieldElement(t.exp[(order - l) % order]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Validates a raw representation for this field.
    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value >= self.order() {
            return Err(Error::InvalidConfig(format!(
                "{value} is not an element of GF(2^{})",
                self.bits()
            )));
        }
        Ok(FieldElement(value as u16))
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement((rng.random::<u32>() & (self.order() - 1)) as u16)
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.random_range(1..self.order()) as u16)
    }

    /// Maps a 64-bit hash onto a uniformly distributed element.
    #[inline]
    pub fn from_hash(&self, h: u64) -> FieldElement {
        FieldElement((h & (self.order() as u64 - 1)) as u16)
    }

    pub fn dot(&self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).fold(FieldElement::ZERO, |acc, (&x, &y)| {
            self.add(acc, self.mul(x, y))
        })
    }

    /// `acc += c * x` elementwise.
    pub fn axpy(&self, acc: &mut [FieldElement], c: FieldElement, x: &[FieldElement]) {
        if c.is_zero() {
            return;
        }
        for (a, &v) in acc.iter_mut().zip(x) {
            *a = self.add(*a, self.mul(c, v));
        }
    }
}

/// Dense row-major matrix over a binary extension field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> FieldMatrix {
        FieldMatrix {
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> FieldMatrix {
        let mut m = FieldMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = FieldElement::ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<FieldElement>) -> Result<FieldMatrix> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(FieldMatrix { rows, cols, data })
    }

    pub fn from_rows(cols: usize, rows: &[&[FieldElement]]) -> Result<FieldMatrix> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(FieldMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn random<R: Rng + ?Sized>(field: &Field, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| field.random(rng)).collect();
        FieldMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[FieldElement] {
        &self.data
    }

    /// Matrix made of the selected rows, in the given order.
    pub fn select_rows(&self, which: &[usize]) -> FieldMatrix {
        let mut data = Vec::with_capacity(which.len() * self.cols);
        for &i in which {
            data.extend_from_slice(self.row(i));
        }
        FieldMatrix {
            rows: which.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn mul_vec(&self, field: &Field, v: &[FieldElement]) -> Result<FieldVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| field.dot(self.row(i), v)).collect())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn rref(&mut self, field: &Field) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = field.inv(self[(r, c)]).expect("pivot is nonzero");
            for j in c..self.cols {
                self[(r, j)] = field.mul(self[(r, j)], inv);
            }
            for i in 0..self.rows {
                let f = self[(i, c)];
                if i == r || f.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = field.mul(f, self[(r, j)]);
                    self[(i, j)] = field.add(self[(i, j)], v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self, field: &Field) -> usize {
        self.clone().rref(field).len()
    }

    /// A nonzero kernel vector. Free columns are scanned left to right; the
    /// first one is set to 1 and the others to 0, so the result is a
    /// deterministic function of the matrix. With no rows this is e_1.
    /// Returns `None` only when the kernel is trivial.
    pub fn null_space_vector(&self, field: &Field) -> Option<FieldVector> {
        let mut m = self.clone();
        let pivots = m.rref(field);
        let free = (0..self.cols).find(|c| !pivots.contains(c))?;
        let mut v = vec![FieldElement::ZERO; self.cols];
        v[free] = FieldElement::ONE;
        // In characteristic 2, x_pivot = sum of (coef * x_free) with no sign flip.
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = m[(r, free)];
        }
        Some(v)
    }

    /// Solves `self * x = b` for square, nonsingular `self`.
    pub fn solve(&self, field: &Field, b: &[FieldElement]) -> Result<FieldVector> {
        let rhs = FieldMatrix::from_vec(b.len(), 1, b.to_vec())?;
        Ok(self.solve_many(field, &rhs)?.data)
    }

    /// Solves `self * X = B` column-wise for square, nonsingular `self`.
    pub fn solve_many(&self, field: &Field, rhs: &FieldMatrix) -> Result<FieldMatrix> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if rhs.rows != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: rhs.rows,
            });
        }
        let n = self.rows;
        let w = n + rhs.cols;
        let mut aug = FieldMatrix::zeros(n, w);
        for i in 0..n {
            aug.data[i * w..i * w + n].copy_from_slice(self.row(i));
            aug.data[i * w + n..(i + 1) * w].copy_from_slice(rhs.row(i));
        }
        let pivots = aug.rref(field);
        if pivots.iter().take_while(|&&c| c < n).count() < n {
            return Err(Error::SingularSystem);
        }
        let mut out = FieldMatrix::zeros(n, rhs.cols);
        for i in 0..n {
            out.data[i * rhs.cols..(i + 1) * rhs.cols].copy_from_slice(&aug.row(i)[n..]);
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for FieldMatrix {
    type Output = FieldElement;

    fn index(&self, (r, c): (usize, usize)) -> &FieldElement {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for FieldMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut FieldElement {
        &mut self.data[r * self.cols + c]
    }
}
