//! LMI-form problem container and a plain-text dump/load format.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::SdpError;

/// Asymmetry tolerated in the constraint matrices, relative to their scale.
const BLOCK_SYMMETRY_TOL: f64 = 1e-12;

/// One symmetric constraint block `F₀ + Σᵢ yᵢ Fᵢ ⪰ 0`.
#[derive(Debug, Clone)]
pub struct SdpBlock {
    f0: DMatrix<f64>,
    coeffs: Vec<DMatrix<f64>>,
}

impl SdpBlock {
    pub fn new(f0: DMatrix<f64>, coeffs: Vec<DMatrix<f64>>) -> Result<Self, SdpError> {
        let dim = f0.nrows();
        check_symmetric(&f0, dim)?;
        for c in &coeffs {
            check_symmetric(c, dim)?;
        }
        Ok(Self { f0, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.f0.nrows()
    }

    pub fn num_vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn f0(&self) -> &DMatrix<f64> {
        &self.f0
    }

    pub fn coeff(&self, i: usize) -> &DMatrix<f64> {
        &self.coeffs[i]
    }

    /// Evaluates the affine matrix expression at `y`.
    pub fn eval(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.f0.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if y[i] != 0.0 {
                m += c * y[i];
            }
        }
        m
    }
}

fn check_symmetric(m: &DMatrix<f64>, dim: usize) -> Result<(), SdpError> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(SdpError::DimensionMismatch {
            context: format!(
                "block matrix is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                dim,
                dim
            ),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(SdpError::NonFinite);
    }
    let scale = m.amax().max(1.0);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let asym = (m[(i, j)] - m[(j, i)]).abs();
            if asym > BLOCK_SYMMETRY_TOL * scale {
                return Err(SdpError::NotSymmetric {
                    max_asymmetry: asym,
                });
            }
        }
    }
    Ok(())
}

/// A semidefinite program in linear matrix inequality form:
/// minimize `cᵀy` subject to `F₀ᵏ + Σᵢ yᵢ Fᵢᵏ ⪰ 0` for every block `k`.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    objective: DVector<f64>,
    blocks: Vec<SdpBlock>,
}

impl SdpProblem {
    pub fn new(objective: DVector<f64>, blocks: Vec<SdpBlock>) -> Result<Self, SdpError> {
        if objective.is_empty() {
            return Err(SdpError::BadProblem("problem has no variables".into()));
        }
        if blocks.is_empty() {
            return Err(SdpError::BadProblem("problem has no constraint blocks".into()));
        }
        if objective.iter().any(|x| !x.is_finite()) {
            return Err(SdpError::NonFinite);
        }
        let m = objective.len();
        for (k, b) in blocks.iter().enumerate() {
            if b.num_vars() != m {
                return Err(SdpError::DimensionMismatch {
                    context: format!(
                        "block {k} carries {} coefficient matrices, expected {m}",
                        b.num_vars()
                    ),
                });
            }
        }
        Ok(Self { objective, blocks })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &DVector<f64> {
        &self.objective
    }

    pub fn blocks(&self) -> &[SdpBlock] {
        &self.blocks
    }

    /// Sum of block dimensions; the barrier parameter of the problem.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn objective_value(&self, y: &DVector<f64>) -> f64 {
        self.objective.dot(y)
    }

    /// Writes the problem in the plain-text block format.
    ///
    /// Layout: a header line `sdp 1`, a line `vars <m> blocks <K>`, the
    /// objective entries on one line, then per block a line
    /// `block <k> dim <n>` followed by `m+1` matrices (`F₀` first, then the
    /// coefficient of each variable), each as `n` lines of `n` entries,
    /// row-major. Floats use the shortest decimal representation that parses
    /// back bit-exactly.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sdp 1")?;
        writeln!(w, "vars {} blocks {}", self.num_vars(), self.blocks.len())?;
        writeln!(w, "{}", join_floats(self.objective.as_slice()))?;
        for (k, b) in self.blocks.iter().enumerate() {
            writeln!(w, "block {} dim {}", k, b.dim())?;
            write_matrix(&mut w, &b.f0)?;
            for c in &b.coeffs {
                write_matrix(&mut w, c)?;
            }
        }
        Ok(())
    }

    /// Reads a problem written by [`SdpProblem::write_text`].
    pub fn read_text<R: BufRead>(r: R) -> Result<Self, SdpError> {
        let mut lines = NumberedLines::new(r);
        let header = lines.next_line()?;
        if header.trim() != "sdp 1" {
            return Err(lines.err("expected header `sdp 1`"));
        }
        let sizes = lines.next_line()?;
        let mut it = sizes.split_whitespace();
        let (m, num_blocks) = match (it.next(), it.next(), it.next(), it.next(), it.next()) {
            (Some("vars"), Some(m), Some("blocks"), Some(k), None) => {
                let m: usize = m.parse().map_err(|_| lines.err("bad variable count"))?;
                let k: usize = k.parse().map_err(|_| lines.err("bad block count"))?;
                (m, k)
            }
            _ => return Err(lines.err("expected `vars <m> blocks <K>`")),
        };
        let objective = DVector::from_vec(lines.floats(m)?);
        let mut blocks = Vec::with_capacity(num_blocks);
        for k in 0..num_blocks {
            let head = lines.next_line()?;
            let mut it = head.split_whitespace();
            let dim = match (it.next(), it.next(), it.next(), it.next(), it.next()) {
                (Some("block"), Some(idx), Some("dim"), Some(d), None) => {
                    let idx: usize = idx.parse().map_err(|_| lines.err("bad block index"))?;
                    if idx != k {
                        return Err(lines.err(&format!("expected block {k}, found {idx}")));
                    }
                    d.parse::<usize>().map_err(|_| lines.err("bad block dim"))?
                }
                _ => return Err(lines.err("expected `block <k> dim <n>`")),
            };
            let f0 = lines.matrix(dim)?;
            let mut coeffs = Vec::with_capacity(m);
            for _ in 0..m {
                coeffs.push(lines.matrix(dim)?);
            }
            blocks.push(SdpBlock::new(f0, coeffs)?);
        }
        SdpProblem::new(objective, blocks)
    }
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

struct NumberedLines<R> {
    reader: R,
    line: usize,
}

impl<R: BufRead> NumberedLines<R> {
    fn new(reader: R) -> Self {
        Self { reader, line: 0 }
    }

    fn err(&self, message: &str) -> SdpError {
        SdpError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<String, SdpError> {
        let mut buf = String::new();
        loop {
            buf.clear();
            let n = self.reader.read_line(&mut buf)?;
            self.line += 1;
            if n == 0 {
                return Err(SdpError::Parse {
                    line: self.line,
                    message: "unexpected end of input".into(),
                });
            }
            if !buf.trim().is_empty() {
                return Ok(buf);
            }
        }
    }

    fn floats(&mut self, count: usize) -> Result<Vec<f64>, SdpError> {
        let line = self.next_line()?;
        let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|_| self.err("expected floating-point entries"))?;
        if vals.len() != count {
            return Err(self.err(&format!("expected {count} entries, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn matrix(&mut self, dim: usize) -> Result<DMatrix<f64>, SdpError> {
        let mut rows = Vec::with_capacity(dim);
        for _ in 0..dim {
            rows.push(self.floats(dim)?);
        }
        Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_problem() -> SdpProblem {
        // minimize y s.t. [[y, 1], [1, y]] >= 0
        let f0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let f1 = DMatrix::identity(2, 2);
        SdpProblem::new(
            DVector::from_vec(vec![1.0]),
            vec![SdpBlock::new(f0, vec![f1]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn eval_is_affine() {
        let p = sample_problem();
        let y = DVector::from_vec(vec![2.5]);
        let m = p.blocks()[0].eval(&y);
        assert_eq!(m[(0, 0)], 2.5);
        assert_eq!(m[(0, 1)], 1.0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = sample_problem();
        let mut buf = Vec::new();
        p.write_text(&mut buf).unwrap();
        let q = SdpProblem::read_text(buf.as_slice()).unwrap();
        assert_eq!(p.objective(), q.objective());
        for (a, b) in p.blocks().iter().zip(q.blocks()) {
            assert_eq!(a.f0(), b.f0());
            for i in 0..p.num_vars() {
                assert_eq!(a.coeff(i), b.coeff(i));
            }
        }
    }

    #[test]
    fn parse_error_names_line() {
        let text = "sdp 1\nvars 1 blocks 1\nnot_a_float\n";
        match SdpProblem::read_text(text.as_bytes()) {
            Err(SdpError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_asymmetric_block() {
        let f0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(SdpBlock::new(f0, vec![]).is_err());
    }
}
