//! Triorthogonal matrices and the CSS codes built from them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::gf2::{triple_product_weight, BitMatrix, BitVector, RowReducer};

/// Default enumeration bound for [`min_distance`].
pub const DEFAULT_WMAX: usize = 6;

/// Largest coset-triple count enumerated directly by [`check_transversal_ccz`].
const MAX_ENUMERATED_TRIPLES: u64 = 1 << 21;

/// Largest null space enumerated when minimizing a correction.
const MAX_NULLSPACE_DIM: usize = 22;

/// Rows violating a triorthogonality condition, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Witness {
    Pair(usize, usize),
    Triple(usize, usize, usize),
}

impl fmt::Display for Witness {
    /// Rows are printed 1-based.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Witness::Pair(i, j) => write!(f, "(rows {},{})", i + 1, j + 1),
            Witness::Triple(i, j, k) => write!(f, "(rows {},{},{})", i + 1, j + 1, k + 1),
        }
    }
}

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("matrix is not triorthogonal: {0}")]
    NotTriorthogonal(Witness),
    #[error("code has k = 0: every row of G has even weight")]
    NoLogicalQubits,
    #[error("odd-weight rows of G do not give {expected} independent logical operators")]
    InconsistentLogicals { expected: usize },
    #[error("operation requires k = 1, code has k = {0}")]
    UnsupportedK(usize),
    #[error("w_max must be at least 1")]
    InvalidWMax,
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A binary matrix whose distinct row pairs and triples have even overlap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriorthogonalMatrix {
    g: BitMatrix,
}

impl TriorthogonalMatrix {
    pub fn new(g: BitMatrix) -> Result<Self, CodeError> {
        check_triorthogonal(&g).map_err(CodeError::NotTriorthogonal)?;
        Ok(Self { g })
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.g
    }

    pub fn n(&self) -> usize {
        self.g.col_count()
    }

    pub fn m(&self) -> usize {
        self.g.row_count()
    }
}

/// Checks both triorthogonality conditions. On failure returns the first
/// violating index set in lexicographic order.
pub fn check_triorthogonal(g: &BitMatrix) -> Result<(), Witness> {
    let rows = g.rows();
    let m = rows.len();
    for i in 0..m {
        for j in i + 1..m {
            let fij = rows[i].entrywise_product(&rows[j]).expect("rows share a length");
            if fij.weight() % 2 == 1 {
                return Err(Witness::Pair(i, j));
            }
            for k in j + 1..m {
                if fij.overlap(&rows[k]).expect("rows share a length") % 2 == 1 {
                    return Err(Witness::Triple(i, j, k));
                }
            }
        }
    }
    Ok(())
}

/// Code distance, or a lower bound when enumeration stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Exact(usize),
    /// No nontrivial logical of weight below this value exists.
    AtLeast(usize),
}

impl Distance {
    pub fn exact(self) -> Option<usize> {
        match self {
            Distance::Exact(d) => Some(d),
            Distance::AtLeast(_) => None,
        }
    }
}

/// A CSS code built from a triorthogonal matrix.
#[derive(Debug, Clone)]
pub struct CssCode {
    pub n: usize,
    pub k: usize,
    /// Distance, once computed or declared.
    pub d: Option<usize>,
    pub x_stabilizers: BitMatrix,
    pub z_stabilizers: BitMatrix,
    pub logical_x: BitMatrix,
    pub logical_z: BitMatrix,
    pub source: TriorthogonalMatrix,
}

impl CssCode {
    /// Sets the distance by enumeration up to `w_max`; only exact values are stored.
    pub fn with_distance(mut self, w_max: usize) -> Result<Self, CodeError> {
        self.d = min_distance(&self, w_max)?.exact();
        Ok(self)
    }

    /// Number of errors per block the lookup decoder corrects.
    pub fn correctable_weight(&self) -> Option<usize> {
        self.d.map(|d| d.saturating_sub(1) / 2)
    }
}

impl fmt::Display for CssCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.d {
            Some(d) => write!(f, "[[{},{},{}]]", self.n, self.k, d),
            None => write!(f, "[[{},{},?]]", self.n, self.k),
        }
    }
}

/// Builds the CSS code of a triorthogonal matrix.
///
/// X stabilizers span the even-weight rows of G; Z stabilizers span the
/// even-weight vectors of G⊥; logical X operators are the odd-weight rows and
/// logical Z operators are paired against them by solving a linear system.
pub fn build_css(g: &TriorthogonalMatrix) -> Result<CssCode, CodeError> {
    let mat = g.matrix();
    let n = mat.col_count();
    let (even, odd): (Vec<BitVector>, Vec<BitVector>) =
        mat.rows().iter().cloned().partition(|r| r.weight() % 2 == 0);
    if odd.is_empty() {
        return Err(CodeError::NoLogicalQubits);
    }
    let x_stabilizers = BitMatrix::from_rows(n, even).expect("rows of G").row_basis();
    let with_ones = mat.stack(&BitMatrix::from_rows(n, vec![BitVector::ones(n)]).expect("length n")).expect("same width");
    let z_stabilizers = with_ones.nullspace().row_basis();
    let k = n - x_stabilizers.row_count() - z_stabilizers.row_count();
    if k == 0 {
        return Err(CodeError::NoLogicalQubits);
    }
    let logical_x = BitMatrix::from_rows(n, odd).expect("rows of G");
    if logical_x.row_count() != k || x_stabilizers.stack(&logical_x).expect("width n").rank() != x_stabilizers.row_count() + k {
        return Err(CodeError::InconsistentLogicals { expected: k });
    }
    // Logical Z_a commutes with every X stabilizer and pairs only with logical X_a.
    let system = x_stabilizers.stack(&logical_x).expect("width n");
    let r = x_stabilizers.row_count();
    let mut lz = Vec::with_capacity(k);
    for a in 0..k {
        let target = BitVector::from_positions(r + k, [r + a]);
        let z = system.solve(&target).expect("dimensions match").ok_or(CodeError::InconsistentLogicals { expected: k })?;
        lz.push(z);
    }
    Ok(CssCode {
        n,
        k,
        d: None,
        x_stabilizers,
        z_stabilizers,
        logical_x,
        logical_z: BitMatrix::from_rows(n, lz).expect("length n"),
        source: g.clone(),
    })
}

/// Minimum weight of a nontrivial X- or Z-type logical operator, by
/// enumerating supports of weight `1..=w_max`.
pub fn min_distance(code: &CssCode, w_max: usize) -> Result<Distance, CodeError> {
    if w_max == 0 {
        return Err(CodeError::InvalidWMax);
    }
    // X errors are detected by Z stabilizers and are logical iff some logical Z sees them.
    let x_checks = SignatureTable::new(&code.z_stabilizers, &code.logical_z);
    let z_checks = SignatureTable::new(&code.x_stabilizers, &code.logical_x);
    for w in 1..=w_max.min(code.n) {
        if x_checks.has_logical_of_weight(w) || z_checks.has_logical_of_weight(w) {
            return Ok(Distance::Exact(w));
        }
    }
    Ok(Distance::AtLeast(w_max.min(code.n) + 1))
}

/// Per-qubit column signatures against (stabilizers, logicals).
struct SignatureTable {
    words: usize,
    stab_words: usize,
    columns: Vec<Vec<u64>>,
}

impl SignatureTable {
    fn new(stabilizers: &BitMatrix, logicals: &BitMatrix) -> Self {
        let n = stabilizers.col_count();
        let checks = stabilizers.stack(logicals).expect("same width");
        let stab_rows = stabilizers.row_count();
        let stab_words = stab_rows.div_ceil(64).max(1);
        let log_words = logicals.row_count().div_ceil(64).max(1);
        let columns = (0..n)
            .map(|p| {
                let mut sig = vec![0u64; stab_words + log_words];
                for (r, row) in checks.rows().iter().enumerate() {
                    if row.get(p) {
                        let idx = if r < stab_rows { r } else { stab_words * 64 + (r - stab_rows) };
                        sig[idx / 64] |= 1 << (idx % 64);
                    }
                }
                sig
            })
            .collect();
        Self { words: stab_words + log_words, stab_words, columns }
    }

    fn is_logical(&self, acc: &[u64]) -> bool {
        acc[..self.stab_words].iter().all(|&w| w == 0) && acc[self.stab_words..].iter().any(|&w| w != 0)
    }

    fn has_logical_of_weight(&self, w: usize) -> bool {
        let mut acc = vec![0u64; self.words * (w + 1)];
        self.search(0, w, 0, &mut acc)
    }

    fn search(&self, depth: usize, w: usize, start: usize, acc: &mut [u64]) -> bool {
        let l = self.words;
        if depth == w {
            return self.is_logical(&acc[depth * l..(depth + 1) * l]);
        }
        let n = self.columns.len();
        for p in start..=n - (w - depth) {
            for i in 0..l {
                acc[(depth + 1) * l + i] = acc[depth * l + i] ^ self.columns[p][i];
            }
            if self.search(depth + 1, w, p + 1, acc) {
                return true;
            }
        }
        false
    }
}

/// A diagonal fix-up: Z on single qubits and CZ on pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CczCorrection {
    pub z: Vec<usize>,
    pub cz: Vec<(usize, usize)>,
}

impl CczCorrection {
    pub fn is_empty(&self) -> bool {
        self.z.is_empty() && self.cz.is_empty()
    }

    pub fn support(&self) -> usize {
        self.z.len() + self.cz.len()
    }

    /// Phase parity this correction adds on computational basis state `c`.
    pub fn phase_parity(&self, c: &BitVector) -> bool {
        let single = self.z.iter().filter(|&&q| c.get(q)).count();
        let pairs = self.cz.iter().filter(|&&(a, b)| c.get(a) && c.get(b)).count();
        (single + pairs) % 2 == 1
    }
}

impl fmt::Display for CczCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.z.iter().map(|q| format!("Z{}", q + 1)).collect();
        parts.extend(self.cz.iter().map(|(a, b)| format!("CZ{},{}", a + 1, b + 1)));
        f.write_str(&parts.join(" "))
    }
}

/// A basis-state triple from three blocks and its logical classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetTriple {
    pub u: BitVector,
    pub v: BitVector,
    pub w: BitVector,
    pub classes: (bool, bool, bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CczMethod {
    /// Every coset triple was checked.
    CosetEnumeration { triples: u64 },
    /// The phase was checked through its trilinear form on a generator basis.
    TrilinearForm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CczReport {
    pub is_exact: bool,
    /// `Some(empty)` when exact; a fix-up if one was found; `None` otherwise.
    pub correction: Option<CczCorrection>,
    pub failing_witness: Option<CosetTriple>,
    pub method: CczMethod,
}

impl fmt::Display for CczReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.is_exact, &self.correction) {
            (true, _) => f.write_str("exact"),
            (false, Some(c)) => write!(f, "corrected by {c}"),
            (false, None) => f.write_str("no diagonal correction found"),
        }
    }
}

fn require_k1(code: &CssCode) -> Result<(), CodeError> {
    if code.k != 1 {
        return Err(CodeError::UnsupportedK(code.k));
    }
    Ok(())
}

/// Every member of `x_stabilizers` span, in Gray-code order from zero.
fn span_elements(basis: &BitMatrix) -> Vec<BitVector> {
    let mut out = Vec::with_capacity(1 << basis.row_count());
    let mut cur = BitVector::zeros(basis.col_count());
    out.push(cur.clone());
    for i in 1u64..(1u64 << basis.row_count()) {
        let bit = i.trailing_zeros() as usize;
        cur.xor_assign(basis.row(bit)).expect("same width");
        out.push(cur.clone());
    }
    out
}

/// Codewords of one block: (class, codeword) for class 0 then class 1.
fn block_codewords(code: &CssCode) -> Vec<(bool, BitVector)> {
    let c0 = span_elements(&code.x_stabilizers);
    let lx = code.logical_x.row(0);
    let mut out: Vec<(bool, BitVector)> = c0.iter().map(|c| (false, c.clone())).collect();
    out.extend(c0.iter().map(|c| (true, c.xor(lx).expect("same width"))));
    out
}

/// Verifies that qubit-wise CCZ across three blocks of `code` realizes logical CCZ.
pub fn check_transversal_ccz(code: &CssCode) -> Result<CczReport, CodeError> {
    require_k1(code)?;
    let per_block = 1u64 << (code.x_stabilizers.row_count() + 1);
    let triples = per_block.saturating_mul(per_block).saturating_mul(per_block);
    if code.x_stabilizers.row_count() < 21 && triples <= MAX_ENUMERATED_TRIPLES {
        check_by_enumeration(code, triples)
    } else {
        Ok(check_by_trilinear_form(code))
    }
}

fn check_by_enumeration(code: &CssCode, triples: u64) -> Result<CczReport, CodeError> {
    let words = block_codewords(code);
    let mut witness = None;
    'outer: for (x, u) in &words {
        for (y, v) in &words {
            let uv = u.entrywise_product(v).expect("same width");
            for (z, w) in &words {
                let physical = uv.overlap(w).expect("same width") % 2 == 1;
                if physical != (*x && *y && *z) {
                    witness = Some(CosetTriple { u: u.clone(), v: v.clone(), w: w.clone(), classes: (*x, *y, *z) });
                    break 'outer;
                }
            }
        }
    }
    let method = CczMethod::CosetEnumeration { triples };
    if witness.is_none() {
        return Ok(CczReport { is_exact: true, correction: Some(CczCorrection::default()), failing_witness: None, method });
    }
    let correction = ccz_correction_search(code)?;
    Ok(CczReport { is_exact: false, correction, failing_witness: witness, method })
}

fn check_by_trilinear_form(code: &CssCode) -> CczReport {
    // |u·v·w| mod 2 is trilinear, so it suffices to compare the tensor
    // T_abc = |g_a·g_b·g_c| mod 2 on generators against the logical tensor.
    let mut gens: Vec<(bool, &BitVector)> = code.x_stabilizers.rows().iter().map(|r| (false, r)).collect();
    gens.push((true, code.logical_x.row(0)));
    for (a, (la, ga)) in gens.iter().enumerate() {
        for (b, (lb, gb)) in gens.iter().enumerate().skip(a) {
            for (lc, gc) in gens.iter().skip(b) {
                let t = triple_product_weight(ga, gb, gc).expect("same width") % 2 == 1;
                if t != (*la && *lb && *lc) {
                    let witness =
                        CosetTriple { u: (*ga).clone(), v: (*gb).clone(), w: (*gc).clone(), classes: (*la, *lb, *lc) };
                    return CczReport {
                        is_exact: false,
                        correction: None,
                        failing_witness: Some(witness),
                        method: CczMethod::TrilinearForm,
                    };
                }
            }
        }
    }
    CczReport {
        is_exact: true,
        correction: Some(CczCorrection::default()),
        failing_witness: None,
        method: CczMethod::TrilinearForm,
    }
}

/// Searches for Z/CZ corrections on the `3n` qubits of three blocks that fix
/// every failing coset triple. Returns `Ok(None)` when no correction exists.
pub fn ccz_correction_search(code: &CssCode) -> Result<Option<CczCorrection>, CodeError> {
    require_k1(code)?;
    let n = code.n;
    let words = block_codewords(code);
    let total = (words.len() as u64).pow(3);
    if total > MAX_ENUMERATED_TRIPLES {
        return Err(CodeError::TooLarge(format!("{total} coset triples")));
    }
    let mut constraints = Vec::with_capacity(total as usize);
    for (x, u) in &words {
        for (y, v) in &words {
            let uv = u.entrywise_product(v).expect("same width");
            for (z, w) in &words {
                let physical = uv.overlap(w).expect("same width") % 2 == 1;
                let mut c = BitVector::zeros(3 * n);
                for (b, block) in [u, v, w].into_iter().enumerate() {
                    for p in block.ones_iter() {
                        c.set(b * n + p, true);
                    }
                }
                constraints.push((c, physical != (*x && *y && *z)));
            }
        }
    }
    solve_diagonal_correction(3 * n, &constraints)
}

/// Finds the minimal-support Z/CZ correction on `qubits` qubits whose added
/// phase parity on each basis state `c` equals the required flip.
///
/// Unknowns are ordered as the singleton Z terms followed by the CZ pairs in
/// lexicographic order; ties in support size are broken lexicographically on
/// the sorted unknown indices.
pub fn solve_diagonal_correction(
    qubits: usize,
    constraints: &[(BitVector, bool)],
) -> Result<Option<CczCorrection>, CodeError> {
    if constraints.iter().all(|(_, f)| !f) {
        return Ok(Some(CczCorrection::default()));
    }
    let pairs: Vec<(usize, usize)> = (0..qubits).flat_map(|a| (a + 1..qubits).map(move |b| (a, b))).collect();
    let unknowns = qubits + pairs.len();
    let mut rows = Vec::with_capacity(constraints.len());
    let mut rhs = BitVector::zeros(constraints.len());
    for (i, (c, f)) in constraints.iter().enumerate() {
        let mut row = BitVector::zeros(unknowns);
        for q in c.ones_iter() {
            row.set(q, true);
        }
        for (pi, &(a, b)) in pairs.iter().enumerate() {
            if c.get(a) && c.get(b) {
                row.set(qubits + pi, true);
            }
        }
        rows.push(row);
        rhs.set(i, *f);
    }
    let system = BitMatrix::from_rows(unknowns, rows).expect("uniform width");
    let Some(particular) = system.solve(&rhs).expect("dimensions match") else {
        return Ok(None);
    };
    let kernel = system.nullspace();
    if kernel.row_count() > MAX_NULLSPACE_DIM {
        return Err(CodeError::TooLarge(format!("correction null space of dimension {}", kernel.row_count())));
    }
    let key = |v: &BitVector| (v.weight(), v.ones_iter().collect::<Vec<_>>());
    let mut best = particular.clone();
    let mut best_key = key(&best);
    let mut cur = particular;
    for i in 1u64..(1u64 << kernel.row_count()) {
        cur.xor_assign(kernel.row(i.trailing_zeros() as usize)).expect("same width");
        let k = key(&cur);
        if k < best_key {
            best = cur.clone();
            best_key = k;
        }
    }
    Ok(Some(CczCorrection {
        z: best.ones_iter().take_while(|&u| u < qubits).collect(),
        cz: best.ones_iter().filter(|&u| u >= qubits).map(|u| pairs[u - qubits]).collect(),
    }))
}

/// The punctured first-order Reed–Muller generator on 15 qubits: the
/// all-ones row followed by the four binary-coordinate rows of positions 1..15.
pub fn construct_rm15() -> TriorthogonalMatrix {
    let mut rows = vec![BitVector::ones(15)];
    for bit in 0..4 {
        rows.push(BitVector::from_positions(15, (0..15).filter(|p| (p + 1) >> bit & 1 == 1)));
    }
    TriorthogonalMatrix::new(BitMatrix::from_rows(15, rows).expect("length 15")).expect("RM15 is triorthogonal")
}

/// Parses the text code format: a header line `n m`, then `m` rows of
/// `0`/`1` characters. Blank lines and lines starting with `#` are ignored.
pub fn parse_code(text: &str) -> Result<BitMatrix, CodeError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let err = |line: usize, message: String| CodeError::Parse { line, message };
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file, expected header `n m`".into()))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [n, m] = dims[..] else {
        return Err(err(hline, format!("expected header `n m`, found {header:?}")));
    };
    let n: usize = n.parse().map_err(|_| err(hline, format!("invalid column count {n:?}")))?;
    let m: usize = m.parse().map_err(|_| err(hline, format!("invalid row count {m:?}")))?;
    if n == 0 {
        return Err(err(hline, "column count must be positive".into()));
    }
    let mut rows = Vec::with_capacity(m);
    let mut last = hline;
    for (line, text) in lines {
        last = line;
        if rows.len() == m {
            return Err(err(line, format!("more than {m} rows")));
        }
        let row: BitVector = text.parse().map_err(|e| err(line, format!("{e}")))?;
        if row.len() != n {
            return Err(err(line, format!("row has length {}, expected {n}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != m {
        return Err(err(last, format!("expected {m} rows, found {}", rows.len())));
    }
    Ok(BitMatrix::from_rows(n, rows).expect("lengths checked"))
}

/// Serializes a matrix in the text code format.
pub fn format_code(g: &BitMatrix) -> String {
    let mut out = format!("{} {}\n", g.col_count(), g.row_count());
    for r in g.rows() {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

pub fn load_code(path: impl AsRef<Path>) -> Result<TriorthogonalMatrix, CodeError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CodeError::Io { path: path.into(), source })?;
    TriorthogonalMatrix::new(parse_code(&text)?)
}

pub fn save_code(g: &TriorthogonalMatrix, path: impl AsRef<Path>) -> Result<(), CodeError> {
    let path = path.as_ref();
    fs::write(path, format_code(g.matrix())).map_err(|source| CodeError::Io { path: path.into(), source })
}

/// One `.code` file of a catalog directory.
#[derive(Debug)]
pub struct CatalogEntry {
    pub path: PathBuf,
    pub code: Result<CssCode, CodeError>,
}

/// Loads every `*.code` file of `dir`, sorted by file name.
pub fn load_catalog(dir: impl AsRef<Path>) -> Result<Vec<CatalogEntry>, CodeError> {
    let dir = dir.as_ref();
    let io = |source| CodeError::Io { path: dir.into(), source };
    let mut paths = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "code") {
            paths.insert(path.file_name().map(|s| s.to_os_string()), path);
        }
    }
    Ok(paths
        .into_values()
        .map(|path| {
            let code = load_code(&path).and_then(|g| build_css(&g));
            CatalogEntry { path, code }
        })
        .collect())
}

/// Whether `v` commutes (even overlap) with every row of `m`.
pub fn commutes_with_all(v: &BitVector, m: &BitMatrix) -> bool {
    m.rows().iter().all(|r| !r.dot(v).expect("same width"))
}

/// Whether `v` lies in the row span of `m`.
pub fn in_span(v: &BitVector, m: &BitMatrix) -> bool {
    RowReducer::new(m).contains(v)
}
