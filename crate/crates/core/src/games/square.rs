use crate::error::{Error, Result};
use crate::opcore::{commutator_norm, pauli, Operator, Tolerance};

/// A grid of commuting ±1 observables whose row and column products are ±𝟙.
///
/// Signs are measured from the operators, never supplied by the caller.
#[derive(Clone, Debug)]
pub struct ObservableSquare {
    cells: Vec<Vec<Operator>>,
    row_signs: Vec<i8>,
    col_signs: Vec<i8>,
    labels: Option<Vec<Vec<String>>>,
}

/// The Mermin–Peres square used as the default.
pub const STANDARD_SQUARE: [[&str; 3]; 3] = [["XI", "IX", "XX"], ["IZ", "ZI", "ZZ"], ["XZ", "ZX", "YY"]];

/// The four grids listed as a family of magic-square strategies.
pub const TABLE_VARIANTS: [[[&str; 3]; 3]; 4] = [
    [["YX", "XY", "ZZ"], ["YI", "IY", "YY"], ["IX", "XI", "XX"]],
    [["ZX", "XZ", "YY"], ["IX", "XI", "XX"], ["ZI", "IZ", "ZZ"]],
    [["IX", "XI", "XX"], ["ZX", "XZ", "YY"], ["ZI", "IZ", "ZZ"]],
    [["IZ", "XI", "XZ"], ["ZI", "IY", "ZY"], ["ZZ", "XY", "YX"]],
];

fn sign_of(product: &Operator, tol: Tolerance) -> Option<i8> {
    let id = Operator::identity(product.dim());
    if product.distance(&id) <= tol.eps() {
        Some(1)
    } else if product.distance(&(-&id)) <= tol.eps() {
        Some(-1)
    } else {
        None
    }
}

fn check_line(ops: &[&Operator], what: &str, tol: Tolerance) -> Result<i8> {
    for (i, a) in ops.iter().enumerate() {
        for b in &ops[i + 1..] {
            let c = commutator_norm(a, b)?;
            if c > tol.eps() {
                return Err(Error::InvalidSquare(format!("cells of {what} do not commute (‖[A,B]‖ = {c:.3e})")));
            }
        }
    }
    let prod = ops[1..].iter().fold(ops[0].clone(), |acc, o| &acc * o);
    sign_of(&prod, tol).ok_or_else(|| Error::InvalidSquare(format!("product along {what} is not ±𝟙")))
}

impl ObservableSquare {
    pub fn new(cells: Vec<Vec<Operator>>, tol: Tolerance) -> Result<Self> {
        let rows = cells.len();
        let cols = cells.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || cells.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidSquare("cells must form a non-empty rectangle".into()));
        }
        let dim = cells[0][0].dim();
        for (r, row) in cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if cell.dim() != dim {
                    return Err(Error::InvalidSquare(format!("cell ({r},{c}) has wrong dimension")));
                }
                if !cell.is_hermitian(tol) {
                    return Err(Error::InvalidSquare(format!("cell ({r},{c}) is not Hermitian")));
                }
                let sq = cell * cell;
                if sq.distance(&Operator::identity(dim)) > tol.eps() {
                    return Err(Error::InvalidSquare(format!("cell ({r},{c}) does not square to 𝟙")));
                }
            }
        }
        let row_signs = (0..rows)
            .map(|r| check_line(&cells[r].iter().collect::<Vec<_>>(), &format!("row {r}"), tol))
            .collect::<Result<Vec<_>>>()?;
        let col_signs = (0..cols)
            .map(|c| {
                let col: Vec<&Operator> = cells.iter().map(|row| &row[c]).collect();
                check_line(&col, &format!("column {c}"), tol)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ObservableSquare { cells, row_signs, col_signs, labels: None })
    }

    pub fn from_labels<R: AsRef<[&'static str]>>(grid: &[R], tol: Tolerance) -> Result<Self> {
        let cells = grid
            .iter()
            .map(|row| row.as_ref().iter().map(|l| pauli::string(l)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut sq = Self::new(cells, tol)?;
        sq.labels = Some(grid.iter().map(|row| row.as_ref().iter().map(|s| s.to_string()).collect()).collect());
        Ok(sq)
    }

    pub fn standard() -> Self {
        Self::from_labels(&STANDARD_SQUARE, Tolerance::default()).expect("standard square is valid")
    }

    /// Grid `1..=4` of the four-square family.
    pub fn variant(k: usize) -> Result<Self> {
        if !(1..=4).contains(&k) {
            return Err(Error::Precondition(format!("square variant must be 1..=4, got {k}")));
        }
        Self::from_labels(&TABLE_VARIANTS[k - 1], Tolerance::default())
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.cells[0].len()
    }

    pub fn local_dim(&self) -> usize {
        self.cells[0][0].dim()
    }

    pub fn cell(&self, r: usize, c: usize) -> &Operator {
        &self.cells[r][c]
    }

    pub fn row(&self, r: usize) -> Vec<Operator> {
        self.cells[r].clone()
    }

    pub fn column(&self, c: usize) -> Vec<Operator> {
        self.cells.iter().map(|row| row[c].clone()).collect()
    }

    pub fn row_signs(&self) -> &[i8] {
        &self.row_signs
    }

    pub fn col_signs(&self) -> &[i8] {
        &self.col_signs
    }

    pub fn labels(&self) -> Option<&Vec<Vec<String>>> {
        self.labels.as_ref()
    }

    /// Every observable in the grid, row by row.
    pub fn observables(&self) -> Vec<Operator> {
        self.cells.iter().flatten().cloned().collect()
    }
}
