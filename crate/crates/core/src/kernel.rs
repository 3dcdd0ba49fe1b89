//! Radial kernels `J(|x|_p)` supported on the unit ball and the dense
//! coupling matrices `J^(l)` built from them.
//!
//! The convolution operator discretizes `psi -> J * psi - psi` on the step
//! functions of level `l`:
//!
//! ```text
//! J_{I,K} = p^{-l} J(|I - K|_p)                 I != K
//! J_{I,I} = -p^{-l} sum_{L != 0} J(|L|_p)
//! ```
//!
//! Every row sums to zero and the matrix is symmetric and negative
//! semidefinite. The graph operator replaces `J(|I - K|_p)` with an adjacency
//! matrix, giving `-p^{-l}` times the combinatorial Laplacian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::padic::GroupScheme;

/// Largest operator side built by default (`3^6`).
pub const DEFAULT_DENSE_CAP: usize = 729;

/// `J_alpha(x) = (1 - p^-a)/(1 - p^(a-1)) * (|x|_p^(a-1) - p^(a-1))` for
/// `|x|_p` in `(0, 1]`.
pub fn eval_j_alpha(norm_value: f64, alpha: f64, p: u32) -> Result<f64> {
    if alpha == 1.0 {
        return Err(Error::SingularAlpha);
    }
    if !(norm_value > 0.0 && norm_value <= 1.0) {
        return Err(Error::NormOutOfRange(norm_value));
    }
    let p = p as f64;
    let prefactor = (1.0 - p.powf(-alpha)) / (1.0 - p.powf(alpha - 1.0));
    Ok(prefactor * (norm_value.powf(alpha - 1.0) - p.powf(alpha - 1.0)))
}

/// `1 - p^{-l} sum_{I != 0} J(|I|_p)`, the mass of a unit-mass kernel on the
/// innermost ball `p^l Z_p`.
pub fn tail_average(values: &[f64], scheme: &GroupScheme) -> Result<f64> {
    Ok(1.0 - off_center_mass(values, scheme)?)
}

/// `p^{-l} sum_{I != 0} J(|I|_p)`, summed sphere by sphere.
fn off_center_mass(values: &[f64], scheme: &GroupScheme) -> Result<f64> {
    if values.len() != scheme.l() as usize {
        return Err(Error::DimensionMismatch {
            expected: scheme.l() as usize,
            found: values.len(),
        });
    }
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(j, v)| scheme.sphere_count(j as u32) as f64 * v)
        .sum();
    Ok(sum * scheme.haar_weight())
}

/// A radial kernel tabulated on the norm levels `p^0, ..., p^{-(l-1)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKernel {
    scheme: GroupScheme,
    values: Vec<f64>,
    tail_average: f64,
}

impl RadialKernel {
    pub fn j_alpha(alpha: f64, scheme: GroupScheme) -> Result<Self> {
        let values = (0..scheme.l())
            .map(|j| eval_j_alpha(scheme.norm_at_level(j), alpha, scheme.p()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_profile(scheme, values, false)
    }

    /// A user-supplied profile, `values[j] = J(p^{-j})`, assumed to have unit
    /// mass on `Z_p`. Negative values are rejected unless `allow_negative`.
    pub fn from_profile(
        scheme: GroupScheme,
        values: Vec<f64>,
        allow_negative: bool,
    ) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel(format!("non-finite value {bad}")));
        }
        if !allow_negative {
            if let Some(bad) = values.iter().find(|&&v| v < 0.0) {
                return Err(Error::InvalidKernel(format!("negative value {bad}")));
            }
        }
        let tail_average = tail_average(&values, &scheme)?;
        Ok(Self {
            scheme,
            values,
            tail_average,
        })
    }

    pub fn scheme(&self) -> &GroupScheme {
        &self.scheme
    }

    /// `J(p^{-j})` for `j = 0..l`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_average(&self) -> f64 {
        self.tail_average
    }

    /// `p^{-l} sum_{I != 0} J(|I|_p)`, the negated diagonal of `J^(l)`.
    pub fn off_center_mass(&self) -> f64 {
        1.0 - self.tail_average
    }

    /// Discrete `L^1` norm: `p^{-l} sum_{I != 0} |J(|I|_p)| + |Aver_l|`.
    pub fn l1_norm(&self) -> f64 {
        let off: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| self.scheme.sphere_count(j as u32) as f64 * v.abs())
            .sum::<f64>()
            * self.scheme.haar_weight();
        off + self.tail_average.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Convolution {
        kernel_l1: f64,
    },
    /// `vertices[v]` is the cell carrying graph vertex `v`.
    Graph {
        vertices: Vec<usize>,
    },
}

/// The dense real symmetric matrix `J^(l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperator {
    scheme: GroupScheme,
    matrix: RealMatrix,
    kind: OperatorKind,
}

impl CouplingOperator {
    pub fn convolution(kernel: &RadialKernel) -> Result<Self> {
        Self::convolution_with_cap(kernel, DEFAULT_DENSE_CAP)
    }

    pub fn convolution_with_cap(kernel: &RadialKernel, cap: usize) -> Result<Self> {
        let scheme = *kernel.scheme();
        let n = scheme.size();
        if n > cap {
            return Err(Error::OperatorTooLarge { side: n, cap });
        }
        let w = scheme.haar_weight();
        let by_level: Vec<f64> = kernel.values().iter().map(|v| w * v).collect();
        let diagonal = -kernel.off_center_mass();
        let matrix = RealMatrix::from_fn(n, n, |i, k| match scheme.valuation_raw(i, k) {
            Some(v) => by_level[v as usize],
            None => diagonal,
        });
        Ok(Self {
            scheme,
            matrix,
            kind: OperatorKind::Convolution {
                kernel_l1: kernel.l1_norm(),
            },
        })
    }

    /// Graph operator on the vertices `cells[v]` (identity map when `None`).
    /// Cells that carry no vertex have zero rows and columns.
    pub fn graph(
        scheme: GroupScheme,
        adjacency: &RealMatrix,
        cells: Option<&[usize]>,
    ) -> Result<Self> {
        let nv = adjacency.rows();
        if !adjacency.is_square() {
            return Err(Error::InvalidAdjacency(format!(
                "{}x{} matrix is not square",
                adjacency.rows(),
                adjacency.cols()
            )));
        }
        let n = scheme.size();
        if nv > n {
            return Err(Error::InvalidAdjacency(format!(
                "{nv} vertices exceed the {n} cells of {scheme}"
            )));
        }
        if n > DEFAULT_DENSE_CAP {
            return Err(Error::OperatorTooLarge {
                side: n,
                cap: DEFAULT_DENSE_CAP,
            });
        }
        for i in 0..nv {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidAdjacency(format!("loop at vertex {i}")));
            }
            for k in 0..nv {
                let a = adjacency[(i, k)];
                if a != 0.0 && a != 1.0 {
                    return Err(Error::InvalidAdjacency(format!(
                        "entry ({i}, {k}) = {a} is not 0 or 1"
                    )));
                }
                if a != adjacency[(k, i)] {
                    return Err(Error::InvalidAdjacency(format!(
                        "entries ({i}, {k}) and ({k}, {i}) differ"
                    )));
                }
            }
        }
        let vertices: Vec<usize> = match cells {
            Some(c) => {
                if c.len() != nv {
                    return Err(Error::DimensionMismatch {
                        expected: nv,
                        found: c.len(),
                    });
                }
                let mut seen = vec![false; n];
                for &cell in c {
                    if cell >= n {
                        return Err(Error::CellOutOfRange {
                            index: cell,
                            size: n,
                        });
                    }
                    if std::mem::replace(&mut seen[cell], true) {
                        return Err(Error::InvalidAdjacency(format!(
                            "cell {cell} carries two vertices"
                        )));
                    }
                }
                c.to_vec()
            }
            None => (0..nv).collect(),
        };

        let w = scheme.haar_weight();
        let mut matrix = RealMatrix::zeros(n, n);
        for (a, &ci) in vertices.iter().enumerate() {
            let mut valence = 0.0;
            for (b, &ck) in vertices.iter().enumerate() {
                if adjacency[(a, b)] == 1.0 {
                    matrix[(ci, ck)] = w;
                    valence += 1.0;
                }
            }
            matrix[(ci, ci)] = -w * valence;
        }
        Ok(Self {
            scheme,
            matrix,
            kind: OperatorKind::Graph { vertices },
        })
    }

    /// Wraps an arbitrary matrix; used for tests and externally built
    /// operators. The matrix must be square with side `p^l`.
    pub fn from_matrix(scheme: GroupScheme, matrix: RealMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != scheme.size() {
            return Err(Error::DimensionMismatch {
                expected: scheme.size(),
                found: matrix.rows(),
            });
        }
        let vertices = (0..scheme.size()).collect();
        Ok(Self {
            scheme,
            matrix,
            kind: OperatorKind::Graph { vertices },
        })
    }

    pub fn zero(scheme: GroupScheme) -> Self {
        let n = scheme.size();
        Self {
            scheme,
            matrix: RealMatrix::zeros(n, n),
            kind: OperatorKind::Graph {
                vertices: Vec::new(),
            },
        }
    }

    pub fn scheme(&self) -> &GroupScheme {
        &self.scheme
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn side(&self) -> usize {
        self.matrix.rows()
    }

    /// Upper bound on the operator norm of `J^(l)`: `||J||_1 + 1` for
    /// convolution operators, the maximum row sum otherwise.
    pub fn norm_bound(&self) -> f64 {
        match self.kind {
            OperatorKind::Convolution { kernel_l1 } => kernel_l1 + 1.0,
            OperatorKind::Graph { .. } => self.matrix.inf_norm(),
        }
    }
}

/// `J^(l)` for the kernel `J_alpha`.
pub fn build_convolution_operator(alpha: f64, scheme: GroupScheme) -> Result<CouplingOperator> {
    CouplingOperator::convolution(&RadialKernel::j_alpha(alpha, scheme)?)
}

pub fn build_graph_operator(
    adjacency: &RealMatrix,
    scheme: GroupScheme,
) -> Result<CouplingOperator> {
    CouplingOperator::graph(scheme, adjacency, None)
}

/// Parses an edge list: one `u v` pair of 0-based vertex ids per line, `#`
/// comments and blank lines ignored. Repeated edges collapse to one. The
/// vertex count is `max id + 1` unless `vertex_count` is larger.
pub fn parse_edge_list(text: &str, vertex_count: Option<usize>) -> Result<RealMatrix> {
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: format!("line {}", lineno + 1),
            message,
        };
        let ids: Vec<&str> = line.split_whitespace().collect();
        if ids.len() != 2 {
            return Err(parse_err(format!("expected `u v`, found `{line}`")));
        }
        let mut pair = [0usize; 2];
        for (slot, tok) in pair.iter_mut().zip(&ids) {
            *slot = tok
                .parse()
                .map_err(|_| parse_err(format!("bad vertex id `{tok}`")))?;
        }
        if pair[0] == pair[1] {
            return Err(Error::InvalidAdjacency(format!(
                "loop at vertex {} (line {})",
                pair[0],
                lineno + 1
            )));
        }
        max_id = Some(max_id.unwrap_or(0).max(pair[0]).max(pair[1]));
        edges.push(pair);
    }
    let n = max_id.map_or(0, |m| m + 1).max(vertex_count.unwrap_or(0));
    let mut adjacency = RealMatrix::zeros(n, n);
    for [u, v] in edges {
        adjacency[(u, v)] = 1.0;
        adjacency[(v, u)] = 1.0;
    }
    Ok(adjacency)
}

pub fn load_edge_list(path: &Path, vertex_count: Option<usize>) -> Result<RealMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, vertex_count).map_err(|e| match e {
        Error::Parse { path: at, message } => Error::Parse {
            path: format!("{}: {at}", path.display()),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::CellIndex;

    fn scheme(p: u32, l: u32) -> GroupScheme {
        GroupScheme::new(p, l).unwrap()
    }

    #[test]
    fn j_alpha_examples() {
        let at_one = eval_j_alpha(1.0, 2.5, 2).unwrap();
        assert!((at_one - (1.0 - 2f64.powf(-2.5))).abs() < 1e-15);
        assert!((at_one - 0.823223).abs() < 1e-6);

        // (1 - 2^-2.5) / (1 - 2^1.5) * (2^-1.5 - 2^1.5)
        let at_half = eval_j_alpha(0.5, 2.5, 2).unwrap();
        assert!((at_half - 1.1142766952966368).abs() < 1e-14);

        let p3 = eval_j_alpha(1.0, 2.5, 3).unwrap();
        assert!((p3 - (1.0 - 3f64.powf(-2.5))).abs() < 1e-15);
    }

    #[test]
    fn j_alpha_rejects_bad_input() {
        assert!(matches!(
            eval_j_alpha(1.0, 1.0, 2),
            Err(Error::SingularAlpha)
        ));
        assert!(matches!(
            eval_j_alpha(0.0, 2.5, 2),
            Err(Error::NormOutOfRange(_))
        ));
        assert!(matches!(
            eval_j_alpha(2.0, 2.5, 2),
            Err(Error::NormOutOfRange(_))
        ));
    }

    #[test]
    fn j_alpha_is_nonnegative() {
        for p in [2, 3, 5, 7] {
            for alpha in [0.3, 0.9, 1.2, 1.6, 2.5, 3.0, 6.0] {
                for j in 0..8 {
                    let x = (p as f64).powi(-j);
                    assert!(eval_j_alpha(x, alpha, p).unwrap() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn tail_average_examples() {
        let k = RadialKernel::j_alpha(2.5, scheme(2, 1)).unwrap();
        assert!((k.tail_average() - 0.5883883476483185).abs() < 1e-15);

        let s = scheme(3, 3);
        let ones = vec![1.0; 3];
        assert!((tail_average(&ones, &s).unwrap() - 1.0 / 27.0).abs() < 1e-15);

        let s = scheme(3, 2);
        let k = RadialKernel::j_alpha(2.5, s).unwrap();
        let brute: f64 = (1..9)
            .map(|i| {
                let x = s.padic_norm(CellIndex(i), CellIndex(0));
                eval_j_alpha(x, 2.5, 3).unwrap()
            })
            .sum();
        assert!((k.tail_average() - (1.0 - brute / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn profile_validation() {
        let s = scheme(2, 2);
        assert!(RadialKernel::from_profile(s, vec![1.0], false).is_err());
        assert!(RadialKernel::from_profile(s, vec![1.0, -0.1], false).is_err());
        assert!(RadialKernel::from_profile(s, vec![1.0, -0.1], true).is_ok());
        assert!(RadialKernel::from_profile(s, vec![1.0, f64::NAN], true).is_err());
    }

    #[test]
    fn convolution_two_cells() {
        let op = build_convolution_operator(2.5, scheme(2, 1)).unwrap();
        let m = op.matrix();
        let e = 0.5 * (1.0 - 2f64.powf(-2.5));
        assert!((m[(0, 1)] - e).abs() < 1e-15 && (m[(1, 0)] - e).abs() < 1e-15);
        assert!((m[(0, 0)] + e).abs() < 1e-15 && (m[(1, 1)] + e).abs() < 1e-15);
        assert!((e - 0.411612).abs() < 1e-6);
    }

    #[test]
    fn convolution_g2_entries() {
        let op = build_convolution_operator(2.5, scheme(3, 2)).unwrap();
        let m = op.matrix();
        let j1 = eval_j_alpha(1.0, 2.5, 3).unwrap();
        let j3 = eval_j_alpha(1.0 / 3.0, 2.5, 3).unwrap();
        assert!((m[(0, 3)] - j3 / 9.0).abs() < 1e-16);
        assert!((m[(0, 1)] - j1 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn convolution_is_translation_invariant() {
        let s = scheme(3, 3);
        let op = build_convolution_operator(1.6, s).unwrap();
        for i in s.cells() {
            for k in s.cells() {
                for m in [CellIndex(1), CellIndex(5), CellIndex(13)] {
                    let a = op.matrix()[(i.value(), k.value())];
                    let b = op.matrix()[(s.add(i, m).value(), s.add(k, m).value())];
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn convolution_rejects_large_grid() {
        let k = RadialKernel::j_alpha(2.5, scheme(2, 10)).unwrap();
        assert!(matches!(
            CouplingOperator::convolution(&k),
            Err(Error::OperatorTooLarge {
                side: 1024,
                cap: 729
            })
        ));
        assert!(CouplingOperator::convolution_with_cap(&k, 1024).is_ok());
    }

    #[test]
    fn graph_examples() {
        let path = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let op = build_graph_operator(&path, scheme(2, 1)).unwrap();
        assert_eq!(
            op.matrix(),
            &RealMatrix::from_rows(&[vec![-0.5, 0.5], vec![0.5, -0.5]]).unwrap()
        );

        let empty = RealMatrix::zeros(3, 3);
        let op = build_graph_operator(&empty, scheme(3, 1)).unwrap();
        assert!(op.matrix().as_slice().iter().all(|&x| x == 0.0));

        let tri = parse_edge_list("0 1\n1 2\n2 0\n", None).unwrap();
        let op = build_graph_operator(&tri, scheme(3, 1)).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                let expected = if i == k { -2.0 / 3.0 } else { 1.0 / 3.0 };
                assert!((op.matrix()[(i, k)] - expected).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn graph_pads_unused_cells() {
        let path = parse_edge_list("0 1\n", None).unwrap();
        let op = CouplingOperator::graph(scheme(2, 2), &path, Some(&[1, 3])).unwrap();
        let m = op.matrix();
        assert_eq!(m[(1, 3)], 0.25);
        assert_eq!(m[(3, 3)], -0.25);
        for k in 0..4 {
            assert_eq!(m[(0, k)], 0.0);
            assert_eq!(m[(2, k)], 0.0);
        }
    }

    #[test]
    fn graph_rejects_bad_adjacency() {
        let s = scheme(3, 1);
        let loops = RealMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            build_graph_operator(&loops, s),
            Err(Error::InvalidAdjacency(_))
        ));
        let asym = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            build_graph_operator(&asym, s),
            Err(Error::InvalidAdjacency(_))
        ));
        let weighted = RealMatrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(
            build_graph_operator(&weighted, s),
            Err(Error::InvalidAdjacency(_))
        ));
        let too_many = RealMatrix::zeros(4, 4);
        assert!(build_graph_operator(&too_many, s).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# triangle plus a tail\n0 1\n\n1 2  # inline\n2 0\n2 3\n1 0\n";
        let a = parse_edge_list(text, None).unwrap();
        assert_eq!(a.rows(), 4);
        assert_eq!(a.as_slice().iter().sum::<f64>(), 8.0);
        assert_eq!(parse_edge_list("0 1\n", Some(5)).unwrap().rows(), 5);

        let err = parse_edge_list("0 1\n1 x\n", None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(matches!(
            parse_edge_list("3 3\n", None),
            Err(Error::InvalidAdjacency(_))
        ));
        assert!(parse_edge_list("0 1 2\n", None).is_err());
    }

    #[test]
    fn norm_bound_is_two_for_normalized_kernels() {
        let op = build_convolution_operator(2.5, scheme(3, 3)).unwrap();
        assert!((op.norm_bound() - 2.0).abs() < 1e-12);
    }
}
