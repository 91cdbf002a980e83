use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fourdvar::BlockBidiagonal;
use crate::linalg::io::{write_matrix, MatrixReader};
use crate::linalg::{DenseMatrix, SpdMatrix};

/// Choice of the approximate model blocks `M̃_j`.
#[derive(Debug, Clone, PartialEq)]
pub enum Approximation {
    Zero,
    Identity,
    /// One `n x n` block per sub-window.
    Custom(Vec<DenseMatrix>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Zero,
    Identity,
    Custom,
}

impl Approximation {
    pub fn kind(&self) -> VariantKind {
        match self {
            Approximation::Zero => VariantKind::Zero,
            Approximation::Identity => VariantKind::Identity,
            Approximation::Custom(_) => VariantKind::Custom,
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariantKind::Zero => "zero",
            VariantKind::Identity => "identity",
            VariantKind::Custom => "custom",
        })
    }
}

impl FromStr for VariantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(VariantKind::Zero),
            "identity" => Ok(VariantKind::Identity),
            "custom" => Ok(VariantKind::Custom),
            other => Err(Error::Parse(format!(
                "unknown variant {other:?} (expected zero, identity or custom)"
            ))),
        }
    }
}

/// State dimension, linearized model blocks `M_1..M_N` and the approximation
/// used to build `L̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourDVarLayout {
    n: usize,
    models: Vec<DenseMatrix>,
    approximation: Approximation,
}

fn check_blocks(n: usize, blocks: &[DenseMatrix], what: &str) -> Result<()> {
    match blocks.iter().position(|m| m.rows() != n || m.cols() != n) {
        Some(j) => Err(Error::DimensionMismatch(format!(
            "{what} block {} is {}x{}, expected {n}x{n}",
            j + 1,
            blocks[j].rows(),
            blocks[j].cols()
        ))),
        None => Ok(()),
    }
}

impl FourDVarLayout {
    pub fn new(n: usize, models: Vec<DenseMatrix>, approximation: Approximation) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "state dimension must be positive".into(),
            ));
        }
        check_blocks(n, &models, "model")?;
        if let Approximation::Custom(approx) = &approximation {
            if approx.len() != models.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} approximate blocks for {} sub-windows",
                    approx.len(),
                    models.len()
                )));
            }
            check_blocks(n, approx, "approximate model")?;
        }
        Ok(Self {
            n,
            models,
            approximation,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_sw(&self) -> usize {
        self.models.len()
    }

    /// `n (N_sw + 1)`.
    pub fn dim(&self) -> usize {
        self.n * (self.n_sw() + 1)
    }

    pub fn models(&self) -> &[DenseMatrix] {
        &self.models
    }

    pub fn approximation(&self) -> &Approximation {
        &self.approximation
    }

    pub fn with_approximation(&self, approximation: Approximation) -> Result<Self> {
        Self::new(self.n, self.models.clone(), approximation)
    }

    /// Same models with `M̃_j = M_j`.
    pub fn exact(&self) -> Self {
        Self {
            n: self.n,
            models: self.models.clone(),
            approximation: Approximation::Custom(self.models.clone()),
        }
    }

    /// `M̃_1..M̃_N`.
    pub fn approximate_models(&self) -> Vec<DenseMatrix> {
        match &self.approximation {
            Approximation::Zero => vec![DenseMatrix::zeros(self.n, self.n); self.n_sw()],
            Approximation::Identity => vec![DenseMatrix::identity(self.n); self.n_sw()],
            Approximation::Custom(blocks) => blocks.clone(),
        }
    }

    pub fn l_operator(&self) -> BlockBidiagonal {
        BlockBidiagonal::new(self.n, self.models.clone()).expect("validated blocks")
    }

    pub fn l_tilde_operator(&self) -> BlockBidiagonal {
        BlockBidiagonal::new(self.n, self.approximate_models()).expect("validated blocks")
    }
}

/// Observation operators `H_j` (`m_j x n`) and their error covariances `R_j`.
#[derive(Debug, Clone)]
pub struct Observations {
    pub h_blocks: Vec<DenseMatrix>,
    pub r_blocks: Vec<SpdMatrix>,
}

impl Observations {
    pub fn total_rows(&self) -> usize {
        self.h_blocks.iter().map(DenseMatrix::rows).sum()
    }
}

/// `D = diag(B, Q_1, …, Q_N)` and optional observation data.
#[derive(Debug, Clone)]
pub struct BlockCovariances {
    pub d_blocks: Vec<SpdMatrix>,
    pub observations: Option<Observations>,
}

impl BlockCovariances {
    pub fn new(d_blocks: Vec<SpdMatrix>, observations: Option<Observations>) -> Self {
        Self {
            d_blocks,
            observations,
        }
    }

    /// `B = background_var · I`, `Q_j = model_var · I`, no observations.
    pub fn scaled_identity(
        layout: &FourDVarLayout,
        background_var: f64,
        model_var: f64,
    ) -> Result<Self> {
        let n = layout.n();
        let mut d_blocks = vec![SpdMatrix::from_diagonal(&vec![background_var; n])?];
        let q = SpdMatrix::from_diagonal(&vec![model_var; n])?;
        d_blocks.extend(std::iter::repeat_n(q, layout.n_sw()));
        Ok(Self::new(d_blocks, None))
    }

    /// Adds `H_j = I_n` and `R_j = obs_var · I_n` on every window.
    pub fn with_identity_observations(
        mut self,
        layout: &FourDVarLayout,
        obs_var: f64,
    ) -> Result<Self> {
        let n = layout.n();
        let r = SpdMatrix::from_diagonal(&vec![obs_var; n])?;
        self.observations = Some(Observations {
            h_blocks: vec![DenseMatrix::identity(n); layout.n_sw() + 1],
            r_blocks: vec![r; layout.n_sw() + 1],
        });
        Ok(self)
    }

    pub fn validate(&self, layout: &FourDVarLayout) -> Result<()> {
        let windows = layout.n_sw() + 1;
        let n = layout.n();
        if self.d_blocks.len() != windows {
            return Err(Error::DimensionMismatch(format!(
                "{} covariance blocks for {windows} windows",
                self.d_blocks.len()
            )));
        }
        if let Some(j) = self.d_blocks.iter().position(|d| d.dim() != n) {
            return Err(Error::DimensionMismatch(format!(
                "covariance block {j} is {0}x{0}, expected {n}x{n}",
                self.d_blocks[j].dim()
            )));
        }
        if let Some(obs) = &self.observations {
            if obs.h_blocks.len() != windows || obs.r_blocks.len() != windows {
                return Err(Error::DimensionMismatch(format!(
                    "{} observation operators and {} observation covariances for {windows} windows",
                    obs.h_blocks.len(),
                    obs.r_blocks.len()
                )));
            }
            for (j, (h, r)) in obs.h_blocks.iter().zip(&obs.r_blocks).enumerate() {
                if h.cols() != n || r.dim() != h.rows() {
                    return Err(Error::DimensionMismatch(format!(
                        "window {j}: H is {}x{}, R is {1}x{1}; expected H with {n} columns and R matching its rows",
                        h.rows(),
                        h.cols(),
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn d_dense(&self) -> SpdMatrix {
        let blocks: Vec<&DenseMatrix> = self.d_blocks.iter().map(SpdMatrix::matrix).collect();
        SpdMatrix::new(DenseMatrix::block_diagonal(&blocks)).expect("block-diagonal of SPD blocks")
    }

    /// `κ₂(D)` from the union of the block spectra.
    pub fn kappa_d(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for d in &self.d_blocks {
            let ev = crate::linalg::sym_eigen(d.matrix())?;
            if let (Some(&a), Some(&b)) = (ev.first(), ev.last()) {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        if lo.is_infinite() {
            return Ok(1.0);
        }
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                index: 0,
                pivot: lo,
            });
        }
        Ok(hi / lo)
    }
}

/// Layout file: a header line `n nSw variant`, then `nSw` model blocks in the
/// matrix text format, then `nSw` approximate blocks for the custom variant.
pub fn parse_layout(text: &str) -> Result<FourDVarLayout> {
    let mut reader = MatrixReader::new(text);
    let (lineno, header) = reader
        .next_line()
        .ok_or_else(|| Error::Parse("empty layout file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [n, n_sw, variant] = fields.as_slice() else {
        return Err(Error::Parse(format!(
            "line {lineno}: layout header must be \"n nSw variant\", got {header:?}"
        )));
    };
    let n: usize = n
        .parse()
        .map_err(|_| Error::Parse(format!("line {lineno}: invalid state dimension {n:?}")))?;
    let n_sw: usize = n_sw
        .parse()
        .map_err(|_| Error::Parse(format!("line {lineno}: invalid window count {n_sw:?}")))?;
    let kind: VariantKind = variant.parse()?;
    let read_blocks = |reader: &mut MatrixReader<'_>| -> Result<Vec<DenseMatrix>> {
        (0..n_sw).map(|_| reader.read_matrix()).collect()
    };
    let models = read_blocks(&mut reader)?;
    let approximation = match kind {
        VariantKind::Zero => Approximation::Zero,
        VariantKind::Identity => Approximation::Identity,
        VariantKind::Custom => Approximation::Custom(read_blocks(&mut reader)?),
    };
    if let Some((lineno, _)) = reader.next_line() {
        return Err(Error::Parse(format!(
            "line {lineno}: trailing content after layout"
        )));
    }
    FourDVarLayout::new(n, models, approximation)
}

pub fn write_layout(layout: &FourDVarLayout) -> String {
    let mut out = format!(
        "{} {} {}\n",
        layout.n(),
        layout.n_sw(),
        layout.approximation().kind()
    );
    for m in layout.models() {
        out.push_str(&write_matrix(m));
    }
    if let Approximation::Custom(blocks) = layout.approximation() {
        for m in blocks {
            out.push_str(&write_matrix(m));
        }
    }
    out
}

pub fn read_layout_file(path: &Path) -> Result<FourDVarLayout> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_layout(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
