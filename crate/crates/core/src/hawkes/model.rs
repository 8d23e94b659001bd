use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generative model of a network of mutually exciting users.
///
/// `a[(v, u)]` is the rate gain user `v` receives from each action of user
/// `u`. The matrix is kept dense for the control solver and, in parallel, as
/// compressed columns for the jump updates.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    n: usize,
    omega: f64,
    mu0: Vec<f64>,
    a: DMatrix<f64>,
    columns: Vec<Vec<(usize, f64)>>,
    lambda0: Option<Vec<f64>>,
}

impl NetworkModel {
    pub fn new(a: DMatrix<f64>, mu0: Vec<f64>, omega: f64) -> Result<Self> {
        let n = mu0.len();
        if n == 0 {
            return Err(Error::InvalidModel("model needs at least one user".into()));
        }
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::InvalidModel(format!(
                "influence matrix is {}x{}, expected {n}x{n}",
                a.nrows(),
                a.ncols()
            )));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidModel(format!("omega must be > 0, got {omega}")));
        }
        if let Some(x) = mu0.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidModel(format!("baseline rate {x} is negative or not finite")));
        }
        if let Some(x) = a.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidModel(format!("influence entry {x} is negative or not finite")));
        }
        let columns = (0..n)
            .map(|u| {
                (0..n)
                    .filter_map(|v| {
                        let w = a[(v, u)];
                        (w != 0.0).then_some((v, w))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { n, omega, mu0, a, columns, lambda0: None })
    }

    /// Builds a model from `(row, col, value)` triplets.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], mu0: Vec<f64>, omega: f64) -> Result<Self> {
        if mu0.len() != n {
            return Err(Error::InvalidModel(format!("mu0 has {} entries, expected {n}", mu0.len())));
        }
        let mut a = DMatrix::zeros(n, n);
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange { index: r.max(c), n });
            }
            a[(r, c)] += v;
        }
        Self::new(a, mu0, omega)
    }

    /// Overrides the initial intensity (defaults to `mu0`).
    pub fn with_lambda0(mut self, lambda0: Vec<f64>) -> Result<Self> {
        if lambda0.len() != self.n {
            return Err(Error::InvalidModel("lambda0 length mismatch".into()));
        }
        if lambda0.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidModel("lambda0 must be nonnegative".into()));
        }
        self.lambda0 = Some(lambda0);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Nonzero entries `(row, value)` of column `u`, i.e. who gets excited when `u` acts.
    pub fn column(&self, u: usize) -> &[(usize, f64)] {
        &self.columns[u]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Intensity at the start of the horizon.
    pub fn lambda0(&self) -> &[f64] {
        self.lambda0.as_deref().unwrap_or(&self.mu0)
    }

    pub fn starts_at_baseline(&self) -> bool {
        self.lambda0.as_ref().is_none_or(|l| l == &self.mu0)
    }

    /// `y += A x`, touching only the nonzero columns.
    pub fn add_a_times(&self, x: &[f64], y: &mut [f64]) {
        for (u, &xu) in x.iter().enumerate() {
            if xu != 0.0 {
                for &(v, w) in &self.columns[u] {
                    y[v] += w * xu;
                }
            }
        }
    }

    /// `y = Aᵀ x`.
    pub fn a_transpose_times(&self, x: &[f64], y: &mut [f64]) {
        for (u, out) in y.iter_mut().enumerate() {
            *out = self.columns[u].iter().map(|&(v, w)| w * x[v]).sum();
        }
    }

    /// Directed edges `(source, target)` carrying nonzero influence.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.columns.iter().enumerate().flat_map(|(u, col)| col.iter().map(move |&(v, _)| (u, v))).collect()
    }

    pub fn to_file(&self) -> ModelFile {
        let mut entries = Vec::with_capacity(self.nnz());
        for (u, col) in self.columns.iter().enumerate() {
            for &(v, w) in col {
                entries.push((v, u, w));
            }
        }
        entries.sort_by_key(|x| (x.0, x.1));
        ModelFile { n: self.n, omega: self.omega, mu0: self.mu0.clone(), a: entries, lambda0: self.lambda0.clone() }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text)?;
        file.into_model()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk JSON form of a [`NetworkModel`]; `A` holds `[row, col, value]` triplets.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub n: usize,
    pub omega: f64,
    pub mu0: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<NetworkModel> {
        let model = NetworkModel::from_triplets(self.n, &self.a, self.mu0, self.omega)?;
        match self.lambda0 {
            Some(l) => model.with_lambda0(l),
            None => Ok(model),
        }
    }
}
