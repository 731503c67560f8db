//! Python bindings. Matrices cross the boundary as lists of rows; graphs as
//! lists of `(from, to)` pairs.

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use gausstree::bench::{self, BenchConfig};
use gausstree::graphs::{self, shd as structural_distance, Skeleton};
use gausstree::model::{CovarianceMatrix, NoiseFamily, SampleMatrix};
use gausstree::{chow_liu as cl, estimators, hard_instances, kl, model, pc_tree as pc};

create_exception!(gausstree_py, NumericalError, PyArithmeticError, "Degenerate or ill-conditioned numerics.");

fn to_py(err: gausstree::Error) -> PyErr {
    match err {
        e if e.is_numerical() => NumericalError::new_err(e.to_string()),
        e @ gausstree::Error::Io(_) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for gausstree::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

type Rows = Vec<Vec<f64>>;

fn covariance(rows: &[Vec<f64>]) -> PyResult<CovarianceMatrix> {
    CovarianceMatrix::from_rows(rows).py_err()
}

fn samples(rows: &[Vec<f64>]) -> PyResult<SampleMatrix> {
    SampleMatrix::from_rows(rows).py_err()
}

fn rows(m: &SampleMatrix) -> Vec<Vec<f64>> {
    (0..m.n()).map(|i| m.row(i).to_vec()).collect()
}

/// Linear Gaussian structural equation model.
#[pyclass(name = "GaussianSem", module = "gausstree_py", frozen)]
struct PyGaussianSem {
    inner: model::GaussianSem,
}

#[pymethods]
impl PyGaussianSem {
    #[new]
    fn new(d: usize, edges: Vec<(usize, usize, f64)>, noise_var: Vec<f64>) -> PyResult<Self> {
        let inner = model::GaussianSem::new(d, &edges, noise_var).py_err()?;
        Ok(PyGaussianSem { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let json: gausstree::io::ModelJson =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyGaussianSem {
            inner: json.try_into().py_err()?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&gausstree::io::ModelJson::from(&self.inner)).expect("model serializes")
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    /// `(parent, child, beta)` triples.
    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.weighted_edges()
    }

    #[getter]
    fn noise_var(&self) -> Vec<f64> {
        self.inner.noise_var().to_vec()
    }

    fn covariance(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(model::sem_to_covariance(&self.inner).py_err()?.to_rows())
    }

    #[pyo3(signature = (n, noise = "gaussian", seed = 0))]
    fn sample(&self, py: Python<'_>, n: usize, noise: &str, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let noise: NoiseFamily = noise.parse().py_err()?;
        let data = py.detach(|| model::sample(&self.inner, n, noise, seed)).py_err()?;
        Ok(rows(&data))
    }

    /// Smallest `|ρ|` over the adjacent pairs and conditioning sets PC-Tree
    /// tests; `None` for a model without edges.
    fn faithfulness(&self) -> PyResult<Option<f64>> {
        Ok(hard_instances::faithfulness_parameter(&self.inner).py_err()?.value())
    }

    fn __repr__(&self) -> String {
        format!("GaussianSem(d={}, edges={:?})", self.inner.d(), self.inner.weighted_edges())
    }
}

/// Tree with every edge pointing away from `root`.
#[pyclass(name = "DirectedTree", module = "gausstree_py", frozen)]
struct PyDirectedTree {
    inner: graphs::DirectedTree,
}

#[pymethods]
impl PyDirectedTree {
    #[new]
    fn new(d: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let dag = model::Dag::new(d, edges).py_err()?;
        Ok(PyDirectedTree {
            inner: graphs::DirectedTree::new(dag).py_err()?,
        })
    }

    #[staticmethod]
    fn random(d: usize, seed: u64) -> PyResult<Self> {
        Ok(PyDirectedTree {
            inner: graphs::random_directed_tree(d, seed).py_err()?,
        })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn root(&self) -> usize {
        self.inner.root()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    /// Undirected edges `(a, b)` with `a < b`.
    fn skeleton(&self) -> Vec<(usize, usize)> {
        self.inner.undirected().edges().collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("DirectedTree(root={}, edges={:?})", self.inner.root(), self.inner.edges())
    }
}

#[pyclass(name = "Cpdag", module = "gausstree_py", frozen)]
struct PyCpdag {
    inner: graphs::Cpdag,
}

#[pymethods]
impl PyCpdag {
    #[new]
    fn new(d: usize, directed: Vec<(usize, usize)>, undirected: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyCpdag {
            inner: graphs::Cpdag::new(d, directed, undirected).py_err()?,
        })
    }

    /// Equivalence class of a DAG given by its edge list.
    #[staticmethod]
    fn of_dag(d: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let dag = model::Dag::new(d, edges).py_err()?;
        Ok(PyCpdag {
            inner: graphs::cpdag_of(&dag),
        })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn directed(&self) -> Vec<(usize, usize)> {
        self.inner.directed().iter().copied().collect()
    }

    #[getter]
    fn undirected(&self) -> Vec<(usize, usize)> {
        self.inner.undirected().iter().copied().collect()
    }

    fn skeleton(&self) -> Vec<(usize, usize)> {
        self.inner.skeleton().edges().collect()
    }

    fn shd(&self, other: &Self) -> PyResult<usize> {
        structural_distance(&self.inner, &other.inner).py_err()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Cpdag(directed={:?}, undirected={:?})", self.directed(), self.undirected())
    }
}

/// `(1/n) Σ xxᵀ` without centering.
#[pyfunction]
fn sample_covariance(data: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(estimators::sample_covariance(&samples(&data)?).to_rows())
}

#[pyfunction]
#[pyo3(signature = (sigma, j, k, given = Vec::new()))]
fn partial_correlation(sigma: Vec<Vec<f64>>, j: usize, k: usize, given: Vec<usize>) -> PyResult<f64> {
    Ok(estimators::partial_correlation(&covariance(&sigma)?, j, k, &given).py_err()?.value)
}

#[pyfunction]
fn mutual_information(sigma: Vec<Vec<f64>>, j: usize, k: usize) -> PyResult<f64> {
    Ok(estimators::empirical_mi(&covariance(&sigma)?, j, k).py_err()?.value())
}

#[pyfunction]
fn chow_liu(py: Python<'_>, data: Vec<Vec<f64>>) -> PyResult<PyDirectedTree> {
    let data = samples(&data)?;
    let fit = py.detach(|| cl::chow_liu(&data)).py_err()?;
    Ok(PyDirectedTree { inner: fit.tree })
}

#[pyfunction]
#[pyo3(signature = (data, cutoff = pc::DEFAULT_CUTOFF))]
fn pc_tree(py: Python<'_>, data: Vec<Vec<f64>>, cutoff: f64) -> PyResult<PyCpdag> {
    let data = samples(&data)?;
    let inner = py.detach(|| pc::pc_tree(&data, cutoff)).py_err()?;
    Ok(PyCpdag { inner })
}

/// Undirected SHD between two edge lists on `d` nodes.
#[pyfunction]
fn skeleton_shd(d: usize, a: Vec<(usize, usize)>, b: Vec<(usize, usize)>) -> PyResult<usize> {
    let a = Skeleton::new(d, a).py_err()?;
    let b = Skeleton::new(d, b).py_err()?;
    structural_distance(&a, &b).py_err()
}

#[pyfunction]
fn gaussian_kl(sigma0: Vec<Vec<f64>>, sigma1: Vec<Vec<f64>>) -> PyResult<f64> {
    kl::gaussian_kl(&covariance(&sigma0)?, &covariance(&sigma1)?).py_err()
}

/// KL from `N(0, sigma)` to its moment-matched projection onto `tree`.
#[pyfunction]
fn kl_to_tree(sigma: Vec<Vec<f64>>, tree: &PyDirectedTree) -> PyResult<f64> {
    kl::kl_to_tree(&covariance(&sigma)?, &tree.inner).py_err()
}

/// Best tree and its KL by enumeration of all labeled trees.
#[pyfunction]
fn best_tree(py: Python<'_>, sigma: Vec<Vec<f64>>) -> PyResult<(PyDirectedTree, f64)> {
    let sigma = covariance(&sigma)?;
    let (inner, value) = py.detach(|| kl::best_tree_bruteforce(&sigma)).py_err()?;
    Ok((PyDirectedTree { inner }, value))
}

#[pyfunction]
fn structure_lb_instance(d: usize, c: f64, seed: u64) -> PyResult<PyGaussianSem> {
    Ok(PyGaussianSem {
        inner: hard_instances::structure_lb_instance(d, c, seed).py_err()?,
    })
}

/// `(sigma1, sigma2)` of the non-realizable three-node gadget.
#[pyfunction]
fn nonrealizable_gadget(epsilon: f64) -> PyResult<(Rows, Rows)> {
    let g = hard_instances::nonrealizable_gadget(epsilon).py_err()?;
    Ok((g.sigma1.to_rows(), g.sigma2.to_rows()))
}

#[pyfunction]
fn realizable_gadget(epsilon: f64) -> PyResult<(PyGaussianSem, PyGaussianSem)> {
    let (a, b) = hard_instances::realizable_gadget_sems(epsilon).py_err()?;
    Ok((PyGaussianSem { inner: a }, PyGaussianSem { inner: b }))
}

/// Runs a benchmark from a JSON config and returns the per-trial CSV.
#[pyfunction]
fn run_bench(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let config: BenchConfig = serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    config.validate().py_err()?;
    let records = py.detach(|| bench::run_bench(&config)).py_err()?;
    let mut buf = Vec::new();
    bench::write_records_csv(&mut buf, &records).py_err()?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

#[pymodule]
pub fn gausstree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyGaussianSem>()?;
    m.add_class::<PyDirectedTree>()?;
    m.add_class::<PyCpdag>()?;
    m.add_function(wrap_pyfunction!(sample_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(partial_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(chow_liu, m)?)?;
    m.add_function(wrap_pyfunction!(pc_tree, m)?)?;
    m.add_function(wrap_pyfunction!(skeleton_shd, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_kl, m)?)?;
    m.add_function(wrap_pyfunction!(kl_to_tree, m)?)?;
    m.add_function(wrap_pyfunction!(best_tree, m)?)?;
    m.add_function(wrap_pyfunction!(structure_lb_instance, m)?)?;
    m.add_function(wrap_pyfunction!(nonrealizable_gadget, m)?)?;
    m.add_function(wrap_pyfunction!(realizable_gadget, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
