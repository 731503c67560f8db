use pyo3::prelude::*;

use gausstree_py::gausstree_py;

#[test]
fn module_works_from_an_embedded_interpreter() {
    pyo3::append_to_inittab!(gausstree_py);
    Python::initialize();
    Python::attach(|py| {
        py.run(
            cr#"
import gausstree_py as gt
sem = gt.GaussianSem(4, [(0, 1, 0.6), (1, 2, -0.5), (1, 3, 0.4)], [1.0] * 4)
data = sem.sample(5000, seed=2)
assert gt.chow_liu(data).skeleton() == [(0, 1), (1, 2), (1, 3)]
cpdag = gt.pc_tree(data)
assert cpdag == gt.Cpdag.of_dag(4, [(0, 1), (1, 2), (1, 3)]), cpdag
assert sem.faithfulness() > 0.2
try:
    gt.pc_tree(data, cutoff=1.5)
    raise AssertionError("cutoff accepted")
except ValueError:
    pass
"#,
            None,
            None,
        )
        .unwrap();
    });
}
