"""Exercise the Python bindings end to end."""

import math

import gausstree_py as gt


def main():
    tree = gt.DirectedTree.random(6, seed=3)
    assert len(tree.edges) == 5 and tree.d == 6

    sem = gt.GaussianSem(3, [(0, 1, 0.5), (1, 2, 0.5)], [1.0, 1.0, 1.0])
    sigma = sem.covariance()
    assert math.isclose(sigma[1][1], 1.25)
    assert abs(gt.partial_correlation(sigma, 0, 2, [1])) < 1e-12
    assert gt.mutual_information(sigma, 0, 1) > gt.mutual_information(sigma, 0, 2)
    assert gt.GaussianSem.from_json(sem.to_json()).edges == sem.edges

    data = sem.sample(20000, noise="gaussian", seed=7)
    assert len(data) == 20000 and len(data[0]) == 3
    est = gt.sample_covariance(data)
    assert abs(est[0][1] - sigma[0][1]) < 0.05

    learned = gt.chow_liu(data)
    assert learned.skeleton() == [(0, 1), (1, 2)]
    assert gt.kl_to_tree(sigma, learned) < 1e-9

    cpdag = gt.pc_tree(data, cutoff=0.05)
    assert cpdag == gt.Cpdag.of_dag(3, [(0, 1), (1, 2)])
    assert cpdag.undirected == [(0, 1), (1, 2)]
    assert gt.skeleton_shd(3, cpdag.skeleton(), [(0, 2)]) == 3

    best, value = gt.best_tree(sigma)
    assert best.skeleton() == [(0, 1), (1, 2)] and value < 1e-9

    s1, s2 = gt.nonrealizable_gadget(0.1)
    assert gt.gaussian_kl(s1, s2) > 0

    lb = gt.structure_lb_instance(8, 0.2, 1)
    assert lb.faithfulness() >= 0.2 - 1e-9

    csv = gt.run_bench('{"d_list": [5], "n_list": [1000], "trials": 3, "seed": 1}')
    lines = csv.strip().splitlines()
    assert lines[0] == "d,n,noise,algorithm,trial,seed,shd,exact,wall_time_ms"
    assert len(lines) == 1 + 2 * 3

    try:
        gt.chow_liu([[1.0, 0.0], [2.0, 0.0]])
    except gt.NumericalError:
        pass
    else:
        raise AssertionError("expected NumericalError for a zero-variance column")

    try:
        gt.GaussianSem(2, [(0, 1, 0.5), (1, 0, 0.5)], [1.0, 1.0])
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for a cyclic model")

    print("smoke test passed")


if __name__ == "__main__":
    main()
