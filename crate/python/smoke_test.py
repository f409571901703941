"""Smoke test for the perfect_graphs extension module.

Build and install first:
    pip install maturin
    pip install --no-build-isolation -e crates/py
"""

import perfect_graphs as pg


def main():
    c5 = pg.Graph.cycle(5)
    assert pg.find_odd_holes(c5) == [[0, 1, 2, 3, 4]]
    assert not pg.is_perfect(c5)
    assert len(pg.find_odd_antiholes(pg.Graph.cycle(7).complement())) == 1

    g = pg.Graph.from_text(c5.to_text())
    assert g == c5 and g.n == 5 and g.edge_count() == 5

    e_holes, e_antiholes, e_total = pg.expected_counts(5, 0.5)
    assert e_holes == 0.01171875 and e_antiholes == 0.0 and e_total == e_holes

    r = pg.solve_edit(c5)
    assert r["status"] == "optimal" and r["objective"] == 1
    assert r["graph"].is_perfect()

    g = pg.Graph.erdos_renyi(12, 0.5, 3)
    edit = pg.solve_edit(g, strategy="hcr", time_limit=60.0)
    complete = pg.solve_complete(g)
    delete = pg.solve_delete(g)
    dual = pg.solve_complete(g.complement())
    assert edit["objective"] <= min(complete["objective"], delete["objective"])
    assert delete["objective"] == dual["objective"]

    r = pg.solve_sandwich(c5, [])
    assert r["status"] == "infeasible_precheck"
    r = pg.solve_sandwich(c5, [(0, 2)])
    assert r["status"] == "feasible" and r["graph"].has_edge(0, 2)

    perfect, out, flips = pg.run_heuristic(pg.Graph.erdos_renyi(30, 0.5, 0))
    assert perfect and out.is_perfect() and flips > 0

    print("smoke test passed")


if __name__ == "__main__":
    main()
