"""Smoke test for the artattack_py extension.

Build and install first, e.g.:
    cd crates/python && maturin develop --release
then run:
    python python/smoke_test.py
"""
import json
import math

import artattack_py as aa


def main():
    # rendering stays inside the epsilon ball
    img = aa.Image(8, 8, [((i * 37) % 100) / 100 for i in range(8 * 8 * 3)])
    genome = aa.Genome.random("triangle", 20, seed=1)
    adv = aa.render(genome, img, epsilon=0.05)
    assert adv.linf_distance(img) <= 0.05 + 1e-9
    assert all(0.0 <= v <= 1.0 for v in adv.to_list())

    # genome JSON round trip and mutation
    again = aa.Genome.from_json(genome.to_json())
    assert again.rows() == genome.rows()
    child = genome.mutate(0.5, seed=3)
    assert child.num_shapes == 20 and child.kind == "triangle"

    # loss values
    assert abs(aa.targeted_loss([0.1] * 10, 4) - (math.log(0.1) - math.log(0.9))) < 1e-9
    assert abs(aa.targeted_loss([1.0, 0.0], 0) - 27.6310211) < 1e-6

    # attack the seeded linear oracle
    oracle = aa.LinearSoftmaxOracle(0, 8, 8, 5)
    y = oracle.predict(img)
    cfg = aa.AttackConfig("circle", 30, (y + 1) % 5, budget=500, seed=7)
    rec = aa.attack(oracle, img, y, cfg)
    assert 1 <= rec.queries_used <= 500
    assert len(rec.loss_trajectory) == rec.queries_used
    assert rec.max_deviation <= 0.05 + 1e-9
    assert json.loads(rec.to_json())["target_class"] == (y + 1) % 5

    # a Python callable oracle that always answers the target: one query
    target = (y + 2) % 5
    probs = [1.0 if k == target else 0.0 for k in range(5)]
    cfg = aa.AttackConfig("rectangle", 5, target, budget=100)
    rec = aa.attack(lambda _image: probs, img, y, cfg, num_classes=5)
    assert rec.success_targeted and rec.queries_used == 1

    # invalid inputs raise
    for bad in (lambda: aa.Image(2, 2, [0.5] * 11), lambda: aa.Genome.random("hexagon", 3, 0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    # reconstruction improves the fit
    ref = aa.Image(12, 12, [(i % 36) / 36 for i in range(12 * 12 * 3)])
    out, g, traj, mse0, mse1 = aa.reconstruct(ref, "circle", 20, 500, seed=2)
    assert mse1 < mse0 and len(traj) == 500 and g.num_shapes == 20
    assert all(b >= a for a, b in zip(traj, traj[1:]))

    print("artattack_py smoke test passed")


if __name__ == "__main__":
    main()
