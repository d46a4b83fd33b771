"""Smoke test for the evsparse_py extension module."""

import math
import os
import tempfile

import evsparse_py as ev


def close(a, b, tol=1e-9):
    return len(a) == len(b) and all(abs(x - y) <= tol for x, y in zip(a, b))


def main():
    model = ev.Model([[1.0], [-1.0], [0.0]], [0.0, 0.0, 0.0])
    assert (model.num_classes, model.num_features) == (3, 1)

    out = model.sparsify([2.0])
    assert out.support == [0], out
    assert close(out.probs, [1.0])
    assert not out.vacuous_fallback
    assert close(model.evidential_weights([2.0]), [2.0, -2.0, 0.0])

    flat = model.sparsify([0.0])
    assert flat.vacuous_fallback and close(flat.probs, [1 / 3] * 3)

    p = ev.softmax([0.0, math.log(3.0)])
    assert close(p, [0.25, 0.75])

    sm = ev.sparsemax([0.5, 0.0])
    assert sm.support == [0, 1] and close(sm.probs, [0.75, 0.25])
    assert ev.sparsemax([1.0, 0.0]).support == [0]

    ln2 = math.log(2.0)
    fused = ev.fuse_feature_masses([[ln2, -ln2]])
    assert close(ev.plausibility_transform(2, fused), [0.8, 0.2])
    assert ev.singleton_mass_signs([2.0, -1.0, -1.0]) == [True, False, False]

    even = [0.07175066, 0.18762952, 0.12967074, 0.14694512, 0.10367352,
            0.02215276, 0.05927196, 0.05245687, 0.04584087, 0.18060793]
    odd = [0.11829948, 0.0170686, 0.06552684, 0.01989201, 0.16146706,
           0.16441198, 0.2041005, 0.13485213, 0.09432564, 0.02005576]
    target = ev.target_distribution(even, odd)
    assert target.support == [1, 2, 3, 9], target
    assert close(target.probs, [0.290963, 0.201086, 0.227874, 0.280077], 1e-5)

    assert ev.wasserstein1([1, 0, 0, 0], [0, 0, 0, 1]) == 3.0
    assert ev.bhattacharyya(even, even) < 1e-6

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.toml")
        model.save(path)
        again = ev.Model.load(path)
        assert again.logits([2.0]) == model.logits([2.0])
        try:
            ev.Model.load(os.path.join(tmp, "missing.toml"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file should raise OSError")

    try:
        ev.Model([[float("nan")], [0.0]], [0.0, 0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("NaN weights should raise ValueError")

    print("evsparse_py smoke test: ok")


if __name__ == "__main__":
    main()
