"""Smoke test for the pycrtractor extension module."""

import json

import pycrtractor as crt


def main():
    w = crt.Weight("2", "-2")
    assert w.order(1) == 2, w

    p = crt.invariant_operator(1, "2", "-2")
    assert p.domain == w and p.codomain == crt.Weight("0", "-4")
    assert crt.DiffOp.from_json(p.to_json(), 1) == p
    assert p.adjoint() == p
    assert p.folland_stein() == ["-3", "-5"]

    hat = crt.invariant_operator(1, "2", "-2", upsilon="z1*zb1 + t^2")
    assert hat == p

    p00 = crt.invariant_operator(1, "0", "0")
    assert p00.folland_stein() == ["1", "-1"]
    assert p00.apply("t^2") == "4"

    m = json.loads(crt.operator_matrix(1, "0", "0", degree=0))
    assert m["basis"] == ["1"]

    report = json.loads(crt.verify("q3d", n=1))
    assert report["passed"], report
    print(f"pycrtractor ok: {len(report['checks'])} q3d checks passed")

    try:
        crt.Weight("1/2", "0")
    except ValueError as e:
        assert "integral" in str(e)
    else:
        raise AssertionError("non-integral weight difference accepted")


if __name__ == "__main__":
    main()
