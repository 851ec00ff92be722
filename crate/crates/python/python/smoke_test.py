"""Smoke test for the coherence_lab extension module.

Build and install first, e.g. `maturin develop --release` from crates/python,
then run `python python/smoke_test.py`.
"""

import json
import math

import coherence_lab as cl


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    psi = cl.PureState.uniform(3)
    rho = psi.to_density()
    assert close(cl.c_l1(rho), 2.0)
    assert close(cl.c_rel_ent(rho), math.log2(3))
    assert close(cl.evaluate("int_rand", rho), math.log2(3))
    assert cl.c_trivial(rho) == 1.0
    assert cl.is_mcs(rho)
    assert cl.evaluate("l1", rho.dephase()) == 0.0

    mixed = cl.DensityMatrix.random(3, rank=2, seed=5)
    assert cl.c_int_rand(mixed, restarts=4) >= cl.c_rel_ent(mixed) - 1e-9

    proj = cl.KrausChannel.projective_measurement(3)
    assert proj.is_incoherent() and not proj.is_cpo()
    assert cl.c_l1(proj.apply(rho)) < 1e-12
    outcomes = proj.apply_selective(rho)
    assert close(sum(p for p, _ in outcomes), 1.0)

    u = cl.IncoherentUnitary.random(3, seed=2)
    assert u.to_channel().is_cpo()
    assert close(cl.c_rel_ent(u.apply(mixed)), cl.c_rel_ent(mixed))

    target = cl.PureState.random(3, seed=8)
    channel = cl.transform_mcs_to(target)
    assert channel.is_incoherent()
    assert close(channel.apply(rho).fidelity(target), 1.0, 1e-10)
    round_trip = cl.KrausChannel.from_json(channel.to_json())
    assert close(round_trip.completeness_defect(), channel.completeness_defect(), 1e-15)

    w = cl.skew_violation_witness(3)
    assert close(w["value_before"], 17 / 36, 1e-15)
    assert close(w["value_after"], 5 / 9, 1e-15)

    report = cl.verify("C2", measure="skew", dim=3, trials=100, seed=7)
    assert report["violations"] >= 1 and report["witness"] is not None
    clean = cl.verify("LEMMA2", dim=2, trials=100)
    assert clean["violations"] == 0 and clean["witness"] is None

    try:
        cl.evaluate("bogus", rho)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown measure accepted")

    print(json.dumps({"smoke_test": "ok", "skew_c2_violations": report["violations"]}))


if __name__ == "__main__":
    main()
