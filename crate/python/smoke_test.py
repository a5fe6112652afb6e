"""Smoke test for the qi_lab extension module.

Build and install first:

    pip install --no-build-isolation -e crates/py
"""

import math

import qi_lab


def close(a, b, tol):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1.0)


def main():
    tmsv = qi_lab.make_tmsv(1.0)
    assert close(tmsv.cov[0][0], 3.0, 1e-15)
    assert close(tmsv.cov[0][2], 2.0 * math.sqrt(2.0), 1e-15)
    assert close(tmsv.determinant(), 1.0, 1e-9)

    h1 = qi_lab.qi_channel(0.01, 30.0, 0.01, "H1")
    assert close(h1.cov[0][0], 60.4002, 1e-12)
    mixed = qi_lab.apply_beam_splitter(h1, 0, 1, 0.3)
    assert all(close(a, b, 1e-10) for a, b in zip(
        sorted(h1.symplectic_eigenvalues()), sorted(mixed.symplectic_eigenvalues())))

    s = qi_lab.Scenario(kappa=0.01, n_s=0.01, n_b=30.0, k_modes=1e7)
    dhd = qi_lab.closed_form_snr("dhd", s)
    assert 96.0 <= dhd <= 144.0, dhd
    assert close(qi_lab.engine_snr("dhd", s), dhd, 1e-9)
    report = qi_lab.evaluate("pc", s)
    assert report["receiver"] == "PC" and report["snr_formula"] is not None

    stats = qi_lab.detection(1.0, 2.0, 0.9, 1.5, 100.0)
    assert close(stats["p_false_alarm"], stats["p_miss"], 1e-9)
    assert close(stats["p_error"], 0.5 * qi_lab.erfc(math.sqrt(stats["snr"])), 1e-12)

    ci = qi_lab.ci_chernoff(0.1, 0.0, 0.5)
    assert close(-math.log(ci["q_value"]), 0.05, 1e-6)

    crossings = qi_lab.boundary("dhd", "pc", s)
    assert len(crossings) == 1 and 0.0007 <= crossings[0] <= 0.0011, crossings

    csv = qi_lab.scan_csv("kappa_points = 3\nns_points = 2\nreceivers = dhd, opa, pc\n")
    assert csv.splitlines()[0] == "kappa,n_s,snr_dhd,snr_opa,snr_pc,snr_ci,best,margin"
    assert len(csv.splitlines()) == 7

    assert qi_lab.validate(["erfc", "channel"])

    try:
        qi_lab.Scenario(kappa=2.0, n_s=0.01, n_b=30.0)
    except ValueError:
        pass
    else:
        raise AssertionError("kappa > 1 accepted")

    print(f"qi_lab smoke test ok: dHD SNR {dhd:.3f}, PC/dHD crossing {crossings[0]:.6f}")


if __name__ == "__main__":
    main()
