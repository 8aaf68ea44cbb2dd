import json
import math

import pytest

import ncboltz as nb


def test_kernel_params():
    p = nb.KernelParams.from_inverse_power(5.0, 3)
    assert p.gamma == pytest.approx(0.0)
    assert p.s == pytest.approx(0.25)
    assert nb.KernelParams(gamma=-2.0, s=0.3).regime == "soft"
    with pytest.raises(nb.DomainError, match="not well defined"):
        nb.KernelParams.from_inverse_power(2.0, 3)
    with pytest.raises(nb.DomainError):
        nb.KernelParams(s=1.5)


def test_pointwise_formulas():
    assert nb.maxwellian([0.0, 0.0]) == pytest.approx(1.0 / (2.0 * math.pi))
    assert nb.angular_b(0.0, nb.KernelParams()) == pytest.approx((math.pi / 2) ** -1.5, rel=1e-12)
    vp, vps = nb.post_collisional([1.0, 0.0], [-1.0, 0.0], [0.0, 1.0])
    assert vp == pytest.approx([0.0, 1.0])
    assert vps == pytest.approx([0.0, -1.0])
    assert nb.metric_d([1.0, 0.0], [0.0, 0.0]) == pytest.approx(1.118034, rel=1e-6)
    assert nb.jacobian_zeta_shift(1.0, 1.0) == pytest.approx(0.25)


def test_grid_integral():
    g = nb.VelocityGrid(2, 8.0, 48)
    nodes = g.nodes()
    mu = [nb.maxwellian(list(v)) for v in nodes]
    assert len(g) == 48 * 48
    assert nb.integrate(g, mu) == pytest.approx(1.0, abs=1e-4)
    root = [nb.sqrt_maxwellian(list(v)) for v in nodes]
    assert nb.l2_weighted(g, root, 0.0) == pytest.approx(1.0, abs=1e-4)
    assert nb.nsg_norm(g, [0.0] * len(g), nb.KernelParams()) == 0.0


def test_lp_basis():
    b = nb.build_basis(2, 0.0625)
    assert nb.normalization_residual(b, [0.0, 0.0]) < 1e-6
    with pytest.raises(nb.ConfigError):
        nb.build_basis(2, 0.1)


def test_small_operator_spectrum():
    g = nb.VelocityGrid(2, 6.0, 20)
    m = nb.assemble(g, nb.KernelParams(), nb.SphereRule.graded(2, 16), conservative=True, max_asymmetry=0.5)
    ev = m.eigenvalues()
    assert m.L.shape == (400, 400)
    assert max(abs(x) for x in ev[:4]) < 1e-8
    assert ev[4] > 0.0


def test_decay_fit():
    t = [0.1 * k for k in range(100)]
    y = [math.exp(-0.5 * s) for s in t]
    fit = nb.decay_fit(t, y, "hard", 0.0, 10.0)
    assert fit.rate == pytest.approx(0.5)
    assert fit.reliable


def test_validate_command(tmp_path):
    code, files, messages = nb.run("validate", out_dir=str(tmp_path))
    assert code == 0, messages
    summary = json.loads((tmp_path / "validate.json").read_text())
    assert summary["pass"] is True
    with pytest.raises(nb.ConfigError):
        nb.run("verify", [], out_dir=str(tmp_path))
    with pytest.raises(nb.ConfigError):
        nb.run("validate", config=json.dumps({"kernel": {"s": 1.5}}), out_dir=str(tmp_path))
