import math
import warnings

import numpy as np
import pytest
import yaml

from corrsir.fading import NO_FADING
from corrsir.mgf import MatchingConfig, match_equivalent_lognormal
from corrsir.numerics import cholesky
from corrsir.scenario import (
    UMA_PATHLOSS, LinkModel, NetworkScene, PathLossModel, SceneError, build_sum_model,
    hex_uma_layout, hex_uma_scene, joint_covariance, load_scene_file, path_loss, scene_from_layout,
)


def test_path_loss_intercept_and_slopes():
    pl = PathLossModel(pl_ref_db=61.4, n_los=1.1, n_nlos=4.33, d_ref_m=1.0)
    assert path_loss(pl, 1.0, True) == 61.4
    assert path_loss(pl, 10.0, True) - path_loss(pl, 1.0, True) == pytest.approx(11.0)
    assert path_loss(pl, 100.0, True) - path_loss(pl, 10.0, True) == pytest.approx(11.0)
    assert path_loss(pl, 10.0, False) == pytest.approx(61.4 + 43.3)


def test_path_loss_below_reference():
    with pytest.raises(SceneError):
        path_loss(PathLossModel(30.0, 2.0, 3.0, d_ref_m=1.0), 0.5, False)


def test_inverted_exponents_warn_only():
    with pytest.warns(UserWarning):
        PathLossModel(30.0, 3.0, 2.0)


def test_hex_center_symmetry():
    scene = hex_uma_scene(ue_polar=(0.0, 0.0))
    np.testing.assert_allclose([l.distance_m for l in scene.interferers], [500.0] * 6)


@pytest.mark.parametrize("r,near,far", [(25.0, 475.0, 525.0), (225.0, 275.0, 725.0)])
def test_hex_collinear_distances(r, near, far):
    scene = hex_uma_scene(ue_polar=(r, 0.0), p_default=0.3)
    d = [l.distance_m for l in scene.interferers]
    assert d[0] == pytest.approx(near)
    assert d[3] == pytest.approx(far)
    assert min(d) == pytest.approx(near)
    assert max(d) == pytest.approx(far)
    assert scene.desired.distance_m == pytest.approx(r)
    assert all(not l.is_los for l in scene.links)
    p = [l.activity_p for l in scene.interferers]
    assert p[0] == 1.0 and p[1:] == [0.3] * 5


def test_hex_outside_cell():
    with pytest.raises(SceneError):
        hex_uma_scene(ue_polar=(300.0, 0.0))
    with pytest.raises(SceneError):
        hex_uma_scene(p_default=1.5)


def test_hex_rotation_invariance():
    a = hex_uma_scene(ue_polar=(120.0, 0.3))
    b = hex_uma_scene(ue_polar=(120.0, 0.3 + math.pi / 3))
    np.testing.assert_allclose(
        sorted(l.distance_m for l in a.interferers), sorted(l.distance_m for l in b.interferers), atol=1e-9
    )


def test_layout_file_matches_generated(tmp_path):
    layout = hex_uma_layout(ue_polar=(225.0, 0.0), p_default=0.5)
    path = tmp_path / "hex.yaml"
    path.write_text(yaml.safe_dump(layout))
    from_file = load_scene_file(path)
    direct = hex_uma_scene(ue_polar=(225.0, 0.0), p_default=0.5)
    np.testing.assert_allclose([l.distance_m for l in from_file.links], [l.distance_m for l in direct.links], atol=1e-9)
    assert [l.activity_p for l in from_file.interferers] == [l.activity_p for l in direct.interferers]
    assert from_file.pathloss == direct.pathloss


def _two_ap_layout(**ap_over):
    aps = [{"x_m": -10.0, "y_m": 0.0, "p": 1.0, "los_to_ue": False},
           {"x_m": 10.0, "y_m": 0.0, "p": 0.5, "los_to_ue": False}]
    aps[1].update(ap_over)
    return {
        "aps": aps,
        "ue": {"x_m": 0.0, "y_m": 0.0},
        "shadow": {"sigma_los_db": 1.8, "sigma_nlos_db": 9.6, "corr": 0.5},
        "pathloss": {"pl_ref_db": 61.4, "d_ref_m": 1.0, "n_los": 1.1, "n_nlos": 4.33},
        "fading": {"m_los": 5.0, "m_nlos": 1.0},
    }


def test_layout_tie_break_lowest_index():
    layout = _two_ap_layout()
    layout["force_nearest_active"] = False
    scene = scene_from_layout(layout)
    assert scene.n_interferers == 1
    assert scene.interferers[0].activity_p == 0.5


def test_layout_errors(tmp_path):
    with pytest.raises(SceneError, match="p must lie"):
        scene_from_layout(_two_ap_layout(p=1.2))
    with pytest.raises(SceneError, match="duplicate"):
        scene_from_layout(_two_ap_layout(x_m=-10.0))
    one = _two_ap_layout()
    one["aps"] = one["aps"][:1]
    with pytest.raises(SceneError, match="at least 2"):
        scene_from_layout(one)
    bad = tmp_path / "bad.yaml"
    bad.write_text("aps:\n  - x_m: 1\n  y_m: [\n")
    with pytest.raises(SceneError, match="line"):
        load_scene_file(bad)
    with pytest.raises(SceneError, match="missing"):
        scene_from_layout({"aps": one["aps"] * 2})


def test_scene_correlation_bound():
    d = LinkModel(50.0, False, 6.0, 1.0)
    others = tuple(LinkModel(100.0 + i, False, 6.0, 1.0) for i in range(4))
    NetworkScene(d, others, -0.24, UMA_PATHLOSS)
    with pytest.raises(SceneError):
        NetworkScene(d, others, -0.26, UMA_PATHLOSS)


def test_sum_model_uma_values(uma_center):
    desired, model, rho = build_sum_model(uma_center)
    assert desired.sigma_db == pytest.approx(8.19, abs=0.005)
    np.testing.assert_allclose(np.sqrt(np.diag(model.cov)), 8.19, atol=0.005)
    # shadowing is correlated, the per-link fading is not
    off = model.cov[~np.eye(6, dtype=bool)]
    np.testing.assert_allclose(off, 0.5 * 36.0, rtol=1e-12)
    np.testing.assert_allclose(rho, 18.0 / desired.sigma_db ** 2, rtol=1e-12)
    assert model.mu[0] == pytest.approx(-path_loss(UMA_PATHLOSS, 475.0, False) - 2.5068, abs=1e-3)
    cholesky(joint_covariance(desired, model, rho)[1])


def test_sum_model_deterministic():
    d = LinkModel(50.0, False, 0.0, NO_FADING)
    scene = NetworkScene(d, (LinkModel(150.0, False, 0.0, NO_FADING),), 0.5, UMA_PATHLOSS)
    desired, model, rho = build_sum_model(scene)
    assert desired.sigma_db == 0.0
    assert np.all(model.cov == 0)
    assert model.is_degenerate()


def test_sum_model_mixed_los():
    layout = _two_ap_layout(los_to_ue=True, x_m=12.0)
    desired, model, _ = build_sum_model(scene_from_layout(layout))
    pl = PathLossModel(61.4, 1.1, 4.33)
    assert desired.mu_db + path_loss(pl, 10.0, False) == pytest.approx(-2.51, abs=0.005)
    assert desired.sigma_db == pytest.approx(11.1, abs=0.005)
    assert model.mu[0] + path_loss(pl, 12.0, True) == pytest.approx(-0.45, abs=0.005)
    assert model.sigma[0] == pytest.approx(2.72, abs=0.005)


def test_intercept_cancels():
    cfg = MatchingConfig()
    out = []
    for ref in (28.0, 45.0):
        pl = PathLossModel(ref, 3.9, 3.9)
        scene = hex_uma_scene(ue_polar=(150.0, 0.4), pathloss=pl)
        desired, model, _ = build_sum_model(scene)
        eq = match_equivalent_lognormal(model, cfg)
        out.append((desired.mu_db - eq.params.mu_db, eq.params.sigma_db))
    assert out[0][0] == pytest.approx(out[1][0], abs=1e-9)
    assert out[0][1] == pytest.approx(out[1][1], abs=1e-9)


def test_scene_digest_stable(uma_center):
    again = hex_uma_scene(ue_polar=(25.0, 0.0), p_default=0.5)
    assert uma_center.digest() == again.digest()
    assert hex_uma_scene(ue_polar=(26.0, 0.0)).digest() != again.digest()
