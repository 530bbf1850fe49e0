import json

import numpy as np
import pytest

from ohara.curve import (
    ClosedCurve,
    Field,
    bilipschitz_constant,
    circle,
    ellipse,
    from_samples,
    load_curve,
    pair_frame,
    random_curve,
    random_field,
    resampled,
    save_curve,
)
from ohara.errors import ValidationError


def test_circle_geometry(circle128):
    cv = circle128
    assert cv.L == pytest.approx(2.0 * np.pi, rel=1e-12)
    # unit tangent, curvature magnitude one, tau'= kappa points inward
    assert np.allclose(np.linalg.norm(cv.tau, axis=1), 1.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(cv.kappa, axis=1), 1.0, atol=1e-10)
    assert np.allclose(
        np.einsum("ij,ij->i", cv.kappa, cv.positions - cv.positions.mean(0)),
        -1.0,
        atol=1e-9,
    )


def test_from_samples_reparametrizes_nonuniform():
    # quadratic clustering of the parameter; same geometric circle
    t = np.linspace(0.0, 1.0, 256, endpoint=False)
    w = t + 0.15 * np.sin(2.0 * np.pi * t) / (2.0 * np.pi)
    th = 2.0 * np.pi * w
    cv = from_samples(np.stack([np.cos(th), np.sin(th)], axis=1))
    assert cv.unit_speed_defect < 1e-9
    assert cv.L == pytest.approx(2.0 * np.pi, rel=1e-10)
    r = np.linalg.norm(cv.positions - cv.positions.mean(0), axis=1)
    assert np.allclose(r, 1.0, atol=1e-10)


def test_ellipse_length_matches_quadrature():
    from scipy.special import ellipe

    cv = ellipse(2.0, 1.0, 256)
    # perimeter of the ellipse via the complete elliptic integral
    expected = 4.0 * 2.0 * ellipe(1.0 - (1.0 / 2.0) ** 2)
    assert cv.L == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize(
    "bad",
    [
        np.zeros((8, 2)),  # too few samples
        np.zeros((33, 2)),  # odd M
        np.random.default_rng(0).normal(size=(64, 1)),  # ambient dim 1
    ],
)
def test_from_samples_rejects(bad):
    with pytest.raises(ValidationError):
        from_samples(bad)


def test_from_samples_rejects_self_intersection():
    # figure-eight style crossing collapses the chord between far samples
    t = 2.0 * np.pi * np.arange(64) / 64
    pts = np.stack([np.sin(2 * t), np.sin(t)], axis=1)
    with pytest.raises(ValidationError):
        from_samples(pts)


def test_save_load_roundtrip(tmp_path, circle128):
    path = tmp_path / "c.json"
    save_curve(circle128, path)
    doc = json.loads(path.read_text())
    assert doc["closed"] is True and doc["dimension"] == 2
    cv = load_curve(path)
    assert cv.M == 128
    assert np.allclose(cv.positions, circle128.positions, atol=1e-12)


def test_load_curve_csv_and_resample(tmp_path):
    cv = circle(64)
    path = tmp_path / "c.csv"
    with open(path, "w") as fh:
        for row in cv.positions:
            fh.write("%r,%r\n" % (float(row[0]), float(row[1])))
    cv2 = load_curve(path, M=128)
    assert cv2.M == 128
    assert cv2.L == pytest.approx(cv.L, rel=1e-9)


def test_load_curve_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        load_curve(path)
    path.write_text('{"closed": true}')
    with pytest.raises(ValidationError):
        load_curve(path)


def test_resampled_preserves_geometry():
    cv = random_curve(3, M=128, n=3, amplitude=0.05)
    cv2 = resampled(cv, 256)
    assert cv2.M == 256
    assert cv2.L == pytest.approx(cv.L, rel=1e-10)
    assert np.allclose(cv2.positions[::2], cv.positions, atol=1e-8 * cv.L)


def test_from_samples_rejects_unresolved():
    # mode-13 wiggle on a 32-point grid: spectrally under-resolved
    theta = 2.0 * np.pi * np.arange(32) / 32
    pts = np.stack(
        [np.cos(theta), np.sin(theta), 0.3 * np.sin(13.0 * theta)], axis=1
    )
    with pytest.raises(ValidationError):
        from_samples(pts)


def test_bilipschitz_circle(circle128):
    # chord/arc ratio of the circle: worst at antipodal pairs, pi/2
    c = bilipschitz_constant(circle128)
    assert c == pytest.approx(np.pi / 2.0, rel=1e-10)


def test_pair_frame_short_arc(circle128):
    fr = pair_frame(circle128, 100, 4)
    assert abs(fr.ds) <= circle128.L / 2.0
    assert fr.D == pytest.approx(abs(fr.ds))
    assert fr.chord == pytest.approx(2.0 * np.sin(fr.D / 2.0), rel=1e-12)


def test_random_curve_deterministic():
    a = random_curve(7, M=128, n=3)
    b = random_curve(7, M=128, n=3)
    assert np.array_equal(a.positions, b.positions)
    c = random_curve(8, M=128, n=3)
    assert not np.allclose(a.positions, c.positions)


def test_field_shapes_and_deriv(circle128):
    cv = circle128
    phi = random_field(cv, seed=1)
    assert phi.values.shape == (cv.M, cv.n)
    # spectral derivative of tangent is the curvature
    assert np.allclose(cv.tau_field.deriv.values, cv.kappa, atol=1e-10)
    with pytest.raises(ValidationError):
        Field(cv, np.zeros((cv.M + 2, cv.n)))
    with pytest.raises(ValidationError):
        Field(cv, np.full((cv.M, cv.n), np.nan))


def test_scaled_curve_construction(circle128):
    cv = ClosedCurve(2.0 * circle128.positions, 2.0 * circle128.L)
    assert cv.L == pytest.approx(2.0 * circle128.L)
    assert cv.h == pytest.approx(2.0 * circle128.h)
