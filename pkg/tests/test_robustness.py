import numpy as np
import pytest

from lanekit.robustness import (
    GroundTruthError,
    Perturbation,
    inject_bias,
    inject_brownian,
    sweep,
)
from lanekit.synth import SyntheticCorpus, generate_corpus

from helpers import lane_keeping


def test_perturbation_validation():
    with pytest.raises(ValueError):
        Perturbation("bias", -0.1)
    with pytest.raises(ValueError):
        Perturbation("gaussian", 0.1)


# ---------------------------------------------------------------------------
# bias injection

def test_bias_zero_is_identity():
    traj = lane_keeping()
    out = inject_bias(traj, 0.0)
    assert np.array_equal(out.lat, traj.lat)


def test_bias_definition():
    traj = lane_keeping(wiggle=0.0)
    base = traj.with_channels(lat=np.full(len(traj.t), 0.2))
    out = inject_bias(base, 1.0)
    assert np.allclose(out.lat, 1.2)
    assert np.array_equal(out.v, base.v)
    assert np.array_equal(out.d_left, base.d_left)


def test_bias_inverse():
    traj = lane_keeping()
    back = inject_bias(inject_bias(traj, 0.5), -0.5)
    assert np.allclose(back.lat, traj.lat, atol=1e-12)


# ---------------------------------------------------------------------------
# brownian injection

def test_brownian_zero_is_identity():
    traj = lane_keeping()
    assert np.array_equal(inject_brownian(traj, 0.0, 1).lat, traj.lat)


def test_brownian_deterministic_per_seed():
    traj = lane_keeping()
    a = inject_brownian(traj, 0.02, 42)
    b = inject_brownian(traj, 0.02, 42)
    c = inject_brownian(traj, 0.02, 43)
    assert np.array_equal(a.lat, b.lat)
    assert not np.array_equal(a.lat, c.lat)


def test_brownian_starts_at_zero():
    traj = lane_keeping()
    out = inject_brownian(traj, 0.05, 7)
    assert out.lat[0] == traj.lat[0]


def test_brownian_variance_grows_linearly():
    # random-walk property: Var(W_k) ~ k * step_std^2
    traj = lane_keeping(record_len=20.0)
    step_std = 0.05
    walks = np.array([
        inject_brownian(traj, step_std, seed).lat - traj.lat
        for seed in range(10_000)
    ])
    var = walks.var(axis=0)
    k = np.arange(len(traj.t))
    slope = np.polyfit(k[1:], var[1:], 1)[0]
    assert slope == pytest.approx(step_std ** 2, rel=0.15)


# ---------------------------------------------------------------------------
# sweep

@pytest.fixture(scope="module")
def corpus():
    return generate_corpus(n=40, seed=11)


def test_sweep_requires_ground_truth(corpus):
    naked = SyntheticCorpus(corpus.trajectories, None, corpus.layout, corpus.seed)
    with pytest.raises(GroundTruthError):
        sweep(naked, "peak", [Perturbation("bias", 0.0)], corpus.layout)


def test_sweep_rejects_unknown_criterion(corpus):
    with pytest.raises(ValueError, match="criterion"):
        sweep(corpus, "wavelet", [Perturbation("bias", 0.0)], corpus.layout)


def test_zero_perturbation_matches_unperturbed(corpus):
    grid = [Perturbation("bias", 0.0), Perturbation("brownian", 0.0)]
    rep = sweep(corpus, "peak", grid, corpus.layout, refilter=False)
    counts = {p.kind: p.detected for p in rep.points}
    assert counts["bias"] == counts["brownian"]


def test_peak_count_constant_along_bias_axis(corpus):
    grid = [Perturbation("bias", b) for b in (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)]
    rep = sweep(corpus, "peak", grid, corpus.layout, refilter=False)
    counts = [p.detected for p in rep.points]
    assert len(set(counts)) == 1


def test_distance_count_collapses_beyond_threshold(corpus):
    grid = [Perturbation("bias", b) for b in (0.0, 1.0, 1.5)]
    rep = sweep(corpus, "distance", grid, corpus.layout, refilter=False)
    truth = rep.points[0].truth
    assert rep.points[0].detected == truth
    for p in rep.points[1:]:
        assert abs(p.detected - truth) / truth >= 0.10


def test_brownian_noise_floods_peak_criterion(corpus):
    grid = [Perturbation("brownian", 0.05)]
    rep = sweep(corpus, "peak", grid, corpus.layout, refilter=False, seed=3)
    assert rep.points[0].detected > rep.points[0].truth


def test_sweep_reproducible(corpus):
    grid = [Perturbation("brownian", s) for s in (0.01, 0.05)]
    a = sweep(corpus, "peak", grid, corpus.layout, refilter=False, seed=5)
    b = sweep(corpus, "peak", grid, corpus.layout, refilter=False, seed=5)
    assert a == b


def test_report_series_sorted(corpus):
    grid = [Perturbation("bias", b) for b in (0.5, 0.0, 0.25)]
    rep = sweep(corpus, "peak", grid, corpus.layout, refilter=False)
    x, y = rep.series("peak", "bias")
    assert np.array_equal(x, [0.0, 0.25, 0.5])
    assert len(y) == 3
