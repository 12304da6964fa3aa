import numpy as np
import pytest
from hypothesis import given, strategies as st

from banditmt.feedback import (
    FeedbackConfig,
    FeedbackModel,
    FeedbackState,
    granularize,
    perturb_variance,
    scale,
    skew,
)

scores = st.floats(0.0, 100.0, allow_nan=False)


def test_scale():
    assert scale(0) == 0.0
    assert scale(100) == 1.0
    assert scale(29.4) == pytest.approx(0.294)


@pytest.mark.parametrize("bleu, rating, reward", [(0, 1, 0.2), (100, 5, 1.0), (37.0, 2, 0.4), (19.999, 1, 0.2), (20.0, 2, 0.4), (80.0, 5, 1.0)])
def test_granularize(bleu, rating, reward):
    r, w = granularize(bleu, 5)
    assert r == rating
    assert w == pytest.approx(reward)


def test_granularize_matches_floor_oracle():
    for bleu in np.linspace(0, 99.99, 777):
        assert granularize(bleu)[0] == int(np.floor(bleu / 20)) + 1


def test_skew():
    assert skew(100, 0.25) == 0.25
    assert skew(0, 0.25) == 0.0
    assert skew(40, 0.25) == pytest.approx(0.10)


@pytest.mark.parametrize("fn", [scale, lambda b: granularize(b), lambda b: skew(b)])
@pytest.mark.parametrize("bad", [-0.1, 100.5, float("nan")])
def test_out_of_range(fn, bad):
    with pytest.raises(ValueError):
        fn(bad)


def test_variance_zero_sigma_is_scale():
    state = FeedbackState.from_seed(3)
    for bleu in np.linspace(0, 100, 51):
        assert perturb_variance(bleu, state, sigma0=0.0) == scale(bleu)
    assert state.n == 51


def test_variance_monte_carlo_mean():
    state = FeedbackState.from_seed(42)
    draws = np.array([perturb_variance(50.0, state, sigma0=0.1) for _ in range(100_000)])
    assert abs(draws.mean() - 0.5) < 0.002
    assert draws.std() == pytest.approx(0.1, rel=0.02)
    assert draws.min() >= 0.0 and draws.max() <= 1.0


def test_variance_consumes_one_draw_per_call():
    state = FeedbackState.from_seed(5)
    ref = np.random.default_rng([5, 1, 0])
    for _ in range(10):
        z = ref.standard_normal()
        assert perturb_variance(60.0, state, sigma0=0.05) == pytest.approx(min(1, max(0, 0.6 + 0.05 * z)))


def test_variance_shrinks_geometrically():
    state = FeedbackState.from_seed(1)
    ref = np.random.default_rng([1, 1, 0])
    for n in range(6):
        z = ref.standard_normal()
        assert perturb_variance(50.0, state, sigma0=0.1, shrink=0.5) == pytest.approx(0.5 + 0.1 * 0.5 ** n * z)


def test_fixed_seed_gives_identical_sequences():
    a = FeedbackModel.from_seed(FeedbackConfig(style="variance"), 7)
    b = FeedbackModel.from_seed(FeedbackConfig(style="variance"), 7)
    c = FeedbackModel.from_seed(FeedbackConfig(style="variance", seed_offset=1), 7)
    xs = [a(55.0) for _ in range(20)]
    assert xs == [b(55.0) for _ in range(20)]
    assert xs != [c(55.0) for _ in range(20)]


def test_model_dispatch_and_counter():
    for style, expected in [("scale", 0.37), ("granular", 0.4), ("skew", 0.0925)]:
        model = FeedbackModel.from_seed(FeedbackConfig(style=style), 0)
        assert model(37.0) == pytest.approx(expected)
        model(10.0)
        assert model.state.n == 2


def test_config_validation():
    for kwargs in (dict(style="loud"), dict(bins=1), dict(sigma0=-1), dict(skew_factor=0.0), dict(skew_factor=1.5)):
        with pytest.raises(ValueError):
            FeedbackConfig(**kwargs)


@given(a=scores, b=scores)
def test_transforms_are_monotone_and_bounded(a, b):
    lo, hi = min(a, b), max(a, b)
    for f in (scale, lambda x: granularize(x)[1], lambda x: skew(x, 0.25)):
        assert 0.0 <= f(lo) <= f(hi) <= 1.0


# two-decimal scores: distinct adjacent doubles may collide after division
bleu_points = st.integers(0, 10_000).map(lambda i: i / 100)


@given(vec=st.lists(bleu_points, min_size=2, max_size=8))
def test_argmax_invariance(vec):
    raw = np.array(vec)
    best = int(np.argmax(raw))
    assert int(np.argmax([scale(v) for v in vec])) == best
    assert int(np.argmax([skew(v, 0.25) for v in vec])) == best
    granular = np.array([granularize(v)[1] for v in vec])
    assert granular[best] == granular.max()
