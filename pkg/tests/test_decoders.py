"""Decoder heads against the scalar pair-decoding oracle."""

import numpy as np
import numpy.testing as npt
import pytest

import darter.autodiff as ad
from darter.autodiff import ParamStore, Record, constant
from darter.decoders import (DecoderParams, EntityLogits, RelationLogits,
                             bi_decode, decode_streams, ner_decode,
                             pair_decode, re_decode, threshold_predictions)
from darter.encoder import SUBTASKS, DamOutput
from darter.gradcheck import max_relative_error, numeric_gradients

import oracles


def head_store(seed, n_streams, d_h, width, prefix="head"):
    store = ParamStore(seed)
    DecoderParams.register(store, prefix, n_streams, d_h, width)
    rng = np.random.default_rng(seed + 100)
    store.set_(f"{prefix}.b_pair", rng.uniform(-0.5, 0.5, (d_h,)))
    store.set_(f"{prefix}.b_out", rng.uniform(-0.5, 0.5, (width,)))
    store.set_(f"{prefix}.ln_gain", rng.uniform(0.5, 1.5, (d_h,)))
    store.set_(f"{prefix}.ln_bias", rng.uniform(-0.3, 0.3, (d_h,)))
    return store


def bind_head(store, prefix="head", recording=True):
    rec = Record(recording=recording)
    return rec, DecoderParams.bind(store.bind(rec), prefix)


def oracle_head(store, prefix="head"):
    return dict(w_pair=store[f"{prefix}.w_pair"].tolist(),
                b_pair=store[f"{prefix}.b_pair"].tolist(),
                gain=store[f"{prefix}.ln_gain"].tolist(),
                bias=store[f"{prefix}.ln_bias"].tolist(),
                w_out=store[f"{prefix}.w_out"].tolist(),
                b_out=store[f"{prefix}.b_out"].tolist())


def oracle_decode(streams, store, prefix="head"):
    h = oracle_head(store, prefix)
    return np.array(oracles.pair_decode(
        [s.tolist() for s in streams], h["w_pair"], h["b_pair"],
        h["gain"], h["bias"], h["w_out"], h["b_out"]))


def fake_output(rec, t, d_h, rng):
    tilde = {p: rec.leaf(rng.standard_normal((t, d_h))) for p in SUBTASKS}
    return DamOutput(h_tilde=tilde, hidden=tilde, final_state=None, trace=None)


# ---------------------------------------------------------------------------

def test_zero_parameters_give_exactly_half():
    store = head_store(0, 1, 4, 3)
    store.zero_all()
    rec, head = bind_head(store)
    stream = rec.leaf(np.random.default_rng(1).standard_normal((5, 4)))
    probs = pair_decode([stream], head).values
    assert probs.shape == (5, 5, 3)
    npt.assert_array_equal(probs, np.full((5, 5, 3), 0.5))


def test_single_token_single_cell():
    store = head_store(2, 1, 4, 2)
    rec, head = bind_head(store)
    stream = rec.leaf(np.random.default_rng(3).standard_normal((1, 4)))
    probs = pair_decode([stream], head).values
    assert probs.shape == (1, 1, 2)
    assert np.all((probs > 0) & (probs < 1))


@pytest.mark.parametrize("t,d_h,width,n_streams,seed",
                         [(3, 4, 2, 1, 5), (2, 3, 3, 2, 6), (4, 2, 1, 2, 7)])
def test_pair_decode_matches_oracle(t, d_h, width, n_streams, seed):
    store = head_store(seed, n_streams, d_h, width)
    rec, head = bind_head(store)
    rng = np.random.default_rng(seed)
    streams_np = [rng.standard_normal((t, d_h)) for _ in range(n_streams)]
    probs = pair_decode([rec.leaf(s) for s in streams_np], head).values
    want = oracle_decode(streams_np, store)
    npt.assert_allclose(probs, want, atol=1e-12)


def test_ner_decode_sums_subject_and_object():
    store = head_store(8, 1, 4, 3)
    rec, head = bind_head(store)
    rng = np.random.default_rng(9)
    h_s = rng.standard_normal((3, 4))
    h_o = rng.standard_normal((3, 4))
    logits = ner_decode(rec.leaf(h_s), rec.leaf(h_o), head)
    assert isinstance(logits, EntityLogits)
    want = oracle_decode([h_s + h_o], store)
    npt.assert_allclose(logits.probs.values, want, atol=1e-12)


def test_re_decode_mixes_entity_features():
    store = head_store(10, 1, 4, 2)
    rec, head = bind_head(store)
    rng = np.random.default_rng(11)
    h_r = rng.standard_normal((3, 4))
    h_s = rng.standard_normal((3, 4))
    h_o = rng.standard_normal((3, 4))
    for alpha, beta in [(-1.0, 1.0), (0.5, 0.5), (1.0, -1.0)]:
        got = re_decode(rec.leaf(h_r), rec.leaf(h_s), rec.leaf(h_o), head,
                        alpha, beta)
        assert isinstance(got, RelationLogits)
        feats = np.array(oracles.relation_inputs(
            h_r.tolist(), h_s.tolist(), h_o.tolist(), alpha, beta))
        want = oracle_decode([feats], store)
        npt.assert_allclose(got.probs.values, want, atol=1e-12)


def test_re_decode_alpha_beta_cancellation():
    # alpha = beta = 1 with identical subject/object features cancels the mix
    store = head_store(12, 1, 4, 2)
    rec, head = bind_head(store)
    rng = np.random.default_rng(13)
    h_r = rng.standard_normal((3, 4))
    h_same = rng.standard_normal((3, 4))
    mixed = re_decode(rec.leaf(h_r), rec.leaf(h_same), rec.leaf(h_same),
                      head, 1.0, 1.0)
    plain = re_decode(rec.leaf(h_r), rec.leaf(h_same), rec.leaf(h_same),
                      head, 1.0, 1.0, entity_features=False)
    npt.assert_array_equal(mixed.probs.values, plain.probs.values)


def test_re_decode_rejects_off_grid_coefficients():
    store = head_store(14, 1, 4, 2)
    rec, head = bind_head(store)
    rng = np.random.default_rng(15)
    h = rec.leaf(rng.standard_normal((2, 4)))
    with pytest.raises(ad.ContractError, match="alpha"):
        re_decode(h, h, h, head, 0.3, 1.0)
    with pytest.raises(ad.ContractError, match="beta"):
        re_decode(h, h, h, head, 1.0, 0.0)
    # unused coefficients are not validated
    re_decode(h, h, h, head, 0.3, 0.0, entity_features=False)


def test_pair_decode_shape_contracts():
    store = head_store(16, 1, 4, 2)
    rec, head = bind_head(store)
    rng = np.random.default_rng(17)
    with pytest.raises(ad.ContractError):
        pair_decode([], head)
    with pytest.raises(ad.ShapeError):
        pair_decode([rec.leaf(rng.standard_normal((3, 4))),
                     rec.leaf(rng.standard_normal((2, 4)))], head)
    # two streams of width 4 need a [16, 4] projection, head has [8, 4]
    with pytest.raises(ad.ShapeError, match="width"):
        pair_decode([rec.leaf(rng.standard_normal((3, 4)))] * 2, head)


def test_bi_decode_requires_two_streams():
    store = head_store(18, 2, 4, 2)
    DecoderParams.register(store, "re", 2, 4, 3)
    rec = Record()
    bound = store.bind(rec)
    ner_head = DecoderParams.bind(bound, "head")
    re_head = DecoderParams.bind(bound, "re")
    rng = np.random.default_rng(19)
    outs = [fake_output(rec, 3, 4, rng) for _ in range(3)]
    with pytest.raises(ad.ContractError, match="2"):
        bi_decode(outs[:1], ner_head, re_head, 1.0, 1.0)
    with pytest.raises(ad.ContractError, match="2"):
        bi_decode(outs, ner_head, re_head, 1.0, 1.0)
    e, r = bi_decode(outs[:2], ner_head, re_head, 1.0, 1.0)
    assert e.probs.shape == (3, 3, 2)
    assert r.probs.shape == (3, 3, 3)


def test_tiled_bi_weights_double_the_preactivation():
    d_h, width, t = 4, 2, 3
    uni = head_store(20, 1, d_h, width)
    uni.set_("head.b_pair", np.zeros(d_h))
    bi = ParamStore(0)
    DecoderParams.register(bi, "head", 2, d_h, width)
    bi.set_("head.w_pair", np.vstack([uni["head.w_pair"]] * 2))
    bi.set_("head.b_pair", np.zeros(d_h))
    bi.set_("head.ln_gain", uni["head.ln_gain"])
    bi.set_("head.ln_bias", uni["head.ln_bias"])
    bi.set_("head.w_out", uni["head.w_out"])
    bi.set_("head.b_out", uni["head.b_out"])

    rng = np.random.default_rng(21)
    h = rng.standard_normal((t, d_h))
    rec, bi_head = bind_head(bi)
    got = pair_decode([rec.leaf(h), rec.leaf(h)], bi_head).values
    # identical streams through tiled weights = doubled unidirectional input
    want = oracle_decode([2.0 * h], uni)
    npt.assert_allclose(got, want, atol=1e-12)


def test_decode_streams_matches_single_heads():
    store = head_store(22, 1, 4, 2)
    DecoderParams.register(store, "re", 1, 4, 3)
    rec = Record()
    bound = store.bind(rec)
    rng = np.random.default_rng(23)
    out = fake_output(rec, 3, 4, rng)
    e, r = decode_streams([out], DecoderParams.bind(bound, "head"),
                          DecoderParams.bind(bound, "re"), 0.5, 1.0)
    e2 = ner_decode(out.h_tilde["s"], out.h_tilde["o"],
                    DecoderParams.bind(bound, "head"))
    r2 = re_decode(out.h_tilde["r"], out.h_tilde["s"], out.h_tilde["o"],
                   DecoderParams.bind(bound, "re"), 0.5, 1.0)
    npt.assert_array_equal(e.probs.values, e2.probs.values)
    npt.assert_array_equal(r.probs.values, r2.probs.values)


# ---------------------------------------------------------------------------
# thresholding

def _logits(e_arr, r_arr):
    return (EntityLogits(constant(np.asarray(e_arr, dtype=float))),
            RelationLogits(constant(np.asarray(r_arr, dtype=float))))


def test_threshold_is_strict():
    e = np.full((2, 2, 1), 0.5)
    r = np.full((2, 2, 1), 0.5)
    e[0, 1, 0] = 0.5 + 1e-9
    el, rl = _logits(e, r)
    pred = threshold_predictions(el, rl)
    assert pred.entities == {(0, 1, 0)}
    assert pred.relations == frozenset()


def test_threshold_ignores_reversed_spans():
    e = np.zeros((3, 3, 2))
    e[2, 0, 1] = 0.9   # i > j: not a span
    e[0, 2, 1] = 0.9
    r = np.zeros((3, 3, 1))
    r[2, 0, 0] = 0.9   # relations keep all ordered pairs
    el, rl = _logits(e, r)
    pred = threshold_predictions(el, rl)
    assert pred.entities == {(0, 2, 1)}
    assert pred.relations == {(2, 0, 0)}


def test_threshold_diagonal_only_mode():
    e = np.zeros((3, 3, 1))
    e[0, 0, 0] = 0.9
    e[0, 2, 0] = 0.9
    el, rl = _logits(e, np.zeros((3, 3, 1)))
    pred = threshold_predictions(el, rl, diagonal_only=True)
    assert pred.entities == {(0, 0, 0)}


def test_threshold_monotone_in_tau():
    rng = np.random.default_rng(24)
    e = rng.uniform(0, 1, (4, 4, 2))
    r = rng.uniform(0, 1, (4, 4, 3))
    el, rl = _logits(e, r)
    low = threshold_predictions(el, rl, tau=0.3)
    high = threshold_predictions(el, rl, tau=0.7)
    assert high.entities <= low.entities
    assert high.relations <= low.relations


# ---------------------------------------------------------------------------
# gradients

def test_decoder_gradients_finite_differences():
    t, d_h, width = 2, 3, 2
    store = head_store(25, 1, d_h, width)
    rng = np.random.default_rng(26)
    h = rng.standard_normal((t, d_h))
    w = rng.standard_normal((t, t, width))

    def loss(recording=True):
        rec = Record(recording=recording)
        head = DecoderParams.bind(store.bind(rec), "head")
        probs = pair_decode([rec.leaf(h)], head)
        return rec, ad.sum_all(ad.mul(probs, constant(w)))

    rec, val = loss()
    rec.backward(val)
    rec2, val2 = loss()
    rec2.backward(val2)
    bound = store.bind(Record(recording=False))

    rec3 = Record()
    bound3 = store.bind(rec3)
    head3 = DecoderParams.bind(bound3, "head")
    out3 = ad.sum_all(ad.mul(pair_decode([rec3.leaf(h)], head3), constant(w)))
    rec3.backward(out3)
    analytic = {k: rec3.grad(tv) for k, tv in bound3.items()}
    analytic = {k: (np.zeros_like(store[k]) if g is None else g)
                for k, g in analytic.items()}
    numeric = numeric_gradients(lambda: loss(False)[1].item(), store)
    err = max_relative_error(analytic, numeric)
    assert err <= 1e-4, f"decoder gradient mismatch: {err:.2e}"
